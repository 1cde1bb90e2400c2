//! Mesh-current oracle for small planar circuits.
//!
//! Each branch runs `from → to` and holds an EMF source in series with an
//! impedance, so `V(from) − V(to) = Z·I − E` with `I` flowing from `from` to
//! `to`. Meshes list their branches with orientation `±1`. The mesh system
//! is solved by Cramer's rule with Leibniz determinants.

use std::collections::VecDeque;
use std::f64::consts::PI;

use num_complex::Complex64;

use crate::Rng;

#[derive(Debug, Clone)]
pub struct Branch {
    pub from: usize,
    pub to: usize,
    pub resistance: f64,
    /// Henries; only at AC.
    pub inductance: Option<f64>,
    /// Farads; only at AC.
    pub capacitance: Option<f64>,
    /// EMF raising `to` above `from` when no current flows.
    pub emf: Option<Complex64>,
}

impl Branch {
    fn resistor(from: usize, to: usize, r: f64) -> Self {
        Branch { from, to, resistance: r, inductance: None, capacitance: None, emf: None }
    }

    pub fn impedance(&self, frequency: f64) -> Complex64 {
        let w = 2.0 * PI * frequency;
        let mut z = Complex64::new(self.resistance, 0.0);
        if let Some(l) = self.inductance {
            z += Complex64::new(0.0, w * l);
        }
        if let Some(c) = self.capacitance {
            z += Complex64::new(0.0, -1.0 / (w * c));
        }
        z
    }
}

#[derive(Debug, Clone)]
pub struct MeshCircuit {
    pub frequency: f64,
    /// Node 0 is ground.
    pub node_names: Vec<String>,
    pub branches: Vec<Branch>,
    pub meshes: Vec<Vec<(usize, f64)>>,
}

#[derive(Debug, Clone)]
pub struct MeshSolution {
    pub mesh_currents: Vec<Complex64>,
    /// Node name and voltage, ground included.
    pub node_voltages: Vec<(String, Complex64)>,
}

/// Determinant by the permutation expansion.
pub fn leibniz_det(m: &[Vec<Complex64>]) -> Complex64 {
    let n = m.len();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut total = Complex64::default();
    permute(&mut perm, 0, 1.0, &mut |p, sign| {
        let mut term = Complex64::new(sign, 0.0);
        for (row, &col) in p.iter().enumerate() {
            term *= m[row][col];
        }
        total += term;
    });
    total
}

fn permute(p: &mut Vec<usize>, k: usize, sign: f64, visit: &mut dyn FnMut(&[usize], f64)) {
    if k == p.len() {
        visit(p, sign);
        return;
    }
    for i in k..p.len() {
        p.swap(k, i);
        permute(p, k + 1, if i == k { sign } else { -sign }, visit);
        p.swap(k, i);
    }
}

pub fn cramer(a: &[Vec<Complex64>], b: &[Complex64]) -> Option<Vec<Complex64>> {
    let det = leibniz_det(a);
    if det.norm() == 0.0 {
        return None;
    }
    Some(
        (0..b.len())
            .map(|k| {
                let replaced: Vec<Vec<Complex64>> = a
                    .iter()
                    .enumerate()
                    .map(|(r, row)| {
                        let mut row = row.clone();
                        row[k] = b[r];
                        row
                    })
                    .collect();
                leibniz_det(&replaced) / det
            })
            .collect(),
    )
}

impl MeshCircuit {
    pub fn solve(&self) -> Option<MeshSolution> {
        let n = self.meshes.len();
        assert!(n <= 4, "oracle is for at most four meshes");
        let z: Vec<Complex64> = self.branches.iter().map(|b| b.impedance(self.frequency)).collect();
        let mut a = vec![vec![Complex64::default(); n]; n];
        let mut rhs = vec![Complex64::default(); n];
        for (m, mesh) in self.meshes.iter().enumerate() {
            for &(e, s) in mesh {
                rhs[m] += s * self.branches[e].emf.unwrap_or_default();
                for (k, other) in self.meshes.iter().enumerate() {
                    for &(e2, s2) in other {
                        if e2 == e {
                            a[m][k] += s * s2 * z[e];
                        }
                    }
                }
            }
        }
        let mesh_currents = cramer(&a, &rhs)?;
        let branch_current = |e: usize| -> Complex64 {
            self.meshes
                .iter()
                .zip(&mesh_currents)
                .flat_map(|(mesh, i)| mesh.iter().filter(move |(b, _)| *b == e).map(move |(_, s)| *s * i))
                .sum()
        };

        let mut voltage: Vec<Option<Complex64>> = vec![None; self.node_names.len()];
        voltage[0] = Some(Complex64::default());
        let mut queue = VecDeque::from([0usize]);
        while let Some(node) = queue.pop_front() {
            for (e, b) in self.branches.iter().enumerate() {
                let drop = z[e] * branch_current(e) - b.emf.unwrap_or_default();
                let vn = voltage[node].expect("visited");
                let (other, v) = if b.from == node {
                    (b.to, vn - drop)
                } else if b.to == node {
                    (b.from, vn + drop)
                } else {
                    continue;
                };
                if voltage[other].is_none() {
                    voltage[other] = Some(v);
                    queue.push_back(other);
                }
            }
        }
        Some(MeshSolution {
            mesh_currents,
            node_voltages: self
                .node_names
                .iter()
                .zip(voltage)
                .map(|(n, v)| (n.clone(), v.expect("connected")))
                .collect(),
        })
    }

    /// Netlist with ideal sources. Branch `k` becomes `V<k>` (if any) from
    /// `from` to an internal node, `R<k>`, then `L<k>`/`C<k>` to `to`.
    pub fn netlist(&self) -> String {
        let mut out = String::new();
        for (k, b) in self.branches.iter().enumerate() {
            let mut chain = vec![self.node_names[b.from].clone()];
            let mut parts: Vec<(String, String)> = Vec::new();
            if let Some(e) = b.emf {
                let value = if self.frequency == 0.0 {
                    format!("DC {} RINT=0", e.re)
                } else {
                    format!("AC {} {} RINT=0", e.norm(), e.arg().to_degrees())
                };
                parts.push((format!("V{k}"), value));
            }
            parts.push((format!("R{k}"), format!("{}", b.resistance)));
            if let Some(l) = b.inductance {
                parts.push((format!("L{k}"), format!("{l}")));
            }
            if let Some(c) = b.capacitance {
                parts.push((format!("C{k}"), format!("{c}")));
            }
            for i in 1..parts.len() {
                chain.push(format!("b{k}_{i}"));
            }
            chain.push(self.node_names[b.to].clone());
            for (i, (name, value)) in parts.iter().enumerate() {
                // Sources are written + first: `to`-side terminal is positive.
                if name.starts_with('V') {
                    out.push_str(&format!("{name} {} {} {value}\n", chain[i + 1], chain[i]));
                } else {
                    out.push_str(&format!("{name} {} {} {value}\n", chain[i], chain[i + 1]));
                }
            }
        }
        out
    }
}

fn random_branch(rng: &mut Rng, from: usize, to: usize, frequency: f64) -> Branch {
    let mut b = Branch::resistor(from, to, rng.log_range(1.0, 1e3));
    if frequency > 0.0 {
        match rng.below(3) {
            0 => b.inductance = Some(rng.log_range(1e-4, 1e-1)),
            1 => b.capacitance = Some(rng.log_range(1e-7, 1e-3)),
            _ => {}
        }
    }
    b
}

fn random_emf(rng: &mut Rng, frequency: f64) -> Complex64 {
    let magnitude = rng.range(1.0, 100.0);
    if frequency == 0.0 {
        Complex64::new(if rng.chance(0.5) { magnitude } else { -magnitude }, 0.0)
    } else {
        Complex64::from_polar(magnitude, rng.range(-PI, PI))
    }
}

/// `rows × cols` grid of meshes (at most four), branches on grid edges,
/// sources on a random subset (at least one).
pub fn grid(seed: u64, rows: usize, cols: usize, frequency: f64) -> MeshCircuit {
    assert!(rows * cols >= 1 && rows * cols <= 4);
    let mut rng = Rng::new(seed);
    let id = |i: usize, j: usize| i * (cols + 1) + j;
    let mut node_names = vec![String::new(); (rows + 1) * (cols + 1)];
    for i in 0..=rows {
        for j in 0..=cols {
            node_names[id(i, j)] = if (i, j) == (0, 0) { "0".into() } else { format!("n{i}_{j}") };
        }
    }
    let mut branches = Vec::new();
    let mut horizontal = vec![vec![0usize; cols]; rows + 1];
    let mut vertical = vec![vec![0usize; cols + 1]; rows];
    for (i, row) in horizontal.iter_mut().enumerate() {
        for (j, slot) in row.iter_mut().enumerate() {
            *slot = branches.len();
            branches.push(random_branch(&mut rng, id(i, j), id(i, j + 1), frequency));
        }
    }
    for (i, row) in vertical.iter_mut().enumerate() {
        for (j, slot) in row.iter_mut().enumerate() {
            *slot = branches.len();
            branches.push(random_branch(&mut rng, id(i, j), id(i + 1, j), frequency));
        }
    }
    let forced = rng.below(branches.len());
    for (k, b) in branches.iter_mut().enumerate() {
        if k == forced || rng.chance(0.3) {
            b.emf = Some(random_emf(&mut rng, frequency));
        }
    }
    let mut meshes = Vec::new();
    for i in 0..rows {
        for j in 0..cols {
            meshes.push(vec![
                (horizontal[i][j], 1.0),
                (vertical[i][j + 1], 1.0),
                (horizontal[i + 1][j], -1.0),
                (vertical[i][j], -1.0),
            ]);
        }
    }
    MeshCircuit { frequency, node_names, branches, meshes }
}

/// Source `vs` feeding a ladder of three series/shunt resistor pairs.
pub fn ladder(seed: u64, vs: f64) -> MeshCircuit {
    let mut rng = Rng::new(seed);
    let mut r = || rng.log_range(10.0, 1e3).round();
    let node_names = vec!["0".into(), "1".into(), "2".into(), "3".into(), "4".into()];
    let mut source = Branch::resistor(0, 1, 0.0);
    source.emf = Some(Complex64::new(vs, 0.0));
    let branches = vec![
        source,
        Branch::resistor(1, 2, r()),
        Branch::resistor(2, 0, r()),
        Branch::resistor(2, 3, r()),
        Branch::resistor(3, 0, r()),
        Branch::resistor(3, 4, r()),
        Branch::resistor(4, 0, r()),
    ];
    let meshes = vec![
        vec![(0, 1.0), (1, 1.0), (2, 1.0)],
        vec![(3, 1.0), (4, 1.0), (2, -1.0)],
        vec![(5, 1.0), (6, 1.0), (4, -1.0)],
    ];
    MeshCircuit { frequency: 0.0, node_names, branches, meshes }
}

/// Netlist for [`ladder`]: the source branch is a bare ideal source.
pub fn ladder_netlist(c: &MeshCircuit) -> String {
    let mut out = format!("V1 1 0 DC {} RINT=0\n", c.branches[0].emf.unwrap_or_default().re);
    for (k, b) in c.branches.iter().enumerate().skip(1) {
        out.push_str(&format!("R{k} {} {} {}\n", c.node_names[b.from], c.node_names[b.to], b.resistance));
    }
    out
}

/// Grid shapes with at most four meshes.
pub const SHAPES: [(usize, usize); 5] = [(1, 1), (1, 2), (1, 3), (1, 4), (2, 2)];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn determinant_small() {
        let c = |x: f64| Complex64::new(x, 0.0);
        let m = vec![vec![c(2.0), c(1.0)], vec![c(1.0), c(3.0)]];
        assert_eq!(leibniz_det(&m), c(5.0));
        let id3: Vec<Vec<Complex64>> =
            (0..3).map(|i| (0..3).map(|j| c(if i == j { 1.0 } else { 0.0 })).collect()).collect();
        assert_eq!(leibniz_det(&id3), c(1.0));
    }

    #[test]
    fn single_loop() {
        let mut c = grid(1, 1, 1, 0.0);
        for b in &mut c.branches {
            b.resistance = 1.0;
            b.emf = None;
        }
        c.branches[0].emf = Some(Complex64::new(8.0, 0.0));
        let s = c.solve().unwrap();
        assert!((s.mesh_currents[0] - Complex64::new(2.0, 0.0)).norm() < 1e-15);
    }
}
