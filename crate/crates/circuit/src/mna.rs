//! Modified nodal analysis with a dense complex LU.
//!
//! Unknowns are the non-ground node voltages followed by one branch current
//! per voltage-defined element (voltage sources, VCVS, CCVS, inductors,
//! closed switches, transformers) and one per floating island reference.

use std::collections::{BTreeMap, HashMap};
use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{CircuitError, Result};
use crate::netlist::{Circuit, Element, ElementKind, SwitchState, UnionFind, GROUND};
use crate::solution::Solution;

/// Pivots smaller than this fraction of the matrix ∞-norm mean singular.
pub const PIVOT_TOLERANCE: f64 = 1e-12;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Linear combination of unknowns plus a constant.
#[derive(Debug, Clone, Default)]
struct LinExpr {
    terms: Vec<(usize, Complex64)>,
    constant: Complex64,
}

impl LinExpr {
    fn var(index: usize) -> Self {
        Self { terms: vec![(index, ONE)], constant: ZERO }
    }

    fn constant(value: Complex64) -> Self {
        Self { terms: Vec::new(), constant: value }
    }

    fn scaled(mut self, factor: Complex64) -> Self {
        for (_, c) in &mut self.terms {
            *c *= factor;
        }
        self.constant *= factor;
        self
    }

    fn plus(mut self, other: LinExpr) -> Self {
        self.terms.extend(other.terms);
        self.constant += other.constant;
        self
    }

    fn eval(&self, x: &[Complex64]) -> Complex64 {
        self.terms.iter().map(|&(i, c)| c * x[i]).sum::<Complex64>() + self.constant
    }
}

struct Assembly<'c> {
    circuit: &'c Circuit,
    frequency: f64,
    omega: f64,
    node_var: HashMap<&'c str, usize>,
    branch_var: HashMap<usize, usize>,
    pins: Vec<(usize, usize)>,
    labels: Vec<String>,
    current_cache: HashMap<usize, LinExpr>,
}

impl<'c> Assembly<'c> {
    fn new(circuit: &'c Circuit, frequency: f64) -> Self {
        let mut labels = Vec::new();
        let mut node_var = HashMap::new();
        for node in circuit.nodes().iter().filter(|n| n.as_str() != GROUND) {
            node_var.insert(node.as_str(), labels.len());
            labels.push(format!("V({node})"));
        }
        let mut branch_var = HashMap::new();
        for (i, element) in circuit.elements().iter().enumerate() {
            let needs_branch = match element.kind {
                ElementKind::VoltageSource { .. }
                | ElementKind::Vcvs { .. }
                | ElementKind::Ccvs { .. }
                | ElementKind::Inductor { .. }
                | ElementKind::Transformer { .. } => true,
                ElementKind::Switch { state } => state == SwitchState::Closed,
                _ => false,
            };
            if needs_branch {
                branch_var.insert(i, labels.len());
                labels.push(format!("I({})", element.name));
            }
        }
        let mut assembly = Self {
            circuit,
            frequency,
            omega: 2.0 * PI * frequency,
            node_var,
            branch_var,
            pins: Vec::new(),
            labels,
            current_cache: HashMap::new(),
        };
        assembly.pin_floating_islands();
        assembly
    }

    fn conducts(&self, element: &Element) -> bool {
        match element.kind {
            ElementKind::Resistor { .. }
            | ElementKind::Inductor { .. }
            | ElementKind::VoltageSource { .. }
            | ElementKind::Vcvs { .. }
            | ElementKind::Ccvs { .. }
            | ElementKind::Transformer { .. } => true,
            ElementKind::Capacitor { .. } => self.frequency > 0.0,
            ElementKind::Switch { state } => state == SwitchState::Closed,
            _ => false,
        }
    }

    /// Groups of nodes with no conducting path to ground get one node held
    /// at 0 V by an auxiliary constraint. A consistent island draws no current
    /// through that constraint; see `solve`.
    fn pin_floating_islands(&mut self) {
        let nodes = self.circuit.nodes();
        let position: HashMap<&str, usize> = nodes.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
        let mut sets = UnionFind::new(nodes.len());
        for element in self.circuit.elements() {
            if !self.conducts(element) {
                continue;
            }
            let t = element.terminals();
            sets.union(position[t[0].as_str()], position[t[1].as_str()]);
            if t.len() == 4 {
                sets.union(position[t[2].as_str()], position[t[3].as_str()]);
            }
        }
        let ground = sets.find(0);
        let mut pinned = Vec::new();
        for i in 1..nodes.len() {
            let root = sets.find(i);
            if root != ground && !pinned.contains(&root) {
                pinned.push(root);
                let pin = self.labels.len();
                self.labels.push(format!("I(reference {})", nodes[i]));
                self.pins.push((self.node_var[nodes[i].as_str()], pin));
            }
        }
    }

    fn size(&self) -> usize {
        self.labels.len()
    }

    fn node(&self, name: &str) -> Option<usize> {
        self.node_var.get(name).copied()
    }

    fn vdiff(&self, a: &str, b: &str) -> LinExpr {
        let mut e = LinExpr::default();
        if let Some(i) = self.node(a) {
            e.terms.push((i, ONE));
        }
        if let Some(j) = self.node(b) {
            e.terms.push((j, -ONE));
        }
        e
    }

    fn jw(&self) -> Complex64 {
        Complex64::new(0.0, self.omega)
    }

    /// Current entering `element` at its first terminal, as a function of the
    /// unknowns.
    fn current(&mut self, index: usize, depth: usize) -> Result<LinExpr> {
        if let Some(e) = self.current_cache.get(&index) {
            return Ok(e.clone());
        }
        if depth > self.circuit.elements().len() {
            return Err(CircuitError::SingularSystem(
                "current-controlled sources form a control loop".into(),
            ));
        }
        let element = &self.circuit.elements()[index];
        let n = &element.nodes;
        let expr = match &element.kind {
            ElementKind::Resistor { ohms } => self.vdiff(&n[0], &n[1]).scaled(Complex64::new(1.0 / ohms, 0.0)),
            ElementKind::Capacitor { farads } => {
                if self.frequency == 0.0 {
                    LinExpr::default()
                } else {
                    self.vdiff(&n[0], &n[1]).scaled(self.jw() * farads)
                }
            }
            ElementKind::CurrentSource { value } => LinExpr::constant(value.at(self.frequency)),
            ElementKind::Vccs { gain } => self.vdiff(&n[2], &n[3]).scaled(Complex64::new(*gain, 0.0)),
            ElementKind::Cccs { control, gain } => {
                let ctrl = self.circuit.element_index(control).expect("validated reference");
                self.current(ctrl, depth + 1)?.scaled(Complex64::new(*gain, 0.0))
            }
            ElementKind::Switch { state: SwitchState::Open } => LinExpr::default(),
            ElementKind::Coupling { .. } => LinExpr::default(),
            _ => LinExpr::var(self.branch_var[&index]),
        };
        self.current_cache.insert(index, expr.clone());
        Ok(expr)
    }

    fn build(&mut self) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
        let n = self.size();
        let mut a = vec![ZERO; n * n];
        let mut b = vec![ZERO; n];

        let add_row = |a: &mut Vec<Complex64>, b: &mut Vec<Complex64>, row: usize, expr: &LinExpr, sign: f64| {
            for &(col, c) in &expr.terms {
                a[row * n + col] += c * sign;
            }
            b[row] -= expr.constant * sign;
        };

        let elements = self.circuit.elements();
        // Mutual inductance, keyed by inductor index.
        let mut mutuals: HashMap<usize, Vec<(usize, f64)>> = HashMap::new();
        for element in elements {
            if let ElementKind::Coupling { first, second, k } = &element.kind {
                let i = self.circuit.element_index(first).expect("validated");
                let j = self.circuit.element_index(second).expect("validated");
                let (ElementKind::Inductor { henries: l1 }, ElementKind::Inductor { henries: l2 }) =
                    (&elements[i].kind, &elements[j].kind)
                else {
                    unreachable!("coupling validated against inductors");
                };
                let m = k * (l1 * l2).sqrt();
                mutuals.entry(i).or_default().push((j, m));
                mutuals.entry(j).or_default().push((i, m));
            }
        }

        for (index, element) in elements.iter().enumerate() {
            let t = &element.nodes;
            match &element.kind {
                ElementKind::Coupling { .. } => continue,
                ElementKind::Transformer { ratio } => {
                    let primary = LinExpr::var(self.branch_var[&index]);
                    let secondary = primary.clone().scaled(Complex64::new(-ratio, 0.0));
                    for (node, expr, sign) in [
                        (&t[0], &primary, 1.0),
                        (&t[1], &primary, -1.0),
                        (&t[2], &secondary, 1.0),
                        (&t[3], &secondary, -1.0),
                    ] {
                        if let Some(row) = self.node(node) {
                            add_row(&mut a, &mut b, row, expr, sign);
                        }
                    }
                    let row = self.branch_var[&index];
                    let constraint = self
                        .vdiff(&t[0], &t[1])
                        .plus(self.vdiff(&t[2], &t[3]).scaled(Complex64::new(-ratio, 0.0)));
                    add_row(&mut a, &mut b, row, &constraint, 1.0);
                    continue;
                }
                _ => {}
            }

            let current = self.current(index, 0)?;
            if let Some(row) = self.node(&t[0]) {
                add_row(&mut a, &mut b, row, &current, 1.0);
            }
            if let Some(row) = self.node(&t[1]) {
                add_row(&mut a, &mut b, row, &current, -1.0);
            }

            let Some(&row) = self.branch_var.get(&index) else { continue };
            let own = LinExpr::var(row);
            let constraint = match &element.kind {
                ElementKind::VoltageSource { value, internal_resistance } => self
                    .vdiff(&t[0], &t[1])
                    .plus(own.scaled(Complex64::new(-internal_resistance, 0.0)))
                    .plus(LinExpr::constant(-value.at(self.frequency))),
                ElementKind::Inductor { henries } => {
                    let mut c = self.vdiff(&t[0], &t[1]).plus(own.scaled(-self.jw() * henries));
                    for &(other, m) in mutuals.get(&index).map(Vec::as_slice).unwrap_or(&[]) {
                        c = c.plus(LinExpr::var(self.branch_var[&other]).scaled(-self.jw() * m));
                    }
                    c
                }
                ElementKind::Vcvs { gain } => self
                    .vdiff(&t[0], &t[1])
                    .plus(self.vdiff(&t[2], &t[3]).scaled(Complex64::new(-gain, 0.0))),
                ElementKind::Ccvs { control, gain } => {
                    let ctrl = self.circuit.element_index(control).expect("validated reference");
                    let ctrl_current = self.current(ctrl, 0)?;
                    self.vdiff(&t[0], &t[1]).plus(ctrl_current.scaled(Complex64::new(-gain, 0.0)))
                }
                ElementKind::Switch { .. } => self.vdiff(&t[0], &t[1]),
                _ => unreachable!("only voltage-defined elements own a branch variable"),
            };
            add_row(&mut a, &mut b, row, &constraint, 1.0);
        }

        for &(node, pin) in &self.pins {
            a[node * n + pin] += ONE;
            a[pin * n + node] += ONE;
        }
        Ok((a, b))
    }
}

/// Solves `a x = b` in place by LU with partial pivoting. `a` is row-major.
pub(crate) fn lu_solve(
    mut a: Vec<Complex64>,
    mut b: Vec<Complex64>,
    labels: &[String],
) -> Result<Vec<Complex64>> {
    let n = b.len();
    let norm = (0..n)
        .map(|r| a[r * n..(r + 1) * n].iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max);
    if n == 0 {
        return Ok(Vec::new());
    }
    let threshold = PIVOT_TOLERANCE * norm;
    for k in 0..n {
        let (pivot_row, pivot_mag) = (k..n)
            .map(|r| (r, a[r * n + k].norm()))
            .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if !(pivot_mag > threshold) {
            return Err(CircuitError::SingularSystem(format!(
                "no independent equation determines {}",
                labels[k]
            )));
        }
        if pivot_row != k {
            for c in 0..n {
                a.swap(k * n + c, pivot_row * n + c);
            }
            b.swap(k, pivot_row);
        }
        let pivot = a[k * n + k];
        for r in k + 1..n {
            let factor = a[r * n + k] / pivot;
            if factor == ZERO {
                continue;
            }
            a[r * n + k] = ZERO;
            for c in k + 1..n {
                let upper = a[k * n + c];
                a[r * n + c] -= factor * upper;
            }
            let bk = b[k];
            b[r] -= factor * bk;
        }
    }
    for k in (0..n).rev() {
        let mut acc = b[k];
        for c in k + 1..n {
            acc -= a[k * n + c] * b[c];
        }
        b[k] = acc / a[k * n + k];
    }
    if b.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(CircuitError::SingularSystem("solution is not finite".into()));
    }
    Ok(b)
}

/// Rejects loops made only of independent voltage sources whose EMFs do not
/// sum to zero. Internal resistances are ignored for this check.
fn check_source_loops(circuit: &Circuit, frequency: f64) -> Result<()> {
    let nodes = circuit.nodes();
    let position: HashMap<&str, usize> = nodes.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
    // Weighted union-find: potential[i] = V(i) - V(parent root).
    let mut parent: Vec<usize> = (0..nodes.len()).collect();
    let mut potential = vec![ZERO; nodes.len()];
    let mut members: Vec<Vec<String>> = vec![Vec::new(); nodes.len()];

    fn find(parent: &mut [usize], potential: &mut [Complex64], x: usize) -> (usize, Complex64) {
        if parent[x] == x {
            return (x, ZERO);
        }
        let (root, up) = find(parent, potential, parent[x]);
        potential[x] += up;
        parent[x] = root;
        (root, potential[x])
    }

    for element in circuit.elements() {
        let ElementKind::VoltageSource { value, .. } = &element.kind else { continue };
        let emf = value.at(frequency);
        let (a, b) = (position[element.nodes[0].as_str()], position[element.nodes[1].as_str()]);
        let (ra, pa) = find(&mut parent, &mut potential, a);
        let (rb, pb) = find(&mut parent, &mut potential, b);
        if ra == rb {
            let mismatch = (pa - pb) - emf;
            let scale = emf.norm().max((pa - pb).norm());
            if mismatch.norm() > 1e-9 * scale.max(f64::MIN_POSITIVE) {
                let mut involved = members[ra].clone();
                involved.push(element.name.clone());
                return Err(CircuitError::SingularSystem(format!(
                    "voltage sources {} form a loop with inconsistent EMFs",
                    involved.join(", ")
                )));
            }
            members[ra].push(element.name.clone());
        } else {
            // V(a) - V(b) = emf; attach rb under ra.
            parent[rb] = ra;
            potential[rb] = pa - pb - emf;
            let moved = std::mem::take(&mut members[rb]);
            members[ra].extend(moved);
            members[ra].push(element.name.clone());
        }
    }
    Ok(())
}

/// Solves the circuit at `frequency` (0 for DC: inductors short, capacitors
/// open, mutual coupling vanishes).
pub fn solve(circuit: &Circuit, frequency: f64) -> Result<Solution> {
    if !(frequency.is_finite() && frequency >= 0.0) {
        return Err(CircuitError::InvalidInput(format!("invalid frequency {frequency}")));
    }
    check_source_loops(circuit, frequency)?;
    let mut assembly = Assembly::new(circuit, frequency);
    let (a, b) = assembly.build()?;
    let x = lu_solve(a, b, &assembly.labels)?;

    let mut node_voltages = BTreeMap::new();
    for node in circuit.nodes() {
        let v = assembly.node(node).map(|i| x[i]).unwrap_or(ZERO);
        node_voltages.insert(node.clone(), v);
    }
    let mut element_currents = BTreeMap::new();
    let mut secondary_currents = BTreeMap::new();
    for (index, element) in circuit.elements().iter().enumerate() {
        match &element.kind {
            ElementKind::Coupling { .. } => {}
            ElementKind::Transformer { ratio } => {
                let primary = x[assembly.branch_var[&index]];
                element_currents.insert(element.name.clone(), primary);
                secondary_currents.insert(element.name.clone(), primary * -ratio);
            }
            _ => {
                let expr = assembly.current(index, 0)?;
                element_currents.insert(element.name.clone(), expr.eval(&x));
            }
        }
    }

    let scale = element_currents.values().map(|i| i.norm()).fold(0.0, f64::max);
    for &(node, pin) in &assembly.pins {
        if x[pin].norm() > 1e-9 * scale.max(f64::MIN_POSITIVE) {
            return Err(CircuitError::SingularSystem(format!(
                "current is forced into an isolated part of the circuit at {}",
                assembly.labels[node]
            )));
        }
    }

    let solution = Solution { frequency, node_voltages, element_currents, secondary_currents };
    debug_assert!(solution.ground_is_zero());
    Ok(solution)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::parse_netlist;

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol * b.norm().max(1.0)
    }

    #[test]
    fn ohms_law() {
        let c = parse_netlist("V1 1 0 DC 12\nR1 1 0 4").unwrap();
        let s = solve(&c, 0.0).unwrap();
        assert!(close(s.current("R1").unwrap(), Complex64::new(3.0, 0.0), 1e-6));
        assert!(close(s.voltage("1").unwrap(), Complex64::new(12.0, 0.0), 1e-6));
        // Source current enters + terminal: negative while delivering.
        assert!(s.current("V1").unwrap().re < 0.0);
    }

    #[test]
    fn ideal_source_exact() {
        let c = parse_netlist("V1 1 0 DC 12 RINT=0\nR1 1 0 4").unwrap();
        let s = solve(&c, 0.0).unwrap();
        assert_eq!(s.current("R1").unwrap(), Complex64::new(3.0, 0.0));
    }

    #[test]
    fn opposing_parallel_sources_singular() {
        let c = parse_netlist("V1 1 0 DC 6\nV2 0 1 DC 6\nR1 1 0 1").unwrap();
        assert!(matches!(solve(&c, 0.0), Err(CircuitError::SingularSystem(_))));
    }

    #[test]
    fn consistent_parallel_sources_share() {
        let c = parse_netlist("V1 1 0 DC 6\nV2 1 0 DC 6\nR1 1 0 3").unwrap();
        let s = solve(&c, 0.0).unwrap();
        assert!(close(s.current("V1").unwrap(), Complex64::new(-1.0, 0.0), 1e-6));
    }

    #[test]
    fn current_source_into_open_is_singular() {
        let c = parse_netlist("I1 0 1 DC 1\nC1 1 0 1u").unwrap();
        assert!(matches!(solve(&c, 0.0), Err(CircuitError::SingularSystem(_))));
    }

    #[test]
    fn inductor_short_capacitor_open_at_dc() {
        let c = parse_netlist("V1 1 0 DC 10 RINT=0\nL1 1 2 1\nR1 2 0 5\nC1 2 0 1m").unwrap();
        let s = solve(&c, 0.0).unwrap();
        assert!(close(s.current("L1").unwrap(), Complex64::new(2.0, 0.0), 1e-12));
        assert_eq!(s.current("C1").unwrap(), ZERO);
    }

    #[test]
    fn isolated_transformer_secondary() {
        let c = parse_netlist("V1 1 0 AC 100 0 RINT=0\nT1 1 0 2 3 10\nR1 2 3 1").unwrap();
        let s = solve(&c, 50.0).unwrap();
        assert!(close(s.voltage_between("2", "3").unwrap(), Complex64::new(10.0, 0.0), 1e-12));
        assert!(close(s.current("R1").unwrap(), Complex64::new(10.0, 0.0), 1e-12));
        // Primary draws current/ratio.
        assert!(close(s.current("T1").unwrap(), Complex64::new(1.0, 0.0), 1e-12));
        assert!(s.max_relative_kcl_residual(&c).unwrap() < 1e-12);
    }

    #[test]
    fn dead_island_reads_zero() {
        let c = parse_netlist("V1 1 0 DC 10\nR1 1 0 5\nSW1 1 2 OPEN\nR2 2 3 4\nR3 3 2 4\nR4 3 4 1\nSW2 4 0 OPEN").unwrap();
        let s = solve(&c, 0.0).unwrap();
        assert_eq!(s.current("R2").unwrap(), ZERO);
    }

    #[test]
    fn vcvs_amplifies() {
        let c = parse_netlist("V1 1 0 DC 1 RINT=0\nR1 1 0 1\nE1 2 0 1 0 5\nR2 2 0 10").unwrap();
        let s = solve(&c, 0.0).unwrap();
        assert!(close(s.voltage("2").unwrap(), Complex64::new(5.0, 0.0), 1e-12));
    }

    #[test]
    fn cccs_and_ccvs() {
        // I(R1) = 1 A drives F1 (x2) into R2 = 3 Ω and H1 (4 Ω) into R3.
        let c = parse_netlist(
            "V1 1 0 DC 1 RINT=0\nR1 1 0 1\nF1 0 2 R1 2\nR2 2 0 3\nH1 3 0 R1 4\nR3 3 0 8",
        )
        .unwrap();
        let s = solve(&c, 0.0).unwrap();
        assert!(close(s.voltage("2").unwrap(), Complex64::new(6.0, 0.0), 1e-12));
        assert!(close(s.voltage("3").unwrap(), Complex64::new(4.0, 0.0), 1e-12));
    }

    #[test]
    fn coupled_coils_open_secondary() {
        // Open secondary: V2 = jωM I1.
        let c = parse_netlist("V1 1 0 AC 10 0 RINT=0\nR1 1 2 1\nL1 2 0 10m\nL2 3 0 40m\nR2 3 0 1G\nK1 L1 L2 0.5\n.AC 50")
            .unwrap();
        let s = solve(&c, 50.0).unwrap();
        let w = 2.0 * PI * 50.0;
        let i1 = Complex64::new(10.0, 0.0) / Complex64::new(1.0, w * 0.01);
        let m = 0.5 * (0.01f64 * 0.04).sqrt();
        let v2 = Complex64::new(0.0, w * m) * i1;
        assert!(close(s.voltage("3").unwrap(), v2, 1e-6));
    }
}
