//! Equivalent-circuit identification from port measurements.
//!
//! A topology is a netlist template whose `{param}` placeholders each stand
//! for one element value. A measurement appends a fixture (loads, test
//! sources) to the model, solves at one frequency and reads probes.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{CircuitError, Result};
use crate::mna;
use crate::netlist::{parse_netlist, Circuit};
use crate::phasor::Phasor;
use crate::solution::Solution;
use crate::template;
use crate::units::format_value;

pub const STARTS: usize = 16;
pub const EVALUATIONS_PER_START: usize = 2000;
/// Residuals closer than this count as a tie, broken by fewer parameters.
pub const TIE_TOLERANCE: f64 = 1e-9;
/// Objective value for parameter vectors the solver rejects.
const FAILED_RESIDUAL: f64 = 1e3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSpec {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Probe {
    Voltage { a: String, b: String },
    Current { element: String },
}

impl Probe {
    pub fn voltage(a: &str, b: &str) -> Self {
        Probe::Voltage { a: a.into(), b: b.into() }
    }

    pub fn current(element: &str) -> Self {
        Probe::Current { element: element.into() }
    }

    pub fn read(&self, solution: &Solution) -> Result<Complex64> {
        match self {
            Probe::Voltage { a, b } => solution.voltage_between(a, b),
            Probe::Current { element } => solution.current(element),
        }
    }
}

/// Stimulus without readings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Experiment {
    pub frequency: f64,
    pub fixture: String,
    pub probes: Vec<Probe>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub probe: Probe,
    pub value: Phasor,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub frequency: f64,
    pub fixture: String,
    pub observations: Vec<Observation>,
}

impl Measurement {
    /// Real degrees of freedom: one per DC reading, two per phasor.
    pub fn information(&self) -> usize {
        self.observations.len() * if self.frequency == 0.0 { 1 } else { 2 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Topology {
    pub id: String,
    pub description: String,
    pub template: String,
    pub params: Vec<ParamSpec>,
    /// Plan that identifies every parameter.
    pub experiments: Vec<Experiment>,
    /// Typical values, used for examples and synthetic data.
    pub reference: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankEntry {
    pub topology_id: String,
    pub residual: f64,
    pub parameters: Vec<f64>,
    pub parameter_count: usize,
    pub converged: bool,
    pub evaluations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub topology_id: String,
    pub parameter_names: Vec<String>,
    pub parameters: Vec<f64>,
    pub residual: f64,
    /// Winner first, then the others by residual.
    pub ranking: Vec<RankEntry>,
}

impl FitResult {
    pub fn parameter(&self, name: &str) -> Option<f64> {
        self.parameter_names.iter().position(|n| n == name).map(|i| self.parameters[i])
    }
}

/// Each measurement's parsed circuit for one topology.
struct Prepared<'a> {
    cases: Vec<Case<'a>>,
}

struct Case<'a> {
    measurement: &'a Measurement,
    circuit: Circuit,
    /// Element driven by each parameter; `None` when the element has no
    /// value at this frequency (a DC source during an AC test).
    bindings: Vec<Option<String>>,
}

impl Topology {
    pub fn parameter_names(&self) -> Vec<String> {
        self.params.iter().map(|p| p.name.clone()).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let names = template::placeholders(&self.template).map_err(CircuitError::InvalidInput)?;
        let mut declared = self.parameter_names();
        declared.sort();
        let mut used = names.clone();
        used.sort();
        if declared != used {
            return Err(CircuitError::InvalidInput(format!(
                "topology `{}`: placeholders {used:?} do not match parameters {declared:?}",
                self.id
            )));
        }
        for p in &self.params {
            if !(p.lower > 0.0 && p.upper > p.lower && p.upper.is_finite()) {
                return Err(CircuitError::InvalidInput(format!(
                    "topology `{}`: bounds of `{}` must satisfy 0 < lower < upper",
                    self.id, p.name
                )));
            }
        }
        if !self.reference.is_empty() && self.reference.len() != self.params.len() {
            return Err(CircuitError::InvalidInput(format!("topology `{}`: reference length", self.id)));
        }
        Ok(())
    }

    /// Netlist with concrete values.
    pub fn render(&self, values: &[f64]) -> Result<String> {
        if values.len() != self.params.len() {
            return Err(CircuitError::InvalidInput("parameter count mismatch".into()));
        }
        template::render(&self.template, |name| {
            self.params.iter().position(|p| p.name == name).map(|i| format_value(values[i]))
        })
        .map_err(CircuitError::InvalidInput)
    }

    /// Model plus fixture, parsed.
    pub fn build(&self, values: &[f64], fixture: &str, frequency: f64) -> Result<Circuit> {
        let text = format!("{}\n{}", self.render(values)?, fixture);
        let circuit = parse_netlist(&text)?;
        Ok(if frequency > 0.0 { circuit.with_ac_frequency(Some(frequency)) } else { circuit })
    }

    /// Element carrying each placeholder. Each placeholder must be the whole
    /// value token of exactly one element line.
    fn bindings(&self) -> Result<Vec<String>> {
        self.params
            .iter()
            .map(|p| {
                let token = format!("{{{}}}", p.name);
                let owners: Vec<&str> = self
                    .template
                    .lines()
                    .filter(|l| l.split_whitespace().any(|t| t == token))
                    .filter_map(|l| l.split_whitespace().next())
                    .collect();
                match owners.as_slice() {
                    [one] => Ok(one.to_string()),
                    _ => Err(CircuitError::InvalidInput(format!(
                        "topology `{}`: `{token}` must be the value of exactly one element",
                        self.id
                    ))),
                }
            })
            .collect()
    }

    fn prepare<'a>(&'a self, measurements: &'a [Measurement]) -> Result<Prepared<'a>> {
        self.validate()?;
        let owners = self.bindings()?;
        let center: Vec<f64> = self.params.iter().map(|p| (p.lower * p.upper).sqrt()).collect();
        let cases = measurements
            .iter()
            .map(|m| {
                let circuit = self.build(&center, &m.fixture, m.frequency)?;
                for o in &m.observations {
                    let ok = match &o.probe {
                        Probe::Voltage { a, b } => circuit.has_node(a) && circuit.has_node(b),
                        Probe::Current { element } => circuit.element(element).is_some(),
                    };
                    if !ok {
                        return Err(CircuitError::InvalidReference(format!(
                            "probe {:?} not in model `{}`",
                            o.probe, self.id
                        )));
                    }
                }
                let bindings = owners
                    .iter()
                    .map(|e| circuit.element(e).and_then(|el| el.primary_value(m.frequency)).map(|_| e.clone()))
                    .collect();
                Ok(Case { measurement: m, circuit, bindings })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Prepared { cases })
    }

    /// Noiseless readings of this model with `values` under `experiments`.
    pub fn synthesize(&self, values: &[f64], experiments: &[Experiment]) -> Result<Vec<Measurement>> {
        experiments
            .iter()
            .map(|e| {
                let circuit = self.build(values, &e.fixture, e.frequency)?;
                let solution = mna::solve(&circuit, e.frequency)?;
                let observations = e
                    .probes
                    .iter()
                    .map(|p| Ok(Observation { probe: p.clone(), value: Phasor::from_complex(p.read(&solution)?) }))
                    .collect::<Result<Vec<_>>>()?;
                Ok(Measurement { frequency: e.frequency, fixture: e.fixture.clone(), observations })
            })
            .collect()
    }

    pub fn reference_measurements(&self) -> Result<Vec<Measurement>> {
        self.synthesize(&self.reference, &self.experiments)
    }
}

impl Prepared<'_> {
    /// RMS over all readings of the relative complex error.
    fn residual(&self, values: &[f64]) -> f64 {
        let mut sum = 0.0;
        let mut count = 0usize;
        for case in &self.cases {
            let updates: Vec<(&str, f64)> = case
                .bindings
                .iter()
                .zip(values)
                .filter_map(|(b, &v)| b.as_deref().map(|name| (name, v)))
                .collect();
            let solved = case
                .circuit
                .with_values(&updates, case.measurement.frequency)
                .and_then(|c| mna::solve(&c, case.measurement.frequency));
            let Ok(solution) = solved else { return FAILED_RESIDUAL };
            for o in &case.measurement.observations {
                let Ok(sim) = o.probe.read(&solution) else { return FAILED_RESIDUAL };
                let obs = o.value.to_complex();
                sum += (sim - obs).norm_sqr() / obs.norm_sqr().max(1e-24);
                count += 1;
            }
        }
        if count == 0 {
            return 0.0;
        }
        let r = (sum / count as f64).sqrt();
        if r.is_finite() { r } else { FAILED_RESIDUAL }
    }
}

/// Residual of `values` for `topology` against `measurements`.
pub fn residual(topology: &Topology, values: &[f64], measurements: &[Measurement]) -> Result<f64> {
    Ok(topology.prepare(measurements)?.residual(values))
}

fn halton(index: usize, base: usize) -> f64 {
    let (mut f, mut r, mut i) = (1.0, 0.0, index);
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

const PRIMES: [usize; 8] = [2, 3, 5, 7, 11, 13, 17, 19];

struct Box_ {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl Box_ {
    fn clamp(&self, x: &mut [f64]) {
        for (i, xi) in x.iter_mut().enumerate() {
            *xi = xi.clamp(self.lo[i], self.hi[i]);
        }
    }

    fn start(&self, k: usize) -> Vec<f64> {
        (0..self.lo.len())
            .map(|i| {
                let u = if k == 0 { 0.5 } else { halton(k, PRIMES[i % PRIMES.len()]) };
                self.lo[i] + u * (self.hi[i] - self.lo[i])
            })
            .collect()
    }
}

struct Run {
    x: Vec<f64>,
    f: f64,
    evaluations: usize,
    converged: bool,
}

/// One Nelder–Mead simplex from `x0` with edge `step`, box-projected.
fn simplex(
    f: &dyn Fn(&[f64]) -> f64,
    bounds: &Box_,
    x0: &[f64],
    step: &[f64],
    budget: usize,
) -> Run {
    let n = x0.len();
    let evaluations = std::cell::Cell::new(0usize);
    let eval = |x: &mut Vec<f64>| {
        bounds.clamp(x);
        evaluations.set(evaluations.get() + 1);
        f(x)
    };
    let mut pts: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    let mut x = x0.to_vec();
    let fx = eval(&mut x);
    pts.push((x, fx));
    for i in 0..n {
        let mut y = x0.to_vec();
        y[i] = if x0[i] + step[i] <= bounds.hi[i] { x0[i] + step[i] } else { x0[i] - step[i] };
        let fy = eval(&mut y);
        pts.push((y, fy));
    }
    let mut converged = false;
    while evaluations.get() < budget {
        pts.sort_by(|a, b| a.1.total_cmp(&b.1));
        let diameter = pts[1..]
            .iter()
            .map(|(p, _)| p.iter().zip(&pts[0].0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        if pts[0].1 < 1e-15 || diameter < 1e-11 || pts[n].1 - pts[0].1 <= 1e-16 * pts[0].1.abs() {
            converged = true;
            break;
        }
        let centroid: Vec<f64> =
            (0..n).map(|i| pts[..n].iter().map(|(p, _)| p[i]).sum::<f64>() / n as f64).collect();
        let along = |t: f64| -> Vec<f64> { (0..n).map(|i| centroid[i] + t * (pts[n].0[i] - centroid[i])).collect() };
        let mut r = along(-1.0);
        let fr = eval(&mut r);
        if fr < pts[0].1 {
            let mut e = along(-2.0);
            let fe = eval(&mut e);
            pts[n] = if fe < fr { (e, fe) } else { (r, fr) };
        } else if fr < pts[n - 1].1 {
            pts[n] = (r, fr);
        } else {
            let (mut c, outside) = if fr < pts[n].1 { (along(-0.5), true) } else { (along(0.5), false) };
            let fc = eval(&mut c);
            if (outside && fc <= fr) || (!outside && fc < pts[n].1) {
                pts[n] = (c, fc);
            } else {
                let best = pts[0].0.clone();
                for (p, fp) in pts.iter_mut().skip(1) {
                    let mut s: Vec<f64> = p.iter().zip(&best).map(|(a, b)| b + 0.5 * (a - b)).collect();
                    *fp = eval(&mut s);
                    *p = s;
                }
            }
        }
    }
    pts.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, f) = pts.swap_remove(0);
    Run { x, f, evaluations: evaluations.get(), converged }
}

/// Repeated simplices from one start: restart at the best point with a
/// smaller simplex until a restart stops improving or the budget runs out.
fn local_search(f: &dyn Fn(&[f64]) -> f64, bounds: &Box_, x0: Vec<f64>, budget: usize) -> Run {
    let width: Vec<f64> = bounds.lo.iter().zip(&bounds.hi).map(|(l, h)| h - l).collect();
    let mut step: Vec<f64> = width.iter().map(|w| 0.1 * w).collect();
    let mut best = Run { x: x0, f: f64::INFINITY, evaluations: 0, converged: false };
    loop {
        let remaining = budget - best.evaluations;
        if remaining <= best.x.len() + 1 {
            return best;
        }
        let run = simplex(f, bounds, &best.x, &step, remaining);
        let improved = run.f < best.f - 1e-12 * best.f.abs().min(1.0) && run.f < best.f;
        let evaluations = best.evaluations + run.evaluations;
        let converged = run.converged;
        if run.f <= best.f {
            best = Run { evaluations, ..run };
        } else {
            best.evaluations = evaluations;
        }
        if !converged {
            best.converged = false;
            return best;
        }
        if !improved || best.f < 1e-15 {
            best.converged = true;
            return best;
        }
        step = width.iter().map(|w| (1e-3 * w).max(1e-6)).collect();
    }
}

/// Fits one topology; the best of [`STARTS`] local searches.
pub fn fit_topology(topology: &Topology, measurements: &[Measurement]) -> Result<RankEntry> {
    let prepared = topology.prepare(measurements)?;
    let bounds = Box_ {
        lo: topology.params.iter().map(|p| p.lower.ln()).collect(),
        hi: topology.params.iter().map(|p| p.upper.ln()).collect(),
    };
    let objective = |x: &[f64]| {
        let values: Vec<f64> = x.iter().map(|v| v.exp()).collect();
        prepared.residual(&values)
    };
    let mut best: Option<Run> = None;
    let mut evaluations = 0;
    let mut any_converged = false;
    for k in 0..STARTS {
        let run = local_search(&objective, &bounds, bounds.start(k), EVALUATIONS_PER_START);
        evaluations += run.evaluations;
        any_converged |= run.converged;
        if best.as_ref().is_none_or(|b| run.f < b.f) {
            best = Some(run);
        }
    }
    let best = best.expect("at least one start");
    Ok(RankEntry {
        topology_id: topology.id.clone(),
        residual: best.f,
        parameters: best.x.iter().map(|v| v.exp()).collect(),
        parameter_count: topology.params.len(),
        converged: any_converged,
        evaluations,
    })
}

/// Fits every candidate and picks the lowest residual; residuals within
/// [`TIE_TOLERANCE`] go to the topology with fewer parameters.
pub fn fit_equivalent_circuit(candidates: &[Topology], measurements: &[Measurement]) -> Result<FitResult> {
    if candidates.is_empty() {
        return Err(CircuitError::InvalidInput("no candidate topologies".into()));
    }
    let information: usize = measurements.iter().map(Measurement::information).sum();
    for t in candidates {
        if information < t.params.len() {
            return Err(CircuitError::InvalidInput(format!(
                "topology `{}` has {} parameters but the measurements carry only {information} readings",
                t.id,
                t.params.len()
            )));
        }
    }
    let mut ranking = candidates.iter().map(|t| fit_topology(t, measurements)).collect::<Result<Vec<_>>>()?;
    ranking.sort_by(|a, b| a.residual.total_cmp(&b.residual));
    let floor = ranking[0].residual;
    let winner = ranking
        .iter()
        .enumerate()
        .filter(|(_, e)| e.residual <= floor + TIE_TOLERANCE)
        .min_by(|(_, a), (_, b)| a.parameter_count.cmp(&b.parameter_count).then(a.residual.total_cmp(&b.residual)))
        .map(|(i, _)| i)
        .expect("nonempty ranking");
    let entry = ranking.remove(winner);
    ranking.insert(0, entry);
    let top = &ranking[0];
    let topology = candidates.iter().find(|t| t.id == top.topology_id).expect("ranked candidate");
    let result = FitResult {
        topology_id: top.topology_id.clone(),
        parameter_names: topology.parameter_names(),
        parameters: top.parameters.clone(),
        residual: top.residual,
        ranking,
    };
    if !result.ranking[0].converged {
        return Err(CircuitError::NonConvergence { best: Box::new(result) });
    }
    Ok(result)
}

fn spec(name: &str, lower: f64, upper: f64) -> ParamSpec {
    ParamSpec { name: name.into(), lower, upper }
}

fn experiment(frequency: f64, fixture: &str, probes: Vec<Probe>) -> Experiment {
    Experiment { frequency, fixture: fixture.into(), probes }
}

/// Shipped candidate models: battery (plain and with RC branch), PV panel at
/// an operating point, transformer and synchronous machine.
pub fn catalog() -> Vec<Topology> {
    let load_dc = |r: &str| experiment(0.0, &format!("RLOAD t 0 {r}"), vec![Probe::current("RLOAD")]);
    vec![
        Topology {
            id: "battery-thevenin".into(),
            description: "EMF in series with internal resistance".into(),
            template: "VE p 0 DC {E} RINT=0\nRS p t {Rs}".into(),
            params: vec![spec("E", 1.0, 1000.0), spec("Rs", 1e-4, 10.0)],
            experiments: vec![load_dc("10"), load_dc("2")],
            reference: vec![12.6, 0.05],
        },
        Topology {
            id: "battery-thevenin-rc".into(),
            description: "EMF, series resistance and one polarisation RC pair".into(),
            template: "VE p 0 DC {E} RINT=0\nRS p m {Rs}\nRP m t {Rp}\nCP m t {Cp}".into(),
            params: vec![spec("E", 1.0, 1000.0), spec("Rs", 1e-4, 10.0), spec("Rp", 1e-4, 10.0), spec("Cp", 1e-2, 1e5)],
            experiments: vec![
                load_dc("10"),
                load_dc("2"),
                experiment(0.01, "IEIS 0 t AC 1 0", vec![Probe::voltage("t", "0")]),
                experiment(0.1, "IEIS 0 t AC 1 0", vec![Probe::voltage("t", "0")]),
            ],
            reference: vec![12.6, 0.03, 0.02, 500.0],
        },
        Topology {
            id: "pv-norton".into(),
            description: "Photocurrent source with shunt resistance, linearised at the operating point".into(),
            template: "IPH 0 t DC {Iph}\nRSH t 0 {Rsh}".into(),
            params: vec![spec("Iph", 1e-2, 100.0), spec("Rsh", 1e-1, 1e4)],
            experiments: vec![
                experiment(0.0, "RLOAD t 0 5", vec![Probe::current("RLOAD"), Probe::voltage("t", "0")]),
                experiment(0.0, "RLOAD t 0 20", vec![Probe::current("RLOAD")]),
            ],
            reference: vec![5.0, 40.0],
        },
        Topology {
            id: "transformer-simple".into(),
            description: "Magnetising branch at the primary, series impedance, ideal 10:1 core".into(),
            template: "RC p 0 {Rc}\nLM p 0 {Lm}\nREQ p x {Req}\nLEQ x y {Leq}\nT1 y 0 s 0 10".into(),
            params: vec![spec("Rc", 1.0, 1e6), spec("Lm", 1e-3, 1e3), spec("Req", 1e-4, 1e3), spec("Leq", 1e-6, 10.0)],
            experiments: vec![
                experiment(50.0, "VOC p 0 AC 230 0 RINT=0", vec![Probe::current("VOC")]),
                experiment(50.0, "VSC p 0 AC 12 0 RINT=0\nSWSC s 0 CLOSED", vec![Probe::current("VSC")]),
            ],
            reference: vec![2000.0, 1.6, 0.5, 3.2e-3],
        },
        Topology {
            id: "synchronous-machine".into(),
            description: "Per-phase EMF behind armature resistance and synchronous reactance".into(),
            template: "VE p 0 AC {E} 0 RINT=0\nRA p m {Ra}\nLS m t {Ls}".into(),
            params: vec![spec("E", 1.0, 1e5), spec("Ra", 1e-4, 100.0), spec("Ls", 1e-5, 10.0)],
            experiments: vec![
                experiment(50.0, "RLOAD t 0 10", vec![Probe::voltage("t", "0")]),
                experiment(50.0, "RLOAD t u 4\nLLOAD u 0 20m", vec![Probe::current("RLOAD")]),
            ],
            reference: vec![250.0, 0.2, 0.01],
        },
    ]
}

pub fn catalog_topology(id: &str) -> Option<Topology> {
    catalog().into_iter().find(|t| t.id == id)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_is_well_formed() {
        for t in catalog() {
            t.validate().unwrap();
            let info: usize = t.reference_measurements().unwrap().iter().map(Measurement::information).sum();
            assert!(info >= t.params.len(), "{}", t.id);
            assert!(residual(&t, &t.reference, &t.reference_measurements().unwrap()).unwrap() < 1e-14);
        }
    }

    #[test]
    fn battery_exact_recovery() {
        let t = catalog_topology("battery-thevenin").unwrap();
        let data = t.reference_measurements().unwrap();
        let fit = fit_equivalent_circuit(&[t.clone()], &data).unwrap();
        for (got, want) in fit.parameters.iter().zip(&t.reference) {
            assert!((got - want).abs() <= 1e-3 * want, "{got} vs {want}");
        }
        assert!(fit.residual < 1e-9);
    }

    #[test]
    fn needs_enough_readings() {
        let t = catalog_topology("battery-thevenin").unwrap();
        let data = t.reference_measurements().unwrap();
        assert!(fit_equivalent_circuit(&[t], &data[..1]).is_err());
    }

    #[test]
    fn bindings_require_single_owner() {
        let mut t = catalog_topology("battery-thevenin").unwrap();
        t.template = "VE p 0 DC {E} RINT=0\nRS p t {Rs}\nRX t 0 {Rs}".into();
        assert!(t.bindings().is_err());
    }

    #[test]
    fn halton_is_in_unit_interval() {
        for k in 1..50 {
            let h = halton(k, 3);
            assert!((0.0..1.0).contains(&h));
        }
        assert_eq!(halton(1, 2), 0.5);
    }
}
