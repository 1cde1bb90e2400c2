//! Three-phase systems: wye source, optional line and neutral impedances,
//! any mix of wye and delta loads.
//!
//! Phase voltages are reported against the source star point (ground).
//! Per-load currents are arm currents: `a, b, c` for wye, `ab, bc, ca` for
//! delta.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{CircuitError, Result};
use crate::mna;
use crate::netlist::{Circuit, Element, SourceValue, SwitchState, GROUND};
use crate::solution::Solution;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Sequence {
    Abc,
    Acb,
}

impl Sequence {
    /// Rotation from phase a to phases a, b, c.
    pub fn shifts(self) -> [Complex64; 3] {
        let lag = Complex64::from_polar(1.0, -2.0 * PI / 3.0);
        let lead = Complex64::from_polar(1.0, 2.0 * PI / 3.0);
        let one = Complex64::new(1.0, 0.0);
        match self {
            Sequence::Abc => [one, lag, lead],
            Sequence::Acb => [one, lead, lag],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Connection {
    Wye,
    Delta,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThreePhaseLoad {
    pub connection: Connection,
    /// Wye: arms a, b, c. Delta: arms ab, bc, ca.
    pub z: [Complex64; 3],
}

impl ThreePhaseLoad {
    pub fn balanced(connection: Connection, z: Complex64) -> Self {
        Self { connection, z: [z; 3] }
    }

    pub fn is_balanced(&self) -> bool {
        self.z[0] == self.z[1] && self.z[1] == self.z[2]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThreePhaseSystem {
    /// Line-to-line RMS voltage at the source.
    pub v_ll: f64,
    pub sequence: Sequence,
    pub frequency: f64,
    pub loads: Vec<ThreePhaseLoad>,
    /// Series impedance of each line conductor; `None` means ideal lines.
    #[serde(default)]
    pub line: Option<Complex64>,
    /// Neutral conductor between the source star and every wye load star;
    /// `None` is a three-wire system, zero a solid neutral.
    #[serde(default)]
    pub neutral: Option<Complex64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Reduction,
    FullMna,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThreePhaseReport {
    pub method: Method,
    pub balanced: bool,
    /// Load-side line-to-neutral voltages a, b, c.
    pub phase_voltages: [Complex64; 3],
    /// Load-side line-to-line voltages ab, bc, ca.
    pub line_voltages: [Complex64; 3],
    /// Currents leaving the source in lines a, b, c.
    pub line_currents: [Complex64; 3],
    /// Current returning through the neutral conductor to the source.
    pub neutral_current: Complex64,
    pub load_currents: Vec<[Complex64; 3]>,
    /// Complex power delivered by the source.
    pub source_power: Complex64,
    /// Complex power absorbed by the loads.
    pub load_power: Complex64,
    /// Real power dissipated in the line conductors.
    pub line_loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThreePhaseResult {
    pub report: ThreePhaseReport,
    /// The circuit actually solved: the single-phase equivalent for the
    /// reduction path, the full three-phase circuit otherwise.
    pub circuit: Circuit,
    pub solution: Solution,
}

impl ThreePhaseSystem {
    pub fn is_balanced(&self) -> bool {
        self.loads.iter().all(ThreePhaseLoad::is_balanced)
    }

    pub fn phase_voltage(&self) -> f64 {
        self.v_ll / 3f64.sqrt()
    }

    fn omega(&self) -> f64 {
        2.0 * PI * self.frequency
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(CircuitError::InvalidInput(m.to_string()));
        if !(self.v_ll.is_finite() && self.v_ll > 0.0) {
            return bad("line-to-line voltage must be positive");
        }
        if !(self.frequency.is_finite() && self.frequency > 0.0) {
            return bad("three-phase frequency must be positive");
        }
        if self.loads.is_empty() {
            return bad("system needs at least one load");
        }
        for load in &self.loads {
            if load.z.iter().any(|z| !finite(*z) || z.norm() == 0.0) {
                return Err(CircuitError::ZeroImpedance);
            }
        }
        for z in self.line.iter().chain(self.neutral.iter()) {
            if !finite(*z) {
                return bad("line and neutral impedances must be finite");
            }
        }
        Ok(())
    }

    /// Full three-phase circuit with ideal sources `VA`, `VB`, `VC`.
    /// Source terminals are `sa, sb, sc` when lines have impedance; load
    /// terminals are always `a, b, c`.
    pub fn to_circuit(&self) -> Result<Circuit> {
        self.validate()?;
        let omega = self.omega();
        let shifts = self.sequence.shifts();
        let vp = self.phase_voltage();
        let mut elements = Vec::new();
        let phases = ["a", "b", "c"];
        let line = self.line.filter(|z| z.norm() > 0.0);
        for (k, phase) in phases.iter().enumerate() {
            let angle = shifts[k].arg().to_degrees();
            let source_node = if line.is_some() { format!("s{phase}") } else { phase.to_string() };
            elements.push(
                Element::voltage_source(
                    &format!("V{}", phase.to_uppercase()),
                    &source_node,
                    GROUND,
                    SourceValue::ac(vp, angle),
                )
                .with_internal_resistance(0.0),
            );
            if let Some(z) = line {
                elements.extend(impedance_elements(&format!("LINE{}", phase.to_uppercase()), &source_node, phase, z, omega));
            }
        }
        let star_common = self.neutral.map(|_| "nl".to_string());
        for (i, load) in self.loads.iter().enumerate() {
            match load.connection {
                Connection::Wye => {
                    let star = format!("n{}", i + 1);
                    for (k, phase) in phases.iter().enumerate() {
                        let tag = format!("LD{}{}", i + 1, phase.to_uppercase());
                        elements.extend(impedance_elements(&tag, phase, &star, load.z[k], omega));
                    }
                    if let Some(common) = &star_common {
                        elements.push(Element::switch(&format!("SWN{}", i + 1), &star, common, SwitchState::Closed));
                    }
                }
                Connection::Delta => {
                    for k in 0..3 {
                        let (from, to) = (phases[k], phases[(k + 1) % 3]);
                        let tag = format!("LD{}{}{}", i + 1, from.to_uppercase(), to.to_uppercase());
                        elements.extend(impedance_elements(&tag, from, to, load.z[k], omega));
                    }
                }
            }
        }
        if let (Some(z), Some(common)) = (self.neutral, &star_common) {
            if self.loads.iter().any(|l| l.connection == Connection::Wye) {
                if z.norm() > 0.0 {
                    elements.extend(impedance_elements("NEUTRAL", common, GROUND, z, omega));
                } else {
                    elements.push(Element::switch("SWNEUTRAL", common, GROUND, SwitchState::Closed));
                }
            }
        }
        Ok(Circuit::new("three-phase system", elements)?.with_ac_frequency(Some(self.frequency)))
    }
}

fn finite(z: Complex64) -> bool {
    z.re.is_finite() && z.im.is_finite()
}

/// Series R plus L or C realising `z` at `omega`, named `R<tag>`, `L<tag>`,
/// `C<tag>`, with internal node `<tag>_m` when both parts are present.
pub fn impedance_elements(tag: &str, a: &str, b: &str, z: Complex64, omega: f64) -> Vec<Element> {
    let reactive = |from: &str, to: &str| {
        if z.im > 0.0 {
            Element::inductor(&format!("L{tag}"), from, to, z.im / omega)
        } else {
            Element::capacitor(&format!("C{tag}"), from, to, -1.0 / (omega * z.im))
        }
    };
    match (z.re != 0.0, z.im != 0.0) {
        (true, false) => vec![Element::resistor(&format!("R{tag}"), a, b, z.re)],
        (false, true) => vec![reactive(a, b)],
        _ => {
            let mid = format!("{tag}_m");
            vec![Element::resistor(&format!("R{tag}"), a, &mid, z.re), reactive(&mid, b)]
        }
    }
}

fn impedance_current(sol: &Solution, tag: &str) -> Result<Complex64> {
    ["R", "L", "C"]
        .iter()
        .find_map(|p| sol.current(&format!("{p}{tag}")).ok())
        .ok_or_else(|| CircuitError::UnknownElement(tag.to_string()))
}

/// Balanced systems go through the single-phase reduction, others through
/// full nodal analysis.
pub fn solve_three_phase(system: &ThreePhaseSystem) -> Result<ThreePhaseResult> {
    if system.is_balanced() {
        solve_by_reduction(system)
    } else {
        solve_full(system)
    }
}

/// Phase-a equivalent: each delta load becomes its wye equivalent `Z/3`,
/// all star points sit at neutral potential, so the neutral carries nothing.
/// The other phases follow by rotation.
pub fn solve_by_reduction(system: &ThreePhaseSystem) -> Result<ThreePhaseResult> {
    system.validate()?;
    if !system.is_balanced() {
        return Err(CircuitError::InvalidInput("reduction needs a balanced system".into()));
    }
    let omega = system.omega();
    let vp = system.phase_voltage();
    let line = system.line.filter(|z| z.norm() > 0.0);
    let bus = "a";
    let mut elements = vec![Element::voltage_source("VA", if line.is_some() { "sa" } else { bus }, GROUND, SourceValue::ac(vp, 0.0))
        .with_internal_resistance(0.0)];
    if let Some(z) = line {
        elements.extend(impedance_elements("LINEA", "sa", bus, z, omega));
    }
    for (i, load) in system.loads.iter().enumerate() {
        let z = match load.connection {
            Connection::Wye => load.z[0],
            Connection::Delta => load.z[0] / 3.0,
        };
        elements.extend(impedance_elements(&format!("LD{}A", i + 1), bus, GROUND, z, omega));
    }
    let circuit = Circuit::new("single-phase equivalent", elements)?.with_ac_frequency(Some(system.frequency));
    let solution = mna::solve(&circuit, system.frequency)?;

    let shifts = system.sequence.shifts();
    let va = solution.voltage(bus)?;
    let ia = -solution.current("VA")?;
    let phase_voltages = shifts.map(|s| va * s);
    let line_voltages = [0, 1, 2].map(|k| phase_voltages[k] - phase_voltages[(k + 1) % 3]);
    let line_currents = shifts.map(|s| ia * s);
    let load_currents = system
        .loads
        .iter()
        .map(|load| match load.connection {
            Connection::Wye => [0, 1, 2].map(|k| phase_voltages[k] / load.z[k]),
            Connection::Delta => [0, 1, 2].map(|k| line_voltages[k] / load.z[k]),
        })
        .collect::<Vec<_>>();
    let source_power = 3.0 * Complex64::new(vp, 0.0) * ia.conj();
    let line_loss = line.map_or(0.0, |z| 3.0 * ia.norm_sqr() * z.re);
    let load_power = 3.0 * va * ia.conj();
    let report = ThreePhaseReport {
        method: Method::Reduction,
        balanced: true,
        phase_voltages,
        line_voltages,
        line_currents,
        neutral_current: Complex64::default(),
        load_currents,
        source_power,
        load_power,
        line_loss,
    };
    Ok(ThreePhaseResult { report, circuit, solution })
}

pub fn solve_full(system: &ThreePhaseSystem) -> Result<ThreePhaseResult> {
    let circuit = system.to_circuit()?;
    let solution = mna::solve(&circuit, system.frequency)?;
    let phases = ["a", "b", "c"];
    let mut phase_voltages = [Complex64::default(); 3];
    let mut line_currents = [Complex64::default(); 3];
    let mut source_power = Complex64::default();
    let mut line_loss = 0.0;
    for (k, phase) in phases.iter().enumerate() {
        let upper = phase.to_uppercase();
        phase_voltages[k] = solution.voltage(phase)?;
        line_currents[k] = -solution.current(&format!("V{upper}"))?;
        let vs = solution.element_voltage(&circuit, &format!("V{upper}"))?;
        source_power += vs * line_currents[k].conj();
        line_loss += system.line.map_or(0.0, |z| line_currents[k].norm_sqr() * z.re);
    }
    let line_voltages = [0, 1, 2].map(|k| phase_voltages[k] - phase_voltages[(k + 1) % 3]);
    let mut load_currents = Vec::with_capacity(system.loads.len());
    let mut load_power = Complex64::default();
    for (i, load) in system.loads.iter().enumerate() {
        let mut arms = [Complex64::default(); 3];
        for k in 0..3 {
            let tag = match load.connection {
                Connection::Wye => format!("LD{}{}", i + 1, phases[k].to_uppercase()),
                Connection::Delta => {
                    format!("LD{}{}{}", i + 1, phases[k].to_uppercase(), phases[(k + 1) % 3].to_uppercase())
                }
            };
            arms[k] = impedance_current(&solution, &tag)?;
            load_power += load.z[k] * arms[k].norm_sqr();
        }
        load_currents.push(arms);
    }
    let neutral_current = if circuit.element("SWNEUTRAL").is_some() {
        solution.current("SWNEUTRAL")?
    } else {
        impedance_current(&solution, "NEUTRAL").unwrap_or_default()
    };
    if let Some(z) = system.neutral.filter(|z| z.norm() > 0.0) {
        line_loss += neutral_current.norm_sqr() * z.re;
    }
    let report = ThreePhaseReport {
        method: Method::FullMna,
        balanced: system.is_balanced(),
        phase_voltages,
        line_voltages,
        line_currents,
        neutral_current,
        load_currents,
        source_power,
        load_power,
        line_loss,
    };
    Ok(ThreePhaseResult { report, circuit, solution })
}

/// Angle of the line-to-line voltage relative to its phase voltage in a
/// positive-sequence system.
pub const LINE_TO_PHASE_SHIFT: f64 = PI / 6.0;

#[cfg(test)]
mod tests {
    use super::*;

    fn worked_case(connection: Connection) -> ThreePhaseSystem {
        ThreePhaseSystem {
            v_ll: 400.0,
            sequence: Sequence::Abc,
            frequency: 50.0,
            loads: vec![ThreePhaseLoad::balanced(connection, Complex64::new(10.0, 0.0))],
            line: None,
            neutral: None,
        }
    }

    #[test]
    fn balanced_wye_worked_case() {
        let r = solve_three_phase(&worked_case(Connection::Wye)).unwrap().report;
        let vp = 400.0 / 3f64.sqrt();
        assert_eq!(r.method, Method::Reduction);
        assert!((r.phase_voltages[0].norm() - vp).abs() < 1e-9);
        assert!((r.line_currents[1].norm() - vp / 10.0).abs() < 1e-9);
        assert!((r.source_power.re - 3.0 * vp * vp / 10.0).abs() < 1e-9 * 16e3);
        assert!((r.line_voltages[0].norm() - 3f64.sqrt() * r.phase_voltages[0].norm()).abs() < 1e-9);
        assert!(((r.line_voltages[0] / r.phase_voltages[0]).arg() - LINE_TO_PHASE_SHIFT).abs() < 1e-12);
    }

    #[test]
    fn reduction_matches_full() {
        let mut sys = worked_case(Connection::Delta);
        sys.loads.push(ThreePhaseLoad::balanced(Connection::Wye, Complex64::new(3.0, 4.0)));
        sys.line = Some(Complex64::new(0.2, 0.1));
        sys.neutral = Some(Complex64::new(0.5, 0.0));
        sys.sequence = Sequence::Acb;
        let a = solve_by_reduction(&sys).unwrap().report;
        let b = solve_full(&sys).unwrap().report;
        let close = |x: Complex64, y: Complex64| (x - y).norm() <= 1e-9 * y.norm().max(1.0);
        for k in 0..3 {
            assert!(close(a.line_currents[k], b.line_currents[k]));
            assert!(close(a.phase_voltages[k], b.phase_voltages[k]));
            assert!(close(a.load_currents[0][k], b.load_currents[0][k]));
        }
        assert!(b.neutral_current.norm() < 1e-9);
        assert!(close(a.source_power, b.source_power));
        assert!((a.line_loss - b.line_loss).abs() < 1e-9 * a.line_loss);
        assert!((b.source_power.re - b.load_power.re - b.line_loss).abs() < 1e-9 * b.source_power.re);
    }

    #[test]
    fn delta_draws_three_times_wye() {
        let w = solve_full(&worked_case(Connection::Wye)).unwrap().report;
        let d = solve_full(&worked_case(Connection::Delta)).unwrap().report;
        assert!((d.line_currents[0].norm() - 3.0 * w.line_currents[0].norm()).abs() < 1e-9);
    }

    #[test]
    fn unbalanced_four_wire_neutral_current() {
        let sys = ThreePhaseSystem {
            loads: vec![ThreePhaseLoad {
                connection: Connection::Wye,
                z: [Complex64::new(10.0, 0.0), Complex64::new(20.0, 0.0), Complex64::new(40.0, 0.0)],
            }],
            neutral: Some(Complex64::default()),
            ..worked_case(Connection::Wye)
        };
        let r = solve_three_phase(&sys).unwrap().report;
        assert_eq!(r.method, Method::FullMna);
        let sum: Complex64 = r.line_currents.iter().sum();
        assert!((sum - r.neutral_current).norm() < 1e-9);
        assert!(r.neutral_current.norm() > 1.0);
    }

    #[test]
    fn pathological_three_wire_star_is_singular() {
        let sys = ThreePhaseSystem {
            loads: vec![ThreePhaseLoad {
                connection: Connection::Wye,
                z: [Complex64::new(0.0, 1.0), Complex64::new(0.0, 1.0), Complex64::new(0.0, -0.5)],
            }],
            ..worked_case(Connection::Wye)
        };
        assert!(matches!(solve_three_phase(&sys), Err(CircuitError::SingularSystem(_))));
    }

    #[test]
    fn zero_load_impedance_rejected() {
        let mut sys = worked_case(Connection::Wye);
        sys.loads[0].z[1] = Complex64::default();
        assert_eq!(sys.validate(), Err(CircuitError::ZeroImpedance));
    }
}
