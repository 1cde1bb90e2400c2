//! Fault injection and protection coordination.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{CircuitError, Result};
use crate::mna;
use crate::netlist::{Circuit, Element, ElementKind, SwitchState, GROUND};
use crate::solution::Solution;

/// Name of the branch added by SHORT faults (resistor, or closed switch at
/// 0 Ω).
pub const SHORT_RESISTOR: &str = "RFAULT";
pub const SHORT_SWITCH: &str = "SWFAULT";
/// Name of the leakage branch added by BYPASS faults.
pub const LEAK_RESISTOR: &str = "RLEAK";
pub const LEAK_SWITCH: &str = "SWLEAK";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum FaultSpec {
    Short { a: String, b: String, ohms: f64 },
    Open { element: String },
    Bypass { node: String, ohms: f64 },
}

impl FaultSpec {
    pub fn kind_name(&self) -> &'static str {
        match self {
            FaultSpec::Short { .. } => "SHORT",
            FaultSpec::Open { .. } => "OPEN",
            FaultSpec::Bypass { .. } => "BYPASS",
        }
    }

    /// Where the fault sits: the node pair, element or node it names.
    pub fn location(&self) -> String {
        match self {
            FaultSpec::Short { a, b, .. } => {
                let (x, y) = if a <= b { (a, b) } else { (b, a) };
                format!("{x}-{y}")
            }
            FaultSpec::Open { element } => element.clone(),
            FaultSpec::Bypass { node, .. } => node.clone(),
        }
    }

    pub fn same_kind(&self, other: &FaultSpec) -> bool {
        self.kind_name() == other.kind_name()
    }
}

fn check_ohms(ohms: f64) -> Result<()> {
    if ohms.is_finite() && ohms >= 0.0 {
        Ok(())
    } else {
        Err(CircuitError::InvalidReference(format!("fault impedance must be finite and nonnegative, got {ohms}")))
    }
}

fn check_node(circuit: &Circuit, node: &str) -> Result<()> {
    if circuit.has_node(node) {
        Ok(())
    } else {
        Err(CircuitError::InvalidReference(format!("unknown node `{node}`")))
    }
}

fn branch(circuit: &Circuit, resistor: &str, switch: &str, a: &str, b: &str, ohms: f64) -> Element {
    if ohms > 0.0 {
        Element::resistor(&circuit.fresh_name(resistor), a, b, ohms)
    } else {
        Element::switch(&circuit.fresh_name(switch), a, b, SwitchState::Closed)
    }
}

/// Circuit with the fault applied. OPEN replaces the element by an open
/// switch of the same name so its current reads zero; couplings that named
/// an opened inductor are dropped.
pub fn inject_fault(circuit: &Circuit, fault: &FaultSpec) -> Result<Circuit> {
    match fault {
        FaultSpec::Short { a, b, ohms } => {
            check_node(circuit, a)?;
            check_node(circuit, b)?;
            check_ohms(*ohms)?;
            if a == b {
                return Err(CircuitError::InvalidReference("short needs two distinct nodes".into()));
            }
            circuit.with_element(branch(circuit, SHORT_RESISTOR, SHORT_SWITCH, a, b, *ohms))
        }
        FaultSpec::Bypass { node, ohms } => {
            check_node(circuit, node)?;
            check_ohms(*ohms)?;
            if node == GROUND {
                return Err(CircuitError::InvalidReference("bypass node must not be ground".into()));
            }
            circuit.with_element(branch(circuit, LEAK_RESISTOR, LEAK_SWITCH, node, GROUND, *ohms))
        }
        FaultSpec::Open { element } => open_elements(circuit, &[element.as_str()]),
    }
}

fn open_elements(circuit: &Circuit, names: &[&str]) -> Result<Circuit> {
    for name in names {
        let e = circuit
            .element(name)
            .ok_or_else(|| CircuitError::InvalidReference(format!("unknown element `{name}`")))?;
        if e.terminals().len() != 2 && !matches!(e.kind, ElementKind::Coupling { .. }) {
            return Err(CircuitError::InvalidReference(format!("cannot open multi-winding element `{name}`")));
        }
    }
    let mut elements = Vec::with_capacity(circuit.elements().len());
    for e in circuit.elements() {
        if names.contains(&e.name.as_str()) {
            if !matches!(e.kind, ElementKind::Coupling { .. }) {
                let t = e.terminals();
                elements.push(Element::switch(&e.name, &t[0], &t[1], SwitchState::Open));
            }
            continue;
        }
        if let ElementKind::Coupling { first, second, .. } = &e.kind {
            if names.contains(&first.as_str()) || names.contains(&second.as_str()) {
                continue;
            }
        }
        elements.push(e.clone());
    }
    let mut next = Circuit::new(circuit.title(), elements)?.with_ac_frequency(circuit.ac_frequency());
    if let Some((a, b)) = circuit.port() {
        next = next.with_port(a, b)?;
    }
    Ok(next)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProtectionKind {
    /// Trips when the branch current magnitude exceeds the threshold.
    Overcurrent,
    /// Trips when the leakage current it supplies exceeds the threshold.
    Differential,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Protection {
    pub element: String,
    /// Amperes RMS.
    pub threshold: f64,
    pub kind: ProtectionKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LoadStatus {
    Unaffected,
    Changed,
    Deenergized,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtectionReading {
    pub element: String,
    pub kind: ProtectionKind,
    /// Current the device measures with the fault present.
    pub measured: f64,
    pub tripped: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TripReport {
    pub readings: Vec<ProtectionReading>,
    pub tripped: Vec<String>,
    /// Fault branch current before any device acts (SHORT and BYPASS).
    pub fault_current: Option<f64>,
    /// Leakage current to ground for BYPASS faults.
    pub residual_current: Option<f64>,
    /// Fault branch current after tripped devices open.
    pub fault_current_after: Option<f64>,
    /// No current feeds the fault once tripped devices are open.
    pub isolated: bool,
    /// Passive elements other than protected branches, compared before the
    /// fault and after tripping.
    pub loads: BTreeMap<String, LoadStatus>,
    pub post_trip: Solution,
}

impl TripReport {
    pub fn loads_with(&self, status: LoadStatus) -> Vec<&str> {
        self.loads.iter().filter(|(_, s)| **s == status).map(|(n, _)| n.as_str()).collect()
    }
}

const REL: f64 = 1e-9;

fn fault_branch(faulted: &Circuit, base: &Circuit) -> Option<String> {
    faulted.elements().iter().find(|e| base.element(&e.name).is_none()).map(|e| e.name.clone())
}

/// Applies the fault, decides which protections trip, opens them and
/// reports what keeps working. For BYPASS faults `ground_loop_ohms` is added
/// in series with the leakage path.
pub fn protection_check(
    circuit: &Circuit,
    protections: &[Protection],
    fault: &FaultSpec,
    ground_loop_ohms: f64,
    frequency: f64,
) -> Result<TripReport> {
    for p in protections {
        if circuit.element(&p.element).is_none() {
            return Err(CircuitError::InvalidReference(format!("no branch `{}` to protect", p.element)));
        }
        if !(p.threshold.is_finite() && p.threshold > 0.0) {
            return Err(CircuitError::InvalidInput("protection threshold must be positive".into()));
        }
    }
    check_ohms(ground_loop_ohms)?;
    let fault = match fault {
        FaultSpec::Bypass { node, ohms } => FaultSpec::Bypass { node: node.clone(), ohms: ohms + ground_loop_ohms },
        other => other.clone(),
    };

    let before = mna::solve(circuit, frequency)?;
    let faulted = inject_fault(circuit, &fault)?;
    let during = mna::solve(&faulted, frequency)?;
    let fault_name = fault_branch(&faulted, circuit);
    let fault_current = match &fault_name {
        Some(name) => Some(during.current(name)?.norm()),
        None => None,
    };
    let residual_current = matches!(fault, FaultSpec::Bypass { .. }).then(|| fault_current.unwrap_or(0.0));

    let mut readings = Vec::with_capacity(protections.len());
    for p in protections {
        let measured = match p.kind {
            ProtectionKind::Overcurrent => during.current(&p.element)?.norm(),
            // The device sees the leakage only when it lies on the supply path:
            // opening it starves the leakage branch.
            ProtectionKind::Differential => match (&fault_name, residual_current) {
                (Some(name), Some(residual)) if residual > 0.0 => {
                    let opened = open_elements(&faulted, &[p.element.as_str()])?;
                    let leak = mna::solve(&opened, frequency)?.current(name)?.norm();
                    if leak <= REL * residual { residual } else { 0.0 }
                }
                _ => 0.0,
            },
        };
        readings.push(ProtectionReading {
            element: p.element.clone(),
            kind: p.kind,
            measured,
            tripped: measured > p.threshold,
        });
    }
    let mut tripped: Vec<String> = readings.iter().filter(|r| r.tripped).map(|r| r.element.clone()).collect();
    tripped.sort();
    tripped.dedup();

    let names: Vec<&str> = tripped.iter().map(String::as_str).collect();
    let post = open_elements(&faulted, &names)?;
    let post_trip = mna::solve(&post, frequency)?;
    let fault_current_after = match &fault_name {
        Some(name) => Some(post_trip.current(name)?.norm()),
        None => None,
    };
    let isolated = match (fault_current, fault_current_after) {
        (Some(pre), Some(post)) => post <= REL * pre.max(f64::MIN_POSITIVE),
        _ => true,
    };

    let protected: Vec<&str> = protections.iter().map(|p| p.element.as_str()).collect();
    let opened_by_fault = match &fault {
        FaultSpec::Open { element } => Some(element.as_str()),
        _ => None,
    };
    let mut loads = BTreeMap::new();
    for e in circuit.elements() {
        let passive = matches!(
            e.kind,
            ElementKind::Resistor { .. } | ElementKind::Inductor { .. } | ElementKind::Capacitor { .. }
        );
        if !passive || protected.contains(&e.name.as_str()) || opened_by_fault == Some(e.name.as_str()) {
            continue;
        }
        let (pre, post): (Complex64, Complex64) = (before.current(&e.name)?, post_trip.current(&e.name)?);
        let scale = pre.norm().max(before.max_current() * REL);
        let status = if post.norm() <= REL * scale.max(f64::MIN_POSITIVE) && pre.norm() > 0.0 {
            LoadStatus::Deenergized
        } else if (post - pre).norm() <= REL * scale.max(f64::MIN_POSITIVE) {
            LoadStatus::Unaffected
        } else {
            LoadStatus::Changed
        };
        loads.insert(e.name.clone(), status);
    }

    Ok(TripReport {
        readings,
        tripped,
        fault_current,
        residual_current,
        fault_current_after,
        isolated,
        loads,
        post_trip,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::parse_netlist;

    #[test]
    fn short_limited_by_internal_resistance() {
        let c = parse_netlist("V1 1 0 DC 12\nR1 1 0 4").unwrap();
        let f = inject_fault(&c, &FaultSpec::Short { a: "1".into(), b: "0".into(), ohms: 0.0 }).unwrap();
        let s = mna::solve(&f, 0.0).unwrap();
        assert!((s.current("V1").unwrap().norm() - 12.0 / 1e-6).abs() < 1e-3 * 12e6);
    }

    #[test]
    fn open_series_loop_carries_nothing() {
        let c = parse_netlist("V1 1 0 DC 12\nR1 1 2 4\nR2 2 0 4").unwrap();
        let f = inject_fault(&c, &FaultSpec::Open { element: "R1".into() }).unwrap();
        let s = mna::solve(&f, 0.0).unwrap();
        for e in ["V1", "R1", "R2"] {
            assert_eq!(s.current(e).unwrap().norm(), 0.0);
        }
    }

    #[test]
    fn open_inductor_drops_coupling() {
        let c = parse_netlist("V1 1 0 AC 1 0\nL1 1 0 1m\nL2 2 0 1m\nR2 2 0 1\nK1 L1 L2 0.5").unwrap();
        let f = inject_fault(&c, &FaultSpec::Open { element: "L1".into() }).unwrap();
        assert!(f.element("K1").is_none());
    }

    #[test]
    fn bad_references() {
        let c = parse_netlist("V1 1 0 DC 12\nR1 1 0 4").unwrap();
        for fault in [
            FaultSpec::Open { element: "R9".into() },
            FaultSpec::Short { a: "1".into(), b: "7".into(), ohms: 0.0 },
            FaultSpec::Short { a: "1".into(), b: "0".into(), ohms: -1.0 },
            FaultSpec::Bypass { node: "0".into(), ohms: 50.0 },
        ] {
            assert!(matches!(inject_fault(&c, &fault), Err(CircuitError::InvalidReference(_))));
        }
    }

    #[test]
    fn upstream_breaker_isolates_everything() {
        let c = parse_netlist("V1 1 0 DC 230 RINT=0\nRW 1 2 0.1\nRA 2 0 50\nRB 2 0 100").unwrap();
        let prot = [Protection { element: "RW".into(), threshold: 16.0, kind: ProtectionKind::Overcurrent }];
        let fault = FaultSpec::Short { a: "2".into(), b: "0".into(), ohms: 0.0 };
        let r = protection_check(&c, &prot, &fault, 0.0, 0.0).unwrap();
        assert_eq!(r.tripped, vec!["RW".to_string()]);
        assert!(r.isolated);
        assert_eq!(r.loads_with(LoadStatus::Deenergized), vec!["RA", "RB"]);
    }

    #[test]
    fn small_leak_does_not_trip_rcd() {
        let c = parse_netlist("V1 1 0 AC 230 0 RINT=0\nRW 1 2 0.1\nRL 2 0 50").unwrap();
        let prot = [Protection { element: "RW".into(), threshold: 0.03, kind: ProtectionKind::Differential }];
        let fault = FaultSpec::Bypass { node: "2".into(), ohms: 20e3 };
        let r = protection_check(&c, &prot, &fault, 10.0, 50.0).unwrap();
        let residual = r.residual_current.unwrap();
        assert!(residual > 0.0 && residual < 0.03);
        assert!(r.tripped.is_empty());
        assert!(!r.isolated);
    }
}
