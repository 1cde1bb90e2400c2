use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{CircuitError, Result};
use crate::netlist::{Circuit, ElementKind};
use crate::solution::Solution;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PfKind {
    Lagging,
    Leading,
    Unity,
}

/// Power factor magnitude plus whether current lags or leads voltage from
/// the element's own point of view (a source feeding an inductive load is
/// lagging, like the load).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerFactor {
    pub value: f64,
    pub kind: PfKind,
}

impl PowerFactor {
    pub fn from_power(s: Complex64) -> Self {
        let apparent = s.norm();
        if apparent == 0.0 {
            return Self { value: 1.0, kind: PfKind::Unity };
        }
        let value = (s.re.abs() / apparent).min(1.0);
        let oriented_q = if s.re < 0.0 { -s.im } else { s.im };
        let kind = if oriented_q > 0.0 {
            PfKind::Lagging
        } else if oriented_q < 0.0 {
            PfKind::Leading
        } else {
            PfKind::Unity
        };
        Self { value, kind }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ElementPower {
    /// Absorbed real power, W (negative when delivering).
    pub p: f64,
    /// Absorbed reactive power, var.
    pub q: f64,
    /// Apparent power, VA.
    pub s: f64,
    pub pf: PowerFactor,
}

impl ElementPower {
    pub fn from_complex(s: Complex64) -> Self {
        Self { p: s.re, q: s.im, s: s.norm(), pf: PowerFactor::from_power(s) }
    }

    pub fn complex(&self) -> Complex64 {
        Complex64::new(self.p, self.q)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerReport {
    pub frequency: f64,
    pub elements: BTreeMap<String, ElementPower>,
    /// Sum over independent and dependent sources.
    pub sources: ElementPower,
    /// Sum over every other element.
    pub loads: ElementPower,
}

impl PowerReport {
    /// Σ S over all elements; zero up to rounding.
    pub fn imbalance(&self) -> Complex64 {
        self.elements.values().map(|e| e.complex()).sum()
    }

    pub fn max_apparent(&self) -> f64 {
        self.elements.values().map(|e| e.s).fold(0.0, f64::max)
    }

    pub fn element(&self, name: &str) -> Result<&ElementPower> {
        self.elements.get(name).ok_or_else(|| CircuitError::UnknownElement(name.to_string()))
    }
}

/// Complex power S = V·I* absorbed by one element (RMS phasors).
pub fn element_power(circuit: &Circuit, solution: &Solution, name: &str) -> Result<Complex64> {
    let element = circuit.element(name).ok_or_else(|| CircuitError::UnknownElement(name.to_string()))?;
    if matches!(element.kind, ElementKind::Coupling { .. }) {
        return Ok(Complex64::default());
    }
    let t = element.terminals();
    let mut s = solution.voltage_between(&t[0], &t[1])? * solution.current(name)?.conj();
    if matches!(element.kind, ElementKind::Transformer { .. }) {
        let secondary = solution
            .secondary_current(name)
            .ok_or_else(|| CircuitError::MismatchedSolution(format!("no secondary current for `{name}`")))?;
        s += solution.voltage_between(&t[2], &t[3])? * secondary.conj();
    }
    Ok(s)
}

pub fn power_summary(circuit: &Circuit, solution: &Solution) -> Result<PowerReport> {
    let expected: Vec<&str> = circuit
        .elements()
        .iter()
        .filter(|e| !matches!(e.kind, ElementKind::Coupling { .. }))
        .map(|e| e.name.as_str())
        .collect();
    let have: Vec<&str> = solution.element_currents.keys().map(String::as_str).collect();
    let mut sorted = expected.clone();
    sorted.sort_unstable();
    if sorted != have {
        return Err(CircuitError::MismatchedSolution("element sets differ".into()));
    }

    let mut elements = BTreeMap::new();
    let (mut sources, mut loads) = (Complex64::default(), Complex64::default());
    for element in circuit.elements() {
        if matches!(element.kind, ElementKind::Coupling { .. }) {
            continue;
        }
        let s = element_power(circuit, solution, &element.name)?;
        if element.is_source() {
            sources += s;
        } else {
            loads += s;
        }
        elements.insert(element.name.clone(), ElementPower::from_complex(s));
    }
    Ok(PowerReport {
        frequency: solution.frequency,
        elements,
        sources: ElementPower::from_complex(sources),
        loads: ElementPower::from_complex(loads),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{solve_ac, solve_dc};
    use crate::netlist::parse_netlist;
    use std::f64::consts::PI;

    #[test]
    fn single_loop_balance() {
        let c = parse_netlist("V1 1 0 DC 12 RINT=0\nR1 1 0 4").unwrap();
        let r = power_summary(&c, &solve_dc(&c).unwrap()).unwrap();
        assert!((r.element("R1").unwrap().p - 36.0).abs() < 1e-12);
        assert!((r.element("V1").unwrap().p + 36.0).abs() < 1e-12);
        assert!(r.imbalance().norm() < 1e-12);
    }

    #[test]
    fn series_rl_power_factor() {
        let l = 10.0 / (2.0 * PI * 50.0);
        let c = parse_netlist(&format!("V1 1 0 AC 230 0 RINT=0\nR1 1 2 10\nL1 2 0 {l}")).unwrap();
        let r = power_summary(&c, &solve_ac(&c, 50.0).unwrap()).unwrap();
        let source = r.element("V1").unwrap().pf;
        assert!((source.value - (PI / 4.0).cos()).abs() < 1e-12);
        assert_eq!(source.kind, PfKind::Lagging);
        assert_eq!(r.loads.pf.kind, PfKind::Lagging);
        assert!((r.loads.pf.value - 0.5f64.sqrt()).abs() < 1e-12);
        let l_pf = r.element("L1").unwrap().pf;
        assert!(l_pf.value < 1e-12);
        assert_eq!(l_pf.kind, PfKind::Lagging);
        for e in r.elements.values() {
            assert!((e.s * e.s - (e.p * e.p + e.q * e.q)).abs() <= 1e-9 * (e.s * e.s).max(1e-300));
        }
    }

    #[test]
    fn capacitor_leads() {
        let c = parse_netlist("V1 1 0 AC 10 0 RINT=0\nR1 1 2 1\nC1 2 0 1m").unwrap();
        let r = power_summary(&c, &solve_ac(&c, 50.0).unwrap()).unwrap();
        assert_eq!(r.element("C1").unwrap().pf.kind, PfKind::Leading);
        assert_eq!(r.element("V1").unwrap().pf.kind, PfKind::Leading);
    }

    #[test]
    fn mismatched_solution() {
        let a = parse_netlist("V1 1 0 DC 12\nR1 1 0 4").unwrap();
        let b = parse_netlist("V1 1 0 DC 12\nR2 1 0 4").unwrap();
        let s = solve_dc(&a).unwrap();
        assert!(matches!(power_summary(&b, &s), Err(CircuitError::MismatchedSolution(_))));
    }
}
