use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{CircuitError, Result};
use crate::mna;
use crate::netlist::Circuit;
use crate::phasor::Phasor;
use crate::solution::Solution;

/// DC operating point: inductors are shorts, capacitors are opens and only
/// the DC part of each source is active.
pub fn solve_dc(circuit: &Circuit) -> Result<Solution> {
    mna::solve(circuit, 0.0)
}

/// Sinusoidal steady state at `frequency` Hz, driven by the AC part of each
/// source.
pub fn solve_ac(circuit: &Circuit, frequency: f64) -> Result<Solution> {
    if !(frequency.is_finite() && frequency > 0.0) {
        return Err(CircuitError::InvalidInput(format!(
            "AC analysis needs a positive frequency, got {frequency}"
        )));
    }
    mna::solve(circuit, frequency)
}

/// Solves at the circuit's own `.AC` frequency, or DC without one.
pub fn solve_default(circuit: &Circuit) -> Result<Solution> {
    mna::solve(circuit, circuit.analysis_frequency())
}

/// One point of a sweep; failures are kept per frequency.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub frequency: f64,
    pub response: Result<Phasor, String>,
}

/// Voltage between `probe.0` and `probe.1` at each frequency.
pub fn frequency_sweep(
    circuit: &Circuit,
    probe: (&str, &str),
    frequencies: &[f64],
) -> Result<Vec<SweepPoint>> {
    for node in [probe.0, probe.1] {
        if !circuit.has_node(node) {
            return Err(CircuitError::UnknownNode(node.to_string()));
        }
    }
    if frequencies.iter().any(|f| !(f.is_finite() && *f > 0.0)) {
        return Err(CircuitError::InvalidInput("sweep frequencies must be positive".into()));
    }
    if frequencies.windows(2).any(|w| w[1] <= w[0]) {
        return Err(CircuitError::InvalidInput("sweep frequencies must be strictly increasing".into()));
    }
    Ok(frequencies
        .iter()
        .map(|&frequency| SweepPoint {
            frequency,
            response: solve_ac(circuit, frequency)
                .and_then(|s| s.voltage_between(probe.0, probe.1))
                .map(Phasor::from_complex)
                .map_err(|e| e.to_string()),
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Superposition {
    /// One solution per active independent source, all others silenced.
    pub partials: Vec<(String, Solution)>,
    /// Sum of the partials.
    pub combined: Solution,
}

/// Splits the response into single-source contributions. Silenced voltage
/// sources keep their internal resistance; silenced current sources open.
pub fn superpose(circuit: &Circuit, frequency: f64) -> Result<Superposition> {
    let active: Vec<&str> = circuit
        .independent_sources()
        .filter(|e| match &e.kind {
            crate::netlist::ElementKind::VoltageSource { value, .. }
            | crate::netlist::ElementKind::CurrentSource { value } => value.is_active(frequency),
            _ => false,
        })
        .map(|e| e.name.as_str())
        .collect();
    if active.len() < 2 {
        return Err(CircuitError::NeedTwoSources);
    }
    let partials = active
        .iter()
        .map(|&name| {
            let alone = circuit.with_sources_scaled(Some(name), 0.0);
            mna::solve(&alone, frequency).map(|s| (name.to_string(), s))
        })
        .collect::<Result<Vec<_>>>()?;
    let combined = Solution::sum(partials.iter().map(|(_, s)| s)).expect("at least two partials");
    Ok(Superposition { partials, combined })
}

/// Magnitude ratio helper used by sweeps and tests.
pub fn gain(output: Complex64, input: Complex64) -> f64 {
    (output / input).norm()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::parse_netlist;
    use std::f64::consts::PI;

    #[test]
    fn series_rl_closed_form() {
        // ωL = 10 Ω at 50 Hz.
        let l = 10.0 / (2.0 * PI * 50.0);
        let c = parse_netlist(&format!("V1 1 0 AC 230 0 RINT=0\nR1 1 2 10\nL1 2 0 {l}")).unwrap();
        let s = solve_ac(&c, 50.0).unwrap();
        let i = s.current_phasor("R1").unwrap();
        assert!((i.magnitude - 230.0 / 200f64.sqrt()).abs() < 1e-9);
        assert!((i.degrees() + 45.0).abs() < 1e-9);
    }

    #[test]
    fn resistive_ac_matches_dc() {
        let c = parse_netlist("V1 1 0 DC 12 AC 12 0\nR1 1 2 4\nR2 2 0 8\nR3 2 0 8").unwrap();
        let dc = solve_dc(&c).unwrap();
        let ac = solve_ac(&c, 50.0).unwrap();
        for node in c.nodes() {
            let (d, a) = (dc.voltage_phasor(node).unwrap(), ac.voltage_phasor(node).unwrap());
            assert!((d.magnitude - a.magnitude).abs() < 1e-12);
            assert_eq!(a.angle, 0.0);
        }
    }

    #[test]
    fn ac_rejects_zero_frequency() {
        let c = parse_netlist("V1 1 0 AC 1 0\nR1 1 0 1").unwrap();
        assert!(solve_ac(&c, 0.0).is_err());
    }

    #[test]
    fn lc_resonance_is_singular_or_bounded_by_rint() {
        let (l, cap) = (1e-3, 1e-6);
        let f0 = 1.0 / (2.0 * PI * (l * cap as f64).sqrt());
        let c = parse_netlist(&format!("V1 1 0 AC 1 0\nL1 1 2 {l}\nC1 2 0 {cap}")).unwrap();
        match solve_ac(&c, f0) {
            Err(CircuitError::SingularSystem(_)) => {}
            Ok(s) => {
                let i = s.current("L1").unwrap().norm();
                assert!(i > 1e4, "resonant current only limited by 1 µΩ, got {i}");
            }
            Err(e) => panic!("{e}"),
        }
    }

    #[test]
    fn rc_lowpass_corner() {
        let (r, cap) = (1e3, 1e-6);
        let fc = 1.0 / (2.0 * PI * r * cap);
        let c = parse_netlist("V1 1 0 AC 1 0 RINT=0\nR1 1 2 1k\nC1 2 0 1u").unwrap();
        let sweep = frequency_sweep(&c, ("2", "0"), &[fc / 10.0, fc, fc * 10.0]).unwrap();
        let at_fc = sweep[1].response.as_ref().unwrap();
        assert!((at_fc.magnitude - 1.0 / 2f64.sqrt()).abs() < 1e-9);
        assert!((at_fc.degrees() + 45.0).abs() < 1e-9);
    }

    #[test]
    fn sweep_edge_cases() {
        let c = parse_netlist("V1 1 0 AC 1 0\nR1 1 2 1k\nR2 2 0 1k").unwrap();
        assert!(frequency_sweep(&c, ("2", "0"), &[]).unwrap().is_empty());
        let flat = frequency_sweep(&c, ("2", "0"), &[1.0, 10.0, 1e3, 1e6]).unwrap();
        let first = flat[0].response.clone().unwrap();
        assert!(flat.iter().all(|p| p.response.as_ref().unwrap() == &first));
        assert!(frequency_sweep(&c, ("2", "0"), &[10.0, 5.0]).is_err());
        assert!(frequency_sweep(&c, ("9", "0"), &[10.0]).is_err());
    }

    #[test]
    fn superposition_two_sources() {
        let c = parse_netlist("V1 1 0 DC 10\nR1 1 2 2\nR3 2 0 4\nR2 2 3 2\nV2 3 0 DC 5").unwrap();
        let sp = superpose(&c, 0.0).unwrap();
        let full = solve_dc(&c).unwrap();
        let total: Complex64 = sp.partials.iter().map(|(_, s)| s.current("R3").unwrap()).sum();
        assert!((total - full.current("R3").unwrap()).norm() < 1e-12);
    }

    #[test]
    fn superposition_needs_two() {
        let c = parse_netlist("V1 1 0 DC 10\nR1 1 0 2").unwrap();
        assert_eq!(superpose(&c, 0.0).unwrap_err(), CircuitError::NeedTwoSources);
    }
}
