//! Power factor correction with a shunt capacitor (lagging loads) or shunt
//! inductor (leading loads).

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{CircuitError, Result};
use crate::mna;
use crate::netlist::{Circuit, Element, SourceValue, GROUND};
use crate::power::{power_summary, PfKind, PowerFactor};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PfLoad {
    /// Real power, W.
    pub p: f64,
    pub pf: f64,
    pub kind: PfKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "lowercase")]
pub enum Compensator {
    Capacitor(f64),
    Inductor(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PfCorrection {
    pub compensator: Compensator,
    /// Reactive power supplied by the compensator, var (magnitude).
    pub q_compensation: f64,
    /// Power factor seen by the supply after re-solving the corrected circuit.
    pub achieved: PowerFactor,
    /// Supply, load as parallel R with L or C, and the compensator.
    pub circuit: Circuit,
}

/// `Qc = P·(tan φ1 − tan φ2)`, `C = Qc/(ωV²)` or `L = V²/(ωQc)`.
pub fn correct_power_factor(load: PfLoad, target: f64, volts: f64, frequency: f64) -> Result<PfCorrection> {
    let bad = |m: &str| Err(CircuitError::InvalidInput(m.to_string()));
    if !(load.p.is_finite() && load.p > 0.0) {
        return bad("load power must be positive");
    }
    if !(load.pf > 0.0 && load.pf <= 1.0) || !(target > 0.0 && target <= 1.0) {
        return bad("power factors must lie in (0, 1]");
    }
    if !(volts.is_finite() && volts > 0.0 && frequency.is_finite() && frequency > 0.0) {
        return bad("voltage and frequency must be positive");
    }
    if load.pf >= target || load.kind == PfKind::Unity {
        return Err(CircuitError::AlreadyCompensated);
    }
    let omega = 2.0 * PI * frequency;
    let tan = |pf: f64| pf.acos().tan();
    let q_load = load.p * tan(load.pf);
    let q_compensation = load.p * (tan(load.pf) - tan(target));
    let v2 = volts * volts;

    let mut elements = vec![
        Element::voltage_source("VS", "1", GROUND, SourceValue::ac(volts, 0.0)).with_internal_resistance(0.0),
        Element::resistor("RLOAD", "1", GROUND, v2 / load.p),
    ];
    let compensator = match load.kind {
        PfKind::Lagging => {
            elements.push(Element::inductor("LLOAD", "1", GROUND, v2 / (omega * q_load)));
            let c = q_compensation / (omega * v2);
            elements.push(Element::capacitor("CCOMP", "1", GROUND, c));
            Compensator::Capacitor(c)
        }
        PfKind::Leading => {
            elements.push(Element::capacitor("CLOAD", "1", GROUND, q_load / (omega * v2)));
            let l = v2 / (omega * q_compensation);
            elements.push(Element::inductor("LCOMP", "1", GROUND, l));
            Compensator::Inductor(l)
        }
        PfKind::Unity => unreachable!("rejected above"),
    };
    let circuit = Circuit::new("power factor correction", elements)?.with_ac_frequency(Some(frequency));
    let solution = mna::solve(&circuit, frequency)?;
    let report = power_summary(&circuit, &solution)?;
    let achieved = report.element("VS")?.pf;
    Ok(PfCorrection { compensator, q_compensation, achieved, circuit })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lagging_to_095() {
        let load = PfLoad { p: 10e3, pf: 0.7, kind: PfKind::Lagging };
        let r = correct_power_factor(load, 0.95, 400.0, 50.0).unwrap();
        assert!((r.achieved.value - 0.95).abs() < 1e-6);
        assert_eq!(r.achieved.kind, PfKind::Lagging);
        let Compensator::Capacitor(c) = r.compensator else { panic!() };
        let qc = 10e3 * (0.7f64.acos().tan() - 0.95f64.acos().tan());
        assert!((c - qc / (2.0 * PI * 50.0 * 400.0 * 400.0)).abs() < 1e-15);
    }

    #[test]
    fn unity_target_cancels_q() {
        let load = PfLoad { p: 5e3, pf: 0.8, kind: PfKind::Leading };
        let r = correct_power_factor(load, 1.0, 230.0, 60.0).unwrap();
        assert!(matches!(r.compensator, Compensator::Inductor(_)));
        assert!((r.achieved.value - 1.0).abs() < 1e-6);
    }

    #[test]
    fn already_compensated() {
        let load = PfLoad { p: 1e3, pf: 0.9, kind: PfKind::Lagging };
        assert_eq!(correct_power_factor(load, 0.9, 230.0, 50.0).unwrap_err(), CircuitError::AlreadyCompensated);
        assert_eq!(correct_power_factor(load, 0.85, 230.0, 50.0).unwrap_err(), CircuitError::AlreadyCompensated);
    }
}
