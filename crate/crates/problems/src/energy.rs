use crate::error::{ProblemError, Result};

/// kg CO₂ emitted producing `kwh` at `factor` kg/kWh.
pub fn energy_to_co2(kwh: f64, factor: f64) -> Result<f64> {
    if !(kwh.is_finite() && kwh >= 0.0) {
        return Err(ProblemError::NegativeInput(format!("energy {kwh} kWh")));
    }
    if !(factor.is_finite() && factor >= 0.0) {
        return Err(ProblemError::NegativeInput(format!("emission factor {factor} kg/kWh")));
    }
    Ok(kwh * factor)
}
