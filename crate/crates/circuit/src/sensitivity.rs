//! Finite-difference sensitivities of scalar circuit metrics.

use serde::{Deserialize, Serialize};

use crate::error::{CircuitError, Result};
use crate::mna;
use crate::netlist::{Circuit, ElementKind};
use crate::power::element_power;
use crate::solution::Solution;

/// Relative central-difference step.
pub const RELATIVE_STEP: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "name", rename_all = "snake_case")]
pub enum Parameter {
    /// Headline value of an element (see `Element::primary_value`).
    ElementValue(String),
    Frequency,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Metric {
    VoltageMagnitude { a: String, b: String },
    CurrentMagnitude { element: String },
    RealPower { element: String },
    ReactivePower { element: String },
    /// Σ P over the named elements.
    PowerSum { elements: Vec<String> },
    /// Σ P over every passive element.
    TotalLoss,
}

impl Metric {
    pub fn evaluate(&self, circuit: &Circuit, solution: &Solution) -> Result<f64> {
        Ok(match self {
            Metric::VoltageMagnitude { a, b } => solution.voltage_between(a, b)?.norm(),
            Metric::CurrentMagnitude { element } => solution.current(element)?.norm(),
            Metric::RealPower { element } => element_power(circuit, solution, element)?.re,
            Metric::ReactivePower { element } => element_power(circuit, solution, element)?.im,
            Metric::PowerSum { elements } => elements
                .iter()
                .map(|e| element_power(circuit, solution, e).map(|s| s.re))
                .sum::<Result<f64>>()?,
            Metric::TotalLoss => circuit
                .elements()
                .iter()
                .filter(|e| {
                    matches!(
                        e.kind,
                        ElementKind::Resistor { .. } | ElementKind::Inductor { .. } | ElementKind::Capacitor { .. }
                    )
                })
                .map(|e| element_power(circuit, solution, &e.name).map(|s| s.re))
                .sum::<Result<f64>>()?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sensitivity {
    pub parameter_value: f64,
    pub metric_value: f64,
    pub step: f64,
    pub derivative: f64,
}

/// Metric with the parameter set to `value`.
pub fn metric_at(circuit: &Circuit, parameter: &Parameter, metric: &Metric, frequency: f64, value: f64) -> Result<f64> {
    let (c, f) = match parameter {
        Parameter::ElementValue(name) => (circuit.with_values(&[(name.as_str(), value)], frequency)?, frequency),
        Parameter::Frequency => (circuit.clone(), value),
    };
    let solution = mna::solve(&c, f)?;
    metric.evaluate(&c, &solution)
}

fn parameter_value(circuit: &Circuit, parameter: &Parameter, frequency: f64) -> Result<f64> {
    match parameter {
        Parameter::Frequency => Ok(frequency),
        Parameter::ElementValue(name) => circuit
            .element(name)
            .ok_or_else(|| CircuitError::UnknownElement(name.clone()))?
            .primary_value(frequency)
            .ok_or_else(|| CircuitError::InvalidElement {
                element: name.clone(),
                message: "element has no adjustable value at this frequency".into(),
            }),
    }
}

/// d(metric)/d(parameter) by central difference with step `1e-6·|p|`.
pub fn sensitivity(circuit: &Circuit, parameter: &Parameter, metric: &Metric, frequency: f64) -> Result<Sensitivity> {
    let p = parameter_value(circuit, parameter, frequency)?;
    if !(p.is_finite() && p > 0.0) {
        return Err(CircuitError::InvalidInput(format!("parameter must be positive, got {p}")));
    }
    let h = RELATIVE_STEP * p;
    let metric_value = metric_at(circuit, parameter, metric, frequency, p)?;
    let up = metric_at(circuit, parameter, metric, frequency, p + h)?;
    let down = metric_at(circuit, parameter, metric, frequency, p - h)?;
    Ok(Sensitivity { parameter_value: p, metric_value, step: h, derivative: (up - down) / (2.0 * h) })
}
