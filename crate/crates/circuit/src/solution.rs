use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{CircuitError, Result};
use crate::netlist::{Circuit, ElementKind, GROUND};
use crate::phasor::Phasor;

/// Steady-state solution of a circuit at one frequency (0 Hz for DC).
///
/// Element currents follow the passive convention: positive current enters
/// the element at its first terminal. For transformers the map holds the
/// primary current; the secondary current (entering `s+`) is kept apart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub frequency: f64,
    pub node_voltages: BTreeMap<String, Complex64>,
    pub element_currents: BTreeMap<String, Complex64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub secondary_currents: BTreeMap<String, Complex64>,
}

/// Phasor form of a [`Solution`], for reports and wire formats.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionView {
    pub frequency: f64,
    pub node_voltages: BTreeMap<String, Phasor>,
    pub element_currents: BTreeMap<String, Phasor>,
}

impl Solution {
    pub fn voltage(&self, node: &str) -> Result<Complex64> {
        self.node_voltages
            .get(node)
            .copied()
            .ok_or_else(|| CircuitError::UnknownNode(node.to_string()))
    }

    pub fn voltage_between(&self, a: &str, b: &str) -> Result<Complex64> {
        Ok(self.voltage(a)? - self.voltage(b)?)
    }

    pub fn current(&self, element: &str) -> Result<Complex64> {
        self.element_currents
            .get(element)
            .copied()
            .ok_or_else(|| CircuitError::UnknownElement(element.to_string()))
    }

    pub fn secondary_current(&self, element: &str) -> Option<Complex64> {
        self.secondary_currents.get(element).copied()
    }

    pub fn voltage_phasor(&self, node: &str) -> Result<Phasor> {
        self.voltage(node).map(Phasor::from_complex)
    }

    pub fn current_phasor(&self, element: &str) -> Result<Phasor> {
        self.current(element).map(Phasor::from_complex)
    }

    /// Voltage across an element's (first two) terminals.
    pub fn element_voltage(&self, circuit: &Circuit, element: &str) -> Result<Complex64> {
        let e = circuit
            .element(element)
            .ok_or_else(|| CircuitError::UnknownElement(element.to_string()))?;
        let terminals = e.terminals();
        if terminals.len() < 2 {
            return Err(CircuitError::InvalidReference(format!("`{element}` has no terminals")));
        }
        self.voltage_between(&terminals[0], &terminals[1])
    }

    pub fn view(&self) -> SolutionView {
        SolutionView {
            frequency: self.frequency,
            node_voltages: self.node_voltages.iter().map(|(k, v)| (k.clone(), Phasor::from(*v))).collect(),
            element_currents: self.element_currents.iter().map(|(k, v)| (k.clone(), Phasor::from(*v))).collect(),
        }
    }

    pub fn max_current(&self) -> f64 {
        self.element_currents
            .values()
            .chain(self.secondary_currents.values())
            .map(|i| i.norm())
            .fold(0.0, f64::max)
    }

    /// Complex sum of currents leaving each node into the elements.
    pub fn kcl_residuals(&self, circuit: &Circuit) -> Result<BTreeMap<String, Complex64>> {
        let mut sums: BTreeMap<String, Complex64> =
            circuit.nodes().iter().map(|n| (n.clone(), Complex64::default())).collect();
        for element in circuit.elements() {
            if matches!(element.kind, ElementKind::Coupling { .. }) {
                continue;
            }
            let current = self.current(&element.name)?;
            let t = element.terminals();
            *sums.get_mut(&t[0]).expect("terminal node") += current;
            *sums.get_mut(&t[1]).expect("terminal node") -= current;
            if matches!(element.kind, ElementKind::Transformer { .. }) {
                let secondary = self
                    .secondary_current(&element.name)
                    .ok_or_else(|| CircuitError::MismatchedSolution(element.name.clone()))?;
                *sums.get_mut(&t[2]).expect("terminal node") += secondary;
                *sums.get_mut(&t[3]).expect("terminal node") -= secondary;
            }
        }
        Ok(sums)
    }

    /// Largest KCL residual divided by the largest branch current magnitude.
    pub fn max_relative_kcl_residual(&self, circuit: &Circuit) -> Result<f64> {
        let scale = self.max_current();
        let worst = self.kcl_residuals(circuit)?.values().map(|r| r.norm()).fold(0.0, f64::max);
        Ok(if scale == 0.0 { worst } else { worst / scale })
    }

    /// Element-wise sum, used to combine superposition partials.
    pub fn sum<'a>(parts: impl IntoIterator<Item = &'a Solution>) -> Option<Solution> {
        let mut parts = parts.into_iter();
        let mut total = parts.next()?.clone();
        for part in parts {
            for (k, v) in &mut total.node_voltages {
                *v += part.node_voltages.get(k).copied().unwrap_or_default();
            }
            for (k, v) in &mut total.element_currents {
                *v += part.element_currents.get(k).copied().unwrap_or_default();
            }
            for (k, v) in &mut total.secondary_currents {
                *v += part.secondary_currents.get(k).copied().unwrap_or_default();
            }
        }
        Some(total)
    }

    pub(crate) fn ground_is_zero(&self) -> bool {
        self.node_voltages.get(GROUND) == Some(&Complex64::default())
    }
}
