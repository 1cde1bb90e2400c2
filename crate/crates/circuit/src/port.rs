//! One-port equivalents and maximum power transfer.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{CircuitError, Result};
use crate::mna;
use crate::netlist::{Circuit, Element, SourceValue};
use crate::phasor::Phasor;

/// |Zth| below this is reported as a zero-impedance port.
pub const ZERO_PORT_IMPEDANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PortKind {
    Thevenin,
    Norton,
}

/// Linear one-port seen from a node pair. For `Thevenin`, `source` is the
/// open-circuit voltage; for `Norton`, the short-circuit current (flowing
/// out of the positive port node through the short).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PortModel {
    pub kind: PortKind,
    pub source: Complex64,
    pub impedance: Complex64,
    pub zero_impedance: bool,
}

impl PortModel {
    pub fn thevenin(vth: Complex64, zth: Complex64) -> Self {
        Self {
            kind: PortKind::Thevenin,
            source: vth,
            impedance: zth,
            zero_impedance: zth.norm() < ZERO_PORT_IMPEDANCE,
        }
    }

    pub fn source_phasor(&self) -> Phasor {
        Phasor::from_complex(self.source)
    }

    pub fn open_circuit_voltage(&self) -> Complex64 {
        match self.kind {
            PortKind::Thevenin => self.source,
            PortKind::Norton => self.source * self.impedance,
        }
    }

    pub fn to_norton(&self) -> Result<Self> {
        match self.kind {
            PortKind::Norton => Ok(*self),
            PortKind::Thevenin if self.zero_impedance => Err(CircuitError::ZeroImpedancePort),
            PortKind::Thevenin => Ok(Self {
                kind: PortKind::Norton,
                source: self.source / self.impedance,
                ..*self
            }),
        }
    }

    pub fn to_thevenin(&self) -> Self {
        match self.kind {
            PortKind::Thevenin => *self,
            PortKind::Norton => Self {
                kind: PortKind::Thevenin,
                source: self.source * self.impedance,
                ..*self
            },
        }
    }

    /// Current through a load impedance connected across the port.
    pub fn load_current(&self, load: Complex64) -> Complex64 {
        match self.kind {
            PortKind::Thevenin => self.source / (self.impedance + load),
            PortKind::Norton => self.source * self.impedance / (self.impedance + load),
        }
    }

    /// Real power absorbed by `load` (RMS phasors).
    pub fn load_power(&self, load: Complex64) -> f64 {
        let i = self.load_current(load);
        i.norm_sqr() * load.re
    }
}

/// Thevenin equivalent at `port` (positive node first).
///
/// The open-circuit voltage comes from a plain solve; the impedance from a
/// second solve with a 1 A test current pushed into the positive node, so
/// `Zth = V(1 A) - V(0 A)`.
pub fn thevenin(circuit: &Circuit, port: (&str, &str), frequency: f64) -> Result<PortModel> {
    for node in [port.0, port.1] {
        if !circuit.has_node(node) {
            return Err(CircuitError::UnknownNode(node.to_string()));
        }
    }
    if port.0 == port.1 {
        return Err(CircuitError::InvalidInput("port nodes must differ".into()));
    }
    let open = mna::solve(circuit, frequency)?;
    let vth = open.voltage_between(port.0, port.1)?;

    let test_value = if frequency == 0.0 { SourceValue::dc(1.0) } else { SourceValue::ac(1.0, 0.0) };
    let name = circuit.fresh_name("ITEST");
    let probed = circuit.with_element(Element::current_source(&name, port.1, port.0, test_value))?;
    let loaded = mna::solve(&probed, frequency)?;
    let zth = loaded.voltage_between(port.0, port.1)? - vth;
    Ok(PortModel::thevenin(vth, zth))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaxPowerLoad {
    pub load: Complex64,
    pub power: f64,
}

/// Conjugate-matched load and the power it absorbs, `|Vth|² / (4·Re Zth)`
/// with RMS phasors.
pub fn maximum_power_load(port: &PortModel) -> Result<MaxPowerLoad> {
    let port = port.to_thevenin();
    if port.impedance.norm() < ZERO_PORT_IMPEDANCE {
        return Err(CircuitError::ZeroImpedancePort);
    }
    if port.impedance.re <= 0.0 {
        return Err(CircuitError::InvalidInput(
            "port resistance must be positive for a finite power maximum".into(),
        ));
    }
    let load = port.impedance.conj();
    let power = port.source.norm_sqr() / (4.0 * port.impedance.re);
    Ok(MaxPowerLoad { load, power })
}
