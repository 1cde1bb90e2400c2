//! Linear circuit analysis for course-scale networks.
//!
//! All phasor magnitudes are RMS. Frequency 0 means DC: inductors short,
//! capacitors open, only the DC part of each source acts.

pub mod analysis;
pub mod error;
pub mod fault;
pub mod fit;
pub mod mna;
pub mod netlist;
pub mod pfc;
pub mod phasor;
pub mod port;
pub mod power;
pub mod sensitivity;
pub mod sizing;
pub mod solution;
pub mod template;
pub mod three_phase;
pub mod transform;
pub mod units;

pub use analysis::{frequency_sweep, solve_ac, solve_dc, solve_default, superpose, Superposition, SweepPoint};
pub use error::{CircuitError, Result};
pub use fault::{inject_fault, protection_check, FaultSpec, Protection, ProtectionKind, TripReport};
pub use fit::{fit_equivalent_circuit, FitResult, Measurement, Topology};
pub use mna::solve;
pub use netlist::{parse_netlist, serialize_netlist, Circuit, Element, ElementKind, ElementType, SourceValue, GROUND};
pub use num_complex::Complex64;
pub use pfc::{correct_power_factor, PfLoad};
pub use phasor::Phasor;
pub use port::{maximum_power_load, thevenin, PortModel};
pub use power::{power_summary, PfKind, PowerFactor, PowerReport};
pub use sensitivity::{sensitivity, Metric, Parameter};
pub use sizing::size_conductor;
pub use solution::Solution;
pub use three_phase::{solve_three_phase, ThreePhaseSystem};
pub use transform::{wye_delta, Direction};
