use thiserror::Error;

use crate::fit::FitResult;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CircuitError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: unknown element kind `{name}`")]
    UnknownKind { line: usize, name: String },
    #[error("node `{0}` is not connected to ground")]
    DanglingNode(String),
    #[error("circuit has no ground node `0`")]
    MissingGround,
    #[error("duplicate element name `{0}`")]
    DuplicateName(String),
    #[error("element `{element}`: {message}")]
    InvalidElement { element: String, message: String },
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("unknown element `{0}`")]
    UnknownElement(String),
    #[error("singular system: {0}")]
    SingularSystem(String),
    #[error("invalid reference: {0}")]
    InvalidReference(String),
    #[error("superposition needs at least two independent sources active at this frequency")]
    NeedTwoSources,
    #[error("impedance must be nonzero")]
    ZeroImpedance,
    #[error("port impedance is zero")]
    ZeroImpedancePort,
    #[error("load already at or above the target power factor")]
    AlreadyCompensated,
    #[error("solution does not belong to this circuit: {0}")]
    MismatchedSolution(String),
    #[error("no catalog size keeps the drop within {allowed} V (largest gives {largest_drop} V)")]
    NoAdmissibleSize { allowed: f64, largest_drop: f64 },
    #[error("fit did not converge within budget (best residual {})", best.residual)]
    NonConvergence { best: Box<FitResult> },
    #[error("{0}")]
    InvalidInput(String),
}

pub type Result<T, E = CircuitError> = std::result::Result<T, E>;
