use cq_circuit::CircuitError;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProblemError {
    #[error("template `{template}`: {message}")]
    InvalidTemplate { template: String, message: String },
    /// Every draw failed; `last` is the final failure.
    #[error("template `{template}`: no solvable draw in {attempts} attempts (last: {last})")]
    RecipeError { template: String, attempts: u32, last: String },
    #[error("expected {expected} answers, got {given}")]
    ArityMismatch { expected: usize, given: usize },
    #[error("unknown campaign `{0}`")]
    UnknownCampaign(String),
    #[error("unknown level {0}, levels run 1 to 5")]
    UnknownLevel(u8),
    #[error("unknown template `{0}`")]
    UnknownTemplate(String),
    #[error("negative input: {0}")]
    NegativeInput(String),
    #[error("{path}: {message}")]
    Schema { path: String, message: String },
    #[error(transparent)]
    Circuit(#[from] CircuitError),
}

pub type Result<T, E = ProblemError> = std::result::Result<T, E>;
