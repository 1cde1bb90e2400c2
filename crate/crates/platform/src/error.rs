use cq_game::GameError;
use cq_problems::ProblemError;
use thiserror::Error;

use crate::auth::AuthError;

#[derive(Debug, Error)]
pub enum PlatformError {
    #[error("config: {0}")]
    Config(String),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    /// A newline-terminated record failed its checksum. Only an unterminated
    /// tail counts as torn; anything before it is fatal.
    #[error("event log line {line}: checksum mismatch")]
    ChecksumMismatch { line: usize },
    #[error("event log line {line}: {message}")]
    CorruptLog { line: usize, message: String },
    /// A checksummed record that does not apply to the state before it.
    #[error("event {seq}: {message}")]
    Rejected { seq: u64, message: String },
    #[error("event log {0} is held by another process")]
    Locked(String),
    #[error("data: {0}")]
    DataLoad(String),
    #[error("cannot bind {address}: {message}")]
    Bind { address: String, message: String },
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Game(#[from] GameError),
    #[error(transparent)]
    Auth(#[from] AuthError),
}

impl PlatformError {
    pub fn io(path: impl std::fmt::Display, e: impl std::fmt::Display) -> Self {
        PlatformError::Io { path: path.to_string(), message: e.to_string() }
    }

    /// Stable name for messages and scripts.
    pub fn kind(&self) -> &'static str {
        match self {
            PlatformError::Config(_) => "Config",
            PlatformError::Io { .. } => "Io",
            PlatformError::ChecksumMismatch { .. } => "ChecksumMismatch",
            PlatformError::CorruptLog { .. } => "CorruptLog",
            PlatformError::Rejected { .. } => "Rejected",
            PlatformError::Locked(_) => "Locked",
            PlatformError::DataLoad(_) => "DataLoadFailure",
            PlatformError::Bind { .. } => "BindFailure",
            PlatformError::Problem(p) => match p {
                ProblemError::InvalidTemplate { .. } => "InvalidTemplate",
                ProblemError::RecipeError { .. } => "RecipeError",
                ProblemError::ArityMismatch { .. } => "ArityMismatch",
                ProblemError::UnknownCampaign(_) => "UnknownCampaign",
                ProblemError::UnknownLevel(_) => "UnknownLevel",
                ProblemError::UnknownTemplate(_) => "UnknownTemplate",
                ProblemError::NegativeInput(_) => "NegativeInput",
                ProblemError::Schema { .. } => "Schema",
                ProblemError::Circuit(_) => "Circuit",
            },
            PlatformError::Game(g) => match g {
                GameError::DuplicateSolve(_) => "DuplicateSolve",
                GameError::WrongLevel(_) => "WrongLevel",
                GameError::RequirementsUnmet(_) => "RequirementsUnmet",
                GameError::CampaignComplete => "CampaignComplete",
                GameError::UnknownTemplate(_) => "UnknownTemplate",
                GameError::UnknownCampaign(_) => "UnknownCampaign",
                GameError::Schema { .. } => "Schema",
                GameError::MixedCampaigns => "MixedCampaigns",
                GameError::InvalidEvent { .. } => "InvalidEvent",
                GameError::Csv(_) => "Csv",
            },
            PlatformError::Auth(_) => "Auth",
        }
    }
}

pub type Result<T, E = PlatformError> = std::result::Result<T, E>;
