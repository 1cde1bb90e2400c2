use thiserror::Error;

use crate::rules::Missing;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GameError {
    #[error("instance `{0}` was already solved by this player")]
    DuplicateSolve(String),
    #[error("{0}")]
    WrongLevel(String),
    #[error("requirements unmet: {}", Missing::describe(.0))]
    RequirementsUnmet(Vec<Missing>),
    #[error("campaign already complete")]
    CampaignComplete,
    #[error("unknown template `{0}`")]
    UnknownTemplate(String),
    #[error("unknown campaign `{0}`")]
    UnknownCampaign(String),
    #[error("{path}: {message}")]
    Schema { path: String, message: String },
    #[error("players belong to different campaigns")]
    MixedCampaigns,
    #[error("event {index}: {message}")]
    InvalidEvent { index: usize, message: String },
    #[error("csv: {0}")]
    Csv(String),
}

pub type Result<T, E = GameError> = std::result::Result<T, E>;
