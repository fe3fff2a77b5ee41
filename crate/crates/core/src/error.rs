use thiserror::Error;

use crate::cid::CidError;
use crate::env::EnvError;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Cid(#[from] CidError),
    #[error("invalid training schedule: {0}")]
    Schedule(String),
    #[error("state space of {states} augmented states exceeds the budget of {budget}")]
    IntractableHorizon { states: usize, budget: usize },
    #[error("the exact oracle needs a fixed polarisation factor (p_min == p_max)")]
    StochasticFactor,
    #[error("evaluation logs mix profiles {0} and {1}")]
    MixedProfiles(String, String),
    #[error("{0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
