use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::agents::TrainSchedule;
use crate::env::EnvConfig;
use crate::error::Error;

pub const DEFAULT_EVAL_EPISODES: u64 = 10_000;

fn default_eval_episodes() -> u64 {
    DEFAULT_EVAL_EPISODES
}

/// A run's config file: the environment document, optionally extended with
/// a `schedule` object and an `eval_episodes` count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    #[serde(flatten)]
    pub env: EnvConfig,
    #[serde(default)]
    pub schedule: TrainSchedule,
    #[serde(default = "default_eval_episodes")]
    pub eval_episodes: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            env: EnvConfig::default(),
            schedule: TrainSchedule::default(),
            eval_episodes: DEFAULT_EVAL_EPISODES,
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, Error> {
        let cfg: RunConfig = serde_json::from_str(text)?;
        cfg.env.validate()?;
        cfg.schedule.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, Error> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("config serialises");
        text.push('\n');
        text
    }
}
