use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::agents::TrainSchedule;
use crate::env::EnvConfig;
use crate::error::Error;

pub const CODE_VERSION: &str = concat!(env!("CARGO_PKG_NAME"), "-", env!("CARGO_PKG_VERSION"));

/// What was run and what it wrote. The config, schedule and command are
/// enough to regenerate every listed output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub code_version: String,
    pub master_seed: u64,
    pub config: EnvConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<TrainSchedule>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eval_episodes: Option<u64>,
    pub started_unix: u64,
    pub finished_unix: u64,
    pub outputs: Vec<String>,
}

fn now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

impl RunManifest {
    pub fn start(command: impl Into<String>, config: &EnvConfig) -> Self {
        let t = now();
        RunManifest {
            command: command.into(),
            code_version: CODE_VERSION.to_string(),
            master_seed: config.master_seed,
            config: config.clone(),
            schedule: None,
            eval_episodes: None,
            started_unix: t,
            finished_unix: t,
            outputs: Vec::new(),
        }
    }

    pub fn record_output(&mut self, name: impl Into<String>) {
        self.outputs.push(name.into());
    }

    pub fn finish(&mut self) {
        self.finished_unix = now();
        self.outputs.sort();
        self.outputs.dedup();
    }

    pub fn save(&self, path: &Path) -> Result<(), Error> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, Error> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}
