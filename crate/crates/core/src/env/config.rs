use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{EnvError, UserTheta};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserProfile {
    pub name: String,
    pub theta0: UserTheta,
}

impl UserProfile {
    pub fn new(name: impl Into<String>, left: f64, centre: f64, right: f64) -> Self {
        UserProfile { name: name.into(), theta0: UserTheta::new(left, centre, right) }
    }
}

/// The five users the recommender is trained against.
pub fn default_population() -> Vec<UserProfile> {
    vec![
        UserProfile::new("strong-left", 0.4, 0.1, 0.1),
        UserProfile::new("moderate-left", 0.3, 0.25, 0.1),
        UserProfile::new("centrist", 0.2, 0.4, 0.2),
        UserProfile::new("moderate-right", 0.1, 0.25, 0.3),
        UserProfile::new("strong-right", 0.1, 0.1, 0.4),
    ]
}

/// Users never seen during training, for generalisation checks.
pub fn unseen_population() -> Vec<UserProfile> {
    vec![
        UserProfile::new("extremely-left", 0.5, 0.05, 0.05),
        UserProfile::new("extremely-right", 0.05, 0.05, 0.5),
        UserProfile::new("left-anti-centrist", 0.35, 0.05, 0.2),
        UserProfile::new("right-anti-centrist", 0.2, 0.05, 0.35),
    ]
}

/// Polarisation factor `p ~ U(p_min, p_max)` and the click-probability cap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolarisationConfig {
    #[serde(default = "default_p_min")]
    pub p_min: f64,
    #[serde(default = "default_p_max")]
    pub p_max: f64,
    #[serde(default = "default_theta_cap")]
    pub theta_cap: f64,
    /// `false` severs the action -> user channel (the counterfactual world).
    #[serde(rename = "polarisation_enabled", default = "default_true")]
    pub enabled: bool,
}

fn default_p_min() -> f64 {
    1.01
}
fn default_p_max() -> f64 {
    1.10
}
fn default_theta_cap() -> f64 {
    0.75
}
fn default_true() -> bool {
    true
}
fn default_horizon() -> u32 {
    30
}
fn default_gamma() -> f64 {
    0.999
}

impl Default for PolarisationConfig {
    fn default() -> Self {
        PolarisationConfig {
            p_min: default_p_min(),
            p_max: default_p_max(),
            theta_cap: default_theta_cap(),
            enabled: true,
        }
    }
}

impl PolarisationConfig {
    /// Polarisation factor always equal to `p`.
    pub fn deterministic(p: f64) -> Self {
        PolarisationConfig { p_min: p, p_max: p, ..Self::default() }
    }

    pub fn is_deterministic(&self) -> bool {
        self.p_min == self.p_max
    }

    pub fn mean_factor(&self) -> f64 {
        0.5 * (self.p_min + self.p_max)
    }

    /// Maps a unit draw `u` in `[0, 1)` onto `[p_min, p_max)`.
    pub fn factor_from_unit(&self, u: f64) -> f64 {
        self.p_min + (self.p_max - self.p_min) * u
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvConfig {
    #[serde(default = "default_horizon")]
    pub horizon: u32,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(flatten)]
    pub polarisation: PolarisationConfig,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "default_population")]
    pub population: Vec<UserProfile>,
}

impl Default for EnvConfig {
    fn default() -> Self {
        EnvConfig {
            horizon: default_horizon(),
            gamma: default_gamma(),
            polarisation: PolarisationConfig::default(),
            master_seed: 0,
            population: default_population(),
        }
    }
}

impl EnvConfig {
    /// Small single-user world with a fixed polarisation factor, small
    /// enough for exact dynamic programming.
    pub fn mini(profile: UserProfile, horizon: u32, p: f64) -> Self {
        EnvConfig {
            horizon,
            polarisation: PolarisationConfig::deterministic(p),
            population: vec![profile],
            ..EnvConfig::default()
        }
    }

    pub fn counterfactual(&self) -> Self {
        let mut cfg = self.clone();
        cfg.polarisation.enabled = false;
        cfg
    }

    pub fn validate(&self) -> Result<(), EnvError> {
        let bad = |msg: String| Err(EnvError::InvalidConfig(msg));
        let pol = &self.polarisation;
        if self.horizon == 0 {
            return bad("horizon must be at least 1".into());
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return bad(format!("gamma {} outside (0, 1]", self.gamma));
        }
        if !(pol.p_min > 1.0 && pol.p_min <= pol.p_max && pol.p_max.is_finite()) {
            return bad(format!("polarisation range [{}, {}] must satisfy 1 < p_min <= p_max", pol.p_min, pol.p_max));
        }
        if !(pol.theta_cap > 0.0 && pol.theta_cap <= 1.0) {
            return bad(format!("theta_cap {} outside (0, 1]", pol.theta_cap));
        }
        if self.population.is_empty() {
            return bad("population is empty".into());
        }
        for profile in &self.population {
            profile.theta0.check(pol.theta_cap)?;
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, EnvError> {
        let cfg: EnvConfig = serde_json::from_str(text).map_err(|e| EnvError::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, EnvError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| EnvError::InvalidConfig(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises")
    }
}
