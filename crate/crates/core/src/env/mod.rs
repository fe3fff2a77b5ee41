//! The political-media recommendation MDP.
//!
//! The observable state counts recommendations and clicks per source. The
//! user's click probabilities are hidden from the agent and drift when a
//! wing-aligned user is shown content from the opposing wing.

mod config;

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use config::{default_population, unseen_population, EnvConfig, PolarisationConfig, UserProfile};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EnvError {
    #[error("episode over: {recommendations} recommendations already made with horizon {horizon}")]
    EpisodeOver { recommendations: u32, horizon: u32 },
    #[error("click probability {0} outside [0, {1}]")]
    InvalidTheta(f64, f64),
    #[error("invalid environment config: {0}")]
    InvalidConfig(String),
}

/// Which source a recommendation is drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
#[repr(u8)]
pub enum SourceAction {
    Left = 0,
    Centre = 1,
    Right = 2,
}

impl SourceAction {
    pub const ALL: [SourceAction; 3] = [SourceAction::Left, SourceAction::Centre, SourceAction::Right];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            SourceAction::Left => "left",
            SourceAction::Centre => "centre",
            SourceAction::Right => "right",
        }
    }
}

impl fmt::Display for SourceAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Recommendation and click counts per source: `(lr, lc, cr, cc, rr, rc)`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(from = "[u16; 6]", into = "[u16; 6]")]
pub struct RecState {
    pub lr: u16,
    pub lc: u16,
    pub cr: u16,
    pub cc: u16,
    pub rr: u16,
    pub rc: u16,
}

impl RecState {
    pub const ZERO: RecState = RecState { lr: 0, lc: 0, cr: 0, cc: 0, rr: 0, rc: 0 };

    pub fn new(counts: [u16; 6]) -> Self {
        counts.into()
    }

    pub fn counts(&self) -> [u16; 6] {
        (*self).into()
    }

    /// Recommendations made so far, which is also the current time-step.
    pub fn recommendations(&self) -> u32 {
        u32::from(self.lr) + u32::from(self.cr) + u32::from(self.rr)
    }

    pub fn clicks(&self) -> u32 {
        u32::from(self.lc) + u32::from(self.cc) + u32::from(self.rc)
    }

    pub fn recommended(&self, a: SourceAction) -> u16 {
        match a {
            SourceAction::Left => self.lr,
            SourceAction::Centre => self.cr,
            SourceAction::Right => self.rr,
        }
    }

    pub fn clicked(&self, a: SourceAction) -> u16 {
        match a {
            SourceAction::Left => self.lc,
            SourceAction::Centre => self.cc,
            SourceAction::Right => self.rc,
        }
    }

    /// Click counts never exceed recommendation counts, and at most `horizon`
    /// recommendations have been made.
    pub fn is_valid(&self, horizon: u32) -> bool {
        self.lc <= self.lr && self.cc <= self.cr && self.rc <= self.rr && self.recommendations() <= horizon
    }

    /// The successor after recommending `a`, with or without a click.
    pub fn advance(&self, a: SourceAction, clicked: bool) -> RecState {
        let mut next = *self;
        let c = u16::from(clicked);
        match a {
            SourceAction::Left => {
                next.lr += 1;
                next.lc += c;
            }
            SourceAction::Centre => {
                next.cr += 1;
                next.cc += c;
            }
            SourceAction::Right => {
                next.rr += 1;
                next.rc += c;
            }
        }
        next
    }
}

impl From<[u16; 6]> for RecState {
    fn from(c: [u16; 6]) -> Self {
        RecState { lr: c[0], lc: c[1], cr: c[2], cc: c[3], rr: c[4], rc: c[5] }
    }
}

impl From<RecState> for [u16; 6] {
    fn from(s: RecState) -> Self {
        [s.lr, s.lc, s.cr, s.cc, s.rr, s.rc]
    }
}

impl fmt::Display for RecState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{},{},{},{})", self.lr, self.lc, self.cr, self.cc, self.rr, self.rc)
    }
}

/// Click probabilities `(left, centre, right)` of a user.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct UserTheta(pub [f64; 3]);

impl UserTheta {
    pub fn new(left: f64, centre: f64, right: f64) -> Self {
        UserTheta([left, centre, right])
    }

    pub fn get(&self, a: SourceAction) -> f64 {
        self.0[a.index()]
    }

    pub fn left(&self) -> f64 {
        self.0[0]
    }

    pub fn centre(&self) -> f64 {
        self.0[1]
    }

    pub fn right(&self) -> f64 {
        self.0[2]
    }

    pub fn check(&self, cap: f64) -> Result<(), EnvError> {
        for &v in &self.0 {
            if !(0.0..=cap).contains(&v) {
                return Err(EnvError::InvalidTheta(v, cap));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Wing {
    LeftWing,
    RightWing,
    Neither,
}

impl Wing {
    /// The source whose content polarises a user of this wing.
    pub fn opposing(self) -> Option<SourceAction> {
        match self {
            Wing::LeftWing => Some(SourceAction::Right),
            Wing::RightWing => Some(SourceAction::Left),
            Wing::Neither => None,
        }
    }

    pub fn own(self) -> Option<SourceAction> {
        match self {
            Wing::LeftWing => Some(SourceAction::Left),
            Wing::RightWing => Some(SourceAction::Right),
            Wing::Neither => None,
        }
    }
}

/// Left- or right-wing by strict dominance of that component.
pub fn classify_wing(theta: &UserTheta) -> Wing {
    let [l, c, r] = theta.0;
    if r > c && r > l {
        Wing::RightWing
    } else if l > c && l > r {
        Wing::LeftWing
    } else {
        Wing::Neither
    }
}

/// Both successors of recommending `a`: click first, then no click.
pub fn transition_successors(
    s: &RecState,
    a: SourceAction,
    theta: &UserTheta,
    horizon: u32,
) -> Result<[(RecState, f64); 2], EnvError> {
    if s.recommendations() >= horizon {
        return Err(EnvError::EpisodeOver { recommendations: s.recommendations(), horizon });
    }
    let p = theta.get(a);
    Ok([(s.advance(a, true), p), (s.advance(a, false), 1.0 - p)])
}

/// 1 when exactly one more click was recorded.
pub fn reward(s: &RecState, s_next: &RecState) -> u8 {
    let before = i64::from(s.clicks());
    let after = i64::from(s_next.clicks());
    u8::from(after - before == 1)
}

/// Boosts the user's own-wing click probability by `p` (up to the cap) after
/// an opposing-wing recommendation. Identity when polarisation is disabled.
pub fn apply_polarisation(
    theta: &UserTheta,
    wing: Wing,
    a: SourceAction,
    p: f64,
    cfg: &PolarisationConfig,
) -> UserTheta {
    if !cfg.enabled || wing.opposing() != Some(a) {
        return *theta;
    }
    let own = wing.own().expect("a wing with an opposing source has an own source");
    let mut next = *theta;
    next.0[own.index()] = (p * theta.get(own)).min(cfg.theta_cap);
    next
}

pub fn reset(profile: &UserProfile) -> (RecState, UserTheta) {
    (RecState::ZERO, profile.theta0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub state: RecState,
    pub theta: UserTheta,
    pub reward: u8,
    pub clicked: bool,
}

/// One environment step. Always consumes exactly two draws from `rng`, the
/// click draw and then the polarisation factor, whether or not the factor
/// ends up being used.
pub fn step<R: Rng + ?Sized>(
    s: &RecState,
    theta: &UserTheta,
    a: SourceAction,
    rng: &mut R,
    cfg: &EnvConfig,
) -> Result<StepOutcome, EnvError> {
    let click_draw: f64 = rng.gen();
    let p = cfg.polarisation.factor_from_unit(rng.gen());
    step_with_draws(s, theta, a, click_draw, p, cfg)
}

/// [`step`] with the random draws supplied: a click happens iff
/// `click_draw < theta[a]`, and `p` is the polarisation factor.
pub fn step_with_draws(
    s: &RecState,
    theta: &UserTheta,
    a: SourceAction,
    click_draw: f64,
    p: f64,
    cfg: &EnvConfig,
) -> Result<StepOutcome, EnvError> {
    if s.recommendations() >= cfg.horizon {
        return Err(EnvError::EpisodeOver { recommendations: s.recommendations(), horizon: cfg.horizon });
    }
    let clicked = click_draw < theta.get(a);
    let state = s.advance(a, clicked);
    let wing = classify_wing(theta);
    let theta = apply_polarisation(theta, wing, a, p, &cfg.polarisation);
    Ok(StepOutcome { state, theta, reward: reward(s, &state), clicked })
}

/// Uniform draw from the population.
pub fn sample_user<'a, R: Rng + ?Sized>(population: &'a [UserProfile], rng: &mut R) -> &'a UserProfile {
    &population[rng.gen_range(0..population.len())]
}

impl FromStr for SourceAction {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "left" | "0" => Ok(SourceAction::Left),
            "centre" | "center" | "1" => Ok(SourceAction::Centre),
            "right" | "2" => Ok(SourceAction::Right),
            other => Err(format!("unknown source '{other}'")),
        }
    }
}
