//! Recommendation policies: greedy extraction from a Q-table and the two
//! reference baselines.

use rand::Rng;

use super::history::EpisodeHistory;
use super::qtable::QTable;
use crate::env::{RecState, SourceAction};
use crate::rng::SimRng;

/// Something that picks a source given the current state and the episode so
/// far. Stochastic policies draw from `rng`.
pub trait Policy: Sync {
    fn act(&self, s: &RecState, history: &EpisodeHistory, horizon: u32, rng: &mut SimRng) -> SourceAction;

    fn tag(&self) -> &str;
}

/// Exploration-free argmax over a frozen Q-table.
#[derive(Debug, Clone, Copy)]
pub struct GreedyPolicy<'a> {
    q: &'a QTable,
}

pub fn greedy_policy(q: &QTable) -> GreedyPolicy<'_> {
    GreedyPolicy { q }
}

impl GreedyPolicy<'_> {
    pub fn action(&self, s: &RecState) -> SourceAction {
        self.q.greedy_action(s)
    }
}

impl Policy for GreedyPolicy<'_> {
    fn act(&self, s: &RecState, _: &EpisodeHistory, _: u32, _: &mut SimRng) -> SourceAction {
        self.action(s)
    }

    fn tag(&self) -> &str {
        "learned"
    }
}

/// Always the same source.
#[derive(Debug, Clone, Copy)]
pub struct FixedPolicy(pub SourceAction);

impl Policy for FixedPolicy {
    fn act(&self, _: &RecState, _: &EpisodeHistory, _: u32, _: &mut SimRng) -> SourceAction {
        self.0
    }

    fn tag(&self) -> &str {
        match self.0 {
            SourceAction::Left => "always-left",
            SourceAction::Centre => "always-centre",
            SourceAction::Right => "always-right",
        }
    }
}

pub fn random_policy<R: Rng + ?Sized>(rng: &mut R) -> SourceAction {
    SourceAction::from_index(rng.gen_range(0..3)).expect("index below 3")
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RandomPolicy;

impl Policy for RandomPolicy {
    fn act(&self, _: &RecState, _: &EpisodeHistory, _: u32, rng: &mut SimRng) -> SourceAction {
        random_policy(rng)
    }

    fn tag(&self) -> &str {
        "random"
    }
}

/// Uniform exploration for the first `floor(h / 3)` steps, then the source
/// with the best click rate so far this episode. Untried sources count as
/// rate 0; ties are broken uniformly at random.
pub fn bandit_policy<R: Rng + ?Sized>(history: &EpisodeHistory, t: u32, horizon: u32, rng: &mut R) -> SourceAction {
    if t < horizon / 3 {
        return random_policy(rng);
    }
    let means = SourceAction::ALL.map(|a| history.mean_reward(a));
    let best = means.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let tied: Vec<SourceAction> = SourceAction::ALL.into_iter().filter(|a| means[a.index()] == best).collect();
    if tied.len() == 1 {
        tied[0]
    } else {
        tied[rng.gen_range(0..tied.len())]
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct BanditPolicy;

impl Policy for BanditPolicy {
    fn act(&self, s: &RecState, history: &EpisodeHistory, horizon: u32, rng: &mut SimRng) -> SourceAction {
        bandit_policy(history, s.recommendations(), horizon, rng)
    }

    fn tag(&self) -> &str {
        "bandit"
    }
}
