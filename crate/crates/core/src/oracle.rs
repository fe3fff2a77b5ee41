//! Exact evaluation for a single known user with a fixed polarisation
//! factor.
//!
//! With `p` fixed, the user's click probabilities after `k` opposing-wing
//! recommendations are known in closed form, so the recommendation counts
//! plus `k` form a finite Markov state. Everything here is exact
//! expectation over the two-branch click transition; no sampling.

use std::collections::{BTreeMap, HashMap};

use serde::Serialize;

use crate::env::{classify_wing, EnvConfig, RecState, SourceAction, UserProfile, UserTheta, Wing};
use crate::error::Error;

/// Default cap on the number of augmented states an oracle call may touch.
/// The full 30-step state space has 1,947,792 states.
pub const DEFAULT_STATE_BUDGET: usize = 2_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct AugmentedState {
    pub rec: RecState,
    /// Opposing-wing recommendations so far.
    pub opposing_count: u16,
}

impl AugmentedState {
    pub fn of(rec: RecState, wing: Wing) -> Self {
        let opposing_count = wing.opposing().map_or(0, |a| rec.recommended(a));
        AugmentedState { rec, opposing_count }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Objective {
    /// Plain sum of clicks.
    Undiscounted,
    /// Clicks discounted by `gamma^t`.
    Discounted(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleOptions {
    pub state_budget: usize,
    pub objective: Objective,
}

impl Default for OracleOptions {
    fn default() -> Self {
        OracleOptions { state_budget: DEFAULT_STATE_BUDGET, objective: Objective::Undiscounted }
    }
}

impl OracleOptions {
    fn weight(&self, t: u32) -> f64 {
        match self.objective {
            Objective::Undiscounted => 1.0,
            Objective::Discounted(gamma) => gamma.powi(t as i32),
        }
    }
}

/// Click probabilities of `profile` after `opposing` opposing-wing
/// recommendations under a fixed factor.
pub fn theta_after(profile: &UserProfile, opposing: u16, cfg: &EnvConfig) -> UserTheta {
    let theta0 = profile.theta0;
    let pol = &cfg.polarisation;
    let wing = classify_wing(&theta0);
    let Some(own) = wing.own() else { return theta0 };
    if !pol.enabled || opposing == 0 {
        return theta0;
    }
    let mut theta = theta0;
    theta.0[own.index()] = (theta0.get(own) * pol.p_min.powi(i32::from(opposing))).min(pol.theta_cap);
    theta
}

fn require_fixed_factor(cfg: &EnvConfig) -> Result<(), Error> {
    cfg.validate()?;
    if cfg.polarisation.is_deterministic() {
        Ok(())
    } else {
        Err(Error::StochasticFactor)
    }
}

/// Expected cumulative reward after each of the `h` steps when `policy` is
/// followed against `profile`.
pub fn exact_policy_value(
    policy: impl Fn(&RecState) -> SourceAction,
    profile: &UserProfile,
    cfg: &EnvConfig,
) -> Result<Vec<f64>, Error> {
    exact_policy_value_with(policy, profile, cfg, &OracleOptions::default())
}

pub fn exact_policy_value_with(
    policy: impl Fn(&RecState) -> SourceAction,
    profile: &UserProfile,
    cfg: &EnvConfig,
    opts: &OracleOptions,
) -> Result<Vec<f64>, Error> {
    require_fixed_factor(cfg)?;
    let wing = classify_wing(&profile.theta0);
    let mut layer: BTreeMap<RecState, f64> = BTreeMap::from([(RecState::ZERO, 1.0)]);
    let mut seen = 1usize;
    let mut total = 0.0;
    let mut out = Vec::with_capacity(cfg.horizon as usize);
    for t in 0..cfg.horizon {
        let mut next: BTreeMap<RecState, f64> = BTreeMap::new();
        let mut expected = 0.0;
        for (s, &mass) in &layer {
            let a = policy(s);
            let theta = theta_after(profile, AugmentedState::of(*s, wing).opposing_count, cfg);
            let click = theta.get(a);
            expected += mass * click;
            if click > 0.0 {
                *next.entry(s.advance(a, true)).or_default() += mass * click;
            }
            if click < 1.0 {
                *next.entry(s.advance(a, false)).or_default() += mass * (1.0 - click);
            }
        }
        seen += next.len();
        if seen > opts.state_budget {
            return Err(Error::IntractableHorizon { states: seen, budget: opts.state_budget });
        }
        total += opts.weight(t) * expected;
        out.push(total);
        layer = next;
    }
    Ok(out)
}

/// Optimal values and actions over every reachable augmented state.
#[derive(Debug, Clone)]
pub struct OptimalSolution {
    pub value: f64,
    pub horizon: u32,
    wing: Wing,
    table: HashMap<AugmentedState, (SourceAction, f64)>,
}

impl OptimalSolution {
    /// Optimal action in `rec`, or `None` if the state is unreachable.
    pub fn action(&self, rec: &RecState) -> Option<SourceAction> {
        self.table.get(&AugmentedState::of(*rec, self.wing)).map(|e| e.0)
    }

    /// Optimal expected return from `rec` to the end of the episode.
    pub fn value_of(&self, rec: &RecState) -> Option<f64> {
        self.table.get(&AugmentedState::of(*rec, self.wing)).map(|e| e.1)
    }

    /// Policy form; unreachable states fall back to `Left`.
    pub fn policy(&self) -> impl Fn(&RecState) -> SourceAction + '_ {
        move |s| self.action(s).unwrap_or(SourceAction::Left)
    }

    pub fn state_count(&self) -> usize {
        self.table.len()
    }

    /// Non-terminal states in lexicographic order with action and value.
    pub fn sorted_entries(&self) -> Vec<(AugmentedState, SourceAction, f64)> {
        let mut rows: Vec<_> = self.table.iter().map(|(s, (a, v))| (*s, *a, *v)).collect();
        rows.sort_by_key(|r| r.0);
        rows
    }
}

/// Backward induction over all reachable augmented states, maximising the
/// expected return with lowest-index tie-breaking.
pub fn brute_force_optimal(profile: &UserProfile, cfg: &EnvConfig) -> Result<OptimalSolution, Error> {
    brute_force_optimal_with(profile, cfg, &OracleOptions::default())
}

pub fn brute_force_optimal_with(
    profile: &UserProfile,
    cfg: &EnvConfig,
    opts: &OracleOptions,
) -> Result<OptimalSolution, Error> {
    require_fixed_factor(cfg)?;
    let wing = classify_wing(&profile.theta0);
    let h = cfg.horizon as usize;

    // forward sweep: reachable states per layer
    let mut layers: Vec<Vec<RecState>> = vec![vec![RecState::ZERO]];
    let mut seen = 1usize;
    for _ in 0..h {
        let mut next = Vec::new();
        for s in layers.last().expect("at least one layer") {
            let theta = theta_after(profile, AugmentedState::of(*s, wing).opposing_count, cfg);
            for a in SourceAction::ALL {
                let click = theta.get(a);
                if click > 0.0 {
                    next.push(s.advance(a, true));
                }
                if click < 1.0 {
                    next.push(s.advance(a, false));
                }
            }
        }
        next.sort_unstable();
        next.dedup();
        seen += next.len();
        if seen > opts.state_budget {
            return Err(Error::IntractableHorizon { states: seen, budget: opts.state_budget });
        }
        layers.push(next);
    }

    // backward sweep; terminal layer is worth zero
    let mut table: HashMap<AugmentedState, (SourceAction, f64)> = HashMap::with_capacity(seen);
    let mut next_values: HashMap<RecState, f64> = layers[h].iter().map(|s| (*s, 0.0)).collect();
    for t in (0..h).rev() {
        let discount = match opts.objective {
            Objective::Undiscounted => 1.0,
            Objective::Discounted(gamma) => gamma,
        };
        let mut values = HashMap::with_capacity(layers[t].len());
        for s in &layers[t] {
            let theta = theta_after(profile, AugmentedState::of(*s, wing).opposing_count, cfg);
            let mut best: Option<(SourceAction, f64)> = None;
            for a in SourceAction::ALL {
                let click = theta.get(a);
                let cont = |succ: RecState| next_values.get(&succ).copied().unwrap_or(0.0);
                let mut q = click;
                if click > 0.0 {
                    q += discount * click * cont(s.advance(a, true));
                }
                if click < 1.0 {
                    q += discount * (1.0 - click) * cont(s.advance(a, false));
                }
                if best.is_none_or(|(_, v)| q > v) {
                    best = Some((a, q));
                }
            }
            let best = best.expect("three actions");
            values.insert(*s, best.1);
            table.insert(AugmentedState::of(*s, wing), best);
        }
        next_values = values;
    }
    let value = next_values[&RecState::ZERO];
    Ok(OptimalSolution { value, horizon: cfg.horizon, wing, table })
}

/// Factual minus counterfactual (polarisation disabled) expected return of
/// the same policy over the full horizon.
pub fn policy_value_counterfactual_gap(
    policy: impl Fn(&RecState) -> SourceAction,
    profile: &UserProfile,
    cfg: &EnvConfig,
) -> Result<f64, Error> {
    let factual = exact_policy_value(&policy, profile, cfg)?;
    let counterfactual = exact_policy_value(&policy, profile, &cfg.counterfactual())?;
    Ok(factual.last().copied().unwrap_or(0.0) - counterfactual.last().copied().unwrap_or(0.0))
}

/// Best return achievable by always recommending one fixed source, with the
/// polarisation channel disabled.
pub fn best_polarisation_free_stationary_value(profile: &UserProfile, cfg: &EnvConfig) -> Result<f64, Error> {
    let cf = cfg.counterfactual();
    let mut best = f64::NEG_INFINITY;
    for a in SourceAction::ALL {
        let v = exact_policy_value(|_| a, profile, &cf)?;
        best = best.max(v.last().copied().unwrap_or(0.0));
    }
    Ok(best)
}
