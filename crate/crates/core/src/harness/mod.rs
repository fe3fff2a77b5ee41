//! Evaluation protocol and reporting.
//!
//! Policies are evaluated exploration-free against the factual environment.
//! Episode `i` always uses the same environment stream whichever policy or
//! profile is evaluated, so comparisons are seed-aligned. Episodes run in
//! parallel and are reduced in episode order, which keeps results
//! bit-identical regardless of thread count.

mod csv;
mod manifest;
mod run_config;
mod svg;

use rayon::prelude::*;
use serde::Serialize;

pub use self::csv::{emit_csv, render_csv};
pub use manifest::{RunManifest, CODE_VERSION};
pub use run_config::{RunConfig, DEFAULT_EVAL_EPISODES};
pub use svg::{emit_svg_charts, render_action_chart, render_reward_chart};

use crate::agents::{EpisodeHistory, Policy, StepRecord};
use crate::env::{reset, step, EnvConfig, UserProfile};
use crate::error::Error;
use crate::rng::{split, Purpose};

/// Per-time-step action probabilities and cumulative reward of one policy
/// against one user.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalResult {
    pub profile: String,
    pub policy: String,
    pub episodes: u64,
    pub action_freq: Vec<[f64; 3]>,
    pub cum_reward_mean: Vec<f64>,
    /// Normal-approximation 95% half-widths.
    pub cum_reward_ci95: Vec<f64>,
}

impl EvalResult {
    pub fn horizon(&self) -> usize {
        self.action_freq.len()
    }

    pub fn final_reward(&self) -> f64 {
        self.cum_reward_mean.last().copied().unwrap_or(0.0)
    }

    pub fn final_ci95(&self) -> f64 {
        self.cum_reward_ci95.last().copied().unwrap_or(0.0)
    }
}

/// Plays one exploration-free episode.
pub fn run_episode(
    policy: &dyn Policy,
    profile: &UserProfile,
    episode: u64,
    env_cfg: &EnvConfig,
) -> Result<EpisodeHistory, Error> {
    let mut env_rng = split(env_cfg.master_seed, Purpose::EvalEnv, episode);
    let mut policy_rng = split(env_cfg.master_seed, Purpose::EvalPolicy, episode);
    let mut history = EpisodeHistory::new(profile.name.clone());
    let (mut s, mut theta) = reset(profile);
    for t in 0..env_cfg.horizon {
        let a = policy.act(&s, &history, env_cfg.horizon, &mut policy_rng);
        let out = step(&s, &theta, a, &mut env_rng, env_cfg)?;
        history.push(StepRecord { t, state: s, action: a, reward: out.reward, clicked: out.clicked });
        s = out.state;
        theta = out.theta;
    }
    Ok(history)
}

/// Episodes `0..episodes`, in order.
pub fn run_episodes(
    policy: &dyn Policy,
    profile: &UserProfile,
    episodes: u64,
    env_cfg: &EnvConfig,
) -> Result<Vec<EpisodeHistory>, Error> {
    env_cfg.validate()?;
    (0..episodes).into_par_iter().map(|i| run_episode(policy, profile, i, env_cfg)).collect()
}

/// Aggregates episode logs into per-step action frequencies and running
/// reward totals.
pub fn summarize(histories: &[EpisodeHistory], profile: &str, policy: &str, horizon: usize) -> EvalResult {
    let n = histories.len();
    let mut counts = vec![[0u64; 3]; horizon];
    let mut sum = vec![0.0f64; horizon];
    let mut sum_sq = vec![0.0f64; horizon];
    for h in histories {
        let mut running = 0.0;
        for (t, r) in h.records().iter().enumerate().take(horizon) {
            counts[t][r.action.index()] += 1;
            running += f64::from(r.reward);
            sum[t] += running;
            sum_sq[t] += running * running;
        }
    }
    let nf = n as f64;
    let action_freq = counts
        .iter()
        .map(|c| {
            let total: u64 = c.iter().sum();
            if total == 0 {
                [0.0; 3]
            } else {
                c.map(|x| x as f64 / total as f64)
            }
        })
        .collect();
    let cum_reward_mean: Vec<f64> = sum.iter().map(|s| if n == 0 { 0.0 } else { s / nf }).collect();
    let cum_reward_ci95 = (0..horizon)
        .map(|t| {
            if n < 2 {
                return 0.0;
            }
            let mean = cum_reward_mean[t];
            let var = ((sum_sq[t] - nf * mean * mean) / (nf - 1.0)).max(0.0);
            1.96 * (var / nf).sqrt()
        })
        .collect();
    EvalResult {
        profile: profile.to_string(),
        policy: policy.to_string(),
        episodes: n as u64,
        action_freq,
        cum_reward_mean,
        cum_reward_ci95,
    }
}

pub fn evaluate(
    policy: &dyn Policy,
    profile: &UserProfile,
    episodes: u64,
    env_cfg: &EnvConfig,
) -> Result<EvalResult, Error> {
    if episodes == 0 {
        return Err(Error::Format("evaluation needs at least one episode".into()));
    }
    let logs = run_episodes(policy, profile, episodes, env_cfg)?;
    Ok(summarize(&logs, &profile.name, policy.tag(), env_cfg.horizon as usize))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub profile: String,
    pub policy: String,
    pub final_reward: f64,
    pub final_ci95: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub results: Vec<EvalResult>,
    pub summary: Vec<SummaryRow>,
}

impl Comparison {
    pub fn get(&self, profile: &str, policy: &str) -> Option<&EvalResult> {
        self.results.iter().find(|r| r.profile == profile && r.policy == policy)
    }

    /// Plain-text table of final cumulative rewards.
    pub fn summary_table(&self) -> String {
        let mut out = format!("{:<22} {:<10} {:>12} {:>10}\n", "profile", "policy", "reward@h", "ci95");
        for row in &self.summary {
            out.push_str(&format!(
                "{:<22} {:<10} {:>12.4} {:>10.4}\n",
                row.profile, row.policy, row.final_reward, row.final_ci95
            ));
        }
        out
    }
}

/// Evaluates every (profile, policy) pair, profile-major.
pub fn compare(
    profiles: &[UserProfile],
    policies: &[&dyn Policy],
    episodes: u64,
    env_cfg: &EnvConfig,
) -> Result<Comparison, Error> {
    if profiles.is_empty() || policies.is_empty() {
        return Err(Error::Format("compare needs at least one profile and one policy".into()));
    }
    let mut results = Vec::with_capacity(profiles.len() * policies.len());
    for profile in profiles {
        for policy in policies {
            results.push(evaluate(*policy, profile, episodes, env_cfg)?);
        }
    }
    let summary = results
        .iter()
        .map(|r| SummaryRow {
            profile: r.profile.clone(),
            policy: r.policy.clone(),
            final_reward: r.final_reward(),
            final_ci95: r.final_ci95(),
        })
        .collect();
    Ok(Comparison { results, summary })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::{FixedPolicy, RandomPolicy};
    use crate::env::{default_population, SourceAction};

    fn centrist() -> UserProfile {
        default_population().into_iter().find(|p| p.name == "centrist").unwrap()
    }

    #[test]
    fn random_policy_on_centrist() {
        let cfg = EnvConfig::default();
        let r = evaluate(&RandomPolicy, &centrist(), 10_000, &cfg).unwrap();
        let expected = 30.0 * (0.2 + 0.4 + 0.2) / 3.0;
        let se = r.final_ci95() / 1.96;
        assert!((r.final_reward() - expected).abs() <= 4.0 * se, "{} vs {expected}", r.final_reward());
        assert_eq!(r.policy, "random");
    }

    #[test]
    fn always_centre_is_bernoulli_sum() {
        let cfg = EnvConfig::default();
        let r = evaluate(&FixedPolicy(SourceAction::Centre), &centrist(), 10_000, &cfg).unwrap();
        for t in 0..30 {
            let expected = 0.4 * (t + 1) as f64;
            let se = (r.cum_reward_ci95[t] / 1.96).max(1e-9);
            assert!((r.cum_reward_mean[t] - expected).abs() <= 4.0 * se);
            assert_eq!(r.action_freq[t], [0.0, 1.0, 0.0]);
        }
    }

    #[test]
    fn single_episode_rows_are_one_hot() {
        let r = evaluate(&RandomPolicy, &centrist(), 1, &EnvConfig::default()).unwrap();
        for row in &r.action_freq {
            let mut sorted = *row;
            sorted.sort_by(f64::total_cmp);
            assert_eq!(sorted, [0.0, 0.0, 1.0]);
        }
        assert!(r.cum_reward_ci95.iter().all(|&c| c == 0.0));
    }

    #[test]
    fn zero_episodes_is_an_error() {
        assert!(evaluate(&RandomPolicy, &centrist(), 0, &EnvConfig::default()).is_err());
    }

    #[test]
    fn rows_and_increments() {
        let r = evaluate(&RandomPolicy, &default_population()[0], 500, &EnvConfig::default()).unwrap();
        for row in &r.action_freq {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
        let mut prev = 0.0;
        for &m in &r.cum_reward_mean {
            assert!(m - prev >= 0.0 && m - prev <= 1.0);
            prev = m;
        }
    }

    #[test]
    fn compare_is_profile_major() {
        let cfg = EnvConfig::default();
        let pols: [&dyn Policy; 2] = [&RandomPolicy, &FixedPolicy(SourceAction::Left)];
        let c = compare(&default_population(), &pols, 20, &cfg).unwrap();
        assert_eq!(c.results.len(), 10);
        assert_eq!(c.summary.len(), 10);
        assert_eq!(c.results[1].profile, "strong-left");
        assert_eq!(c.results[1].policy, "always-left");
        assert!(c.summary_table().lines().count() == 11);
        let one = compare(&default_population()[..1], &pols[..1], 5, &cfg).unwrap();
        assert_eq!(one.summary.len(), 1);
        assert!(compare(&[], &pols, 5, &cfg).is_err());
    }
}
