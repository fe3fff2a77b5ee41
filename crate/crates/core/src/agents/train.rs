use rand::Rng;
use serde::{Deserialize, Serialize};

use super::dense::DenseTable;
use super::qtable::{argmax, QEntry, QTable};
use crate::env::{reset, sample_user, step, EnvConfig, RecState, SourceAction};
use crate::error::Error;
use crate::rng::{split, Purpose};

/// Training length, learning rate and the linear exploration schedule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainSchedule {
    pub episodes: u64,
    /// Learning rate, or its floor when `alpha_visit_exponent` is positive.
    pub alpha: f64,
    /// With exponent `w > 0` the rate of a state-action pair seen `n` times
    /// before is `max(alpha, (n + 1)^-w)`. Zero keeps the rate constant.
    pub alpha_visit_exponent: f64,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    /// Fraction of the episodes over which epsilon falls linearly from
    /// `epsilon_start` to `epsilon_end`; it stays at `epsilon_end` after.
    pub epsilon_decay_fraction: f64,
}

impl Default for TrainSchedule {
    fn default() -> Self {
        TrainSchedule {
            episodes: 50_000_000,
            alpha: 0.001,
            alpha_visit_exponent: 0.6,
            epsilon_start: 1.0,
            epsilon_end: 0.3,
            epsilon_decay_fraction: 1.0,
        }
    }
}

impl TrainSchedule {
    pub fn with_episodes(self, episodes: u64) -> Self {
        TrainSchedule { episodes, ..self }
    }

    pub fn validate(&self) -> Result<(), Error> {
        let bad = |m: String| Err(Error::Schedule(m));
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return bad(format!("alpha {} outside (0, 1]", self.alpha));
        }
        if !(self.alpha_visit_exponent >= 0.0 && self.alpha_visit_exponent <= 1.0) {
            return bad(format!("alpha_visit_exponent {} outside [0, 1]", self.alpha_visit_exponent));
        }
        for eps in [self.epsilon_start, self.epsilon_end] {
            if !(0.0..=1.0).contains(&eps) {
                return bad(format!("epsilon {eps} outside [0, 1]"));
            }
        }
        if self.epsilon_start < self.epsilon_end {
            return bad("epsilon_start must be at least epsilon_end".into());
        }
        if !(0.0..=1.0).contains(&self.epsilon_decay_fraction) {
            return bad(format!("epsilon_decay_fraction {} outside [0, 1]", self.epsilon_decay_fraction));
        }
        Ok(())
    }

    /// Learning rate for a pair already updated `visits` times.
    pub fn alpha_at(&self, visits: u64) -> f64 {
        if self.alpha_visit_exponent == 0.0 {
            return self.alpha;
        }
        ((visits + 1) as f64).powf(-self.alpha_visit_exponent).max(self.alpha)
    }

    pub fn epsilon_at(&self, episode: u64) -> f64 {
        let decay_episodes = self.epsilon_decay_fraction * self.episodes as f64;
        if decay_episodes <= 0.0 || episode as f64 >= decay_episodes {
            return self.epsilon_end;
        }
        let frac = episode as f64 / decay_episodes;
        self.epsilon_start + (self.epsilon_end - self.epsilon_start) * frac
    }
}

/// Epsilon-greedy choice. Always consumes two draws (the explore coin, then
/// the uniform action) so that exploration streams stay aligned across runs
/// whose greedy choices differ.
pub fn select_epsilon_greedy<R: Rng + ?Sized>(q: &QTable, s: &RecState, epsilon: f64, rng: &mut R) -> SourceAction {
    epsilon_greedy_over(&q.values(s), epsilon, rng)
}

fn epsilon_greedy_over<R: Rng + ?Sized>(values: &[f64; 3], epsilon: f64, rng: &mut R) -> SourceAction {
    let coin: f64 = rng.gen();
    let random = rng.gen_range(0..3);
    let index = if coin < epsilon { random } else { argmax(values) };
    SourceAction::from_index(index).expect("index below 3")
}

/// Tabular Q-learning against users drawn from the population. A pure
/// function of the two configs.
pub fn train(env_cfg: &EnvConfig, schedule: &TrainSchedule) -> Result<QTable, Error> {
    train_with_exploration(env_cfg, schedule, Purpose::Explore)
}

/// [`train`] with the exploration stream family chosen explicitly.
pub fn train_with_exploration(
    env_cfg: &EnvConfig,
    schedule: &TrainSchedule,
    explore: Purpose,
) -> Result<QTable, Error> {
    env_cfg.validate()?;
    schedule.validate()?;
    match DenseTable::for_horizon(env_cfg.horizon) {
        Some(mut table) => {
            run_training(&mut table, env_cfg, schedule, explore)?;
            Ok(table.into_qtable())
        }
        None => {
            let mut table = QTable::new();
            run_training(&mut table, env_cfg, schedule, explore)?;
            Ok(table)
        }
    }
}

trait Store {
    fn values(&self, s: &RecState) -> [f64; 3];
    fn entry_mut(&mut self, s: RecState) -> &mut QEntry;
}

impl Store for QTable {
    fn values(&self, s: &RecState) -> [f64; 3] {
        QTable::values(self, s)
    }

    fn entry_mut(&mut self, s: RecState) -> &mut QEntry {
        QTable::entry_mut(self, s)
    }
}

impl Store for DenseTable {
    fn values(&self, s: &RecState) -> [f64; 3] {
        DenseTable::values(self, s)
    }

    fn entry_mut(&mut self, s: RecState) -> &mut QEntry {
        DenseTable::entry_mut(self, s)
    }
}

/// Learning rates by visit count, precomputed up to the point where the
/// floor takes over.
struct AlphaCurve {
    schedule: TrainSchedule,
    table: Vec<f64>,
}

impl AlphaCurve {
    const MAX_TABLE: u64 = 1 << 17;

    fn new(schedule: &TrainSchedule) -> Self {
        let len = if schedule.alpha_visit_exponent == 0.0 {
            0
        } else {
            // (n + 1)^-w falls to the floor at n + 1 = alpha^(-1/w)
            let until = schedule.alpha.powf(-1.0 / schedule.alpha_visit_exponent).ceil();
            (until as u64).min(Self::MAX_TABLE)
        };
        AlphaCurve { schedule: *schedule, table: (0..len).map(|n| schedule.alpha_at(n)).collect() }
    }

    #[inline]
    fn at(&self, visits: u64) -> f64 {
        match self.table.get(visits as usize) {
            Some(&a) => a,
            None => self.schedule.alpha_at(visits),
        }
    }
}

fn run_training<S: Store>(
    q: &mut S,
    env_cfg: &EnvConfig,
    schedule: &TrainSchedule,
    explore: Purpose,
) -> Result<(), Error> {
    let seed = env_cfg.master_seed;
    let alpha = AlphaCurve::new(schedule);
    for episode in 0..schedule.episodes {
        let epsilon = schedule.epsilon_at(episode);
        let mut user_rng = split(seed, Purpose::User, episode);
        let mut env_rng = split(seed, Purpose::Env, episode);
        let mut agent_rng = split(seed, explore, episode);
        let profile = sample_user(&env_cfg.population, &mut user_rng);
        let (mut s, mut theta) = reset(profile);
        // The successor's values are carried into the next step; only the
        // current state is ever written, so the copy stays fresh.
        let mut values = q.values(&s);
        for t in 0..env_cfg.horizon {
            let a = epsilon_greedy_over(&values, epsilon, &mut agent_rng);
            let out = step(&s, &theta, a, &mut env_rng, env_cfg)?;
            let terminal = t + 1 == env_cfg.horizon;
            let next_values = if terminal { [0.0; 3] } else { q.values(&out.state) };
            let mut target = f64::from(out.reward);
            if !terminal {
                target += env_cfg.gamma * next_values[argmax(&next_values)];
            }
            let entry = q.entry_mut(s);
            let i = a.index();
            let rate = alpha.at(entry.visits[i]);
            entry.q[i] += rate * (target - entry.q[i]);
            entry.visits[i] += 1;
            s = out.state;
            theta = out.theta;
            values = next_values;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::default_population;
    use crate::rng::split;

    #[test]
    fn epsilon_schedule() {
        let s = TrainSchedule {
            epsilon_end: 0.01,
            epsilon_decay_fraction: 0.8,
            ..TrainSchedule::default().with_episodes(100)
        };
        assert_eq!(s.epsilon_at(0), 1.0);
        assert!((s.epsilon_at(40) - (1.0 - 0.99 * 0.5)).abs() < 1e-12);
        assert_eq!(s.epsilon_at(80), 0.01);
        assert_eq!(s.epsilon_at(99), 0.01);
        let flat = TrainSchedule { epsilon_decay_fraction: 0.0, ..s };
        assert_eq!(flat.epsilon_at(0), 0.01);
    }

    #[test]
    fn default_schedule() {
        let s = TrainSchedule::default();
        assert_eq!(s.episodes, 50_000_000);
        assert_eq!(s.alpha_at(0), 1.0);
        assert_eq!(s.alpha_at(u64::MAX / 2), 0.001);
        assert_eq!(s.epsilon_at(0), 1.0);
        assert!((s.epsilon_at(25_000_000) - 0.65).abs() < 1e-12);
        assert_eq!(s.epsilon_at(s.episodes), 0.3);
    }

    #[test]
    fn schedule_validation() {
        assert!(TrainSchedule { alpha: 0.0, ..Default::default() }.validate().is_err());
        assert!(TrainSchedule { epsilon_start: 0.1, epsilon_end: 0.5, ..Default::default() }.validate().is_err());
        TrainSchedule::default().validate().unwrap();
    }

    #[test]
    fn greedy_when_epsilon_zero() {
        let mut q = QTable::new();
        let s = RecState::ZERO;
        q.set_values(s, [0.1, 0.9, 0.3]);
        let mut rng = split(0, Purpose::Misc, 0);
        for _ in 0..100 {
            assert_eq!(select_epsilon_greedy(&q, &s, 0.0, &mut rng), SourceAction::Centre);
            assert_eq!(select_epsilon_greedy(&QTable::new(), &s, 0.0, &mut rng), SourceAction::Left);
        }
    }

    #[test]
    fn uniform_when_epsilon_one() {
        let mut q = QTable::new();
        q.set_values(RecState::ZERO, [0.0, 1.0, 0.0]);
        let mut rng = split(1, Purpose::Misc, 0);
        let mut counts = [0usize; 3];
        let n = 1_000_000;
        for _ in 0..n {
            counts[select_epsilon_greedy(&q, &RecState::ZERO, 1.0, &mut rng).index()] += 1;
        }
        for c in counts {
            assert!((c as f64 / n as f64 - 1.0 / 3.0).abs() <= 0.002);
        }
    }

    #[test]
    fn dense_and_sparse_storage_agree() {
        let cfg = EnvConfig { horizon: 7, master_seed: 3, ..EnvConfig::default() };
        let schedule =
            TrainSchedule { alpha: 0.01, alpha_visit_exponent: 0.6, ..TrainSchedule::default().with_episodes(2_000) };
        let dense = train(&cfg, &schedule).unwrap();
        let mut sparse = QTable::new();
        run_training(&mut sparse, &cfg, &schedule, Purpose::Explore).unwrap();
        assert_eq!(dense, sparse);
    }

    #[test]
    fn alpha_curve_matches_formula() {
        let schedule = TrainSchedule { alpha: 0.001, alpha_visit_exponent: 0.6, ..TrainSchedule::default() };
        let curve = AlphaCurve::new(&schedule);
        for n in [0, 1, 2, 10, 1_000, 99_999, 100_000, 1 << 20] {
            assert_eq!(curve.at(n), schedule.alpha_at(n));
        }
        assert_eq!(schedule.alpha_at(0), 1.0);
        assert_eq!(schedule.alpha_at(1 << 20), 0.001);
        let constant = TrainSchedule { alpha: 0.1, alpha_visit_exponent: 0.0, ..TrainSchedule::default() };
        assert_eq!(constant.alpha_at(5), 0.1);
    }

    #[test]
    fn zero_episodes_is_empty() {
        let q = train(&EnvConfig::default(), &TrainSchedule::default().with_episodes(0)).unwrap();
        assert!(q.is_empty());
    }

    #[test]
    fn training_is_deterministic_and_bounded() {
        let cfg = EnvConfig { horizon: 8, master_seed: 17, population: default_population(), ..EnvConfig::default() };
        let schedule = TrainSchedule::default().with_episodes(3_000);
        let a = train(&cfg, &schedule).unwrap();
        let b = train(&cfg, &schedule).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.to_json(), b.to_json());
        assert_eq!(a.total_visits(), 3_000 * 8);
        for (s, e) in a.iter() {
            let remaining = f64::from(cfg.horizon - s.recommendations());
            for v in e.q {
                assert!((0.0..=remaining).contains(&v), "{s} {v}");
            }
        }
        let other = train(&EnvConfig { master_seed: 18, ..cfg }, &schedule).unwrap();
        assert_ne!(a, other);
    }
}
