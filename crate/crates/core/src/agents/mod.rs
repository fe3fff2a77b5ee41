//! Tabular Q-learning and the reference recommenders.

mod dense;
mod history;
mod policies;
mod qtable;
mod train;

pub use history::{EpisodeHistory, StepRecord};
pub use policies::{
    bandit_policy, greedy_policy, random_policy, BanditPolicy, FixedPolicy, GreedyPolicy, Policy, RandomPolicy,
};
pub use qtable::{argmax, q_update, QEntry, QTable, QTABLE_FORMAT};
pub use train::{select_epsilon_greedy, train, train_with_exploration, TrainSchedule};
