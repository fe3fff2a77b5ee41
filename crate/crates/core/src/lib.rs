//! Simulation laboratory for user tampering in reinforcement-learning
//! recommenders.
//!
//! * [`env`]: the recommendation MDP with hidden, polarisable users.
//! * [`agents`]: tabular Q-learning plus random and bandit baselines.
//! * [`oracle`]: exact dynamic programming for small horizons.
//! * [`tamper`]: factual/counterfactual training and policy comparison.
//! * [`harness`]: evaluation, CSV and SVG output, run manifests.
//! * [`cid`]: causal influence diagrams and incentive analysis.

pub mod agents;
pub mod cid;
pub mod env;
mod error;
pub mod harness;
pub mod oracle;
pub mod rng;
pub mod tamper;

pub use error::{Error, Result};
