//! Seed derivation.
//!
//! One master seed fans out into independent ChaCha streams keyed by
//! (purpose, episode index). Environment draws and agent draws never share a
//! stream, so a factual run and its counterfactual twin see the same click
//! and polarisation draws for the same episode even when their actions
//! differ.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// What a derived stream is used for. The discriminant is mixed into the key.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum Purpose {
    /// Which user an episode is played against.
    User = 1,
    /// Click and polarisation-factor draws.
    Env = 2,
    /// Exploration draws during training.
    Explore = 3,
    /// Exploration draws for a counterfactual run that does not share
    /// exploration randomness with its factual twin.
    ExploreIndependent = 4,
    /// Environment draws during evaluation.
    EvalEnv = 5,
    /// Draws made by stochastic baseline policies during evaluation.
    EvalPolicy = 6,
    /// Anything else (Monte Carlo checks, fuzzing).
    Misc = 7,
}

/// Stream number `index` of the given purpose under `master_seed`.
pub fn split(master_seed: u64, purpose: Purpose, index: u64) -> SimRng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&master_seed.to_le_bytes());
    key[8..16].copy_from_slice(&(purpose as u64).to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(index);
    rng
}
