//! Combinatorial blocking bandits with stochastic delays.
//!
//! Every round the player observes which arms are available (not blocked),
//! plays a feasible subset of them, and each played arm draws a joint
//! `(reward, delay)` sample. An arm played with delay `d` stays blocked for
//! the next `d - 1` rounds.
//!
//! The crate is `no_std` (it needs `alloc`) and contains only pure
//! algorithms:
//!
//! - [`model`]: arms, feasibility families, instances and blocking dynamics.
//! - [`oracles`]: `(alpha, beta)`-approximation oracles over a family.
//! - [`policies`]: the greedy full-information heuristic, the UCB bandit
//!   policy and a random-feasible control.
//! - [`engine`]: seeded episode simulation, traces, instantaneous regret and
//!   sequential Monte-Carlo aggregation.
//! - [`baselines`]: exact finite-horizon MDP optimum, optimal pulling rates,
//!   the LP relaxation upper bound, gap enumeration and regret bounds.
//! - [`gadgets`]: the hardness constructions (single-arm Markov chain,
//!   edge-disjoint-paths and max-cover instances) and their verifiers.
//!
//! File formats, configuration and the command-line runner live in the
//! companion `cbbsd` crate.

#![no_std]

extern crate alloc;

pub mod arms;
pub mod baselines;
pub mod engine;
pub mod gadgets;
pub mod model;
pub mod oracles;
pub mod policies;

pub use arms::ArmSet;
pub use model::{ArmSpec, Atom, BlockingState, FamilyKind, FeasibleFamily, Instance};

/// Random source used throughout the crate: portable and reproducible
/// across platforms for a given seed.
pub type SimRng = rand_chacha::ChaCha8Rng;

/// Builds the per-run random stream for `seed`.
pub fn rng_from_seed(seed: u64) -> SimRng {
    use rand::SeedableRng;
    SimRng::seed_from_u64(seed)
}
