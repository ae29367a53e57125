//! Ground-truth and relaxation baselines: the exact finite-horizon optimum,
//! optimal pulling rates, the LP upper bound, suboptimality gaps and the
//! regret-bound formulas.

mod bounds;
mod gaps;
mod lp;
mod mdp;
pub mod simplex;

pub use bounds::{
    bound_dd, bound_di, kappa, rho, rho_regret, sampling_threshold, BaselineMethod, RegretBound,
    RhoRegret,
};
pub use gaps::{compute_gaps, GapProfile, GAPS_MAX_ARMS};
pub use lp::{lp_upper_bound, LP_MAX_ARMS};
pub use mdp::{
    evaluate_stationary, mdp_pulling_rates, mdp_value_iteration, MdpSolution, PullingRates,
    MDP_MAX_HORIZON, MDP_MAX_STATES,
};

use alloc::vec;
use alloc::vec::Vec;
use thiserror::Error;

use crate::arms::ArmSet;
use crate::model::FeasibleFamily;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BaselineError {
    #[error("state space of {size} blocking configurations exceeds the limit of {limit}")]
    StateSpaceTooLarge { size: u64, limit: u64 },
    #[error("horizon {horizon} exceeds the limit of {limit}")]
    HorizonTooLarge { horizon: u64, limit: u64 },
    #[error("horizon must be at least 1")]
    ZeroHorizon,
    #[error("{k} arms exceed the limit of {limit} for this computation")]
    SupportTooLarge { k: usize, limit: usize },
    #[error("this computation requires a hereditary family")]
    NotHereditary,
    #[error("pulling rates reproduce the optimum only to within {residual:e}")]
    RateIdentity { residual: f64 },
    #[error("linear program did not converge within {pivots} pivots")]
    LpStalled { pivots: usize },
}

/// `mu(OPT(S))` for every mask `S` over `k` arms: the best value of a
/// feasible subset of `S` (the empty set counts, with value 0).
pub(crate) fn opt_values(weights: &[f64], family: &FeasibleFamily) -> Vec<f64> {
    let k = family.k();
    let n = 1usize << k;
    let mut best = vec![0.0; n];
    for mask in 1..n {
        let s = ArmSet::from_bits(mask as u64);
        let mut v = if family.is_feasible(s) {
            s.weight(weights)
        } else {
            0.0
        };
        for i in s.iter() {
            v = v.max(best[mask & !(1 << i)]);
        }
        best[mask] = v;
    }
    best
}
