//! Regret-bound formulas, the rho-regret and the kappa function.

use core::f64::consts::PI;

use super::GapProfile;

/// `main` holds the explicit terms of a bound; `additive_dmax_k` is the
/// `c d_max k` term whose constant is left open.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegretBound {
    pub main: f64,
    pub additive_dmax_k: f64,
}

fn tail(k: usize, delta_max: f64) -> f64 {
    k as f64 * (2.0 + PI * PI / 3.0 * delta_max)
}

/// Distribution-dependent bound:
/// `48/(1+ab) sum_i r ln T / Delta_min^i + k (2 + pi^2/3 Delta_max)`.
/// Arms in no bad set contribute nothing to the sum.
#[allow(clippy::too_many_arguments)]
pub fn bound_dd(
    gaps: &GapProfile,
    k: usize,
    r: usize,
    horizon: f64,
    alpha: f64,
    beta: f64,
    d_max: u32,
    c: f64,
) -> RegretBound {
    let ln_t = libm::log(horizon);
    let sum: f64 = gaps
        .delta_min
        .iter()
        .flatten()
        .map(|d| r as f64 * ln_t / d)
        .sum();
    RegretBound {
        main: 48.0 / (1.0 + alpha * beta) * sum + tail(k, gaps.delta_max),
        additive_dmax_k: c * d_max as f64 * k as f64,
    }
}

/// Distribution-independent bound:
/// `14 sqrt(k r T ln T)/(1+ab) + k (2 + pi^2/3 Delta_max)`.
#[allow(clippy::too_many_arguments)]
pub fn bound_di(
    k: usize,
    r: usize,
    horizon: f64,
    alpha: f64,
    beta: f64,
    delta_max: f64,
    d_max: u32,
    c: f64,
) -> RegretBound {
    let root = libm::sqrt(k as f64 * r as f64 * horizon * libm::log(horizon));
    RegretBound {
        main: 14.0 * root / (1.0 + alpha * beta) + tail(k, delta_max),
        additive_dmax_k: c * d_max as f64 * k as f64,
    }
}

/// `alpha beta / (1 + alpha beta)`.
pub fn rho(alpha: f64, beta: f64) -> f64 {
    let ab = alpha * beta;
    ab / (1.0 + ab)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaselineMethod {
    /// Exact optimum from backward induction.
    Mdp,
    /// LP upper bound; regret against it is pessimistic.
    Lp,
}

impl BaselineMethod {
    pub fn name(self) -> &'static str {
        match self {
            BaselineMethod::Mdp => "mdp",
            BaselineMethod::Lp => "lp",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RhoRegret {
    pub value: f64,
    pub method: BaselineMethod,
}

pub fn rho_regret(
    policy_reward: f64,
    method: BaselineMethod,
    rew_star: f64,
    alpha: f64,
    beta: f64,
) -> RhoRegret {
    RhoRegret {
        value: rho(alpha, beta) * rew_star - policy_reward,
        method,
    }
}

/// `l_T(Delta) = 24 r^2 ln T / Delta^2`.
pub fn sampling_threshold(delta: f64, horizon: f64, r: usize) -> f64 {
    24.0 * (r * r) as f64 * libm::log(horizon) / (delta * delta)
}

/// 2 at `s = 0`, `sqrt(24 ln T / s)` up to the sampling threshold, 0 beyond.
pub fn kappa(delta: f64, s: u64, horizon: f64, r: usize) -> f64 {
    if s == 0 {
        2.0
    } else if s as f64 <= sampling_threshold(delta, horizon, r) {
        libm::sqrt(24.0 * libm::log(horizon) / s as f64)
    } else {
        0.0
    }
}
