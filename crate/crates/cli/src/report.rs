//! Summary and baseline report documents.

use cbbsd_core::baselines::{GapProfile, RegretBound};
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapsDoc {
    /// `null` for arms in no bad set.
    pub delta_min: Vec<Option<f64>>,
    pub delta_max: f64,
    pub has_bad: bool,
    pub r: usize,
}

impl From<&GapProfile> for GapsDoc {
    fn from(g: &GapProfile) -> Self {
        GapsDoc {
            delta_min: g.delta_min.clone(),
            delta_max: g.delta_max,
            has_bad: g.has_bad,
            r: g.r,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundDoc {
    pub main: f64,
    pub additive_dmax_k: f64,
}

impl From<RegretBound> for BoundDoc {
    fn from(b: RegretBound) -> Self {
        BoundDoc {
            main: b.main,
            additive_dmax_k: b.additive_dmax_k,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundsDoc {
    pub dd: BoundDoc,
    pub di: BoundDoc,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RewStarDoc {
    pub method: &'static str,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BaselineValues {
    pub mdp: Option<f64>,
    pub lp: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvesDoc {
    pub t: Vec<u64>,
    pub mean_cum_reward: Vec<f64>,
    pub se_cum_reward: Vec<f64>,
    /// `rho Rew*(t) - mean cumulative reward`, against the baseline in
    /// `rew_star`; `null` without one.
    pub rho_regret: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub config_digest: String,
    pub policy: &'static str,
    pub horizon: u64,
    pub n_runs: u64,
    pub base_seed: u64,
    pub alpha: f64,
    pub beta: f64,
    pub rho: f64,
    pub rew_star: Option<RewStarDoc>,
    pub baselines: BaselineValues,
    pub curves: CurvesDoc,
    pub mean_total_gamma: Option<f64>,
    pub se_total_gamma: Option<f64>,
    pub bounds: Option<BoundsDoc>,
    pub gaps: Option<GapsDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BaselineReport {
    pub rew_star: Option<f64>,
    pub method: Option<&'static str>,
    pub lp_upper_bound: Option<f64>,
    pub z_rates: Option<Vec<f64>>,
    pub gaps: Option<GapsDoc>,
    pub bound_dd: Option<BoundDoc>,
    pub bound_di: Option<BoundDoc>,
}

/// Rounds reported in the curves: every round up to 1000, otherwise 1000
/// evenly spaced rounds ending at the horizon.
pub fn curve_points(horizon: u64) -> Vec<u64> {
    const MAX_POINTS: u64 = 1000;
    if horizon <= MAX_POINTS {
        return (1..=horizon).collect();
    }
    (1..=MAX_POINTS)
        .map(|j| (j * horizon).div_ceil(MAX_POINTS))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn points() {
        assert_eq!(curve_points(3), vec![1, 2, 3]);
        let p = curve_points(2500);
        assert_eq!(p.len(), 1000);
        assert_eq!((p[0], *p.last().unwrap()), (3, 2500));
        assert!(p.windows(2).all(|w| w[0] < w[1]));
    }
}
