//! Fractional upper bound on the optimal reward.
//!
//! With `y_i = mu_i z_i` the relaxation reads: maximize `sum y_i` subject to
//! `y_i <= mu_i min(1, 1/d_i + d_i^max / T)` and
//! `sum_{i in S} y_i <= mu(OPT(S))` for every `S`. All right-hand sides are
//! nonnegative, so the simplex starts at the origin.

use alloc::vec;
use alloc::vec::Vec;

use super::simplex::{maximize, SimplexError};
use super::{opt_values, BaselineError};
use crate::model::Instance;

pub const LP_MAX_ARMS: usize = 16;

pub fn lp_upper_bound(instance: &Instance, horizon: u64) -> Result<f64, BaselineError> {
    let family = instance.family();
    if !family.is_hereditary() {
        return Err(BaselineError::NotHereditary);
    }
    let k = instance.k();
    if k > LP_MAX_ARMS {
        return Err(BaselineError::SupportTooLarge {
            k,
            limit: LP_MAX_ARMS,
        });
    }
    if horizon == 0 {
        return Err(BaselineError::ZeroHorizon);
    }
    let t = horizon as f64;
    let mu = instance.mu();
    let cap: Vec<f64> = instance
        .arms()
        .iter()
        .zip(&mu)
        .map(|(a, &m)| m * (1.0 / a.d_mean() + a.d_max() as f64 / t).min(1.0))
        .collect();
    let vars: Vec<usize> = (0..k).filter(|&i| cap[i] > 0.0).collect();
    let n = vars.len();
    let opt = opt_values(&mu, family);
    let mut rows = Vec::new();
    let mut rhs = Vec::new();
    for (j, &i) in vars.iter().enumerate() {
        let mut row = vec![0.0; n];
        row[j] = 1.0;
        rows.push(row);
        rhs.push(cap[i]);
    }
    for (mask, &limit) in opt.iter().enumerate().skip(1) {
        let in_s: Vec<bool> = vars.iter().map(|&i| mask >> i & 1 == 1).collect();
        let slack: f64 = vars
            .iter()
            .zip(&in_s)
            .filter(|(_, &b)| b)
            .map(|(&i, _)| cap[i])
            .sum();
        // Rows the box constraints already imply can never bind.
        if slack <= limit {
            continue;
        }
        rows.push(in_s.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect());
        rhs.push(limit);
    }
    let sol = maximize(&vec![1.0; n], &rows, &rhs, 1_000_000).map_err(|e| match e {
        SimplexError::PivotLimit(p) => BaselineError::LpStalled { pivots: p },
        // The origin is feasible and the box rows bound every variable.
        other => unreachable!("{other}"),
    })?;
    Ok(t * sol.value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ArmSpec, FamilyKind, FeasibleFamily};

    #[test]
    fn single_arm_box() {
        let inst = Instance::new(
            vec![ArmSpec::deterministic(1.0, 2).unwrap()],
            FeasibleFamily::new(1, FamilyKind::UniformMatroid { rank: 1 }).unwrap(),
        )
        .unwrap();
        assert!((lp_upper_bound(&inst, 100).unwrap() - 52.0).abs() < 1e-9);
    }

    #[test]
    fn unit_delays_give_static_optimum() {
        let arms = [0.9, 0.5, 0.4, 0.2]
            .iter()
            .map(|&p| ArmSpec::bernoulli(p, 1).unwrap())
            .collect();
        let inst = Instance::new(
            arms,
            FeasibleFamily::new(4, FamilyKind::UniformMatroid { rank: 2 }).unwrap(),
        )
        .unwrap();
        assert!((lp_upper_bound(&inst, 50).unwrap() - 50.0 * 1.4).abs() < 1e-6);
    }

    #[test]
    fn rejects_non_hereditary() {
        let fam = FeasibleFamily::new(
            2,
            FamilyKind::EdpPaths {
                edges: vec![(0, 1), (1, 2)],
                pairs: vec![(0, 2)],
            },
        )
        .unwrap();
        let arms = (0..2)
            .map(|_| ArmSpec::deterministic(1.0, 1).unwrap())
            .collect();
        let inst = Instance::new(arms, fam).unwrap();
        assert_eq!(lp_upper_bound(&inst, 10), Err(BaselineError::NotHereditary));
    }
}
