//! Suboptimality gaps of bad feasible sets, enumerated over every
//! availability set.

use alloc::vec;
use alloc::vec::Vec;

use super::{opt_values, BaselineError};
use crate::arms::ArmSet;
use crate::model::Instance;

pub const GAPS_MAX_ARMS: usize = 12;

/// Gap statistics. A nonempty feasible `S` within availability set `F` is
/// bad when `mu(S) < alpha mu(OPT(F))`; its gap is the difference.
#[derive(Debug, Clone, PartialEq)]
pub struct GapProfile {
    /// Smallest gap of a bad set containing each arm; `None` when the arm is
    /// in no bad set.
    pub delta_min: Vec<Option<f64>>,
    /// Largest gap overall, 0 when no bad set exists.
    pub delta_max: f64,
    /// Whether any bad set exists.
    pub has_bad: bool,
    pub r: usize,
}

/// Gaps below this are treated as ties, not as bad sets.
const BAD_TOLERANCE: f64 = 1e-12;

pub fn compute_gaps(instance: &Instance, alpha: f64) -> Result<GapProfile, BaselineError> {
    let k = instance.k();
    if k > GAPS_MAX_ARMS {
        return Err(BaselineError::SupportTooLarge {
            k,
            limit: GAPS_MAX_ARMS,
        });
    }
    let family = instance.family();
    let mu = instance.mu();
    let n = 1usize << k;
    let opt = opt_values(&mu, family);
    let feasible: Vec<bool> = (0..n)
        .map(|m| family.is_feasible(ArmSet::from_bits(m as u64)))
        .collect();
    let value: Vec<f64> = (0..n)
        .map(|m| ArmSet::from_bits(m as u64).weight(&mu))
        .collect();
    let mut delta_min: Vec<Option<f64>> = vec![None; k];
    let mut delta_max: Option<f64> = None;
    for (avail, &best) in opt.iter().enumerate() {
        let target = alpha * best;
        for s in ArmSet::from_bits(avail as u64).subsets() {
            let m = s.bits() as usize;
            if m == 0 || !feasible[m] || value[m] >= target - BAD_TOLERANCE {
                continue;
            }
            let gap = target - value[m];
            delta_max = Some(delta_max.map_or(gap, |d| d.max(gap)));
            for i in s.iter() {
                delta_min[i] = Some(delta_min[i].map_or(gap, |d| d.min(gap)));
            }
        }
    }
    Ok(GapProfile {
        delta_min,
        delta_max: delta_max.unwrap_or(0.0),
        has_bad: delta_max.is_some(),
        r: family.r(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ArmSpec, FamilyKind, FeasibleFamily};

    fn rank1(mu: &[f64]) -> Instance {
        let arms = mu
            .iter()
            .map(|&p| ArmSpec::bernoulli(p, 1).unwrap())
            .collect();
        Instance::new(
            arms,
            FeasibleFamily::new(mu.len(), FamilyKind::UniformMatroid { rank: 1 }).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn two_arm_example() {
        let g = compute_gaps(&rank1(&[0.9, 0.4]), 1.0).unwrap();
        assert_eq!(g.delta_min[0], None);
        assert!((g.delta_min[1].unwrap() - 0.5).abs() < 1e-12);
        assert!((g.delta_max - 0.5).abs() < 1e-12);
        assert!(g.has_bad);
        assert_eq!(g.r, 1);
    }

    #[test]
    fn single_arm_has_no_bad_set() {
        let g = compute_gaps(&rank1(&[0.7]), 1.0).unwrap();
        assert_eq!(g.delta_min, vec![None]);
        assert_eq!((g.delta_max, g.has_bad), (0.0, false));
    }

    #[test]
    fn too_many_arms() {
        let inst = rank1(&[0.5; 13]);
        assert!(matches!(
            compute_gaps(&inst, 1.0),
            Err(BaselineError::SupportTooLarge { .. })
        ));
    }
}
