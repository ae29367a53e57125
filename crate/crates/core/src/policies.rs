//! Selection policies: the full-information greedy heuristic, the UCB
//! bandit policy and a random-feasible control.
//!
//! Policies never see the horizon or realized delays; the engine hands them
//! the current availability set and, after each round, the rewards of the
//! arms they played.

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;
use rand::seq::SliceRandom;
use rand::RngCore;
use thiserror::Error;

use crate::arms::ArmSet;
use crate::model::FeasibleFamily;
use crate::oracles::{Oracle, OracleError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PolicyError {
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error("reward {reward} for arm {arm} is outside [0, 1]")]
    RewardOutOfRange { arm: usize, reward: f64 },
    #[error("policy requires a hereditary family")]
    NotHereditary,
    #[error("observed arm {arm} was not played")]
    UnexpectedObservation { arm: usize },
}

pub trait Policy {
    fn select(
        &mut self,
        available: ArmSet,
        family: &FeasibleFamily,
        rng: &mut dyn RngCore,
    ) -> Result<ArmSet, PolicyError>;

    /// Rewards for the arms played this round, ascending by arm.
    fn observe(&mut self, played: ArmSet, rewards: &[(usize, f64)]) -> Result<(), PolicyError>;
}

impl<P: Policy + ?Sized> Policy for Box<P> {
    fn select(
        &mut self,
        available: ArmSet,
        family: &FeasibleFamily,
        rng: &mut dyn RngCore,
    ) -> Result<ArmSet, PolicyError> {
        (**self).select(available, family, rng)
    }

    fn observe(&mut self, played: ArmSet, rewards: &[(usize, f64)]) -> Result<(), PolicyError> {
        (**self).observe(played, rewards)
    }
}

/// One greedy step: the oracle applied to the true means over the
/// available arms.
pub fn greedy_step<O: Oracle + ?Sized>(
    mu: &[f64],
    available: ArmSet,
    family: &FeasibleFamily,
    oracle: &mut O,
    rng: &mut dyn RngCore,
) -> Result<ArmSet, PolicyError> {
    Ok(oracle.select(mu, available, family, rng)?.chosen)
}

/// Plays the oracle's choice on the true means every round.
#[derive(Debug, Clone)]
pub struct GreedyPolicy<O> {
    mu: Vec<f64>,
    oracle: O,
}

impl<O: Oracle> GreedyPolicy<O> {
    pub fn new(mu: Vec<f64>, oracle: O) -> Self {
        GreedyPolicy { mu, oracle }
    }
}

impl<O: Oracle> Policy for GreedyPolicy<O> {
    fn select(
        &mut self,
        available: ArmSet,
        family: &FeasibleFamily,
        rng: &mut dyn RngCore,
    ) -> Result<ArmSet, PolicyError> {
        greedy_step(&self.mu, available, family, &mut self.oracle, rng)
    }

    fn observe(&mut self, _played: ArmSet, _rewards: &[(usize, f64)]) -> Result<(), PolicyError> {
        Ok(())
    }
}

/// Play counts and empirical means of the UCB policy.
#[derive(Debug, Clone, PartialEq)]
pub struct UcbState {
    pub counts: Vec<u64>,
    pub means: Vec<f64>,
    /// The round about to be played, starting at 1.
    pub round: u64,
}

impl UcbState {
    pub fn new(k: usize) -> Self {
        UcbState {
            counts: vec![0; k],
            means: vec![1.0; k],
            round: 1,
        }
    }

    pub fn k(&self) -> usize {
        self.counts.len()
    }

    /// Confidence radius `sqrt(3 ln t / (2 T_i))`, infinite for unplayed arms.
    pub fn radius(&self, i: usize, t: u64) -> f64 {
        confidence_radius(self.counts[i], t)
    }

    pub fn indices(&self, t: u64) -> Vec<f64> {
        (0..self.k()).map(|i| ucb_index(self, i, t)).collect()
    }
}

pub fn confidence_radius(count: u64, t: u64) -> f64 {
    if count == 0 {
        return f64::INFINITY;
    }
    libm::sqrt(3.0 * libm::log(t as f64) / (2.0 * count as f64))
}

/// `min(mean + radius, 1)`; exactly 1 for an arm never played.
pub fn ucb_index(state: &UcbState, i: usize, t: u64) -> f64 {
    ucb_index_at(state.means[i], state.counts[i], libm::log(t as f64))
}

/// The index formula with `ln t` supplied directly.
pub fn ucb_index_at(mean: f64, count: u64, ln_t: f64) -> f64 {
    if count == 0 {
        return 1.0;
    }
    let bonus = libm::sqrt(3.0 * ln_t / (2.0 * count as f64));
    (mean + bonus).min(1.0)
}

pub fn ucb_step<O: Oracle + ?Sized>(
    state: &UcbState,
    available: ArmSet,
    family: &FeasibleFamily,
    oracle: &mut O,
    rng: &mut dyn RngCore,
) -> Result<ArmSet, PolicyError> {
    let indices = state.indices(state.round.max(1));
    Ok(oracle.select(&indices, available, family, rng)?.chosen)
}

/// Folds one round of observations into the state. Rewards are validated
/// before anything is changed.
pub fn ucb_update(
    state: &mut UcbState,
    played: ArmSet,
    rewards: &[(usize, f64)],
) -> Result<(), PolicyError> {
    for &(arm, reward) in rewards {
        if !played.contains(arm) || arm >= state.k() {
            return Err(PolicyError::UnexpectedObservation { arm });
        }
        if !(0.0..=1.0).contains(&reward) {
            return Err(PolicyError::RewardOutOfRange { arm, reward });
        }
    }
    for &(arm, reward) in rewards {
        state.counts[arm] += 1;
        let n = state.counts[arm] as f64;
        state.means[arm] = state.means[arm] * ((n - 1.0) / n) + reward / n;
    }
    state.round += 1;
    Ok(())
}

/// The combinatorial UCB policy: the oracle applied to UCB indices.
#[derive(Debug, Clone)]
pub struct UcbPolicy<O> {
    state: UcbState,
    oracle: O,
}

impl<O: Oracle> UcbPolicy<O> {
    pub fn new(k: usize, oracle: O) -> Self {
        UcbPolicy {
            state: UcbState::new(k),
            oracle,
        }
    }

    pub fn state(&self) -> &UcbState {
        &self.state
    }
}

impl<O: Oracle> Policy for UcbPolicy<O> {
    fn select(
        &mut self,
        available: ArmSet,
        family: &FeasibleFamily,
        rng: &mut dyn RngCore,
    ) -> Result<ArmSet, PolicyError> {
        ucb_step(&self.state, available, family, &mut self.oracle, rng)
    }

    fn observe(&mut self, played: ArmSet, rewards: &[(usize, f64)]) -> Result<(), PolicyError> {
        ucb_update(&mut self.state, played, rewards)
    }
}

/// Random greedy insertion: visit the available arms in a uniformly random
/// order and keep each one that leaves the set feasible.
pub fn random_feasible_step(
    available: ArmSet,
    family: &FeasibleFamily,
    rng: &mut dyn RngCore,
) -> Result<ArmSet, PolicyError> {
    if !family.is_hereditary() {
        return Err(PolicyError::NotHereditary);
    }
    let mut order = available.intersection(ArmSet::full(family.k())).to_vec();
    order.shuffle(rng);
    let mut chosen = ArmSet::EMPTY;
    for i in order {
        if family.is_feasible(chosen.with(i)) {
            chosen.insert(i);
        }
    }
    Ok(chosen)
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RandomFeasiblePolicy;

impl Policy for RandomFeasiblePolicy {
    fn select(
        &mut self,
        available: ArmSet,
        family: &FeasibleFamily,
        rng: &mut dyn RngCore,
    ) -> Result<ArmSet, PolicyError> {
        random_feasible_step(available, family, rng)
    }

    fn observe(&mut self, _played: ArmSet, _rewards: &[(usize, f64)]) -> Result<(), PolicyError> {
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::FamilyKind;
    use crate::oracles::{knapsack_greedy_oracle, BaseOracle};
    use crate::rng_from_seed;
    use proptest::prelude::*;

    fn rank(k: usize, r: usize) -> FeasibleFamily {
        FeasibleFamily::new(k, FamilyKind::UniformMatroid { rank: r }).unwrap()
    }

    #[test]
    fn greedy_examples() {
        let mut rng = rng_from_seed(0);
        let f = rank(2, 1);
        let mut o = BaseOracle::Exact;
        assert_eq!(
            greedy_step(&[0.9, 0.3], ArmSet::full(2), &f, &mut o, &mut rng).unwrap(),
            ArmSet::from([0])
        );
        assert_eq!(
            greedy_step(&[0.9, 0.3], ArmSet::EMPTY, &f, &mut o, &mut rng).unwrap(),
            ArmSet::EMPTY
        );
        let ks = FeasibleFamily::new(
            2,
            FamilyKind::Knapsack {
                weights: vec![1.0, 2.0],
                budget: 2.0,
            },
        )
        .unwrap();
        let mut g = BaseOracle::KnapsackGreedy;
        let got = greedy_step(&[0.5, 0.6], ArmSet::full(2), &ks, &mut g, &mut rng).unwrap();
        assert_eq!(
            got,
            knapsack_greedy_oracle(&[0.5, 0.6], ArmSet::full(2), &ks).unwrap()
        );
        assert_eq!(got, ArmSet::from([1]));
    }

    #[test]
    fn index_examples() {
        let mut s = UcbState::new(1);
        assert_eq!(ucb_index(&s, 0, 5), 1.0);
        s.counts[0] = 6;
        s.means[0] = 0.2;
        assert!((ucb_index_at(0.2, 6, 2.0) - (0.2 + libm::sqrt(0.5))).abs() < 1e-15);
        assert!((ucb_index_at(0.2, 6, 2.0) - 0.907_106_781).abs() < 1e-9);
        assert_eq!(ucb_index_at(0.9, 1, 2.0), 1.0);
        // Round 1 has ln t = 0, so a played arm's index is its mean.
        assert_eq!(ucb_index(&s, 0, 1), 0.2);
    }

    #[test]
    fn update_examples() {
        let mut s = UcbState::new(2);
        ucb_update(&mut s, ArmSet::from([0]), &[(0, 0.4)]).unwrap();
        assert_eq!((s.counts[0], s.means[0]), (1, 0.4));
        ucb_update(&mut s, ArmSet::from([0]), &[(0, 0.8)]).unwrap();
        assert_eq!(s.counts[0], 2);
        assert!((s.means[0] - 0.6).abs() < 1e-15);
        let before = s.clone();
        ucb_update(&mut s, ArmSet::EMPTY, &[]).unwrap();
        assert_eq!(s.counts, before.counts);
        assert_eq!(s.means, before.means);
        assert_eq!(s.round, before.round + 1);
        assert_eq!(
            ucb_update(&mut s, ArmSet::from([1]), &[(1, 1.5)]),
            Err(PolicyError::RewardOutOfRange {
                arm: 1,
                reward: 1.5
            })
        );
        assert_eq!(s.counts[1], 0);
    }

    #[test]
    fn cold_start_uses_tie_break() {
        let mut rng = rng_from_seed(0);
        let s = UcbState::new(3);
        assert_eq!(s.indices(1), vec![1.0; 3]);
        let got = ucb_step(
            &s,
            ArmSet::full(3),
            &rank(3, 2),
            &mut BaseOracle::Exact,
            &mut rng,
        )
        .unwrap();
        assert_eq!(got, ArmSet::from([0, 1]));
        let none = ucb_step(
            &s,
            ArmSet::EMPTY,
            &rank(3, 2),
            &mut BaseOracle::Exact,
            &mut rng,
        )
        .unwrap();
        assert_eq!(none, ArmSet::EMPTY);
    }

    #[test]
    fn random_feasible_examples() {
        let mut rng = rng_from_seed(3);
        assert_eq!(
            random_feasible_step(ArmSet::EMPTY, &rank(3, 1), &mut rng).unwrap(),
            ArmSet::EMPTY
        );
        assert_eq!(
            random_feasible_step(ArmSet::full(4), &rank(4, 4), &mut rng).unwrap(),
            ArmSet::full(4)
        );
        let f = rank(3, 1);
        let mut hits = [0usize; 3];
        let n = 100_000;
        for _ in 0..n {
            let s = random_feasible_step(ArmSet::full(3), &f, &mut rng).unwrap();
            assert_eq!(s.len(), 1);
            hits[s.first().unwrap()] += 1;
        }
        for h in hits {
            assert!((h as f64 / n as f64 - 1.0 / 3.0).abs() < 0.02);
        }
        let edp = FeasibleFamily::new(
            2,
            FamilyKind::EdpPaths {
                edges: vec![(0, 1), (1, 2)],
                pairs: vec![(0, 2)],
            },
        )
        .unwrap();
        assert_eq!(
            random_feasible_step(ArmSet::full(2), &edp, &mut rng),
            Err(PolicyError::NotHereditary)
        );
    }

    proptest! {
        #[test]
        fn running_mean_is_exact(samples in proptest::collection::vec(0.0f64..=1.0, 1..200)) {
            let mut s = UcbState::new(1);
            for (n, &x) in samples.iter().enumerate() {
                let before = s.counts[0];
                ucb_update(&mut s, ArmSet::from([0]), &[(0, x)]).unwrap();
                prop_assert_eq!(s.counts[0], before + 1);
                let mean = samples[..=n].iter().sum::<f64>() / (n + 1) as f64;
                prop_assert!((s.means[0] - mean).abs() <= 1e-9);
                prop_assert!((0.0..=1.0).contains(&s.means[0]));
            }
        }

        #[test]
        fn nice_sampling_dominates(
            mu in proptest::collection::vec(0.0f64..=1.0, 1..6),
            counts in proptest::collection::vec(1u64..500, 6),
            slack in proptest::collection::vec(-1.0f64..=1.0, 6),
            t in 1u64..100_000,
        ) {
            // Empirical means placed anywhere inside their confidence radius.
            let k = mu.len();
            let mut s = UcbState::new(k);
            for i in 0..k {
                s.counts[i] = counts[i];
                s.means[i] = (mu[i] + slack[i] * s.radius(i, t)).clamp(0.0, 1.0);
            }
            for (i, &m) in mu.iter().enumerate() {
                prop_assert!(ucb_index(&s, i, t) >= m - 1e-12);
            }
        }
    }
}
