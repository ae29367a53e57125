//! `(alpha, beta)`-approximation oracles.
//!
//! An oracle receives a nonnegative weight vector and a support set and
//! returns a feasible subset of the support. Weights are true means for the
//! full-information heuristic and UCB indices for the bandit policy.
//!
//! Ties between equal-value sets always resolve to the lexicographically
//! smallest sorted index list, so traces are reproducible.

use alloc::boxed::Box;
use alloc::vec::Vec;
use core::cmp::Ordering;
use rand::{Rng, RngCore};
use thiserror::Error;

use crate::arms::ArmSet;
use crate::model::{FamilyKind, FeasibleFamily};

/// Largest support the exhaustive fallback will enumerate.
pub const EXHAUSTIVE_LIMIT: usize = 20;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("support of {size} arms exceeds the exhaustive limit of {EXHAUSTIVE_LIMIT}")]
    SupportTooLarge { size: usize },
    #[error("oracle requires a {expected} family, got {found}")]
    WrongFamilyKind {
        expected: &'static str,
        found: &'static str,
    },
    #[error("weight vector has length {got}, expected {expected}")]
    WeightLength { got: usize, expected: usize },
    #[error("weights must be finite and nonnegative")]
    BadWeights,
}

/// What an oracle call produced.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleResult {
    pub chosen: ArmSet,
    pub claimed_alpha: f64,
    pub claimed_beta: f64,
    /// `false` when a [`BetaWrapper`] took its failure branch.
    pub succeeded: bool,
}

pub trait Oracle {
    fn alpha(&self) -> f64;

    fn beta(&self) -> f64;

    fn select(
        &mut self,
        weights: &[f64],
        support: ArmSet,
        family: &FeasibleFamily,
        rng: &mut dyn RngCore,
    ) -> Result<OracleResult, OracleError>;
}

impl<O: Oracle + ?Sized> Oracle for Box<O> {
    fn alpha(&self) -> f64 {
        (**self).alpha()
    }

    fn beta(&self) -> f64 {
        (**self).beta()
    }

    fn select(
        &mut self,
        weights: &[f64],
        support: ArmSet,
        family: &FeasibleFamily,
        rng: &mut dyn RngCore,
    ) -> Result<OracleResult, OracleError> {
        (**self).select(weights, support, family, rng)
    }
}

fn check_weights(weights: &[f64], family: &FeasibleFamily) -> Result<(), OracleError> {
    if weights.len() != family.k() {
        return Err(OracleError::WeightLength {
            got: weights.len(),
            expected: family.k(),
        });
    }
    if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(OracleError::BadWeights);
    }
    Ok(())
}

/// `true` if `a` should replace the incumbent `b`.
fn better(a: ArmSet, va: f64, b: ArmSet, vb: f64) -> bool {
    va > vb || (va == vb && a.lex_cmp(b) == Ordering::Less)
}

fn best_of(candidates: impl IntoIterator<Item = ArmSet>, weights: &[f64]) -> Option<ArmSet> {
    let mut best: Option<(ArmSet, f64)> = None;
    for c in candidates {
        let v = c.weight(weights);
        match best {
            Some((b, vb)) if !better(c, v, b, vb) => {}
            _ => best = Some((c, v)),
        }
    }
    best.map(|(s, _)| s)
}

/// Maximum-weight feasible subset of `support` (an `(1, 1)` oracle).
///
/// Structure-specific for matroids, cover/explicit families and paths;
/// branch-and-bound enumeration for knapsack (limited to
/// [`EXHAUSTIVE_LIMIT`] positive-weight arms).
pub fn exact_oracle(
    weights: &[f64],
    support: ArmSet,
    family: &FeasibleFamily,
) -> Result<ArmSet, OracleError> {
    check_weights(weights, family)?;
    let support = support.intersection(ArmSet::full(family.k()));
    // Zero-weight arms never change the value; for hereditary families
    // dropping them keeps every optimum feasible.
    let positive: ArmSet = support.iter().filter(|&i| weights[i] > 0.0).collect();
    match family.kind() {
        FamilyKind::UniformMatroid { rank } => Ok(top_by_weight(positive, *rank, weights)),
        FamilyKind::PartitionMatroid { blocks, ranks } => Ok(blocks
            .iter()
            .zip(ranks)
            .map(|(b, &cap)| top_by_weight(positive.intersection(*b), cap, weights))
            .fold(ArmSet::EMPTY, ArmSet::union)),
        FamilyKind::ExplicitHereditary { maximal: sets } | FamilyKind::Cover { sets } => Ok(
            best_of(sets.iter().map(|s| s.intersection(positive)), weights)
                .unwrap_or(ArmSet::EMPTY),
        ),
        FamilyKind::Knapsack { .. } => branch_and_bound(weights, positive, family),
        FamilyKind::EdpPaths { .. } => {
            Ok(best_of(family.edp_paths_within(support), weights).unwrap_or(ArmSet::EMPTY))
        }
    }
}

/// Top `cap` arms by weight, ties to the smaller index.
fn top_by_weight(arms: ArmSet, cap: usize, weights: &[f64]) -> ArmSet {
    let mut order: Vec<usize> = arms.to_vec();
    order.sort_by(|&a, &b| weights[b].total_cmp(&weights[a]).then(a.cmp(&b)));
    order.into_iter().take(cap).collect()
}

/// Depth-first enumeration in lexicographic order with hereditary pruning.
/// Only strict improvements replace the incumbent, so the first optimum
/// found is the lexicographically smallest one.
fn branch_and_bound(
    weights: &[f64],
    arms: ArmSet,
    family: &FeasibleFamily,
) -> Result<ArmSet, OracleError> {
    let items = arms.to_vec();
    if items.len() > EXHAUSTIVE_LIMIT {
        return Err(OracleError::SupportTooLarge { size: items.len() });
    }
    let mut suffix = alloc::vec![0.0; items.len() + 1];
    for j in (0..items.len()).rev() {
        suffix[j] = suffix[j + 1] + weights[items[j]];
    }
    struct Search<'a> {
        weights: &'a [f64],
        items: &'a [usize],
        suffix: &'a [f64],
        family: &'a FeasibleFamily,
        best: ArmSet,
        best_value: f64,
    }
    impl Search<'_> {
        fn go(&mut self, current: ArmSet, value: f64, from: usize) {
            for j in from..self.items.len() {
                if value + self.suffix[j] + 1e-12 <= self.best_value {
                    return;
                }
                let next = current.with(self.items[j]);
                if !self.family.is_feasible(next) {
                    continue;
                }
                let v = value + self.weights[self.items[j]];
                if v > self.best_value {
                    self.best = next;
                    self.best_value = v;
                }
                self.go(next, v, j + 1);
            }
        }
    }
    let mut s = Search {
        weights,
        items: &items,
        suffix: &suffix,
        family,
        best: ArmSet::EMPTY,
        best_value: 0.0,
    };
    s.go(ArmSet::EMPTY, 0.0, 0);
    Ok(s.best)
}

/// Plain enumeration of every subset of `support`; the reference
/// definition of `OPT` used by regret and gap computations.
pub fn exhaustive_opt(
    weights: &[f64],
    support: ArmSet,
    family: &FeasibleFamily,
) -> Result<ArmSet, OracleError> {
    check_weights(weights, family)?;
    let support = support.intersection(ArmSet::full(family.k()));
    if support.len() > EXHAUSTIVE_LIMIT {
        return Err(OracleError::SupportTooLarge {
            size: support.len(),
        });
    }
    Ok(best_of(
        support.subsets().filter(|s| family.is_feasible(*s)),
        weights,
    )
    .unwrap_or(ArmSet::EMPTY))
}

/// The better of density-greedy packing and the best single item: a
/// `(1/2, 1)` oracle for knapsack families.
pub fn knapsack_greedy_oracle(
    weights: &[f64],
    support: ArmSet,
    family: &FeasibleFamily,
) -> Result<ArmSet, OracleError> {
    let FamilyKind::Knapsack {
        weights: sizes,
        budget,
    } = family.kind()
    else {
        return Err(OracleError::WrongFamilyKind {
            expected: "knapsack",
            found: family.kind().name(),
        });
    };
    check_weights(weights, family)?;
    let items: Vec<usize> = support
        .intersection(ArmSet::full(family.k()))
        .iter()
        .filter(|&i| weights[i] > 0.0 && family.is_feasible(ArmSet::singleton(i)))
        .collect();
    let density = |i: usize| {
        if sizes[i] == 0.0 {
            f64::INFINITY
        } else {
            weights[i] / sizes[i]
        }
    };
    let mut order = items.clone();
    order.sort_by(|&a, &b| density(b).total_cmp(&density(a)).then(a.cmp(&b)));
    let mut packed = ArmSet::EMPTY;
    let mut used = 0.0;
    for i in order {
        if used + sizes[i] <= *budget {
            used += sizes[i];
            packed.insert(i);
        }
    }
    let single = items
        .iter()
        .copied()
        .max_by(|&a, &b| weights[a].total_cmp(&weights[b]).then(b.cmp(&a)))
        .map(ArmSet::singleton)
        .unwrap_or(ArmSet::EMPTY);
    Ok(best_of([packed, single], weights).unwrap_or(ArmSet::EMPTY))
}

/// Edge set of the first source-to-target path found by depth-first search
/// among `support_edges`, or the empty set.
pub fn path_oracle(support_edges: ArmSet, family: &FeasibleFamily) -> Result<ArmSet, OracleError> {
    if !matches!(family.kind(), FamilyKind::EdpPaths { .. }) {
        return Err(OracleError::WrongFamilyKind {
            expected: "edp_paths",
            found: family.kind().name(),
        });
    }
    Ok(family
        .first_edp_path(support_edges)
        .unwrap_or(ArmSet::EMPTY))
}

/// The deterministic oracles.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaseOracle {
    Exact,
    KnapsackGreedy,
    Path,
}

impl BaseOracle {
    pub fn alpha(self) -> f64 {
        match self {
            BaseOracle::Exact | BaseOracle::Path => 1.0,
            BaseOracle::KnapsackGreedy => 0.5,
        }
    }

    pub fn choose(
        self,
        weights: &[f64],
        support: ArmSet,
        family: &FeasibleFamily,
    ) -> Result<ArmSet, OracleError> {
        match self {
            BaseOracle::Exact => exact_oracle(weights, support, family),
            BaseOracle::KnapsackGreedy => knapsack_greedy_oracle(weights, support, family),
            BaseOracle::Path => {
                check_weights(weights, family)?;
                path_oracle(support, family)
            }
        }
    }
}

impl Oracle for BaseOracle {
    fn alpha(&self) -> f64 {
        BaseOracle::alpha(*self)
    }

    fn beta(&self) -> f64 {
        1.0
    }

    fn select(
        &mut self,
        weights: &[f64],
        support: ArmSet,
        family: &FeasibleFamily,
        _rng: &mut dyn RngCore,
    ) -> Result<OracleResult, OracleError> {
        Ok(OracleResult {
            chosen: self.choose(weights, support, family)?,
            claimed_alpha: self.alpha(),
            claimed_beta: 1.0,
            succeeded: true,
        })
    }
}

/// Output of a [`BetaWrapper`] on its failure branch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Fallback {
    #[default]
    Empty,
    /// Lowest-weight feasible singleton in the support (ties to the smaller
    /// index); empty when no singleton is feasible.
    WorstFeasible,
}

/// Calls the inner oracle with probability `beta`, otherwise returns the
/// fallback set. Turns an `(alpha, 1)` oracle into an `(alpha, beta)` one.
///
/// Draws exactly one uniform per call, whatever `beta` is.
#[derive(Debug, Clone)]
pub struct BetaWrapper<O> {
    inner: O,
    beta: f64,
    fallback: Fallback,
}

impl<O: Oracle> BetaWrapper<O> {
    /// `beta` must lie in `(0, 1]`.
    pub fn new(inner: O, beta: f64, fallback: Fallback) -> Option<Self> {
        (beta > 0.0 && beta <= 1.0).then_some(BetaWrapper {
            inner,
            beta,
            fallback,
        })
    }

    pub fn inner(&self) -> &O {
        &self.inner
    }
}

impl<O: Oracle> Oracle for BetaWrapper<O> {
    fn alpha(&self) -> f64 {
        self.inner.alpha()
    }

    fn beta(&self) -> f64 {
        self.beta * self.inner.beta()
    }

    fn select(
        &mut self,
        weights: &[f64],
        support: ArmSet,
        family: &FeasibleFamily,
        rng: &mut dyn RngCore,
    ) -> Result<OracleResult, OracleError> {
        let coin: f64 = rng.random();
        if coin < self.beta {
            let mut r = self.inner.select(weights, support, family, rng)?;
            r.claimed_beta = self.beta();
            return Ok(r);
        }
        check_weights(weights, family)?;
        let chosen = match self.fallback {
            Fallback::Empty => ArmSet::EMPTY,
            Fallback::WorstFeasible => support
                .intersection(ArmSet::full(family.k()))
                .iter()
                .filter(|&i| family.is_feasible(ArmSet::singleton(i)))
                .min_by(|&a, &b| weights[a].total_cmp(&weights[b]).then(a.cmp(&b)))
                .map(ArmSet::singleton)
                .unwrap_or(ArmSet::EMPTY),
        };
        Ok(OracleResult {
            chosen,
            claimed_alpha: self.alpha(),
            claimed_beta: self.beta(),
            succeeded: false,
        })
    }
}

/// Builds a possibly wrapped oracle from its parts; `beta == 1` skips the
/// wrapper entirely.
pub fn build_oracle(
    base: BaseOracle,
    beta: f64,
    fallback: Fallback,
) -> Option<Box<dyn Oracle + Send>> {
    if beta == 1.0 {
        Some(Box::new(base))
    } else {
        BetaWrapper::new(base, beta, fallback).map(|w| Box::new(w) as Box<dyn Oracle + Send>)
    }
}
