//! Hardness-construction instances and their brute-force verifiers: the
//! single-arm Markov chain, the edge-disjoint-paths instance, the
//! maximum-coverage instance and periodic rounding of schedules.

use alloc::vec;
use alloc::vec::Vec;
use rand::{Rng, RngCore};
use thiserror::Error;

use crate::arms::ArmSet;
use crate::baselines::{mdp_value_iteration, BaselineError};
use crate::engine::Trace;
use crate::model::{
    ArmSpec, Atom, BlockingState, FamilyKind, FeasibleFamily, Instance, ModelError,
};
use crate::policies::{Policy, PolicyError};
use crate::rng_from_seed;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GadgetError {
    #[error("invalid gadget parameters: {0}")]
    InvalidGadgetParams(&'static str),
    #[error("precondition violated: {0}")]
    PreconditionViolated(&'static str),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Baseline(#[from] BaselineError),
}

/// Single arm with reward 1 whose delay is `d` with probability `p` and 1
/// otherwise, played with probability `q` whenever available.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McParams {
    pub p: f64,
    pub d: u32,
    pub q: f64,
}

impl McParams {
    pub fn new(p: f64, d: u32, q: f64) -> Result<Self, GadgetError> {
        if !(0.0..=1.0).contains(&p) || !(0.0..=1.0).contains(&q) {
            return Err(GadgetError::InvalidGadgetParams(
                "p and q must lie in [0, 1]",
            ));
        }
        if d < 2 {
            return Err(GadgetError::InvalidGadgetParams(
                "the long delay must be at least 2",
            ));
        }
        Ok(McParams { p, d, q })
    }
}

/// Stationary average reward `q / (1 + p q (d - 1))`.
pub fn mc_avg_reward(params: McParams) -> f64 {
    let McParams { p, d, q } = params;
    q / (1.0 + p * q * (d - 1) as f64)
}

/// Average reward `1 - p` of the player who sees the delay before pulling
/// and pulls only when it is 1.
pub fn mc_clairvoyant_reward(p: f64) -> f64 {
    1.0 - p
}

/// Always-play average over clairvoyant average at `p = 1/2`; `4 / (d + 1)`.
pub fn mc_ratio(d: u32) -> f64 {
    let params = McParams { p: 0.5, d, q: 1.0 };
    mc_avg_reward(params) / mc_clairvoyant_reward(0.5)
}

pub fn mc_instance(p: f64, d: u32) -> Result<Instance, GadgetError> {
    McParams::new(p, d, 1.0)?;
    let atoms = vec![Atom::new(1.0, 1, 1.0 - p), Atom::new(1.0, d, p)];
    let atoms = atoms.into_iter().filter(|a| a.prob > 0.0).collect();
    let family = FeasibleFamily::new(1, FamilyKind::UniformMatroid { rank: 1 })?;
    Ok(Instance::new(vec![ArmSpec::new(0, atoms)?], family)?)
}

/// Plays arm 0 with probability `q` whenever it is available.
#[derive(Debug, Clone, Copy)]
pub struct AlgQ {
    pub q: f64,
}

impl Policy for AlgQ {
    fn select(
        &mut self,
        available: ArmSet,
        _: &FeasibleFamily,
        rng: &mut dyn RngCore,
    ) -> Result<ArmSet, PolicyError> {
        if !available.contains(0) {
            return Ok(ArmSet::EMPTY);
        }
        let u: f64 = rng.random();
        Ok(if u < self.q {
            ArmSet::singleton(0)
        } else {
            ArmSet::EMPTY
        })
    }

    fn observe(&mut self, _: ArmSet, _: &[(usize, f64)]) -> Result<(), PolicyError> {
        Ok(())
    }
}

/// Average reward of the clairvoyant player on the single-arm chain: each
/// round's (reward, delay) is drawn up front and the arm is pulled only
/// when available and the delay is 1.
pub fn simulate_clairvoyant(instance: &Instance, horizon: u64, seed: u64) -> f64 {
    let mut rng = rng_from_seed(seed);
    let arm = &instance.arms()[0];
    let mut state = BlockingState::new(1);
    let mut total = 0.0;
    for _ in 0..horizon {
        let (x, d) = arm.sample(&mut rng);
        let play = state.available().contains(0) && d == 1;
        let played = if play {
            ArmSet::singleton(0)
        } else {
            ArmSet::EMPTY
        };
        if play {
            total += x;
        }
        state
            .advance(played, &[d])
            .expect("clairvoyant plays only available arms");
    }
    total / horizon as f64
}

/// Edge-disjoint-paths instance over an augmented graph.
///
/// Nodes are `0..n` where `n` is one past the largest node named. Pair `i`
/// gets a fresh source `n + i` and an entry edge `(n + i, s_i)`, which is
/// arm `|E| + i` with reward 1; original edges are arms `0..|E|` with
/// reward 0. Every delay equals the number of pairs `m`, and the horizon is
/// `c m`. Feasible sets are single simple paths from a fresh source to its
/// target.
pub fn build_edp_instance(
    edges: &[(usize, usize)],
    pairs: &[(usize, usize)],
    c: u64,
) -> Result<Instance, GadgetError> {
    let m = pairs.len();
    if m == 0 {
        return Err(GadgetError::InvalidGadgetParams(
            "at least one terminal pair is required",
        ));
    }
    if m > edges.len() {
        return Err(GadgetError::InvalidGadgetParams("more pairs than edges"));
    }
    if c == 0 {
        return Err(GadgetError::InvalidGadgetParams(
            "the number of periods must be positive",
        ));
    }
    let n = edges
        .iter()
        .flat_map(|&(u, v)| [u, v])
        .chain(pairs.iter().flat_map(|&(s, t)| [s, t]))
        .max()
        .map_or(0, |x| x + 1);
    let mut all_edges = edges.to_vec();
    all_edges.extend(pairs.iter().enumerate().map(|(i, &(s, _))| (n + i, s)));
    let new_pairs = pairs
        .iter()
        .enumerate()
        .map(|(i, &(_, t))| (n + i, t))
        .collect();
    let k = all_edges.len();
    let family = FeasibleFamily::new(
        k,
        FamilyKind::EdpPaths {
            edges: all_edges,
            pairs: new_pairs,
        },
    )?;
    let arms = (0..k)
        .map(|j| ArmSpec::deterministic(if j >= edges.len() { 1.0 } else { 0.0 }, m as u32))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Instance::new(arms, family)?.with_horizon(c * m as u64))
}

/// Best expected reward over one period (`d` rounds, `d` the common
/// deterministic delay) from the all-available state, by exhaustive search
/// over schedules. Within a period every arm can be played at most once.
pub fn period_optimum(instance: &Instance) -> Result<f64, GadgetError> {
    let d = uniform_delay(instance)?;
    let family = instance.family();
    let mu = instance.mu();
    let playable: Vec<ArmSet> = ArmSet::full(instance.k())
        .subsets()
        .filter(|s| !s.is_empty() && family.is_feasible(*s))
        .collect();
    fn go(rounds: u32, used: ArmSet, playable: &[ArmSet], mu: &[f64]) -> f64 {
        if rounds == 0 {
            return 0.0;
        }
        let mut best = go(rounds - 1, used, playable, mu);
        for &s in playable {
            if s.intersection(used).is_empty() {
                best = best.max(s.weight(mu) + go(rounds - 1, used.union(s), playable, mu));
            }
        }
        best
    }
    Ok(go(d, ArmSet::EMPTY, &playable, &mu))
}

fn uniform_delay(instance: &Instance) -> Result<u32, GadgetError> {
    let mut common = None;
    for arm in instance.arms() {
        let d = match arm.delay_pmf().as_slice() {
            [(d, _)] => *d,
            _ => {
                return Err(GadgetError::PreconditionViolated(
                    "delays must be deterministic",
                ))
            }
        };
        if common.is_some_and(|c| c != d) {
            return Err(GadgetError::PreconditionViolated(
                "delays must all be equal",
            ));
        }
        common = Some(d);
    }
    common.ok_or(GadgetError::PreconditionViolated("instance has no arms"))
}

/// Maximum-coverage instance: one arm per element with reward 1 and delay
/// `l`; a set is playable iff it lies inside one of `sets`. The horizon is
/// `l * periods`.
pub fn build_cover_instance(
    k: usize,
    sets: &[ArmSet],
    l: u32,
    periods: u64,
) -> Result<Instance, GadgetError> {
    if sets.is_empty() {
        return Err(GadgetError::InvalidGadgetParams(
            "at least one set is required",
        ));
    }
    if l == 0 {
        return Err(GadgetError::InvalidGadgetParams("l must be at least 1"));
    }
    if periods == 0 {
        return Err(GadgetError::InvalidGadgetParams(
            "the number of periods must be positive",
        ));
    }
    if k == 0 || sets.iter().any(|s| !s.is_subset(ArmSet::full(k))) {
        return Err(GadgetError::InvalidGadgetParams(
            "sets must lie inside the universe",
        ));
    }
    let family = FeasibleFamily::new(
        k,
        FamilyKind::Cover {
            sets: sets.to_vec(),
        },
    )?;
    let arms = (0..k)
        .map(|_| ArmSpec::deterministic(1.0, l))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Instance::new(arms, family)?.with_horizon(l as u64 * periods))
}

/// Largest union of at most `l` of the sets, by enumeration.
pub fn max_cover(sets: &[ArmSet], l: usize) -> usize {
    fn go(sets: &[ArmSet], left: usize, covered: ArmSet) -> usize {
        match sets.split_first() {
            Some((&s, rest)) if left > 0 => {
                go(rest, left - 1, covered.union(s)).max(go(rest, left, covered))
            }
            _ => covered.len(),
        }
    }
    go(sets, l, ArmSet::EMPTY)
}

pub const COVER_MAX_ARMS: usize = 12;
pub const COVER_MAX_SETS: usize = 8;

/// Checks `(max cover >= f) <=> (Rew* >= (T / l) f)` on a coverage
/// instance built by [`build_cover_instance`].
pub fn verify_cover_reduction(instance: &Instance, f: usize) -> Result<bool, GadgetError> {
    let FamilyKind::Cover { sets } = instance.family().kind() else {
        return Err(GadgetError::PreconditionViolated("expected a cover family"));
    };
    if instance.k() > COVER_MAX_ARMS || sets.len() > COVER_MAX_SETS {
        return Err(GadgetError::PreconditionViolated(
            "instance too large for brute force",
        ));
    }
    let l = uniform_delay(instance)?;
    let horizon = instance
        .horizon()
        .ok_or(GadgetError::PreconditionViolated("instance has no horizon"))?;
    let opt = max_cover(sets, l as usize);
    let rew_star = mdp_value_iteration(instance, horizon)?.rew_star();
    let scaled = horizon as f64 / l as f64 * f as f64;
    Ok((opt >= f) == (rew_star >= scaled - 1e-9))
}

/// Replaces a schedule by its best window of `period` consecutive rounds
/// repeated over the whole horizon. Window value uses the true means of
/// the played sets.
pub fn periodic_rounding(
    trace: &Trace,
    period: u32,
    instance: &Instance,
) -> Result<Vec<ArmSet>, GadgetError> {
    if uniform_delay(instance)? != period {
        return Err(GadgetError::PreconditionViolated(
            "delays must equal the period",
        ));
    }
    let t = trace.records.len();
    let p = period as usize;
    if t == 0 || t % p != 0 {
        return Err(GadgetError::PreconditionViolated(
            "horizon must be a positive multiple of the period",
        ));
    }
    let mu = instance.mu();
    let values: Vec<f64> = trace.records.iter().map(|r| r.played.weight(&mu)).collect();
    let mut window: f64 = values[..p].iter().sum();
    let (mut best, mut best_start) = (window, 0);
    for start in 1..=t - p {
        window += values[start + p - 1] - values[start - 1];
        if window > best {
            best = window;
            best_start = start;
        }
    }
    let pattern = &trace.records[best_start..best_start + p];
    Ok((0..t).map(|j| pattern[j % p].played).collect())
}
