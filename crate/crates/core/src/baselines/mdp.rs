//! Backward induction over blocking-counter states.
//!
//! A state is the vector of remaining-block counters `b_i` in
//! `[0, d_i^max - 1]`, encoded as a mixed-radix integer. Actions are chosen
//! before delays are realized; the next state is the product of the played
//! arms' delay pmfs with every other counter decremented.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use super::BaselineError;
use crate::arms::ArmSet;
use crate::model::Instance;

pub const MDP_MAX_STATES: u64 = 1_000_000;
pub const MDP_MAX_HORIZON: u64 = 100_000;

#[derive(Debug, Clone, PartialEq)]
pub struct MdpSolution {
    /// `values[h]` is the optimal expected reward over `h` rounds from the
    /// all-available state, for `h = 0..=T`.
    pub values: Vec<f64>,
}

impl MdpSolution {
    pub fn rew_star(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PullingRates {
    pub z: Vec<f64>,
    pub rew_star: f64,
    /// `|T sum_i mu_i z_i - Rew*|`.
    pub residual: f64,
}

struct StateSpace {
    k: usize,
    radix: Vec<usize>,
    stride: Vec<usize>,
    size: usize,
    /// Per arm: (counter offset `(d - 1) * stride`, probability).
    delay_moves: Vec<Vec<(usize, f64)>>,
    mu: Vec<f64>,
}

impl StateSpace {
    fn new(instance: &Instance, horizon: u64) -> Result<Self, BaselineError> {
        if horizon == 0 {
            return Err(BaselineError::ZeroHorizon);
        }
        if horizon > MDP_MAX_HORIZON {
            return Err(BaselineError::HorizonTooLarge {
                horizon,
                limit: MDP_MAX_HORIZON,
            });
        }
        let size = instance.state_space_size();
        if size > MDP_MAX_STATES {
            return Err(BaselineError::StateSpaceTooLarge {
                size,
                limit: MDP_MAX_STATES,
            });
        }
        let k = instance.k();
        let radix: Vec<usize> = instance.arms().iter().map(|a| a.d_max() as usize).collect();
        let mut stride = vec![1usize; k];
        for i in 1..k {
            stride[i] = stride[i - 1] * radix[i - 1];
        }
        let delay_moves = instance
            .arms()
            .iter()
            .zip(&stride)
            .map(|(a, &s)| {
                a.delay_pmf()
                    .into_iter()
                    .map(|(d, p)| ((d as usize - 1) * s, p))
                    .collect()
            })
            .collect();
        Ok(StateSpace {
            k,
            radix,
            stride,
            size: size as usize,
            delay_moves,
            mu: instance.mu(),
        })
    }

    fn counter(&self, state: usize, i: usize) -> usize {
        state / self.stride[i] % self.radix[i]
    }

    fn available(&self, state: usize) -> ArmSet {
        (0..self.k)
            .filter(|&i| self.counter(state, i) == 0)
            .collect()
    }

    /// Next state with played counters at 0 and the rest decremented.
    fn decremented(&self, state: usize, played: ArmSet) -> usize {
        let mut next = 0;
        for i in 0..self.k {
            let c = self.counter(state, i);
            if c > 0 && !played.contains(i) {
                next += (c - 1) * self.stride[i];
            }
        }
        next
    }

    /// Expected value of `f` at the successor state.
    fn expect(&self, base: usize, played: &[usize], f: &dyn Fn(usize) -> f64) -> f64 {
        match played.split_first() {
            None => f(base),
            Some((&i, rest)) => self.delay_moves[i]
                .iter()
                .map(|&(off, p)| p * self.expect(base + off, rest, f))
                .sum(),
        }
    }
}

/// Feasible subsets of each availability mask, memoized.
struct ActionCache<'a> {
    instance: &'a Instance,
    cache: BTreeMap<u64, Vec<ArmSet>>,
}

impl<'a> ActionCache<'a> {
    fn new(instance: &'a Instance) -> Self {
        ActionCache {
            instance,
            cache: BTreeMap::new(),
        }
    }

    fn actions(&mut self, available: ArmSet) -> &[ArmSet] {
        let family = self.instance.family();
        self.cache.entry(available.bits()).or_insert_with(|| {
            let mut v: Vec<ArmSet> = available
                .subsets()
                .filter(|s| s.is_empty() || family.is_feasible(*s))
                .collect();
            v.sort_by_key(|s| s.bits());
            v
        })
    }
}

/// Expected-reward and expected-pull arrays for one backward layer.
struct Layer {
    value: Vec<f64>,
    pulls: Option<Vec<Vec<f64>>>,
}

fn backward(
    instance: &Instance,
    horizon: u64,
    track_pulls: bool,
    mut fixed: Option<&mut dyn FnMut(ArmSet) -> ArmSet>,
) -> Result<(Vec<f64>, Option<Vec<f64>>), BaselineError> {
    let sp = StateSpace::new(instance, horizon)?;
    let mut actions = ActionCache::new(instance);
    let new_layer = || Layer {
        value: vec![0.0; sp.size],
        pulls: track_pulls.then(|| vec![vec![0.0; sp.size]; sp.k]),
    };
    let mut prev = new_layer();
    let mut next = new_layer();
    let mut values = Vec::with_capacity(horizon as usize + 1);
    values.push(0.0);
    let mut choice = vec![ArmSet::EMPTY; sp.size];
    let fixed_choice: Vec<ArmSet> = match fixed.as_deref_mut() {
        Some(f) => (0..sp.size).map(|s| f(sp.available(s))).collect(),
        None => Vec::new(),
    };
    for _h in 1..=horizon {
        for s in 0..sp.size {
            let avail = sp.available(s);
            let candidates: &[ArmSet] = if fixed.is_some() {
                core::slice::from_ref(&fixed_choice[s])
            } else {
                actions.actions(avail)
            };
            let mut best = f64::NEG_INFINITY;
            let mut best_a = ArmSet::EMPTY;
            for &a in candidates {
                let played = a.to_vec();
                let base = sp.decremented(s, a);
                let v = a.weight(&sp.mu) + sp.expect(base, &played, &|t| prev.value[t]);
                if v > best {
                    best = v;
                    best_a = a;
                }
            }
            next.value[s] = best;
            choice[s] = best_a;
        }
        if let (Some(np), Some(pp)) = (next.pulls.as_mut(), prev.pulls.as_ref()) {
            for s in 0..sp.size {
                let a = choice[s];
                let played = a.to_vec();
                let base = sp.decremented(s, a);
                for i in 0..sp.k {
                    let here = if a.contains(i) { 1.0 } else { 0.0 };
                    np[i][s] = here + sp.expect(base, &played, &|t| pp[i][t]);
                }
            }
        }
        values.push(next.value[0]);
        core::mem::swap(&mut prev, &mut next);
    }
    let pulls = prev.pulls.map(|p| p.iter().map(|arm| arm[0]).collect());
    Ok((values, pulls))
}

/// Exact optimal expected reward for every horizon up to `horizon`.
pub fn mdp_value_iteration(
    instance: &Instance,
    horizon: u64,
) -> Result<MdpSolution, BaselineError> {
    let (values, _) = backward(instance, horizon, false, None)?;
    Ok(MdpSolution { values })
}

/// Expected fraction of rounds each arm is played under the optimal policy
/// (ties between actions go to the smallest bitmask).
///
/// Expected pull counts are propagated alongside the values, which is the
/// occupancy measure of the optimal policy summed over rounds.
pub fn mdp_pulling_rates(instance: &Instance, horizon: u64) -> Result<PullingRates, BaselineError> {
    let (values, pulls) = backward(instance, horizon, true, None)?;
    let rew_star = *values.last().unwrap_or(&0.0);
    let t = horizon as f64;
    let z: Vec<f64> = pulls
        .unwrap_or_default()
        .into_iter()
        .map(|n| n / t)
        .collect();
    let mu = instance.mu();
    let identity: f64 = t * z.iter().zip(&mu).map(|(z, m)| z * m).sum::<f64>();
    let residual = (identity - rew_star).abs();
    if residual > 1e-9 * rew_star.abs().max(1.0) {
        return Err(BaselineError::RateIdentity { residual });
    }
    Ok(PullingRates {
        z,
        rew_star,
        residual,
    })
}

/// Exact expected reward of a stationary policy that maps availability sets
/// to played sets, for every horizon up to `horizon`.
pub fn evaluate_stationary(
    instance: &Instance,
    horizon: u64,
    mut policy: impl FnMut(ArmSet) -> ArmSet,
) -> Result<Vec<f64>, BaselineError> {
    let (values, _) = backward(instance, horizon, false, Some(&mut policy))?;
    Ok(values)
}
