//! Instances, feasibility families and blocking dynamics.

use alloc::vec;
use alloc::vec::Vec;
use rand::{Rng, RngCore};
use thiserror::Error;

use crate::arms::{ArmSet, MAX_ARMS};

const PMF_TOLERANCE: f64 = 1e-12;
const KNAPSACK_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("arm {arm}: joint pmf is empty")]
    EmptyPmf { arm: usize },
    #[error("arm {arm}: probability {prob} is negative or not finite")]
    BadProbability { arm: usize, prob: f64 },
    #[error("arm {arm}: probabilities sum to {sum}, expected 1")]
    ProbabilitySum { arm: usize, sum: f64 },
    #[error("arm {arm}: reward {reward} outside [0, 1]")]
    RewardOutOfRange { arm: usize, reward: f64 },
    #[error("arm {arm}: delay must be an integer >= 1")]
    BadDelay { arm: usize },
    #[error("instance has {k} arms; at most {MAX_ARMS} are supported")]
    TooManyArms { k: usize },
    #[error("instance has no arms")]
    NoArms,
    #[error("family is declared over {family} arms but the instance has {arms}")]
    ArmCountMismatch { family: usize, arms: usize },
    #[error("invalid family: {0}")]
    InvalidFamily(&'static str),
    #[error("arm {arm} played while blocked")]
    PlayedWhileBlocked { arm: usize },
    #[error("arm {arm}: missing or invalid realized delay")]
    MissingDelay { arm: usize },
}

/// One support point of an arm's joint reward/delay distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom {
    pub reward: f64,
    pub delay: u32,
    pub prob: f64,
}

impl Atom {
    pub fn new(reward: f64, delay: u32, prob: f64) -> Self {
        Atom {
            reward,
            delay,
            prob,
        }
    }
}

/// Finite joint distribution over `(reward, delay)` for one arm.
///
/// Reward and delay may be correlated; the pmf lists joint atoms.
#[derive(Debug, Clone, PartialEq)]
pub struct ArmSpec {
    atoms: Vec<Atom>,
    mu: f64,
    d_mean: f64,
    d_max: u32,
}

impl ArmSpec {
    /// Validates the atoms. `arm` is only used in error messages.
    pub fn new(arm: usize, atoms: Vec<Atom>) -> Result<Self, ModelError> {
        if atoms.is_empty() {
            return Err(ModelError::EmptyPmf { arm });
        }
        let mut sum = 0.0;
        for a in &atoms {
            if !(a.prob.is_finite() && a.prob >= 0.0) {
                return Err(ModelError::BadProbability { arm, prob: a.prob });
            }
            if !(0.0..=1.0).contains(&a.reward) {
                return Err(ModelError::RewardOutOfRange {
                    arm,
                    reward: a.reward,
                });
            }
            if a.delay == 0 {
                return Err(ModelError::BadDelay { arm });
            }
            sum += a.prob;
        }
        if (sum - 1.0).abs() > PMF_TOLERANCE {
            return Err(ModelError::ProbabilitySum { arm, sum });
        }
        let mu = atoms.iter().map(|a| a.prob * a.reward).sum();
        let d_mean = atoms.iter().map(|a| a.prob * f64::from(a.delay)).sum();
        let d_max = atoms
            .iter()
            .filter(|a| a.prob > 0.0)
            .map(|a| a.delay)
            .max()
            .unwrap_or(1);
        Ok(ArmSpec {
            atoms,
            mu,
            d_mean,
            d_max,
        })
    }

    pub fn deterministic(reward: f64, delay: u32) -> Result<Self, ModelError> {
        ArmSpec::new(0, vec![Atom::new(reward, delay, 1.0)])
    }

    /// Bernoulli(`p`) reward with a fixed delay.
    pub fn bernoulli(p: f64, delay: u32) -> Result<Self, ModelError> {
        ArmSpec::new(
            0,
            vec![Atom::new(1.0, delay, p), Atom::new(0.0, delay, 1.0 - p)],
        )
    }

    /// Product of independent reward and delay marginals.
    pub fn independent(rewards: &[(f64, f64)], delays: &[(u32, f64)]) -> Result<Self, ModelError> {
        let atoms = rewards
            .iter()
            .flat_map(|&(r, pr)| delays.iter().map(move |&(d, pd)| Atom::new(r, d, pr * pd)))
            .collect();
        ArmSpec::new(0, atoms)
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    /// Mean reward.
    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// Mean delay.
    pub fn d_mean(&self) -> f64 {
        self.d_mean
    }

    /// Largest delay with positive probability.
    pub fn d_max(&self) -> u32 {
        self.d_max
    }

    /// Marginal delay pmf, ascending by delay, zero-probability atoms dropped.
    pub fn delay_pmf(&self) -> Vec<(u32, f64)> {
        let mut out: Vec<(u32, f64)> = Vec::new();
        for a in self.atoms.iter().filter(|a| a.prob > 0.0) {
            match out.binary_search_by_key(&a.delay, |&(d, _)| d) {
                Ok(pos) => out[pos].1 += a.prob,
                Err(pos) => out.insert(pos, (a.delay, a.prob)),
            }
        }
        out
    }

    /// `Some((reward, delay))` when the pmf has a single positive atom.
    pub fn as_deterministic(&self) -> Option<(f64, u32)> {
        let mut positive = self.atoms.iter().filter(|a| a.prob > 0.0);
        let a = positive.next()?;
        positive.next().is_none().then_some((a.reward, a.delay))
    }

    /// Draws one joint `(reward, delay)` sample. Consumes one uniform.
    pub fn sample<R: RngCore + ?Sized>(&self, rng: &mut R) -> (f64, u32) {
        let u: f64 = rng.random();
        let mut cum = 0.0;
        let mut last = None;
        for a in &self.atoms {
            if a.prob <= 0.0 {
                continue;
            }
            cum += a.prob;
            last = Some(a);
            if u < cum {
                return (a.reward, a.delay);
            }
        }
        let a = last.expect("validated pmf has a positive atom");
        (a.reward, a.delay)
    }
}

/// Convenience wrapper for [`ArmSpec::sample`].
pub fn sample_arm<R: RngCore + ?Sized>(arm: &ArmSpec, rng: &mut R) -> (f64, u32) {
    arm.sample(rng)
}

#[derive(Debug, Clone, PartialEq)]
pub enum FamilyKind {
    /// Sets of cardinality at most `rank`.
    UniformMatroid { rank: usize },
    /// `blocks` partition the arms; at most `ranks[b]` arms from block `b`.
    PartitionMatroid {
        blocks: Vec<ArmSet>,
        ranks: Vec<usize>,
    },
    /// Total item weight at most `budget`.
    Knapsack { weights: Vec<f64>, budget: f64 },
    /// Subsets of the listed maximal sets.
    ExplicitHereditary { maximal: Vec<ArmSet> },
    /// Subsets of some `S_j` (the max-cover gadget family).
    Cover { sets: Vec<ArmSet> },
    /// Arm `e` is directed edge `edges[e] = (u, v)`; a set is feasible iff
    /// its edges form one simple path from `pairs[i].0` to `pairs[i].1` for
    /// exactly one `i`. Not hereditary.
    EdpPaths {
        edges: Vec<(usize, usize)>,
        pairs: Vec<(usize, usize)>,
    },
}

impl FamilyKind {
    pub fn name(&self) -> &'static str {
        match self {
            FamilyKind::UniformMatroid { .. } => "uniform_matroid",
            FamilyKind::PartitionMatroid { .. } => "partition_matroid",
            FamilyKind::Knapsack { .. } => "knapsack",
            FamilyKind::ExplicitHereditary { .. } => "explicit_hereditary",
            FamilyKind::Cover { .. } => "cover",
            FamilyKind::EdpPaths { .. } => "edp_paths",
        }
    }
}

/// A family of playable arm subsets together with its structural
/// parameters: `r` is the largest feasible cardinality.
#[derive(Debug, Clone, PartialEq)]
pub struct FeasibleFamily {
    kind: FamilyKind,
    k: usize,
    r: usize,
    hereditary: bool,
}

impl FeasibleFamily {
    pub fn new(k: usize, kind: FamilyKind) -> Result<Self, ModelError> {
        if k > MAX_ARMS {
            return Err(ModelError::TooManyArms { k });
        }
        let all = ArmSet::full(k);
        match &kind {
            FamilyKind::UniformMatroid { .. } => {}
            FamilyKind::PartitionMatroid { blocks, ranks } => {
                if blocks.len() != ranks.len() {
                    return Err(ModelError::InvalidFamily(
                        "partition blocks and ranks differ in length",
                    ));
                }
                let mut seen = ArmSet::EMPTY;
                for b in blocks {
                    if !b.is_subset(all) {
                        return Err(ModelError::InvalidFamily(
                            "partition block references an unknown arm",
                        ));
                    }
                    if !seen.intersection(*b).is_empty() {
                        return Err(ModelError::InvalidFamily("partition blocks overlap"));
                    }
                    seen = seen.union(*b);
                }
                if seen != all {
                    return Err(ModelError::InvalidFamily(
                        "partition blocks do not cover every arm",
                    ));
                }
            }
            FamilyKind::Knapsack { weights, budget } => {
                if weights.len() != k {
                    return Err(ModelError::InvalidFamily(
                        "knapsack needs one weight per arm",
                    ));
                }
                if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
                    return Err(ModelError::InvalidFamily(
                        "knapsack weights must be finite and nonnegative",
                    ));
                }
                if !(budget.is_finite() && *budget >= 0.0) {
                    return Err(ModelError::InvalidFamily(
                        "knapsack budget must be finite and nonnegative",
                    ));
                }
            }
            FamilyKind::ExplicitHereditary { maximal: sets } | FamilyKind::Cover { sets } => {
                if sets.iter().any(|s| !s.is_subset(all)) {
                    return Err(ModelError::InvalidFamily(
                        "listed set references an unknown arm",
                    ));
                }
            }
            FamilyKind::EdpPaths { edges, pairs } => {
                if edges.len() != k {
                    return Err(ModelError::InvalidFamily(
                        "edp family needs one edge per arm",
                    ));
                }
                if pairs.is_empty() {
                    return Err(ModelError::InvalidFamily(
                        "edp family needs at least one terminal pair",
                    ));
                }
                if edges.iter().any(|(u, v)| u == v) {
                    return Err(ModelError::InvalidFamily("self-loop edges are not allowed"));
                }
            }
        }
        let hereditary = !matches!(kind, FamilyKind::EdpPaths { .. });
        let mut family = FeasibleFamily {
            kind,
            k,
            r: 0,
            hereditary,
        };
        family.r = family.compute_rank();
        Ok(family)
    }

    pub fn kind(&self) -> &FamilyKind {
        &self.kind
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Maximum feasible cardinality.
    pub fn r(&self) -> usize {
        self.r
    }

    pub fn is_hereditary(&self) -> bool {
        self.hereditary
    }

    /// Exact membership test.
    pub fn is_feasible(&self, s: ArmSet) -> bool {
        if !s.is_subset(ArmSet::full(self.k)) {
            return false;
        }
        match &self.kind {
            FamilyKind::UniformMatroid { rank } => s.len() <= *rank,
            FamilyKind::PartitionMatroid { blocks, ranks } => blocks
                .iter()
                .zip(ranks)
                .all(|(b, &cap)| s.intersection(*b).len() <= cap),
            FamilyKind::Knapsack { weights, budget } => {
                s.weight(weights) <= budget + KNAPSACK_SLACK
            }
            FamilyKind::ExplicitHereditary { maximal: sets } | FamilyKind::Cover { sets } => {
                s.is_empty() || sets.iter().any(|t| s.is_subset(*t))
            }
            FamilyKind::EdpPaths { edges, pairs } => match path_endpoints(edges, s) {
                Some((from, to)) => pairs.iter().filter(|&&p| p == (from, to)).count() == 1,
                None => false,
            },
        }
    }

    fn compute_rank(&self) -> usize {
        match &self.kind {
            FamilyKind::UniformMatroid { rank } => (*rank).min(self.k),
            FamilyKind::PartitionMatroid { blocks, ranks } => blocks
                .iter()
                .zip(ranks)
                .map(|(b, &cap)| cap.min(b.len()))
                .sum(),
            FamilyKind::Knapsack { weights, budget } => {
                let mut w = weights.clone();
                w.sort_by(f64::total_cmp);
                let mut total = 0.0;
                let mut n = 0;
                for x in w {
                    total += x;
                    if total > budget + KNAPSACK_SLACK {
                        break;
                    }
                    n += 1;
                }
                n
            }
            FamilyKind::ExplicitHereditary { maximal: sets } | FamilyKind::Cover { sets } => {
                sets.iter().map(|s| s.len()).max().unwrap_or(0)
            }
            FamilyKind::EdpPaths { .. } => self
                .edp_paths_within(ArmSet::full(self.k))
                .into_iter()
                .map(|p| p.len())
                .max()
                .unwrap_or(0),
        }
    }

    /// Every feasible set of an `edp_paths` family contained in `support`,
    /// in discovery order (pairs in order, DFS over edges by index).
    /// Empty for other kinds.
    pub fn edp_paths_within(&self, support: ArmSet) -> Vec<ArmSet> {
        let FamilyKind::EdpPaths { edges, pairs } = &self.kind else {
            return Vec::new();
        };
        let mut out = Vec::new();
        for &(src, dst) in pairs {
            let mut visit = PathSearch {
                edges,
                support,
                dst,
                visited_nodes: vec![src],
                used: ArmSet::EMPTY,
                out: &mut out,
                stop_at_first: false,
            };
            visit.dfs(src);
        }
        out.retain(|p| self.is_feasible(*p));
        out.sort_by_key(|p| p.bits());
        out.dedup();
        out
    }

    /// First feasible path found by DFS, pairs tried in order.
    pub fn first_edp_path(&self, support: ArmSet) -> Option<ArmSet> {
        let FamilyKind::EdpPaths { edges, pairs } = &self.kind else {
            return None;
        };
        for &(src, dst) in pairs {
            let mut found = Vec::new();
            let mut visit = PathSearch {
                edges,
                support,
                dst,
                visited_nodes: vec![src],
                used: ArmSet::EMPTY,
                out: &mut found,
                stop_at_first: true,
            };
            visit.dfs(src);
            // Every src->dst simple path shares the pair, so if the first one
            // is infeasible (duplicate pair) all of them are.
            if let Some(p) = found.pop().filter(|p| self.is_feasible(*p)) {
                return Some(p);
            }
        }
        None
    }
}

struct PathSearch<'a> {
    edges: &'a [(usize, usize)],
    support: ArmSet,
    dst: usize,
    visited_nodes: Vec<usize>,
    used: ArmSet,
    out: &'a mut Vec<ArmSet>,
    stop_at_first: bool,
}

impl PathSearch<'_> {
    fn dfs(&mut self, node: usize) -> bool {
        if node == self.dst && !self.used.is_empty() {
            self.out.push(self.used);
            return self.stop_at_first;
        }
        for e in self.support.iter() {
            let (u, v) = self.edges[e];
            if u != node || self.visited_nodes.contains(&v) {
                continue;
            }
            self.visited_nodes.push(v);
            self.used.insert(e);
            let stop = self.dfs(v);
            self.used.remove(e);
            self.visited_nodes.pop();
            if stop {
                return true;
            }
        }
        false
    }
}

/// If the edges in `s` form exactly one simple directed path, its endpoints.
fn path_endpoints(edges: &[(usize, usize)], s: ArmSet) -> Option<(usize, usize)> {
    if s.is_empty() {
        return None;
    }
    let chosen: Vec<(usize, usize)> = s.iter().map(|e| edges[e]).collect();
    let out_of = |n: usize| chosen.iter().filter(|(u, _)| *u == n).count();
    let in_of = |n: usize| chosen.iter().filter(|(_, v)| *v == n).count();
    let mut start = None;
    for &(u, v) in &chosen {
        for n in [u, v] {
            let (o, i) = (out_of(n), in_of(n));
            if o > 1 || i > 1 {
                return None;
            }
            if o == 1 && i == 0 {
                match start {
                    None => start = Some(n),
                    Some(x) if x == n => {}
                    Some(_) => return None,
                }
            }
        }
    }
    let start = start?;
    let mut node = start;
    let mut steps = 0;
    while let Some(&(_, v)) = chosen.iter().find(|(u, _)| *u == node) {
        node = v;
        steps += 1;
        if steps > chosen.len() {
            return None;
        }
    }
    (steps == chosen.len()).then_some((start, node))
}

/// Arms, their feasibility family and optional horizon metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    arms: Vec<ArmSpec>,
    family: FeasibleFamily,
    d_max: u32,
    horizon: Option<u64>,
}

impl Instance {
    pub fn new(arms: Vec<ArmSpec>, family: FeasibleFamily) -> Result<Self, ModelError> {
        if arms.is_empty() {
            return Err(ModelError::NoArms);
        }
        if arms.len() > MAX_ARMS {
            return Err(ModelError::TooManyArms { k: arms.len() });
        }
        if family.k() != arms.len() {
            return Err(ModelError::ArmCountMismatch {
                family: family.k(),
                arms: arms.len(),
            });
        }
        let d_max = arms.iter().map(ArmSpec::d_max).max().unwrap_or(1);
        Ok(Instance {
            arms,
            family,
            d_max,
            horizon: None,
        })
    }

    /// Attaches horizon metadata (gadgets use it; policies never read it).
    pub fn with_horizon(mut self, horizon: u64) -> Self {
        self.horizon = Some(horizon);
        self
    }

    pub fn arms(&self) -> &[ArmSpec] {
        &self.arms
    }

    pub fn family(&self) -> &FeasibleFamily {
        &self.family
    }

    pub fn k(&self) -> usize {
        self.arms.len()
    }

    pub fn d_max(&self) -> u32 {
        self.d_max
    }

    pub fn horizon(&self) -> Option<u64> {
        self.horizon
    }

    /// Mean reward vector.
    pub fn mu(&self) -> Vec<f64> {
        self.arms.iter().map(ArmSpec::mu).collect()
    }

    /// Product of per-arm maximum delays: the blocking state-space size.
    /// Saturates at `u64::MAX`.
    pub fn state_space_size(&self) -> u64 {
        self.arms
            .iter()
            .fold(1u64, |acc, a| acc.saturating_mul(u64::from(a.d_max())))
    }

    /// FNV-1a digest of the arm pmfs and family, stable across platforms.
    pub fn digest(&self) -> u64 {
        let mut h = Fnv::default();
        for a in &self.arms {
            h.write_u64(a.atoms.len() as u64);
            for at in &a.atoms {
                h.write_u64(at.reward.to_bits());
                h.write_u64(u64::from(at.delay));
                h.write_u64(at.prob.to_bits());
            }
        }
        h.write(self.family.kind.name().as_bytes());
        h.write_u64(self.family.k as u64);
        match &self.family.kind {
            FamilyKind::UniformMatroid { rank } => h.write_u64(*rank as u64),
            FamilyKind::PartitionMatroid { blocks, ranks } => {
                for (b, r) in blocks.iter().zip(ranks) {
                    h.write_u64(b.bits());
                    h.write_u64(*r as u64);
                }
            }
            FamilyKind::Knapsack { weights, budget } => {
                for w in weights {
                    h.write_u64(w.to_bits());
                }
                h.write_u64(budget.to_bits());
            }
            FamilyKind::ExplicitHereditary { maximal: sets } | FamilyKind::Cover { sets } => {
                for s in sets {
                    h.write_u64(s.bits());
                }
            }
            FamilyKind::EdpPaths { edges, pairs } => {
                for (u, v) in edges.iter().chain(pairs) {
                    h.write_u64(*u as u64);
                    h.write_u64(*v as u64);
                }
            }
        }
        h.0
    }
}

struct Fnv(u64);

impl Default for Fnv {
    fn default() -> Self {
        Fnv(0xcbf2_9ce4_8422_2325)
    }
}

impl Fnv {
    fn write(&mut self, bytes: &[u8]) {
        for b in bytes {
            self.0 ^= u64::from(*b);
            self.0 = self.0.wrapping_mul(0x0100_0000_01b3);
        }
    }

    fn write_u64(&mut self, x: u64) {
        self.write(&x.to_le_bytes());
    }
}

/// Remaining blocked rounds per arm. Arm `i` is available iff its counter is 0.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BlockingState {
    counters: Vec<u32>,
}

impl BlockingState {
    /// Everything available.
    pub fn new(k: usize) -> Self {
        BlockingState {
            counters: vec![0; k],
        }
    }

    pub fn from_counters(counters: Vec<u32>) -> Self {
        BlockingState { counters }
    }

    pub fn counters(&self) -> &[u32] {
        &self.counters
    }

    /// `{i : b_i = 0}`.
    pub fn available(&self) -> ArmSet {
        self.counters
            .iter()
            .enumerate()
            .filter(|(_, &b)| b == 0)
            .map(|(i, _)| i)
            .collect()
    }

    /// Ends a round: played arm `i` gets `D_i - 1`, every other counter
    /// decrements (saturating at 0). `delays[i]` is read for played arms only.
    pub fn advance(&mut self, played: ArmSet, delays: &[u32]) -> Result<(), ModelError> {
        if let Some(arm) = played
            .iter()
            .find(|&i| i >= self.counters.len() || self.counters[i] > 0)
        {
            return Err(ModelError::PlayedWhileBlocked { arm });
        }
        for i in played.iter() {
            if delays.get(i).copied().unwrap_or(0) == 0 {
                return Err(ModelError::MissingDelay { arm: i });
            }
        }
        for (i, b) in self.counters.iter_mut().enumerate() {
            *b = if played.contains(i) {
                delays[i] - 1
            } else {
                b.saturating_sub(1)
            };
        }
        Ok(())
    }
}

/// Functional form of [`BlockingState::available`].
pub fn available_arms(state: &BlockingState) -> ArmSet {
    state.available()
}

/// Functional form of [`BlockingState::advance`].
pub fn advance(
    state: &BlockingState,
    played: ArmSet,
    delays: &[u32],
) -> Result<BlockingState, ModelError> {
    let mut next = state.clone();
    next.advance(played, delays)?;
    Ok(next)
}
