//! Seeded simulation loop, traces, instantaneous regret and Monte-Carlo
//! aggregation.
//!
//! Randomness within a round is drawn in a fixed order: whatever the policy
//! (and its oracle) consumes first, then one joint (reward, delay) sample per
//! played arm in ascending arm order.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use rand::RngCore;
use thiserror::Error;

use crate::arms::ArmSet;
use crate::model::{BlockingState, FeasibleFamily, Instance, ModelError};
use crate::oracles::{exhaustive_opt, OracleError};
use crate::policies::{Policy, PolicyError};
use crate::rng_from_seed;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error("horizon must be at least 1")]
    ZeroHorizon,
    #[error("at least one run is required")]
    ZeroRuns,
    #[error("round {t}: played set {played:?} is not a feasible subset of the available set {available:?}")]
    OracleInfeasible {
        t: u64,
        played: ArmSet,
        available: ArmSet,
    },
    #[error("round {t}: {source}")]
    Policy { t: u64, source: PolicyError },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error("trace has {got} rounds but the schedule needs {expected}")]
    LengthMismatch { got: usize, expected: usize },
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RoundRecord {
    pub t: u64,
    pub available: ArmSet,
    pub played: ArmSet,
    /// (arm, reward) for each played arm, ascending.
    pub rewards: Vec<(usize, f64)>,
    /// (arm, delay) for each played arm, ascending.
    pub delays: Vec<(usize, u32)>,
    pub round_reward: f64,
    pub cum_reward: f64,
    pub gamma: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub records: Vec<RoundRecord>,
    pub seed: u64,
    pub instance_digest: u64,
}

impl Trace {
    pub fn total_reward(&self) -> f64 {
        self.records.last().map_or(0.0, |r| r.cum_reward)
    }

    pub fn played_sets(&self) -> Vec<ArmSet> {
        self.records.iter().map(|r| r.played).collect()
    }

    /// Sum of the recorded `gamma` values; `None` if any round lacks one.
    pub fn total_gamma(&self) -> Option<f64> {
        self.records.iter().map(|r| r.gamma).sum()
    }
}

/// Streaming simulation: calls `observer` once per round with a record
/// whose buffers are reused between rounds. Returns the total reward.
pub fn run_episode_with<P, F>(
    instance: &Instance,
    policy: &mut P,
    horizon: u64,
    rng: &mut dyn RngCore,
    mut observer: F,
) -> Result<f64, EngineError>
where
    P: Policy + ?Sized,
    F: FnMut(&RoundRecord) -> Result<(), EngineError>,
{
    if horizon == 0 {
        return Err(EngineError::ZeroHorizon);
    }
    let k = instance.k();
    let family = instance.family();
    let mut state = BlockingState::new(k);
    let mut delays = vec![0u32; k];
    let mut rec = RoundRecord::default();
    for t in 1..=horizon {
        let available = state.available();
        let played = policy
            .select(available, family, rng)
            .map_err(|source| EngineError::Policy { t, source })?;
        if !legal(played, available, family) {
            return Err(EngineError::OracleInfeasible {
                t,
                played,
                available,
            });
        }
        rec.t = t;
        rec.available = available;
        rec.played = played;
        rec.rewards.clear();
        rec.delays.clear();
        rec.round_reward = 0.0;
        for i in played.iter() {
            let (x, d) = instance.arms()[i].sample(rng);
            delays[i] = d;
            rec.rewards.push((i, x));
            rec.delays.push((i, d));
            rec.round_reward += x;
        }
        rec.cum_reward += rec.round_reward;
        state.advance(played, &delays)?;
        policy
            .observe(played, &rec.rewards)
            .map_err(|source| EngineError::Policy { t, source })?;
        observer(&rec)?;
    }
    Ok(rec.cum_reward)
}

/// The empty set is always a legal play, even for non-hereditary families.
fn legal(played: ArmSet, available: ArmSet, family: &FeasibleFamily) -> bool {
    played.is_empty() || (played.is_subset(available) && family.is_feasible(played))
}

/// Runs one episode and keeps every round.
pub fn run_episode<P: Policy + ?Sized>(
    instance: &Instance,
    policy: &mut P,
    horizon: u64,
    seed: u64,
) -> Result<Trace, EngineError> {
    let mut rng = rng_from_seed(seed);
    let mut records = Vec::with_capacity(horizon.min(1 << 20) as usize);
    run_episode_with(instance, policy, horizon, &mut rng, |r| {
        records.push(r.clone());
        Ok(())
    })?;
    Ok(Trace {
        records,
        seed,
        instance_digest: instance.digest(),
    })
}

/// Computes `Gamma_t = alpha beta mu(OPT(F_t)) - mu(A_t)` with true means,
/// caching the optimum per availability set.
#[derive(Debug, Clone)]
pub struct RegretMeter {
    mu: Vec<f64>,
    family: FeasibleFamily,
    scale: f64,
    opt: BTreeMap<u64, f64>,
}

impl RegretMeter {
    pub fn new(instance: &Instance, alpha: f64, beta: f64) -> Self {
        RegretMeter {
            mu: instance.mu(),
            family: instance.family().clone(),
            scale: alpha * beta,
            opt: BTreeMap::new(),
        }
    }

    /// `mu(OPT(available))` by exhaustive enumeration.
    pub fn opt_value(&mut self, available: ArmSet) -> Result<f64, OracleError> {
        if let Some(v) = self.opt.get(&available.bits()) {
            return Ok(*v);
        }
        let v = exhaustive_opt(&self.mu, available, &self.family)?.weight(&self.mu);
        self.opt.insert(available.bits(), v);
        Ok(v)
    }

    pub fn gamma(&mut self, available: ArmSet, played: ArmSet) -> Result<f64, OracleError> {
        Ok(self.scale * self.opt_value(available)? - played.weight(&self.mu))
    }
}

pub fn instantaneous_regret_series(
    trace: &Trace,
    instance: &Instance,
    alpha: f64,
    beta: f64,
) -> Result<Vec<f64>, OracleError> {
    let mut meter = RegretMeter::new(instance, alpha, beta);
    trace
        .records
        .iter()
        .map(|r| meter.gamma(r.available, r.played))
        .collect()
}

/// Fills in the `gamma` field of every record.
pub fn attach_gamma(
    trace: &mut Trace,
    instance: &Instance,
    alpha: f64,
    beta: f64,
) -> Result<(), OracleError> {
    let gammas = instantaneous_regret_series(trace, instance, alpha, beta)?;
    for (r, g) in trace.records.iter_mut().zip(gammas) {
        r.gamma = Some(g);
    }
    Ok(())
}

/// What one Monte-Carlo run contributes to the aggregate.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub seed: u64,
    pub cum_reward: Vec<f64>,
    pub total_gamma: Option<f64>,
}

/// Runs one episode keeping only the cumulative-reward curve and, when
/// `regret` is given, the summed instantaneous regret.
pub fn run_outcome<P: Policy + ?Sized>(
    instance: &Instance,
    policy: &mut P,
    horizon: u64,
    seed: u64,
    mut regret: Option<&mut RegretMeter>,
) -> Result<RunOutcome, EngineError> {
    let mut rng = rng_from_seed(seed);
    let mut curve = Vec::with_capacity(horizon.min(1 << 20) as usize);
    let mut gamma = 0.0;
    run_episode_with(instance, policy, horizon, &mut rng, |r| {
        curve.push(r.cum_reward);
        if let Some(m) = regret.as_deref_mut() {
            gamma += m.gamma(r.available, r.played)?;
        }
        Ok(())
    })?;
    Ok(RunOutcome {
        seed,
        cum_reward: curve,
        total_gamma: regret.map(|_| gamma),
    })
}

/// Per-round means and standard errors across runs.
#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloSummary {
    pub n_runs: u64,
    pub mean_cum_reward: Vec<f64>,
    pub se_cum_reward: Vec<f64>,
    pub mean_total_gamma: Option<f64>,
    pub se_total_gamma: Option<f64>,
    pub total_rewards: Vec<f64>,
}

/// Welford running mean and squared-deviation sum.
#[derive(Debug, Clone, Copy, Default)]
struct Welford {
    mean: f64,
    m2: f64,
}

impl Welford {
    fn push(&mut self, n: u64, x: f64) {
        let delta = x - self.mean;
        self.mean += delta / n as f64;
        self.m2 += delta * (x - self.mean);
    }

    fn se(&self, n: u64) -> f64 {
        if n < 2 {
            return 0.0;
        }
        libm::sqrt(self.m2.max(0.0) / (n - 1) as f64 / n as f64)
    }
}

/// Order-sensitive accumulator; feeding outcomes in seed order gives the
/// same floating-point result however the runs were scheduled.
#[derive(Debug, Clone, Default)]
pub struct MonteCarloAccumulator {
    n: u64,
    curve: Vec<Welford>,
    gamma: Welford,
    has_gamma: bool,
    totals: Vec<f64>,
}

impl MonteCarloAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, run: &RunOutcome) {
        if self.n == 0 {
            self.curve = vec![Welford::default(); run.cum_reward.len()];
            self.has_gamma = run.total_gamma.is_some();
        }
        self.n += 1;
        for (w, &c) in self.curve.iter_mut().zip(&run.cum_reward) {
            w.push(self.n, c);
        }
        match run.total_gamma {
            Some(g) => self.gamma.push(self.n, g),
            None => self.has_gamma = false,
        }
        self.totals
            .push(run.cum_reward.last().copied().unwrap_or(0.0));
    }

    pub fn finish(self) -> MonteCarloSummary {
        let n = self.n;
        MonteCarloSummary {
            n_runs: n,
            mean_cum_reward: self.curve.iter().map(|w| w.mean).collect(),
            se_cum_reward: self.curve.iter().map(|w| w.se(n)).collect(),
            mean_total_gamma: self.has_gamma.then_some(self.gamma.mean),
            se_total_gamma: self.has_gamma.then(|| self.gamma.se(n)),
            total_rewards: self.totals,
        }
    }
}

impl MonteCarloSummary {
    pub fn mean_total_reward(&self) -> f64 {
        self.mean_cum_reward.last().copied().unwrap_or(0.0)
    }

    pub fn se_total_reward(&self) -> f64 {
        self.se_cum_reward.last().copied().unwrap_or(0.0)
    }
}

/// Runs `n_runs` episodes with seeds `base_seed + r` (wrapping), a fresh
/// policy from `make_policy` each time.
pub fn run_monte_carlo<P, M>(
    instance: &Instance,
    mut make_policy: M,
    horizon: u64,
    n_runs: u64,
    base_seed: u64,
    alpha_beta: Option<(f64, f64)>,
) -> Result<MonteCarloSummary, EngineError>
where
    P: Policy,
    M: FnMut() -> P,
{
    if n_runs == 0 {
        return Err(EngineError::ZeroRuns);
    }
    let mut meter = alpha_beta.map(|(a, b)| RegretMeter::new(instance, a, b));
    let mut acc = MonteCarloAccumulator::new();
    for r in 0..n_runs {
        let mut policy = make_policy();
        let run = run_outcome(
            instance,
            &mut policy,
            horizon,
            base_seed.wrapping_add(r),
            meter.as_mut(),
        )?;
        acc.push(&run);
    }
    Ok(acc.finish())
}

/// Plays a fixed list of sets, one per round, then nothing.
#[derive(Debug, Clone)]
pub struct SchedulePolicy {
    schedule: Vec<ArmSet>,
    next: usize,
}

impl SchedulePolicy {
    pub fn new(schedule: Vec<ArmSet>) -> Self {
        SchedulePolicy { schedule, next: 0 }
    }
}

impl Policy for SchedulePolicy {
    fn select(
        &mut self,
        _: ArmSet,
        _: &FeasibleFamily,
        _: &mut dyn RngCore,
    ) -> Result<ArmSet, PolicyError> {
        let s = self
            .schedule
            .get(self.next)
            .copied()
            .unwrap_or(ArmSet::EMPTY);
        self.next += 1;
        Ok(s)
    }

    fn observe(&mut self, _: ArmSet, _: &[(usize, f64)]) -> Result<(), PolicyError> {
        Ok(())
    }
}

/// Replays a schedule through the engine's validation.
pub fn replay_schedule(
    instance: &Instance,
    schedule: &[ArmSet],
    seed: u64,
) -> Result<Trace, EngineError> {
    let mut p = SchedulePolicy::new(schedule.to_vec());
    run_episode(instance, &mut p, schedule.len() as u64, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ArmSpec, Atom, FamilyKind};
    use crate::oracles::BaseOracle;
    use crate::policies::{GreedyPolicy, UcbPolicy};

    fn single(arm: ArmSpec) -> Instance {
        Instance::new(
            vec![arm],
            FeasibleFamily::new(1, FamilyKind::UniformMatroid { rank: 1 }).unwrap(),
        )
        .unwrap()
    }

    fn greedy(inst: &Instance) -> GreedyPolicy<BaseOracle> {
        GreedyPolicy::new(inst.mu(), BaseOracle::Exact)
    }

    #[test]
    fn forced_schedule() {
        let inst = single(ArmSpec::deterministic(1.0, 2).unwrap());
        let tr = run_episode(&inst, &mut greedy(&inst), 4, 0).unwrap();
        let plays: Vec<u64> = tr
            .records
            .iter()
            .filter(|r| !r.played.is_empty())
            .map(|r| r.t)
            .collect();
        assert_eq!(plays, vec![1, 3]);
        assert_eq!(tr.total_reward(), 2.0);
        assert_eq!(tr.records.len(), 4);
        assert_eq!(
            run_episode(&inst, &mut greedy(&inst), 0, 0),
            Err(EngineError::ZeroHorizon)
        );
    }

    #[test]
    fn stochastic_delay_expectation() {
        // The two delay realizations give rewards 2 and 1.
        let arm = ArmSpec::new(0, vec![Atom::new(1.0, 1, 0.5), Atom::new(1.0, 2, 0.5)]).unwrap();
        let inst = single(arm);
        let s = run_monte_carlo(&inst, || greedy(&inst), 2, 40_000, 7, None).unwrap();
        let m = s.mean_total_reward();
        assert!((m - 1.5).abs() <= 3.0 * s.se_total_reward() + 1e-12, "{m}");
        for tr in (0..20).map(|seed| run_episode(&inst, &mut greedy(&inst), 2, seed).unwrap()) {
            let expected = if tr.records[0].delays[0].1 == 1 {
                2.0
            } else {
                1.0
            };
            assert_eq!(tr.total_reward(), expected);
        }
    }

    #[test]
    fn determinism() {
        let arms = (0..3)
            .map(|i| ArmSpec::bernoulli(0.2 + 0.2 * i as f64, 1 + i as u32).unwrap())
            .collect();
        let inst = Instance::new(
            arms,
            FeasibleFamily::new(3, FamilyKind::UniformMatroid { rank: 2 }).unwrap(),
        )
        .unwrap();
        let a = run_episode(&inst, &mut UcbPolicy::new(3, BaseOracle::Exact), 300, 11).unwrap();
        let b = run_episode(&inst, &mut UcbPolicy::new(3, BaseOracle::Exact), 300, 11).unwrap();
        assert_eq!(a, b);
        let c = run_episode(&inst, &mut UcbPolicy::new(3, BaseOracle::Exact), 300, 12).unwrap();
        assert_ne!(a.records, c.records);
    }

    #[test]
    fn gamma_examples() {
        let arms = vec![
            ArmSpec::bernoulli(0.9, 2).unwrap(),
            ArmSpec::bernoulli(0.3, 1).unwrap(),
        ];
        let inst = Instance::new(
            arms,
            FeasibleFamily::new(2, FamilyKind::UniformMatroid { rank: 1 }).unwrap(),
        )
        .unwrap();
        let mut tr = run_episode(&inst, &mut greedy(&inst), 50, 1).unwrap();
        assert!(instantaneous_regret_series(&tr, &inst, 1.0, 1.0)
            .unwrap()
            .iter()
            .all(|g| *g == 0.0));
        let mut m = RegretMeter::new(&inst, 1.0, 1.0);
        assert_eq!(m.gamma(ArmSet::full(2), ArmSet::EMPTY).unwrap(), 0.9);
        let mut half = RegretMeter::new(&inst, 1.0, 0.5);
        assert_eq!(
            half.gamma(ArmSet::full(2), ArmSet::from([0])).unwrap(),
            -0.45
        );
        attach_gamma(&mut tr, &inst, 1.0, 1.0).unwrap();
        assert_eq!(tr.total_gamma(), Some(0.0));
    }

    #[test]
    fn infeasible_play_is_rejected() {
        let inst = single(ArmSpec::deterministic(1.0, 3).unwrap());
        let err = replay_schedule(&inst, &[ArmSet::from([0]), ArmSet::from([0])], 0).unwrap_err();
        assert_eq!(
            err,
            EngineError::OracleInfeasible {
                t: 2,
                played: ArmSet::from([0]),
                available: ArmSet::EMPTY
            }
        );
    }

    #[test]
    fn single_run_summary_matches_trace() {
        let inst = single(ArmSpec::bernoulli(0.5, 1).unwrap());
        let s = run_monte_carlo(&inst, || greedy(&inst), 100, 1, 42, Some((1.0, 1.0))).unwrap();
        let tr = run_episode(&inst, &mut greedy(&inst), 100, 42).unwrap();
        let curve: Vec<f64> = tr.records.iter().map(|r| r.cum_reward).collect();
        assert_eq!(s.mean_cum_reward, curve);
        assert!(s.se_cum_reward.iter().all(|x| *x == 0.0));
        assert_eq!(s.mean_total_gamma, Some(0.0));
        assert_eq!(
            run_monte_carlo(&inst, || greedy(&inst), 100, 0, 42, None),
            Err(EngineError::ZeroRuns)
        );
    }

    #[test]
    fn deterministic_instance_has_no_spread() {
        let inst = single(ArmSpec::deterministic(0.7, 3).unwrap());
        let s = run_monte_carlo(&inst, || greedy(&inst), 30, 10, 0, None).unwrap();
        assert!(s.se_cum_reward.iter().all(|x| *x == 0.0));
        assert!((s.mean_total_reward() - 0.7 * 10.0).abs() < 1e-12);
    }
}
