mod common;

use cbbsd_core::engine::{run_episode, run_monte_carlo, EngineError};
use cbbsd_core::oracles::{exact_oracle, BaseOracle, BetaWrapper, Fallback, Oracle};
use cbbsd_core::policies::{ucb_step, GreedyPolicy, Policy, UcbPolicy, UcbState};
use cbbsd_core::{rng_from_seed, ArmSet, ArmSpec, FamilyKind, FeasibleFamily, Instance};
use common::instances;

fn bernoulli_rank(mu: &[f64], delays: &[u32], rank: usize) -> Instance {
    let arms = mu
        .iter()
        .zip(delays)
        .map(|(&p, &d)| ArmSpec::bernoulli(p, d).unwrap())
        .collect();
    Instance::new(
        arms,
        FeasibleFamily::new(mu.len(), FamilyKind::UniformMatroid { rank }).unwrap(),
    )
    .unwrap()
}

#[test]
fn bernoulli_mean_matches_clt() {
    let inst = bernoulli_rank(&[0.5], &[1], 1);
    let s = run_monte_carlo(
        &inst,
        || GreedyPolicy::new(inst.mu(), BaseOracle::Exact),
        10_000,
        100,
        3,
        None,
    )
    .unwrap();
    assert!((s.mean_total_reward() - 5000.0).abs() <= 3.0 * s.se_total_reward());
    assert!(s.se_total_reward() > 0.0);
}

#[test]
fn traces_respect_feasibility_and_prefix_sums() {
    for (n, inst) in instances(8, 20, 5, 3).iter().enumerate() {
        let k = inst.k();
        let wrapped = BetaWrapper::new(BaseOracle::Exact, 0.6, Fallback::WorstFeasible).unwrap();
        let tr = run_episode(inst, &mut UcbPolicy::new(k, wrapped), 200, n as u64).unwrap();
        assert_eq!(tr.records.len(), 200);
        let mut cum = 0.0;
        for r in &tr.records {
            assert!(r.played.is_subset(r.available));
            assert!(r.played.is_empty() || inst.family().is_feasible(r.played));
            cum += r.round_reward;
            assert_eq!(cum, r.cum_reward);
        }
    }
}

#[test]
fn blocked_arms_stay_out_for_delay_minus_one_rounds() {
    let inst = bernoulli_rank(&[0.9, 0.8, 0.3], &[3, 2, 1], 3);
    let tr = run_episode(&inst, &mut UcbPolicy::new(3, BaseOracle::Exact), 100, 4).unwrap();
    for (j, r) in tr.records.iter().enumerate() {
        for &(arm, d) in &r.delays {
            for later in tr.records.iter().skip(j + 1).take(d as usize - 1) {
                assert!(!later.available.contains(arm));
            }
            if let Some(next) = tr.records.get(j + d as usize) {
                assert!(next.available.contains(arm));
            }
        }
    }
}

#[test]
fn ucb_is_delay_blind() {
    // Feeding the recorded availability sets and rewards to a fresh policy
    // reproduces its choices; delays never enter.
    let inst = bernoulli_rank(&[0.7, 0.5, 0.2, 0.6], &[2, 3, 1, 2], 2);
    let tr = run_episode(&inst, &mut UcbPolicy::new(4, BaseOracle::Exact), 400, 21).unwrap();
    let mut replay = UcbPolicy::new(4, BaseOracle::Exact);
    let mut rng = rng_from_seed(999);
    for r in &tr.records {
        assert_eq!(
            replay.select(r.available, inst.family(), &mut rng).unwrap(),
            r.played
        );
        replay.observe(r.played, &r.rewards).unwrap();
    }
}

#[test]
fn ucb_converges_to_static_optimum() {
    let inst = bernoulli_rank(&[0.9, 0.7, 0.4, 0.2], &[1, 1, 1, 1], 2);
    let mut policy = UcbPolicy::new(4, BaseOracle::Exact);
    let tr = run_episode(&inst, &mut policy, 20_000, 5).unwrap();
    let opt = exact_oracle(&inst.mu(), ArmSet::full(4), inst.family()).unwrap();
    let tail = &tr.records[19_000..];
    let hits = tail.iter().filter(|r| r.played == opt).count();
    assert!(hits as f64 >= 0.95 * tail.len() as f64, "{hits}");
    let state: &UcbState = policy.state();
    let mut rng = rng_from_seed(0);
    let mut o = BaseOracle::Exact;
    assert_eq!(
        ucb_step(state, ArmSet::EMPTY, inst.family(), &mut o, &mut rng).unwrap(),
        ArmSet::EMPTY
    );
}

#[test]
fn oracle_certificates_hold_on_success_branches() {
    let mut rng = rng_from_seed(12);
    for inst in instances(40, 30, 8, 1) {
        let mu = inst.mu();
        let f = inst.family();
        let mut wrapped = BetaWrapper::new(BaseOracle::Exact, 0.5, Fallback::Empty).unwrap();
        for bits in 0..1u64 << inst.k() {
            let support = ArmSet::from_bits(bits);
            let r = wrapped.select(&mu, support, f, &mut rng).unwrap();
            assert!(
                r.chosen.is_empty() || (f.is_feasible(r.chosen) && r.chosen.is_subset(support))
            );
            if r.succeeded {
                let opt = exact_oracle(&mu, support, f).unwrap().weight(&mu);
                assert!(r.chosen.weight(&mu) >= wrapped.alpha() * opt - 1e-12);
            }
        }
    }
}

#[test]
fn errors_carry_context() {
    let inst = bernoulli_rank(&[0.5, 0.5], &[1, 1], 1);
    struct Greedy2;
    impl Policy for Greedy2 {
        fn select(
            &mut self,
            available: ArmSet,
            _: &FeasibleFamily,
            _: &mut dyn rand::RngCore,
        ) -> Result<ArmSet, cbbsd_core::policies::PolicyError> {
            Ok(available)
        }
        fn observe(
            &mut self,
            _: ArmSet,
            _: &[(usize, f64)],
        ) -> Result<(), cbbsd_core::policies::PolicyError> {
            Ok(())
        }
    }
    let err = run_episode(&inst, &mut Greedy2, 5, 0).unwrap_err();
    assert!(matches!(err, EngineError::OracleInfeasible { t: 1, .. }));
}
