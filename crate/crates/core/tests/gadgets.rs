use cbbsd_core::engine::{replay_schedule, run_episode, Trace};
use cbbsd_core::gadgets::{
    build_cover_instance, build_edp_instance, mc_avg_reward, mc_instance, period_optimum,
    periodic_rounding, simulate_clairvoyant, AlgQ, GadgetError, McParams,
};
use cbbsd_core::oracles::BaseOracle;
use cbbsd_core::policies::{GreedyPolicy, RandomFeasiblePolicy};
use cbbsd_core::ArmSet;

#[test]
fn chain_simulation_matches_closed_form() {
    for (p, d, q) in [(0.5, 3, 1.0), (0.3, 5, 0.6), (0.8, 2, 0.25)] {
        let inst = mc_instance(p, d).unwrap();
        let t = 1_000_000;
        let avg = run_episode(&inst, &mut AlgQ { q }, t, 17)
            .unwrap()
            .total_reward()
            / t as f64;
        let expected = mc_avg_reward(McParams::new(p, d, q).unwrap());
        assert!(
            (avg - expected).abs() < 0.005,
            "p={p} d={d} q={q}: {avg} vs {expected}"
        );
    }
    let inst = mc_instance(0.5, 7).unwrap();
    assert!((simulate_clairvoyant(&inst, 1_000_000, 3) - 0.5).abs() < 0.005);
}

fn two_pair_gadget() -> cbbsd_core::Instance {
    // Pair 0 routes 0 -> 1 -> 2, pair 1 routes 3 -> 4; entry edges are 3, 4.
    build_edp_instance(&[(0, 1), (1, 2), (3, 4)], &[(0, 2), (3, 4)], 5).unwrap()
}

#[test]
fn edp_round_robin_earns_one_per_round() {
    let inst = two_pair_gadget();
    let path0 = ArmSet::from([0, 1, 3]);
    let path1 = ArmSet::from([2, 4]);
    assert!(inst.family().is_feasible(path0) && inst.family().is_feasible(path1));
    assert!(!inst.family().is_feasible(path0.union(path1)));
    let t = inst.horizon().unwrap() as usize;
    let schedule: Vec<ArmSet> = (0..t)
        .map(|j| if j % 2 == 0 { path0 } else { path1 })
        .collect();
    let tr = replay_schedule(&inst, &schedule, 0).unwrap();
    assert_eq!(tr.total_reward(), t as f64);
    assert_eq!(period_optimum(&inst).unwrap(), 2.0);
}

#[test]
fn edp_period_optimum_counts_disjoint_paths() {
    // Both pairs need the only edge into node 2, so one path per period.
    let shared = build_edp_instance(&[(0, 2), (1, 2), (2, 3)], &[(0, 3), (1, 3)], 1).unwrap();
    assert_eq!(period_optimum(&shared).unwrap(), 1.0);
    let split =
        build_edp_instance(&[(0, 2), (1, 3), (2, 4), (3, 4)], &[(0, 4), (1, 4)], 1).unwrap();
    assert_eq!(period_optimum(&split).unwrap(), 2.0);
}

#[test]
fn edp_gadget_blocking_cap() {
    let inst = two_pair_gadget();
    let m = 2;
    let tr = run_episode(
        &inst,
        &mut GreedyPolicy::new(inst.mu(), BaseOracle::Path),
        40,
        0,
    )
    .unwrap();
    for (j, r) in tr.records.iter().enumerate() {
        assert!(r.round_reward <= 1.0);
        for later in tr.records.iter().skip(j + 1).take(m - 1) {
            assert!(later.played.intersection(r.played).is_empty());
        }
    }
    let exact = run_episode(
        &inst,
        &mut GreedyPolicy::new(inst.mu(), BaseOracle::Exact),
        40,
        0,
    )
    .unwrap();
    assert_eq!(exact.total_reward(), 40.0);
}

fn cover() -> cbbsd_core::Instance {
    build_cover_instance(3, &[ArmSet::from([0, 1]), ArmSet::from([1, 2])], 2, 6).unwrap()
}

#[test]
fn periodic_rounding_keeps_feasibility_and_reward() {
    let inst = cover();
    let t = inst.horizon().unwrap();
    let mu = inst.mu();
    for seed in 0..20 {
        let tr = run_episode(&inst, &mut RandomFeasiblePolicy, t, seed).unwrap();
        let rounded = periodic_rounding(&tr, 2, &inst).unwrap();
        let replayed = replay_schedule(&inst, &rounded, seed).unwrap();
        let before: f64 = tr.records.iter().map(|r| r.played.weight(&mu)).sum();
        assert!(replayed.total_reward() >= before - 1e-12);
        for (j, s) in rounded.iter().enumerate() {
            assert_eq!(*s, rounded[j % 2]);
        }
    }
}

#[test]
fn periodic_rounding_window_cases() {
    let inst = cover();
    let periodic: Vec<ArmSet> = (0..12)
        .map(|j| {
            if j % 2 == 0 {
                ArmSet::from([0, 1])
            } else {
                ArmSet::from([2])
            }
        })
        .collect();
    let tr = replay_schedule(&inst, &periodic, 0).unwrap();
    let out = periodic_rounding(&tr, 2, &inst).unwrap();
    assert_eq!(
        replay_schedule(&inst, &out, 0).unwrap().total_reward(),
        tr.total_reward()
    );

    let mut hot = vec![ArmSet::EMPTY; 12];
    hot[6] = ArmSet::from([0, 1]);
    hot[7] = ArmSet::from([2]);
    let tr = replay_schedule(&inst, &hot, 0).unwrap();
    let out = periodic_rounding(&tr, 2, &inst).unwrap();
    assert_eq!(
        replay_schedule(&inst, &out, 0).unwrap().total_reward(),
        18.0
    );

    let short = Trace {
        records: tr.records[..5].to_vec(),
        ..tr.clone()
    };
    assert!(matches!(
        periodic_rounding(&short, 2, &inst),
        Err(GadgetError::PreconditionViolated(_))
    ));
    assert!(matches!(
        periodic_rounding(&tr, 3, &inst),
        Err(GadgetError::PreconditionViolated(_))
    ));
    let chain = mc_instance(0.5, 3).unwrap();
    let tr = run_episode(&chain, &mut AlgQ { q: 1.0 }, 6, 0).unwrap();
    assert!(matches!(
        periodic_rounding(&tr, 3, &chain),
        Err(GadgetError::PreconditionViolated(_))
    ));
}
