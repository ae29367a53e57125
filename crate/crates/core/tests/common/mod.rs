#![allow(dead_code)]

use cbbsd_core::model::Atom;
use cbbsd_core::{rng_from_seed, ArmSet, ArmSpec, FamilyKind, FeasibleFamily, Instance, SimRng};
use rand::Rng;

/// Small random instance with a random joint pmf per arm and a hereditary
/// family.
pub fn random_instance(rng: &mut SimRng, max_k: usize, max_delay: u32) -> Instance {
    let k = rng.random_range(1..=max_k);
    let arms = (0..k).map(|i| random_arm(rng, i, max_delay)).collect();
    Instance::new(arms, random_family(rng, k)).unwrap()
}

pub fn random_arm(rng: &mut SimRng, idx: usize, max_delay: u32) -> ArmSpec {
    let n = rng.random_range(1..=3);
    let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let mut atoms: Vec<Atom> = raw
        .iter()
        .map(|w| {
            let reward = (rng.random_range(0..=10) as f64) / 10.0;
            Atom::new(reward, rng.random_range(1..=max_delay), w / total)
        })
        .collect();
    let rest: f64 = atoms[1..].iter().map(|a| a.prob).sum();
    atoms[0].prob = 1.0 - rest;
    ArmSpec::new(idx, atoms).unwrap()
}

pub fn random_family(rng: &mut SimRng, k: usize) -> FeasibleFamily {
    let kind = match rng.random_range(0..4) {
        0 => FamilyKind::UniformMatroid {
            rank: rng.random_range(1..=k),
        },
        1 => FamilyKind::Knapsack {
            weights: (0..k).map(|_| rng.random_range(0.2..1.5)).collect(),
            budget: rng.random_range(0.5..2.5),
        },
        2 => {
            let m = rng.random_range(1..=3);
            FamilyKind::Cover {
                sets: (0..m)
                    .map(|_| ArmSet::from_bits(rng.random_range(1..1u64 << k)))
                    .collect(),
            }
        }
        _ => {
            let assign: Vec<usize> = (0..k).map(|_| rng.random_range(0..2)).collect();
            let blocks = (0..2)
                .map(|b| (0..k).filter(|&i| assign[i] == b).collect())
                .collect();
            FamilyKind::PartitionMatroid {
                blocks,
                ranks: vec![1, rng.random_range(1..=2)],
            }
        }
    };
    FeasibleFamily::new(k, kind).unwrap()
}

pub fn instances(seed: u64, n: usize, max_k: usize, max_delay: u32) -> Vec<Instance> {
    let mut rng = rng_from_seed(seed);
    (0..n)
        .map(|_| random_instance(&mut rng, max_k, max_delay))
        .collect()
}
