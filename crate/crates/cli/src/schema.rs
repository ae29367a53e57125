//! JSON instance documents.
//!
//! An instance is either explicit,
//!
//! ```json
//! {"arms": [{"joint_pmf": [[1.0, 2, 0.5], [0.0, 1, 0.5]]}],
//!  "family": {"kind": "uniform_matroid", "params": {"rank": 1}},
//!  "horizon": 100}
//! ```
//!
//! or a gadget, `{"gadget": {"kind": "edp" | "cover" | "mc", "params": {...}}}`.

use cbbsd_core::gadgets::{build_cover_instance, build_edp_instance, mc_instance};
use cbbsd_core::model::Atom;
use cbbsd_core::{ArmSet, ArmSpec, FamilyKind, FeasibleFamily, Instance};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::config::Issue;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArmDoc {
    /// `[reward, delay, probability]` triples.
    pub joint_pmf: Vec<(f64, u32, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(
    tag = "kind",
    content = "params",
    rename_all = "snake_case",
    deny_unknown_fields
)]
pub enum FamilyDoc {
    UniformMatroid {
        rank: usize,
    },
    PartitionMatroid {
        blocks: Vec<Vec<usize>>,
        ranks: Vec<usize>,
    },
    Knapsack {
        weights: Vec<f64>,
        budget: f64,
    },
    ExplicitHereditary {
        maximal: Vec<Vec<usize>>,
    },
    Cover {
        sets: Vec<Vec<usize>>,
    },
    EdpPaths {
        edges: Vec<(usize, usize)>,
        pairs: Vec<(usize, usize)>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplicitInstance {
    pub arms: Vec<ArmDoc>,
    pub family: FamilyDoc,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(
    tag = "kind",
    content = "params",
    rename_all = "snake_case",
    deny_unknown_fields
)]
pub enum GadgetDoc {
    /// Edge-disjoint paths; the horizon is `periods` times the number of pairs.
    Edp {
        edges: Vec<(usize, usize)>,
        pairs: Vec<(usize, usize)>,
        periods: u64,
    },
    /// Maximum coverage with delay `l`; the horizon is `l * periods`.
    Cover {
        universe_size: usize,
        sets: Vec<Vec<usize>>,
        l: u32,
        periods: u64,
    },
    /// Single arm, reward 1, delay `d` with probability `p` and 1 otherwise.
    Mc { p: f64, d: u32 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GadgetInstance {
    pub gadget: GadgetDoc,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum InstanceDoc {
    Explicit(ExplicitInstance),
    Gadget(GadgetInstance),
}

impl InstanceDoc {
    /// Reads a document, dispatching on the presence of a `gadget` key so
    /// errors name the right shape.
    pub fn from_value(v: &Value) -> Result<Self, String> {
        let is_gadget = v.as_object().is_some_and(|o| o.contains_key("gadget"));
        let r = if is_gadget {
            GadgetInstance::deserialize(v).map(InstanceDoc::Gadget)
        } else {
            ExplicitInstance::deserialize(v).map(InstanceDoc::Explicit)
        };
        r.map_err(|e| e.to_string())
    }

    /// Validates the document and builds the instance, reporting every
    /// problem found under `field`.
    pub fn build(&self, field: &str) -> Result<Instance, Vec<Issue>> {
        match self {
            InstanceDoc::Explicit(doc) => build_explicit(doc, field),
            InstanceDoc::Gadget(g) => build_gadget(&g.gadget, &format!("{field}.gadget")),
        }
    }
}

fn to_set(indices: &[usize], k: usize, field: &str, issues: &mut Vec<Issue>) -> ArmSet {
    let mut s = ArmSet::EMPTY;
    for &i in indices {
        if i >= k {
            issues.push(Issue::new(
                field,
                format!("arm index {i} out of range for {k} arms"),
            ));
        } else {
            s.insert(i);
        }
    }
    s
}

fn build_explicit(doc: &ExplicitInstance, field: &str) -> Result<Instance, Vec<Issue>> {
    let mut issues = Vec::new();
    let k = doc.arms.len();
    let mut arms = Vec::with_capacity(k);
    for (i, a) in doc.arms.iter().enumerate() {
        let atoms = a
            .joint_pmf
            .iter()
            .map(|&(r, d, p)| Atom::new(r, d, p))
            .collect();
        match ArmSpec::new(i, atoms) {
            Ok(arm) => arms.push(arm),
            Err(e) => issues.push(Issue::new(format!("{field}.arms[{i}]"), e.to_string())),
        }
    }
    let ff = format!("{field}.family");
    let kind = family_kind(&doc.family, k, &ff, &mut issues);
    if !issues.is_empty() {
        return Err(issues);
    }
    let family = FeasibleFamily::new(k, kind).map_err(|e| vec![Issue::new(&ff, e.to_string())])?;
    let inst = Instance::new(arms, family).map_err(|e| vec![Issue::new(field, e.to_string())])?;
    Ok(match doc.horizon {
        Some(h) => inst.with_horizon(h),
        None => inst,
    })
}

fn family_kind(doc: &FamilyDoc, k: usize, field: &str, issues: &mut Vec<Issue>) -> FamilyKind {
    let sets = |v: &[Vec<usize>], name: &str, issues: &mut Vec<Issue>| -> Vec<ArmSet> {
        v.iter()
            .enumerate()
            .map(|(j, s)| to_set(s, k, &format!("{field}.params.{name}[{j}]"), issues))
            .collect()
    };
    match doc {
        FamilyDoc::UniformMatroid { rank } => FamilyKind::UniformMatroid { rank: *rank },
        FamilyDoc::PartitionMatroid { blocks, ranks } => FamilyKind::PartitionMatroid {
            blocks: sets(blocks, "blocks", issues),
            ranks: ranks.clone(),
        },
        FamilyDoc::Knapsack { weights, budget } => FamilyKind::Knapsack {
            weights: weights.clone(),
            budget: *budget,
        },
        FamilyDoc::ExplicitHereditary { maximal } => FamilyKind::ExplicitHereditary {
            maximal: sets(maximal, "maximal", issues),
        },
        FamilyDoc::Cover { sets: s } => FamilyKind::Cover {
            sets: sets(s, "sets", issues),
        },
        FamilyDoc::EdpPaths { edges, pairs } => FamilyKind::EdpPaths {
            edges: edges.clone(),
            pairs: pairs.clone(),
        },
    }
}

fn build_gadget(doc: &GadgetDoc, field: &str) -> Result<Instance, Vec<Issue>> {
    let fail = |e: String| vec![Issue::new(field, e)];
    match doc {
        GadgetDoc::Edp {
            edges,
            pairs,
            periods,
        } => build_edp_instance(edges, pairs, *periods).map_err(|e| fail(e.to_string())),
        GadgetDoc::Cover {
            universe_size,
            sets,
            l,
            periods,
        } => {
            let mut issues = Vec::new();
            if *universe_size > cbbsd_core::arms::MAX_ARMS {
                return Err(fail(format!(
                    "universe of {universe_size} elements is too large"
                )));
            }
            let sets: Vec<ArmSet> = sets
                .iter()
                .enumerate()
                .map(|(j, s)| {
                    to_set(
                        s,
                        *universe_size,
                        &format!("{field}.params.sets[{j}]"),
                        &mut issues,
                    )
                })
                .collect();
            if !issues.is_empty() {
                return Err(issues);
            }
            build_cover_instance(*universe_size, &sets, *l, *periods)
                .map_err(|e| fail(e.to_string()))
        }
        GadgetDoc::Mc { p, d } => mc_instance(*p, *d).map_err(|e| fail(e.to_string())),
    }
}
