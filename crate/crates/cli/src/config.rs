//! Experiment configuration: parsing, overrides and validation.

use std::fmt;
use std::path::{Path, PathBuf};

use cbbsd_core::baselines::{GAPS_MAX_ARMS, LP_MAX_ARMS, MDP_MAX_HORIZON, MDP_MAX_STATES};
use cbbsd_core::oracles::{BaseOracle, Fallback, EXHAUSTIVE_LIMIT};
use cbbsd_core::{FamilyKind, Instance};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::schema::InstanceDoc;

/// One violated constraint.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Issue {
    pub field: String,
    pub message: String,
}

impl Issue {
    pub fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Issue {
            field: field.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid configuration ({} problems): {}", .0.len(), .0.iter().map(|i| i.to_string()).collect::<Vec<_>>().join("; "))]
    Validation(Vec<Issue>),
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl From<serde_json::Error> for ConfigError {
    fn from(e: serde_json::Error) -> Self {
        ConfigError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    GreedyFullInfo,
    CbbsdUcb,
    RandomFeasible,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPolicy {
    #[serde(rename = "type")]
    kind: PolicyKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleKind {
    Exact,
    KnapsackGreedy,
    Path,
}

impl OracleKind {
    pub fn base(self) -> BaseOracle {
        match self {
            OracleKind::Exact => BaseOracle::Exact,
            OracleKind::KnapsackGreedy => BaseOracle::KnapsackGreedy,
            OracleKind::Path => BaseOracle::Path,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FallbackKind {
    #[default]
    Empty,
    WorstFeasible,
}

impl FallbackKind {
    pub fn fallback(self) -> Fallback {
        match self {
            FallbackKind::Empty => Fallback::Empty,
            FallbackKind::WorstFeasible => Fallback::WorstFeasible,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleSpec {
    #[serde(rename = "type")]
    pub kind: OracleKind,
    #[serde(default = "one")]
    pub beta: f64,
    #[serde(default)]
    pub fallback: FallbackKind,
}

fn one() -> f64 {
    1.0
}

impl Default for OracleSpec {
    fn default() -> Self {
        OracleSpec {
            kind: OracleKind::Exact,
            beta: 1.0,
            fallback: FallbackKind::Empty,
        }
    }
}

impl OracleSpec {
    pub fn alpha(&self) -> f64 {
        self.kind.base().alpha()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineKind {
    Mdp,
    Lp,
    Gaps,
    Bounds,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    dir: Option<String>,
    trace_csv: Option<String>,
    summary_json: Option<String>,
    baselines_json: Option<String>,
    trace_runs: Option<i64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    instance: Value,
    #[serde(default)]
    policy: Option<RawPolicy>,
    #[serde(default)]
    oracle: Option<OracleSpec>,
    #[serde(default)]
    horizon: Option<i64>,
    #[serde(default)]
    n_runs: Option<i64>,
    #[serde(default)]
    base_seed: Option<u64>,
    #[serde(default)]
    baselines: Vec<BaselineKind>,
    #[serde(default)]
    bound_constant: Option<f64>,
    #[serde(default)]
    output: RawOutput,
}

/// Command-line values that replace config fields.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub runs: Option<u64>,
    pub horizon: Option<u64>,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutputSpec {
    pub dir: PathBuf,
    pub trace_csv: String,
    pub summary_json: String,
    pub baselines_json: String,
    /// How many runs (lowest seeds first) go into the trace CSV.
    pub trace_runs: u64,
}

impl OutputSpec {
    pub fn trace_path(&self) -> PathBuf {
        self.dir.join(&self.trace_csv)
    }

    pub fn summary_path(&self) -> PathBuf {
        self.dir.join(&self.summary_json)
    }

    pub fn baselines_path(&self) -> PathBuf {
        self.dir.join(&self.baselines_json)
    }
}

/// A fully validated experiment.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentConfig {
    pub instance: InstanceDoc,
    pub policy: PolicyKind,
    pub oracle: OracleSpec,
    pub horizon: u64,
    pub n_runs: u64,
    pub base_seed: u64,
    pub baselines: Vec<BaselineKind>,
    pub bound_constant: f64,
    pub output: OutputSpec,
    #[serde(skip)]
    pub model: Instance,
}

impl ExperimentConfig {
    pub fn wants(&self, b: BaselineKind) -> bool {
        self.baselines.contains(&b)
    }

    /// SHA-256 of the canonical JSON of everything that affects results
    /// (output locations excluded).
    pub fn digest(&self) -> String {
        let mut v = serde_json::to_value(self).expect("config serializes");
        if let Value::Object(m) = &mut v {
            m.remove("output");
        }
        hex::encode(Sha256::digest(v.to_string().as_bytes()))
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    parse_config_with(text, Path::new("."), &Overrides::default())
}

/// Parses and validates a config; a string-valued `instance` is a path
/// relative to `base_dir`.
pub fn parse_config_with(
    text: &str,
    base_dir: &Path,
    overrides: &Overrides,
) -> Result<ExperimentConfig, ConfigError> {
    let raw: RawConfig = serde_json::from_str(text)?;
    let mut issues = Vec::new();

    let instance_value = match &raw.instance {
        Value::String(p) => {
            let path = base_dir.join(p);
            let text = std::fs::read_to_string(&path).map_err(|source| ConfigError::Io {
                path: path.clone(),
                source,
            })?;
            serde_json::from_str(&text)?
        }
        v => v.clone(),
    };
    let doc = match InstanceDoc::from_value(&instance_value) {
        Ok(d) => Some(d),
        Err(e) => {
            issues.push(Issue::new("instance", e));
            None
        }
    };
    let model = doc.as_ref().and_then(|d| match d.build("instance") {
        Ok(m) => Some(m),
        Err(mut e) => {
            issues.append(&mut e);
            None
        }
    });

    let policy = raw.policy.map_or(PolicyKind::CbbsdUcb, |p| p.kind);
    let oracle = raw.oracle.unwrap_or_default();
    if !(oracle.beta > 0.0 && oracle.beta <= 1.0) {
        issues.push(Issue::new(
            "oracle.beta",
            format!("must lie in (0, 1], got {}", oracle.beta),
        ));
    }

    let horizon = match (overrides.horizon.map(|h| h as i64), raw.horizon) {
        (Some(h), _) | (None, Some(h)) => Some(h),
        (None, None) => model.as_ref().and_then(|m| m.horizon()).map(|h| h as i64),
    };
    let horizon = match horizon {
        Some(h) if h >= 1 => h as u64,
        Some(h) => {
            issues.push(Issue::new(
                "horizon",
                format!("must be at least 1, got {h}"),
            ));
            0
        }
        None => {
            issues.push(Issue::new(
                "horizon",
                "missing (set it in the config or the instance)",
            ));
            0
        }
    };
    let n_runs = match overrides.runs.map(|r| r as i64).or(raw.n_runs).unwrap_or(1) {
        r if r >= 1 => r as u64,
        r => {
            issues.push(Issue::new("n_runs", format!("must be at least 1, got {r}")));
            0
        }
    };
    let base_seed = overrides.seed.or(raw.base_seed).unwrap_or(0);
    let bound_constant = raw.bound_constant.unwrap_or(1.0);
    if !(bound_constant.is_finite() && bound_constant >= 0.0) {
        issues.push(Issue::new(
            "bound_constant",
            "must be finite and nonnegative",
        ));
    }
    let mut baselines = raw.baselines.clone();
    baselines.sort();
    baselines.dedup();

    let trace_runs = match raw.output.trace_runs {
        None => n_runs,
        Some(r) if r >= 0 => (r as u64).min(n_runs),
        Some(r) => {
            issues.push(Issue::new(
                "output.trace_runs",
                format!("must be nonnegative, got {r}"),
            ));
            0
        }
    };
    let output = OutputSpec {
        dir: overrides
            .out
            .clone()
            .unwrap_or_else(|| PathBuf::from(raw.output.dir.as_deref().unwrap_or("."))),
        trace_csv: raw.output.trace_csv.unwrap_or_else(|| "trace.csv".into()),
        summary_json: raw
            .output
            .summary_json
            .unwrap_or_else(|| "summary.json".into()),
        baselines_json: raw
            .output
            .baselines_json
            .unwrap_or_else(|| "baselines.json".into()),
        trace_runs,
    };

    if let Some(m) = &model {
        check_compatibility(m, policy, &oracle, horizon, &baselines, &mut issues);
    }
    match (doc, model) {
        (Some(instance), Some(model)) if issues.is_empty() => Ok(ExperimentConfig {
            instance,
            policy,
            oracle,
            horizon,
            n_runs,
            base_seed,
            baselines,
            bound_constant,
            output,
            model,
        }),
        _ => Err(ConfigError::Validation(issues)),
    }
}

fn check_compatibility(
    m: &Instance,
    policy: PolicyKind,
    oracle: &OracleSpec,
    horizon: u64,
    baselines: &[BaselineKind],
    issues: &mut Vec<Issue>,
) {
    let family = m.family();
    let kind_name = family.kind().name();
    let uses_oracle = policy != PolicyKind::RandomFeasible;
    match oracle.kind {
        OracleKind::KnapsackGreedy if !matches!(family.kind(), FamilyKind::Knapsack { .. }) => {
            issues.push(Issue::new(
                "oracle.type",
                format!("knapsack_greedy needs a knapsack family, got {kind_name}"),
            ))
        }
        OracleKind::Path if !matches!(family.kind(), FamilyKind::EdpPaths { .. }) => {
            issues.push(Issue::new(
                "oracle.type",
                format!("path needs an edp_paths family, got {kind_name}"),
            ))
        }
        OracleKind::Exact
            if uses_oracle
                && matches!(family.kind(), FamilyKind::Knapsack { .. })
                && m.k() > EXHAUSTIVE_LIMIT =>
        {
            issues.push(Issue::new(
                "oracle.type",
                format!(
                    "exact knapsack search is limited to {EXHAUSTIVE_LIMIT} arms, instance has {}",
                    m.k()
                ),
            ))
        }
        _ => {}
    }
    if policy == PolicyKind::RandomFeasible && !family.is_hereditary() {
        issues.push(Issue::new(
            "policy.type",
            "random_feasible needs a hereditary family",
        ));
    }
    for b in baselines {
        match b {
            BaselineKind::Mdp => {
                let size = m.state_space_size();
                if size > MDP_MAX_STATES {
                    issues.push(Issue::new(
                        "baselines.mdp",
                        format!("state space of {size} blocking configurations exceeds the limit of {MDP_MAX_STATES}"),
                    ));
                }
                if horizon > MDP_MAX_HORIZON {
                    issues.push(Issue::new(
                        "baselines.mdp",
                        format!("horizon {horizon} exceeds the limit of {MDP_MAX_HORIZON}"),
                    ));
                }
            }
            BaselineKind::Lp => {
                if !family.is_hereditary() {
                    issues.push(Issue::new(
                        "baselines.lp",
                        "the LP bound needs a hereditary family",
                    ));
                }
                if m.k() > LP_MAX_ARMS {
                    issues.push(Issue::new(
                        "baselines.lp",
                        format!("{} arms exceed the limit of {LP_MAX_ARMS}", m.k()),
                    ));
                }
            }
            BaselineKind::Gaps | BaselineKind::Bounds => {
                let name = if *b == BaselineKind::Gaps {
                    "baselines.gaps"
                } else {
                    "baselines.bounds"
                };
                if m.k() > GAPS_MAX_ARMS {
                    issues.push(Issue::new(
                        name,
                        format!("{} arms exceed the limit of {GAPS_MAX_ARMS}", m.k()),
                    ));
                }
                if *b == BaselineKind::Bounds && horizon < 2 {
                    issues.push(Issue::new(
                        name,
                        "regret bounds need a horizon of at least 2",
                    ));
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "instance": {"arms": [{"joint_pmf": [[1.0, 1, 0.5], [0.0, 1, 0.5]]}],
                     "family": {"kind": "uniform_matroid", "params": {"rank": 1}}},
        "policy": {"type": "cbbsd_ucb"},
        "horizon": 100
    }"#;

    #[test]
    fn minimal_config_gets_defaults() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(c.policy, PolicyKind::CbbsdUcb);
        assert_eq!(c.oracle, OracleSpec::default());
        assert_eq!((c.horizon, c.n_runs, c.base_seed), (100, 1, 0));
        assert!(c.baselines.is_empty());
        assert_eq!(c.output.trace_csv, "trace.csv");
        assert_eq!(c.model.k(), 1);
    }

    #[test]
    fn negative_horizon_is_named() {
        let text = MINIMAL.replace("\"horizon\": 100", "\"horizon\": -5");
        let ConfigError::Validation(issues) = parse_config(&text).unwrap_err() else {
            panic!("expected validation error")
        };
        assert_eq!(issues.len(), 1);
        assert_eq!(issues[0].field, "horizon");
    }

    #[test]
    fn mdp_state_space_limit() {
        let arm = r#"{"joint_pmf": [[1.0, 10, 1.0]]}"#;
        let arms = [arm; 7].join(",");
        let text = format!(
            r#"{{"instance": {{"arms": [{arms}], "family": {{"kind": "uniform_matroid", "params": {{"rank": 2}}}}}},
                "horizon": 10, "baselines": ["mdp"]}}"#
        );
        let ConfigError::Validation(issues) = parse_config(&text).unwrap_err() else {
            panic!("expected validation error")
        };
        assert_eq!(issues[0].field, "baselines.mdp");
        assert!(issues[0].message.contains("1000000"));
    }

    #[test]
    fn all_problems_are_collected() {
        let text = r#"{
            "instance": {"arms": [{"joint_pmf": [[2.0, 1, 1.0]]}, {"joint_pmf": [[0.5, 1, 1.0]]}],
                         "family": {"kind": "uniform_matroid", "params": {"rank": 1}}},
            "oracle": {"type": "exact", "beta": 0},
            "horizon": 0,
            "n_runs": 0
        }"#;
        let ConfigError::Validation(issues) = parse_config(text).unwrap_err() else {
            panic!("expected validation error")
        };
        let fields: Vec<&str> = issues.iter().map(|i| i.field.as_str()).collect();
        assert_eq!(
            fields,
            ["instance.arms[0]", "oracle.beta", "horizon", "n_runs"]
        );
    }

    #[test]
    fn parse_errors_have_positions() {
        let err = parse_config("{\n  \"instance\": {},\n  \"horizon\": [}").unwrap_err();
        let ConfigError::Parse { line, .. } = err else {
            panic!("{err}")
        };
        assert_eq!(line, 3);
        let err = parse_config(r#"{"instance": {}, "horizonn": 3}"#).unwrap_err();
        assert!(matches!(err, ConfigError::Parse { .. }), "{err}");
    }

    #[test]
    fn oracle_family_compatibility() {
        let text = MINIMAL.replace(
            "\"policy\"",
            "\"oracle\": {\"type\": \"knapsack_greedy\"}, \"policy\"",
        );
        let ConfigError::Validation(issues) = parse_config(&text).unwrap_err() else {
            panic!("expected validation error")
        };
        assert_eq!(issues[0].field, "oracle.type");
    }

    #[test]
    fn overrides_win() {
        let o = Overrides {
            seed: Some(9),
            runs: Some(4),
            horizon: Some(7),
            out: Some(PathBuf::from("/tmp/x")),
        };
        let c = parse_config_with(MINIMAL, Path::new("."), &o).unwrap();
        assert_eq!((c.base_seed, c.n_runs, c.horizon), (9, 4, 7));
        assert_eq!(c.output.dir, PathBuf::from("/tmp/x"));
    }

    #[test]
    fn digest_ignores_output_location() {
        let a = parse_config(MINIMAL).unwrap();
        let mut b = a.clone();
        b.output.dir = PathBuf::from("elsewhere");
        assert_eq!(a.digest(), b.digest());
        let mut c = a.clone();
        c.base_seed = 1;
        assert_ne!(a.digest(), c.digest());
    }
}
