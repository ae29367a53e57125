//! Runs a validated experiment and writes its artifacts.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use cbbsd_core::baselines::{
    bound_dd, bound_di, compute_gaps, lp_upper_bound, mdp_pulling_rates, mdp_value_iteration, rho,
    BaselineError, BaselineMethod,
};
use cbbsd_core::engine::{
    run_episode_with, EngineError, MonteCarloAccumulator, MonteCarloSummary, RegretMeter,
    RoundRecord, RunOutcome,
};
use cbbsd_core::oracles::{build_oracle, Oracle, EXHAUSTIVE_LIMIT};
use cbbsd_core::policies::{GreedyPolicy, Policy, RandomFeasiblePolicy, UcbPolicy};
use cbbsd_core::{rng_from_seed, Instance};
use rayon::prelude::*;
use thiserror::Error;

use crate::config::{BaselineKind, ExperimentConfig, PolicyKind};
use crate::report::{
    curve_points, BaselineReport, BaselineValues, BoundsDoc, CurvesDoc, GapsDoc, RewStarDoc,
    Summary,
};
use crate::trace_csv;

#[derive(Debug, Error)]
pub enum RunError {
    #[error("run {run}: {source}")]
    Engine { run: u64, source: EngineError },
    #[error(transparent)]
    Baseline(#[from] BaselineError),
    #[error("cannot write {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

impl RunError {
    pub fn kind(&self) -> &'static str {
        match self {
            RunError::Engine { .. } => "engine",
            RunError::Baseline(_) => "baseline",
            RunError::Io { .. } => "io",
        }
    }
}

pub fn make_policy(config: &ExperimentConfig) -> Box<dyn Policy + Send> {
    let oracle = || -> Box<dyn Oracle + Send> {
        build_oracle(
            config.oracle.kind.base(),
            config.oracle.beta,
            config.oracle.fallback.fallback(),
        )
        .expect("beta validated")
    };
    match config.policy {
        PolicyKind::GreedyFullInfo => Box::new(GreedyPolicy::new(config.model.mu(), oracle())),
        PolicyKind::CbbsdUcb => Box::new(UcbPolicy::new(config.model.k(), oracle())),
        PolicyKind::RandomFeasible => Box::new(RandomFeasiblePolicy),
    }
}

pub fn policy_name(kind: PolicyKind) -> &'static str {
    match kind {
        PolicyKind::GreedyFullInfo => "greedy_full_info",
        PolicyKind::CbbsdUcb => "cbbsd_ucb",
        PolicyKind::RandomFeasible => "random_feasible",
    }
}

struct RunResult {
    outcome: RunOutcome,
    records: Option<Vec<RoundRecord>>,
}

fn one_run(
    config: &ExperimentConfig,
    run: u64,
    meter: &mut Option<RegretMeter>,
) -> Result<RunResult, RunError> {
    let seed = config.base_seed.wrapping_add(run);
    let keep = run < config.output.trace_runs;
    let mut policy = make_policy(config);
    let mut rng = rng_from_seed(seed);
    let mut curve = Vec::with_capacity(config.horizon as usize);
    let mut records = keep.then(Vec::new);
    let mut gamma_total = 0.0;
    run_episode_with(&config.model, &mut policy, config.horizon, &mut rng, |r| {
        curve.push(r.cum_reward);
        let gamma = match meter.as_mut() {
            Some(m) => Some(m.gamma(r.available, r.played)?),
            None => None,
        };
        gamma_total += gamma.unwrap_or(0.0);
        if let Some(recs) = records.as_mut() {
            let mut rec = r.clone();
            rec.gamma = gamma;
            recs.push(rec);
        }
        Ok(())
    })
    .map_err(|source| RunError::Engine { run, source })?;
    Ok(RunResult {
        outcome: RunOutcome {
            seed,
            cum_reward: curve,
            total_gamma: meter.is_some().then_some(gamma_total),
        },
        records,
    })
}

/// Monte-Carlo runs in parallel, reduced in run order so the result does
/// not depend on scheduling. Kept traces are streamed to `trace_out`.
pub fn simulate(
    config: &ExperimentConfig,
    mut trace_out: Option<&mut dyn Write>,
) -> Result<MonteCarloSummary, RunError> {
    const CHUNK: u64 = 64;
    let k = config.model.k();
    let meter = (k <= EXHAUSTIVE_LIMIT)
        .then(|| RegretMeter::new(&config.model, config.oracle.alpha(), config.oracle.beta));
    let io_err = |source| RunError::Io {
        path: config.output.trace_path(),
        source,
    };
    if let Some(w) = trace_out.as_deref_mut() {
        trace_csv::write_header(w).map_err(io_err)?;
    }
    let mut acc = MonteCarloAccumulator::new();
    let mut start = 0;
    while start < config.n_runs {
        let end = (start + CHUNK).min(config.n_runs);
        let results: Vec<Result<RunResult, RunError>> = (start..end)
            .into_par_iter()
            .map_init(|| meter.clone(), |m, run| one_run(config, run, m))
            .collect();
        for (run, res) in (start..end).zip(results) {
            let res = res?;
            acc.push(&res.outcome);
            if let (Some(w), Some(recs)) = (trace_out.as_deref_mut(), res.records.as_ref()) {
                for r in recs {
                    trace_csv::write_record(w, run, k, r).map_err(io_err)?;
                }
            }
        }
        start = end;
    }
    Ok(acc.finish())
}

/// Everything an experiment produced, before serialization.
#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub summary: Summary,
    pub baselines: Option<BaselineReport>,
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutput, RunError> {
    fs::create_dir_all(&config.output.dir).map_err(|source| RunError::Io {
        path: config.output.dir.clone(),
        source,
    })?;
    let trace_path = config.output.trace_path();
    let mut trace_file = BufWriter::new(create(&trace_path)?);
    let mc = simulate(config, Some(&mut trace_file))?;
    trace_file.flush().map_err(|source| RunError::Io {
        path: trace_path,
        source,
    })?;
    let output = assemble(config, &mc)?;
    write_json(&config.output.summary_path(), &output.summary)?;
    if let Some(b) = &output.baselines {
        write_json(&config.output.baselines_path(), b)?;
    }
    Ok(output)
}

fn create(path: &Path) -> Result<File, RunError> {
    File::create(path).map_err(|source| RunError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<(), RunError> {
    let mut text = serde_json::to_string_pretty(value).expect("report serializes");
    text.push('\n');
    fs::write(path, text).map_err(|source| RunError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Baselines, bounds and the summary document for a finished simulation.
pub fn assemble(
    config: &ExperimentConfig,
    mc: &MonteCarloSummary,
) -> Result<ExperimentOutput, RunError> {
    let inst: &Instance = &config.model;
    let t = config.horizon;
    let alpha = config.oracle.alpha();
    let beta = config.oracle.beta;
    let points = curve_points(t);

    let mdp = if config.wants(BaselineKind::Mdp) {
        Some(mdp_value_iteration(inst, t)?)
    } else {
        None
    };
    let z_rates = if config.wants(BaselineKind::Mdp) {
        Some(mdp_pulling_rates(inst, t)?.z)
    } else {
        None
    };
    let lp = if config.wants(BaselineKind::Lp) {
        Some(lp_upper_bound(inst, t)?)
    } else {
        None
    };
    let gaps = if config.wants(BaselineKind::Gaps) || config.wants(BaselineKind::Bounds) {
        Some(compute_gaps(inst, alpha)?)
    } else {
        None
    };
    let bounds = match (&gaps, config.wants(BaselineKind::Bounds)) {
        (Some(g), true) => {
            let (k, tf, dmax, c) = (inst.k(), t as f64, inst.d_max(), config.bound_constant);
            Some(BoundsDoc {
                dd: bound_dd(g, k, g.r, tf, alpha, beta, dmax, c).into(),
                di: bound_di(k, g.r, tf, alpha, beta, g.delta_max, dmax, c).into(),
            })
        }
        _ => None,
    };

    let rho_v = rho(alpha, beta);
    let (method, rew_star_at): (Option<BaselineMethod>, Option<Vec<f64>>) = if let Some(m) = &mdp {
        (
            Some(BaselineMethod::Mdp),
            Some(points.iter().map(|&p| m.values[p as usize]).collect()),
        )
    } else if lp.is_some() {
        let vals = points
            .iter()
            .map(|&p| lp_upper_bound(inst, p))
            .collect::<Result<Vec<_>, _>>()?;
        (Some(BaselineMethod::Lp), Some(vals))
    } else {
        (None, None)
    };
    let mean: Vec<f64> = points
        .iter()
        .map(|&p| mc.mean_cum_reward[p as usize - 1])
        .collect();
    let se: Vec<f64> = points
        .iter()
        .map(|&p| mc.se_cum_reward[p as usize - 1])
        .collect();
    let rho_regret = rew_star_at
        .as_ref()
        .map(|rs| rs.iter().zip(&mean).map(|(r, m)| rho_v * r - m).collect());
    let rew_star = method.zip(rew_star_at.as_ref().and_then(|v| v.last().copied()));

    let summary = Summary {
        config_digest: config.digest(),
        policy: policy_name(config.policy),
        horizon: t,
        n_runs: config.n_runs,
        base_seed: config.base_seed,
        alpha,
        beta,
        rho: rho_v,
        rew_star: rew_star.map(|(m, v)| RewStarDoc {
            method: m.name(),
            value: v,
        }),
        baselines: BaselineValues {
            mdp: mdp.as_ref().map(|m| m.rew_star()),
            lp,
        },
        curves: CurvesDoc {
            t: points,
            mean_cum_reward: mean,
            se_cum_reward: se,
            rho_regret,
        },
        mean_total_gamma: mc.mean_total_gamma,
        se_total_gamma: mc.se_total_gamma,
        bounds,
        gaps: gaps.as_ref().map(GapsDoc::from),
    };
    let baselines = (!config.baselines.is_empty()).then(|| BaselineReport {
        rew_star: rew_star.map(|(_, v)| v),
        method: rew_star.map(|(m, _)| m.name()),
        lp_upper_bound: lp,
        z_rates,
        gaps: gaps.as_ref().map(GapsDoc::from),
        bound_dd: bounds.map(|b| b.dd),
        bound_di: bounds.map(|b| b.di),
    });
    Ok(ExperimentOutput { summary, baselines })
}
