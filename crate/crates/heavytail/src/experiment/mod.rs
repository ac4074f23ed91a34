//! Config-driven experiments: sweeps over sample size, the lemma check
//! suite, and a random-walk sanity demo, each emitting a JSON report, a CSV
//! table, and optionally an SVG chart.
//!
//! Reruns of the same config produce byte-identical CSV bytes; the JSON
//! report differs only in `metadata.timestamp_unix`.

pub mod chart;
pub mod lemmas;
pub mod ratefit;
pub mod report;

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::noise::{verify_p_bcm, NoiseFamily, NoiseSpec};
use crate::optimizers::{run, OptimizerConfig};
use crate::problems::{make_logistic_pair, ProblemFamily, ProblemInstance};
use crate::rng::RngSpec;
use crate::stability::{
    bootstrap_mean_stderr, empirical_gen_gap, empirical_stability, estimate_theory_params,
    theoretical_report, HarnessOptions,
};
use crate::theory::{
    generalization_bound, predicted_rate_exponent, schedule_for, stability_bound, Algorithm,
    Schedule, TailParams, TheoryParams,
};
use crate::vector::Vector;

use chart::render_chart;
use lemmas::{lemma_rows, run_lemma_suite};
use ratefit::{fit_rate, RateFit};
use report::{build_report, rows_to_csv, sha256_hex, CsvRow};

/// What an experiment measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    /// Gradient stability against sample size, per algorithm.
    StabilitySweep,
    /// Population-vs-training gradient gap against sample size.
    GenGapSweep,
    /// Population gradient norm at the output against sample size, with
    /// fitted decay exponents.
    RateComparison,
    /// The inequality checks behind the analysis.
    LemmaSuite,
    /// Sign-flip random walk whose variance law is known exactly.
    RandomWalkDemo,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::StabilitySweep => "stability-sweep",
            ExperimentKind::GenGapSweep => "gen-gap-sweep",
            ExperimentKind::RateComparison => "rate-comparison",
            ExperimentKind::LemmaSuite => "lemma-suite",
            ExperimentKind::RandomWalkDemo => "random-walk-demo",
        }
    }
}

impl std::fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Noise shape and scale; the dimension is inferred from the problem.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NoiseConfig {
    #[serde(flatten)]
    pub family: NoiseFamily,
    pub scale: f64,
}

/// Which synthetic problem family a sweep runs on.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum ProblemConfig {
    /// Two opposite-label points on a logistic loss, dimension 1.
    LogisticPair,
    /// Smoothed-quadratic regression on unit-sphere inputs; `noise` is the
    /// scalar label noise. The ground-truth weight vector is drawn from the
    /// experiment seed.
    RobustRegression { dim: usize, noise: NoiseConfig },
    /// Quadratic-plus-sine objective; `noise` perturbs the record and is
    /// exactly the gradient noise.
    QuadPlusSine {
        dim: usize,
        #[serde(default)]
        c: f64,
        noise: NoiseConfig,
    },
}

fn default_reps() -> usize {
    50
}
fn default_scale() -> f64 {
    1.0
}
fn default_probes() -> usize {
    64
}
fn default_true() -> bool {
    true
}
fn default_walk_steps() -> usize {
    400
}
fn default_walk_eta() -> f64 {
    0.05
}

/// Step count and step size for the random-walk demo.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WalkConfig {
    #[serde(default = "default_walk_steps")]
    pub t_steps: usize,
    #[serde(default = "default_walk_eta")]
    pub eta: f64,
}

impl Default for WalkConfig {
    fn default() -> Self {
        WalkConfig { t_steps: default_walk_steps(), eta: default_walk_eta() }
    }
}

/// A full experiment description, normally loaded from a TOML file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub seed: u64,
    #[serde(default = "default_reps")]
    pub reps: usize,
    /// Tail exponent the schedules and bounds assume; required for sweeps.
    #[serde(default)]
    pub p: Option<f64>,
    #[serde(default)]
    pub n_grid: Vec<usize>,
    #[serde(default = "default_scale")]
    pub schedule_scale: f64,
    #[serde(default)]
    pub algorithms: Vec<Algorithm>,
    #[serde(default)]
    pub problem: Option<ProblemConfig>,
    /// Holdout size for population gradients when the family has no closed
    /// form (required for robust regression in gap and rate experiments).
    #[serde(default)]
    pub holdout: usize,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    /// Worker threads; 0 means the library default.
    #[serde(default)]
    pub parallelism: usize,
    #[serde(default = "default_probes")]
    pub probe_count: usize,
    #[serde(default = "default_true")]
    pub charts: bool,
    #[serde(default)]
    pub walk: Option<WalkConfig>,
}

fn field_err(path: &str, message: impl Into<String>) -> Error {
    Error::Config { path: path.to_string(), message: message.into() }
}

impl ExperimentConfig {
    /// Semantic checks beyond what deserialization enforces. Error paths
    /// name the offending field.
    pub fn validate(&self) -> Result<()> {
        use ExperimentKind::*;
        if matches!(self.kind, StabilitySweep | GenGapSweep | RateComparison | RandomWalkDemo)
            && self.reps < 10
        {
            return Err(field_err("reps", format!("need at least 10 replications, got {}", self.reps)));
        }
        if !(self.schedule_scale > 0.0 && self.schedule_scale.is_finite()) {
            return Err(field_err(
                "schedule_scale",
                format!("must be positive and finite, got {}", self.schedule_scale),
            ));
        }
        if self.probe_count < 1 {
            return Err(field_err("probe_count", "must be at least 1"));
        }
        if matches!(self.kind, StabilitySweep | GenGapSweep | RateComparison) {
            let p = self
                .p
                .ok_or_else(|| field_err("p", format!("required for kind {}", self.kind)))?;
            if !(p > 1.0 && p <= 2.0) {
                return Err(field_err("p", format!("must lie in (1, 2], got {p}")));
            }
            if self.n_grid.len() < 2 {
                return Err(field_err("n_grid", "need at least two sample sizes"));
            }
            if self.n_grid.windows(2).any(|w| w[0] >= w[1]) {
                return Err(field_err("n_grid", "sample sizes must be strictly increasing"));
            }
            if self.n_grid[0] < 2 {
                return Err(field_err("n_grid", "sample sizes must be at least 2"));
            }
            if self.algorithms.is_empty() {
                return Err(field_err("algorithms", "need at least one algorithm"));
            }
            for (i, a) in self.algorithms.iter().enumerate() {
                if self.algorithms[..i].contains(a) {
                    return Err(field_err("algorithms", format!("duplicate entry {a}")));
                }
            }
            let problem = self
                .problem
                .as_ref()
                .ok_or_else(|| field_err("problem", format!("required for kind {}", self.kind)))?;
            build_family(problem, RngSpec::new(0))
                .map_err(|e| field_err("problem", e.to_string()))?;
            let is_rr = matches!(problem, ProblemConfig::RobustRegression { .. });
            if is_rr && matches!(self.kind, GenGapSweep | RateComparison) && self.holdout < 1 {
                return Err(field_err(
                    "holdout",
                    "robust regression has no closed-form population gradient; set a holdout size",
                ));
            }
        }
        if self.kind == RandomWalkDemo {
            let walk = self.walk.unwrap_or_default();
            if walk.t_steps < 8 {
                return Err(field_err("walk.t_steps", "need at least 8 steps"));
            }
            if !(walk.eta > 0.0 && walk.eta.is_finite()) {
                return Err(field_err("walk.eta", format!("must be positive and finite, got {}", walk.eta)));
            }
        }
        Ok(())
    }
}

/// Parses and validates a TOML experiment config, returning the raw bytes
/// alongside for hashing into the report.
pub fn load_config(path: &Path) -> Result<(ExperimentConfig, Vec<u8>)> {
    let bytes = fs::read(path)?;
    let text = std::str::from_utf8(&bytes).map_err(|_| Error::Config {
        path: path.display().to_string(),
        message: "config is not valid UTF-8".into(),
    })?;
    let config: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    config.validate().map_err(|e| match e {
        Error::Config { path: field, message } => Error::Config {
            path: format!("{}: {}", path.display(), field),
            message,
        },
        other => other,
    })?;
    Ok((config, bytes))
}

/// Materializes the configured problem family; the ground-truth vector for
/// robust regression comes from `seed`.
pub fn build_family(problem: &ProblemConfig, seed: RngSpec) -> Result<ProblemFamily> {
    match problem {
        ProblemConfig::LogisticPair => Ok(ProblemFamily::LogisticPair),
        ProblemConfig::RobustRegression { dim, noise } => {
            if *dim < 1 {
                return Err(Error::invalid("dim must be >= 1"));
            }
            let mut rng = seed.child(XTRUE_STREAM).build();
            let mut x_true: Vec<f64> =
                (0..*dim).map(|_| StandardNormal.sample(&mut rng)).collect();
            let norm = x_true.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > 0.0 {
                for v in &mut x_true {
                    *v /= norm;
                }
            } else {
                x_true[0] = 1.0;
            }
            ProblemFamily::robust_regression(
                Vector::new(x_true)?,
                NoiseSpec::new(noise.family, noise.scale, 1)?,
            )
        }
        ProblemConfig::QuadPlusSine { dim, c, noise } => ProblemFamily::quad_plus_sine(
            *dim,
            *c,
            NoiseSpec::new(noise.family, noise.scale, *dim)?,
        ),
    }
}

/// Everything an experiment produces, ready to be written.
#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub report: Value,
    pub rows: Vec<CsvRow>,
    pub chart: Option<String>,
    /// Number of failed lemma checks (zero for other kinds).
    pub failed_checks: usize,
}

/// Per-algorithm fitted decay, sorted fastest first (ties broken by name).
pub fn compare_algorithms(fits: &[(Algorithm, RateFit)]) -> Vec<Algorithm> {
    let mut order: Vec<usize> = (0..fits.len()).collect();
    order.sort_by(|&a, &b| {
        fits[a]
            .1
            .slope
            .partial_cmp(&fits[b].1.slope)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| fits[a].0.name().cmp(fits[b].0.name()))
    });
    order.into_iter().map(|i| fits[i].0).collect()
}

const STABILITY_STREAM: u64 = 1;
const GAP_STREAM: u64 = 2;
const RATE_STREAM: u64 = 3;
const WALK_STREAM: u64 = 4;
const SIGMA_STREAM: u64 = 5;
const PROBE_DATA_STREAM: u64 = 6;
const XTRUE_STREAM: u64 = 7;
const ESTIMATE_STREAM: u64 = 13;

/// Runs the configured experiment. `config_bytes` are hashed into the
/// report (pass the TOML file bytes, or a canonical stand-in).
pub fn run_experiment(config: &ExperimentConfig, config_bytes: &[u8]) -> Result<ExperimentOutcome> {
    config.validate()?;
    let body = || -> Result<(Value, Vec<CsvRow>, Vec<String>, usize)> {
        match config.kind {
            ExperimentKind::StabilitySweep => stability_sweep(config),
            ExperimentKind::GenGapSweep => gen_gap_sweep(config),
            ExperimentKind::RateComparison => rate_comparison(config),
            ExperimentKind::LemmaSuite => lemma_suite(config),
            ExperimentKind::RandomWalkDemo => random_walk_demo(config),
        }
    };
    let (results, rows, caveats, failed_checks) = if config.parallelism > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(config.parallelism)
            .build()
            .map_err(|e| Error::Report(format!("thread pool: {e}")))?
            .install(body)?
    } else {
        body()?
    };
    let timestamp = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let echo = serde_json::to_value(config).map_err(|e| Error::Report(e.to_string()))?;
    let report = build_report(echo, &sha256_hex(config_bytes), results, caveats, timestamp);
    let chart = if config.charts && config.kind != ExperimentKind::LemmaSuite {
        Some(render_chart(&rows, config.kind.name())?)
    } else {
        None
    };
    Ok(ExperimentOutcome { report, rows, chart, failed_checks })
}

/// Files produced by [`write_outcome`].
#[derive(Debug, Clone)]
pub struct WrittenPaths {
    pub report: PathBuf,
    pub table: PathBuf,
    pub chart: Option<PathBuf>,
}

/// Where outputs go: the config's `output_dir`, else `$HEAVYTAIL_OUT`, else
/// the working directory.
pub fn resolve_output_dir(config: &ExperimentConfig) -> PathBuf {
    config
        .output_dir
        .clone()
        .or_else(|| std::env::var_os("HEAVYTAIL_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."))
}

/// Writes report.json, table.csv, and chart.svg (when rendered) into `dir`.
pub fn write_outcome(outcome: &ExperimentOutcome, dir: &Path) -> Result<WrittenPaths> {
    fs::create_dir_all(dir)?;
    let report_path = dir.join("report.json");
    let mut report_text =
        serde_json::to_string_pretty(&outcome.report).map_err(|e| Error::Report(e.to_string()))?;
    report_text.push('\n');
    fs::write(&report_path, report_text)?;
    let table_path = dir.join("table.csv");
    fs::write(&table_path, rows_to_csv(&outcome.rows)?)?;
    let chart_path = match &outcome.chart {
        Some(svg) => {
            let p = dir.join("chart.svg");
            fs::write(&p, svg)?;
            Some(p)
        }
        None => None,
    };
    Ok(WrittenPaths { report: report_path, table: table_path, chart: chart_path })
}

struct SweepSetup {
    family: ProblemFamily,
    p: f64,
    l_smooth: f64,
    x0: Vector,
}

fn sweep_setup(config: &ExperimentConfig) -> Result<SweepSetup> {
    let p = config.p.expect("validated");
    let problem = config.problem.as_ref().expect("validated");
    let family = build_family(problem, RngSpec::new(config.seed))?;
    // smoothness from a probe dataset; constant across datasets for every
    // built-in family (unit-norm rows make robust regression exactly 2)
    let mut probe_rng = RngSpec::new(config.seed).child(PROBE_DATA_STREAM).build();
    let probe = family.make_dataset(32, &mut probe_rng)?;
    let l_smooth = family.smoothness(&probe);
    let x0 = Vector::zeros(family.dim());
    Ok(SweepSetup { family, p, l_smooth, x0 })
}

fn cell_schedule(config: &ExperimentConfig, alg: Algorithm, n: usize, p: f64) -> Result<Schedule> {
    schedule_for(alg, n, p, config.schedule_scale)
}

fn status_for(failed: usize) -> String {
    if failed == 0 {
        "ok".into()
    } else {
        format!("failed:{failed}")
    }
}

fn base_row(kind: &str, alg: Algorithm, n: usize, schedule: &Schedule, reps: u64) -> CsvRow {
    CsvRow {
        kind: kind.into(),
        algorithm: alg.name().into(),
        n: n as u64,
        t_steps: schedule.t_steps as u64,
        eta: schedule.eta,
        gamma: schedule.gamma,
        beta: schedule.beta,
        batch: schedule.batch.map(|b| b as u64),
        reps,
        metric: f64::NAN,
        metric_stderr: 0.0,
        metric_lo: f64::NAN,
        metric_hi: f64::NAN,
        theory_bound: None,
        predicted_slope: None,
        status: "ok".into(),
    }
}

/// Fits ln metric against ln n; `None` when any metric is unusable.
fn try_fit(ns: &[usize], metrics: &[f64]) -> Option<RateFit> {
    let nf: Vec<f64> = ns.iter().map(|n| *n as f64).collect();
    fit_rate(&nf, metrics).ok()
}

fn stability_sweep(config: &ExperimentConfig) -> Result<(Value, Vec<CsvRow>, Vec<String>, usize)> {
    let setup = sweep_setup(config)?;
    let theory = TheoryParams::new(setup.l_smooth, 1.0, 0.0)?;
    let opts = HarnessOptions { reps: config.reps, probe_count: config.probe_count, holdout: 0 };
    let mut rows = Vec::new();
    let mut cells = Vec::new();
    let mut fits = Vec::new();
    for (ai, &alg) in config.algorithms.iter().enumerate() {
        let mut metrics = Vec::new();
        let mut bounds = Vec::new();
        let mut alg_rows = Vec::new();
        for &n in &config.n_grid {
            let schedule = cell_schedule(config, alg, n, setup.p)?;
            let cell_seed = RngSpec::new(config.seed).child(STABILITY_STREAM).child(ai as u64).child(n as u64);
            let opt_config =
                OptimizerConfig::new(alg, schedule, setup.x0.clone(), cell_seed);
            let est = empirical_stability(&setup.family, n, &opt_config, &opts)?;
            let bound = stability_bound(alg, &schedule, &theory, n)?;
            let mut row = base_row("stability-sweep", alg, n, &schedule, config.reps as u64);
            row.metric = est.epsilon_hat;
            row.metric_stderr = est.stderr;
            row.metric_lo = est.lower;
            row.metric_hi = est.upper;
            row.theory_bound = Some(bound);
            row.status = status_for(est.failed_reps);
            alg_rows.push(row);
            metrics.push(est.epsilon_hat);
            bounds.push(bound);
            cells.push(json!({
                "algorithm": alg.name(),
                "n": n,
                "epsilon_hat": est.epsilon_hat,
                "stderr": est.stderr,
                "lower": est.lower,
                "upper": est.upper,
                "theory_bound": bound,
                "failed_reps": est.failed_reps,
            }));
        }
        let theory_slope = try_fit(&config.n_grid, &bounds).map(|f| f.slope);
        for row in &mut alg_rows {
            row.predicted_slope = theory_slope;
        }
        rows.extend(alg_rows);
        let empirical = try_fit(&config.n_grid, &metrics);
        fits.push(json!({
            "algorithm": alg.name(),
            "empirical": empirical,
            "theory_slope": theory_slope,
        }));
    }
    let caveats = vec![
        format!(
            "stability estimates take the worst of {} probe draws per replication, a lower proxy for the supremum over records",
            config.probe_count
        ),
        "the bound column uses the family's closed-form smoothness and ignores the gradient-moment constant, which the stability bound does not involve".into(),
    ];
    Ok((json!({ "cells": cells, "fits": fits }), rows, caveats, 0))
}

/// Worst-case p-th noise moment over a small probe set, measured on a probe
/// instance (with a holdout attached when the family needs one).
fn measure_sigma_p(
    config: &ExperimentConfig,
    family: &ProblemFamily,
    p: f64,
    x0: &Vector,
) -> Result<f64> {
    let seed = RngSpec::new(config.seed).child(SIGMA_STREAM);
    let mut rng = seed.child(0).build();
    let dataset = family.make_dataset(64, &mut rng)?;
    let mut instance = ProblemInstance::new(family.clone(), dataset)?;
    if instance.population_grad(x0).is_err() {
        instance = instance.with_holdout(config.holdout.max(4096), seed.child(1))?;
    }
    let mut points = vec![x0.clone()];
    let mut point_rng = seed.child(2).build();
    for _ in 0..3 {
        let coords: Vec<f64> =
            (0..x0.dim()).map(|_| StandardNormal.sample(&mut point_rng)).collect();
        points.push(Vector::new(coords)?);
    }
    let check = verify_p_bcm(&instance, &points, p, 20_000, seed.child(3))?;
    Ok(check.max_sigma_p)
}

fn gen_gap_sweep(config: &ExperimentConfig) -> Result<(Value, Vec<CsvRow>, Vec<String>, usize)> {
    let setup = sweep_setup(config)?;
    let theory = TheoryParams::new(setup.l_smooth, 1.0, 0.0)?;
    let sigma_hat = measure_sigma_p(config, &setup.family, setup.p, &setup.x0)?;
    let tail = TailParams::new(setup.p, sigma_hat)?;
    let opts = HarnessOptions {
        reps: config.reps,
        probe_count: config.probe_count,
        holdout: config.holdout,
    };
    let mut rows = Vec::new();
    let mut cells = Vec::new();
    let mut fits = Vec::new();
    for (ai, &alg) in config.algorithms.iter().enumerate() {
        let mut metrics = Vec::new();
        let mut bounds = Vec::new();
        let mut alg_rows = Vec::new();
        for &n in &config.n_grid {
            let schedule = cell_schedule(config, alg, n, setup.p)?;
            let cell_seed = RngSpec::new(config.seed).child(GAP_STREAM).child(ai as u64).child(n as u64);
            let opt_config =
                OptimizerConfig::new(alg, schedule, setup.x0.clone(), cell_seed);
            let est = empirical_gen_gap(&setup.family, n, &opt_config, &opts)?;
            let eps_theory = stability_bound(alg, &schedule, &theory, n)?;
            let bound = generalization_bound(eps_theory, &tail, n)?;
            let mut row = base_row("gen-gap-sweep", alg, n, &schedule, config.reps as u64);
            row.metric = est.gap_hat;
            row.metric_stderr = est.stderr;
            row.metric_lo = (est.gap_hat - 1.96 * est.stderr).max(0.0);
            row.metric_hi = est.gap_hat + 1.96 * est.stderr;
            row.theory_bound = Some(bound);
            row.status = status_for(est.failed_reps);
            alg_rows.push(row);
            metrics.push(est.gap_hat);
            bounds.push(bound);
            cells.push(json!({
                "algorithm": alg.name(),
                "n": n,
                "gap_hat": est.gap_hat,
                "stderr": est.stderr,
                "theory_bound": bound,
                "stability_term": eps_theory,
                "failed_reps": est.failed_reps,
                "population_mc_stderr": est.population_mc_stderr,
            }));
        }
        let theory_slope = try_fit(&config.n_grid, &bounds).map(|f| f.slope);
        for row in &mut alg_rows {
            row.predicted_slope = theory_slope;
        }
        rows.extend(alg_rows);
        fits.push(json!({
            "algorithm": alg.name(),
            "empirical": try_fit(&config.n_grid, &metrics),
            "theory_slope": theory_slope,
        }));
    }
    let caveats = vec![
        format!("the bound column plugs the measured noise moment {sigma_hat:.6} into the closed form instead of an a-priori constant"),
        "population gradients use the family closed form when it exists, otherwise a holdout average".into(),
    ];
    Ok((
        json!({ "cells": cells, "fits": fits, "sigma_p_hat": sigma_hat }),
        rows,
        caveats,
        0,
    ))
}

fn rate_comparison(config: &ExperimentConfig) -> Result<(Value, Vec<CsvRow>, Vec<String>, usize)> {
    let setup = sweep_setup(config)?;
    let sigma_hat = measure_sigma_p(config, &setup.family, setup.p, &setup.x0)?;
    let tail = TailParams::new(setup.p, sigma_hat)?;
    let needs_holdout = {
        let mut rng = RngSpec::new(config.seed).child(PROBE_DATA_STREAM).child(1).build();
        let probe = setup.family.make_dataset(4, &mut rng)?;
        ProblemInstance::new(setup.family.clone(), probe)?.population_grad(&setup.x0).is_err()
    };
    let mut rows = Vec::new();
    let mut cells = Vec::new();
    let mut fit_pairs = Vec::new();
    for (ai, &alg) in config.algorithms.iter().enumerate() {
        let predicted = predicted_rate_exponent(alg, setup.p)?;
        let mut metrics = Vec::new();
        for &n in &config.n_grid {
            let schedule = cell_schedule(config, alg, n, setup.p)?;
            let cell_seed = RngSpec::new(config.seed).child(RATE_STREAM).child(ai as u64).child(n as u64);
            let opt_config =
                OptimizerConfig::new(alg, schedule, setup.x0.clone(), cell_seed)
                    .with_record_every(schedule.t_steps.max(1));
            let per_rep: Vec<Result<f64>> = (0..config.reps)
                .into_par_iter()
                .map(|r| {
                    let rep = r as u64;
                    let mut data_rng = cell_seed.child(10).child(rep).build();
                    let dataset = setup.family.make_dataset(n, &mut data_rng)?;
                    let mut problem = ProblemInstance::new(setup.family.clone(), dataset)?;
                    if needs_holdout {
                        problem =
                            problem.with_holdout(config.holdout, cell_seed.child(11).child(rep))?;
                    }
                    let run_config = OptimizerConfig {
                        seed: cell_seed.child(12).child(rep),
                        ..opt_config.clone()
                    };
                    let traj = run(&problem, &run_config)?;
                    Ok(problem.population_grad(&traj.output)?.norm())
                })
                .collect();
            let mut values = Vec::with_capacity(config.reps);
            let mut failed = 0usize;
            for r in per_rep {
                match r {
                    Ok(v) => values.push(v),
                    Err(_) => failed += 1,
                }
            }
            if values.is_empty() {
                return Err(Error::Report(format!(
                    "all {} runs failed for {} at n = {n}",
                    config.reps,
                    alg.name()
                )));
            }
            let mean = values.iter().sum::<f64>() / values.len() as f64;
            let stderr = bootstrap_mean_stderr(&values, cell_seed.child(13));
            let est = estimate_theory_params(
                &setup.family,
                n,
                &OptimizerConfig {
                    seed: RngSpec::new(config.seed).child(ESTIMATE_STREAM).child(ai as u64).child(n as u64),
                    ..opt_config.clone()
                },
                setup.p,
                config.reps.min(8),
                16,
            )?;
            let bound = theoretical_report(alg, &schedule, &est, &tail, n)?.total;
            let mut row = base_row("rate-comparison", alg, n, &schedule, config.reps as u64);
            row.metric = mean;
            row.metric_stderr = stderr;
            row.metric_lo = (mean - 1.96 * stderr).max(0.0);
            row.metric_hi = mean + 1.96 * stderr;
            row.theory_bound = Some(bound);
            row.predicted_slope = Some(predicted);
            row.status = status_for(failed);
            rows.push(row);
            metrics.push(mean);
            cells.push(json!({
                "algorithm": alg.name(),
                "n": n,
                "grad_norm": mean,
                "stderr": stderr,
                "theory_bound": bound,
                "estimated_g": est.g_moment,
                "estimated_delta": est.delta,
                "failed_reps": failed,
            }));
        }
        if let Some(fit) = try_fit(&config.n_grid, &metrics) {
            fit_pairs.push((alg, fit));
        }
    }
    let ranking: Vec<&str> =
        compare_algorithms(&fit_pairs).into_iter().map(|a| a.name()).collect();
    let fits: Vec<Value> = fit_pairs
        .iter()
        .map(|(alg, fit)| {
            let predicted = predicted_rate_exponent(*alg, setup.p).expect("validated p");
            json!({
                "algorithm": alg.name(),
                "empirical": fit,
                "predicted_slope": predicted,
                "within_three_stderr": (fit.slope - predicted).abs() <= (3.0 * fit.slope_stderr).max(0.1),
            })
        })
        .collect();
    let caveats = vec![
        "the bound column plugs measured smoothness, gradient moments, and objective drops into the closed form; it is a plug-in estimate, not an a-priori guarantee".into(),
        "fitted slopes on short grids carry wide uncertainty; compare against predicted_slope with the reported stderr in mind".into(),
    ];
    Ok((
        json!({ "cells": cells, "fits": fits, "ranking": ranking, "sigma_p_hat": sigma_hat }),
        rows,
        caveats,
        0,
    ))
}

fn lemma_suite(config: &ExperimentConfig) -> Result<(Value, Vec<CsvRow>, Vec<String>, usize)> {
    let checks = run_lemma_suite(RngSpec::new(config.seed))?;
    let failed = checks.iter().filter(|c| !c.passed).count();
    let rows = lemma_rows(&checks, config.seed);
    let results = json!({
        "checks": serde_json::to_value(&checks).map_err(|e| Error::Report(e.to_string()))?,
        "failed": failed,
    });
    let caveats = vec![
        "pointwise inequalities are checked on random draws; the averaged inequality carries explicit Monte Carlo slack".into(),
    ];
    Ok((results, rows, caveats, failed))
}

fn random_walk_demo(config: &ExperimentConfig) -> Result<(Value, Vec<CsvRow>, Vec<String>, usize)> {
    let walk = config.walk.unwrap_or_default();
    let problem = make_logistic_pair();
    // one extra step so the final checkpoint's iterate is recorded
    let schedule = Schedule {
        t_steps: walk.t_steps + 1,
        eta: walk.eta,
        gamma: None,
        beta: None,
        batch: Some(1),
    };
    let positions: Vec<Result<Vec<f64>>> = (0..config.reps)
        .into_par_iter()
        .map(|r| {
            let seed = RngSpec::new(config.seed).child(WALK_STREAM).child(r as u64);
            let cfg = OptimizerConfig::new(Algorithm::NsgdB, schedule, Vector::zeros(1), seed);
            let traj = run(&problem, &cfg)?;
            let checkpoints: Vec<f64> = (1..=8)
                .map(|k| {
                    let t = walk.t_steps * k / 8;
                    traj.iterate_at(t).expect("record_every is 1")[0]
                })
                .collect();
            Ok(checkpoints)
        })
        .collect();
    let mut samples: Vec<Vec<f64>> = (0..8).map(|_| Vec::with_capacity(config.reps)).collect();
    for r in positions {
        let row = r?;
        for (k, v) in row.into_iter().enumerate() {
            samples[k].push(v);
        }
    }
    let mut rows = Vec::new();
    let mut checkpoints = Vec::new();
    let mut max_rel_gap = 0.0f64;
    for (k, values) in samples.iter().enumerate() {
        let t = walk.t_steps * (k + 1) / 8;
        let m = values.len() as f64;
        let mean = values.iter().sum::<f64>() / m;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (m - 1.0);
        let stderr = var * (2.0 / (m - 1.0)).sqrt();
        let theory = walk.eta * walk.eta * t as f64;
        max_rel_gap = max_rel_gap.max((var - theory).abs() / theory);
        let mut row = base_row("random-walk-demo", Algorithm::NsgdB, 2, &schedule, config.reps as u64);
        row.t_steps = t as u64;
        row.metric = var;
        row.metric_stderr = stderr;
        row.metric_lo = (var - 1.96 * stderr).max(f64::MIN_POSITIVE);
        row.metric_hi = var + 1.96 * stderr;
        row.theory_bound = Some(theory);
        row.predicted_slope = Some(1.0);
        rows.push(row);
        checkpoints.push(json!({
            "step": t,
            "variance": var,
            "theory": theory,
            "stderr": stderr,
        }));
    }
    let caveats = vec![
        "on the two-point logistic problem the normalized single-sample step is an exact coin flip, so iterate variance must equal eta^2 t; variance standard errors use a normal approximation".into(),
    ];
    Ok((
        json!({ "checkpoints": checkpoints, "max_relative_gap": max_rel_gap }),
        rows,
        caveats,
        0,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::report::{rows_from_csv, validate_report};

    const QPS_TOML: &str = r#"
kind = "stability-sweep"
seed = 7
reps = 10
p = 1.5
n_grid = [16, 32]
schedule_scale = 0.5
algorithms = ["nsgd-b", "clipped-sgd"]
probe_count = 4
charts = true

[problem]
family = "quad-plus-sine"
dim = 2
c = 0.1
noise = { family = "gaussian", scale = 1.0 }
"#;

    #[test]
    fn toml_round_trip_and_defaults() {
        let config: ExperimentConfig = toml::from_str(QPS_TOML).unwrap();
        config.validate().unwrap();
        assert_eq!(config.kind, ExperimentKind::StabilitySweep);
        assert_eq!(config.holdout, 0);
        assert_eq!(config.parallelism, 0);
        assert!(config.output_dir.is_none());
        match config.problem.as_ref().unwrap() {
            ProblemConfig::QuadPlusSine { dim, c, noise } => {
                assert_eq!(*dim, 2);
                assert_eq!(*c, 0.1);
                assert_eq!(noise.scale, 1.0);
            }
            other => panic!("wrong family: {other:?}"),
        }
    }

    #[test]
    fn unknown_field_is_rejected() {
        let text = format!("bogus_field = 3\n{QPS_TOML}");
        let err = toml::from_str::<ExperimentConfig>(&text).unwrap_err();
        assert!(err.to_string().contains("bogus_field"), "{err}");
    }

    #[test]
    fn validation_names_the_field() {
        let mut config: ExperimentConfig = toml::from_str(QPS_TOML).unwrap();
        config.n_grid = vec![32, 16];
        let err = config.validate().unwrap_err().to_string();
        assert!(err.contains("n_grid"), "{err}");

        let mut config: ExperimentConfig = toml::from_str(QPS_TOML).unwrap();
        config.p = None;
        let err = config.validate().unwrap_err().to_string();
        assert!(err.contains("`p`"), "{err}");

        let mut config: ExperimentConfig = toml::from_str(QPS_TOML).unwrap();
        config.reps = 3;
        let err = config.validate().unwrap_err().to_string();
        assert!(err.contains("reps"), "{err}");

        let mut config: ExperimentConfig = toml::from_str(QPS_TOML).unwrap();
        config.algorithms.push(Algorithm::NsgdB);
        let err = config.validate().unwrap_err().to_string();
        assert!(err.contains("algorithms") && err.contains("duplicate"), "{err}");
    }

    #[test]
    fn gap_on_robust_regression_requires_holdout() {
        let text = r#"
kind = "gen-gap-sweep"
seed = 1
reps = 10
p = 1.5
n_grid = [16, 32]
algorithms = ["nsgd-m"]

[problem]
family = "robust-regression"
dim = 3
noise = { family = "student-t", nu = 3.0, scale = 0.5 }
"#;
        let config: ExperimentConfig = toml::from_str(text).unwrap();
        let err = config.validate().unwrap_err().to_string();
        assert!(err.contains("holdout"), "{err}");
    }

    #[test]
    fn stability_sweep_end_to_end() {
        let config: ExperimentConfig = toml::from_str(QPS_TOML).unwrap();
        let outcome = run_experiment(&config, QPS_TOML.as_bytes()).unwrap();
        validate_report(&outcome.report).unwrap();
        assert_eq!(outcome.failed_checks, 0);
        assert_eq!(outcome.rows.len(), 4, "2 algorithms x 2 sample sizes");
        for row in &outcome.rows {
            assert!(row.metric >= 0.0 && row.metric.is_finite());
            assert!(row.theory_bound.unwrap() > 0.0);
            assert_eq!(row.status, "ok");
        }
        let csv = rows_to_csv(&outcome.rows).unwrap();
        assert_eq!(rows_from_csv(&csv).unwrap(), outcome.rows);
        assert!(outcome.chart.is_some());

        // rerun: identical rows, identical chart; report differs at most in
        // the timestamp
        let again = run_experiment(&config, QPS_TOML.as_bytes()).unwrap();
        assert_eq!(outcome.rows, again.rows);
        assert_eq!(outcome.chart, again.chart);
        assert_eq!(outcome.report["results"], again.report["results"]);
        assert_eq!(outcome.report["config_hash"], again.report["config_hash"]);
    }

    #[test]
    fn lemma_suite_runs_clean() {
        let config = ExperimentConfig {
            kind: ExperimentKind::LemmaSuite,
            seed: 11,
            reps: default_reps(),
            p: None,
            n_grid: vec![],
            schedule_scale: 1.0,
            algorithms: vec![],
            problem: None,
            holdout: 0,
            output_dir: None,
            parallelism: 0,
            probe_count: default_probes(),
            charts: true,
            walk: None,
        };
        let outcome = run_experiment(&config, b"inline").unwrap();
        assert_eq!(outcome.failed_checks, 0);
        assert!(outcome.chart.is_none(), "lemma suite has nothing to chart");
        assert_eq!(outcome.report["results"]["failed"], 0);
        validate_report(&outcome.report).unwrap();
    }

    #[test]
    fn walk_demo_tracks_linear_variance() {
        let config = ExperimentConfig {
            kind: ExperimentKind::RandomWalkDemo,
            seed: 21,
            reps: 200,
            p: None,
            n_grid: vec![],
            schedule_scale: 1.0,
            algorithms: vec![],
            problem: None,
            holdout: 0,
            output_dir: None,
            parallelism: 0,
            probe_count: default_probes(),
            charts: false,
            walk: Some(WalkConfig { t_steps: 64, eta: 0.1 }),
        };
        let outcome = run_experiment(&config, b"inline").unwrap();
        assert_eq!(outcome.rows.len(), 8);
        let last = outcome.rows.last().unwrap();
        assert_eq!(last.t_steps, 64);
        let theory = last.theory_bound.unwrap();
        assert!((theory - 0.64).abs() < 1e-12);
        // 200 reps put the sample variance within ~20% of eta^2 t
        assert!(
            (last.metric - theory).abs() < 0.25 * theory,
            "variance {} vs theory {theory}",
            last.metric
        );
    }

    #[test]
    fn output_dir_resolution() {
        let mut config: ExperimentConfig = toml::from_str(QPS_TOML).unwrap();
        config.output_dir = Some(PathBuf::from("/tmp/somewhere"));
        assert_eq!(resolve_output_dir(&config), PathBuf::from("/tmp/somewhere"));
        config.output_dir = None;
        // without the env var set, falls back to the working directory
        if std::env::var_os("HEAVYTAIL_OUT").is_none() {
            assert_eq!(resolve_output_dir(&config), PathBuf::from("."));
        }
    }

    #[test]
    fn comparison_orders_by_slope() {
        let fit = |slope: f64| RateFit {
            slope,
            slope_stderr: 0.0,
            intercept: 0.0,
            r_squared: 1.0,
            points: vec![],
        };
        let order = compare_algorithms(&[
            (Algorithm::ClippedSgd, fit(-0.08)),
            (Algorithm::NsgdM, fit(-0.12)),
            (Algorithm::NsgdB, fit(-0.12)),
        ]);
        assert_eq!(order, vec![Algorithm::NsgdB, Algorithm::NsgdM, Algorithm::ClippedSgd]);
    }
}
