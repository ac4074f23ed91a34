//! Measures how much one swapped sample can move a trained model's
//! gradients, and compares against the closed-form predictions.
//!
//! The coupling trick: two runs with the same config share both derived
//! randomness streams, so they sample identical component indices on the
//! base and perturbed datasets. Until a sampled index hits the replaced
//! position the trajectories are bitwise equal, which makes the per-sample
//! influence measurable without any variance from the algorithm itself.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::clip::clip;
use crate::error::{Error, Result};
use crate::noise::estimate_p_moment;
use crate::optimizers::{run, OptimizerConfig, Trajectory};
use crate::problems::{ProblemFamily, ProblemInstance};
use crate::rng::RngSpec;
use crate::theory::{
    moment_constant, Algorithm, Schedule, TailParams, TheoryParams,
};
use crate::vector::Vector;

/// Stream labels under the experiment seed; one per independent consumer.
const DATASET_STREAM: u64 = 1;
const REPLACEMENT_STREAM: u64 = 2;
const PROBE_STREAM: u64 = 3;
const RUN_STREAM: u64 = 4;
const BOOTSTRAP_STREAM: u64 = 5;
const HOLDOUT_STREAM: u64 = 6;

const BOOTSTRAP_RESAMPLES: usize = 1000;

/// A problem and its neighbor: same family, datasets differing in one row.
#[derive(Debug, Clone)]
pub struct NeighborPair {
    pub base: ProblemInstance,
    pub perturbed: ProblemInstance,
    pub replaced_index: usize,
}

/// Replaces row `index` of the problem's dataset with a fresh draw from the
/// family. For discrete families the fresh row may coincide with the old
/// one; the datasets still differ in no position other than `index`.
pub fn make_neighbor(
    problem: &ProblemInstance,
    index: usize,
    rng: &mut impl rand::Rng,
) -> Result<NeighborPair> {
    if index >= problem.n() {
        return Err(Error::IndexOutOfRange { index, len: problem.n() });
    }
    let fresh = problem.family().sample_record(rng);
    let perturbed_data = problem.dataset().with_row_replaced(index, &fresh)?;
    Ok(NeighborPair {
        base: problem.clone(),
        perturbed: problem.with_dataset(perturbed_data)?,
        replaced_index: index,
    })
}

/// Both trajectories of a coupled run.
#[derive(Debug, Clone)]
pub struct CoupledRun {
    pub base: Trajectory,
    pub perturbed: Trajectory,
    pub replaced_index: usize,
}

impl CoupledRun {
    /// Whether any sampled index hit the replaced position.
    pub fn replacement_hit(&self) -> bool {
        self.base.index_log.contains(&self.replaced_index)
    }
}

/// Runs the same config on both datasets of a neighbor pair. The two runs
/// consume identical index and output streams.
pub fn coupled_run(pair: &NeighborPair, config: &OptimizerConfig) -> Result<CoupledRun> {
    let base = run(&pair.base, config)?;
    let perturbed = run(&pair.perturbed, config)?;
    debug_assert_eq!(base.index_log, perturbed.index_log);
    Ok(CoupledRun { base, perturbed, replaced_index: pair.replaced_index })
}

/// Aggregated empirical stability estimate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StabilityEstimate {
    /// sqrt of the mean per-replication maximum squared gradient
    /// discrepancy over probe samples.
    pub epsilon_hat: f64,
    /// Bootstrap standard error of `epsilon_hat`.
    pub stderr: f64,
    /// Bootstrap 2.5th / 97.5th percentiles of `epsilon_hat`.
    pub lower: f64,
    pub upper: f64,
    /// Per-replication maxima (squared scale) that were aggregated.
    pub per_rep_max_sq: Vec<f64>,
    pub failed_reps: usize,
}

/// How the harness derives randomness and how many probes/replications to
/// spend on each estimate.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct HarnessOptions {
    pub reps: usize,
    /// Fresh samples per replication used to approximate the sup over xi.
    pub probe_count: usize,
    /// Holdout size for families without a closed-form population gradient
    /// (0 means rely on the closed form).
    pub holdout: usize,
}

impl Default for HarnessOptions {
    fn default() -> Self {
        HarnessOptions { reps: 100, probe_count: 64, holdout: 0 }
    }
}

fn bootstrap_sqrt_mean(values: &[f64], seed: RngSpec) -> (f64, f64, f64) {
    use rand::Rng;
    let mut rng = seed.build();
    let mut estimates = Vec::with_capacity(BOOTSTRAP_RESAMPLES);
    for _ in 0..BOOTSTRAP_RESAMPLES {
        let mut acc = 0.0;
        for _ in 0..values.len() {
            acc += values[rng.random_range(0..values.len())];
        }
        estimates.push((acc / values.len() as f64).sqrt());
    }
    let mean: f64 = estimates.iter().sum::<f64>() / estimates.len() as f64;
    let var: f64 = estimates.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>()
        / (estimates.len() - 1) as f64;
    estimates.sort_by(|a, b| a.partial_cmp(b).expect("finite estimates"));
    let lo = estimates[(0.025 * estimates.len() as f64).floor() as usize];
    let hi = estimates[((0.975 * estimates.len() as f64).ceil() as usize - 1).min(estimates.len() - 1)];
    (var.sqrt(), lo, hi)
}

/// Estimates gradient stability for `config` on datasets of size n drawn
/// from the family: each replication draws a dataset, swaps one uniformly
/// chosen row for a fresh sample, runs the coupled pair, and takes the worst
/// squared gradient discrepancy over fresh probe samples at the two outputs.
/// Replications run concurrently on disjoint streams; failed replications
/// are counted and skipped.
pub fn empirical_stability(
    family: &ProblemFamily,
    n: usize,
    config: &OptimizerConfig,
    opts: &HarnessOptions,
) -> Result<StabilityEstimate> {
    if opts.reps < 1 || opts.probe_count < 1 {
        return Err(Error::invalid("stability estimation needs reps >= 1 and probes >= 1"));
    }
    if n < 1 {
        return Err(Error::invalid("n must be >= 1"));
    }
    let results: Vec<Result<f64>> = (0..opts.reps)
        .into_par_iter()
        .map(|k| stability_rep(family, n, config, opts, k as u64))
        .collect();
    let mut per_rep_max_sq = Vec::with_capacity(opts.reps);
    let mut failed = 0usize;
    for r in results {
        match r {
            Ok(v) => per_rep_max_sq.push(v),
            Err(_) => failed += 1,
        }
    }
    if per_rep_max_sq.is_empty() {
        return Err(Error::Report(format!("all {} stability replications failed", opts.reps)));
    }
    let mean = per_rep_max_sq.iter().sum::<f64>() / per_rep_max_sq.len() as f64;
    let (stderr, lower, upper) =
        bootstrap_sqrt_mean(&per_rep_max_sq, config.seed.child(BOOTSTRAP_STREAM));
    Ok(StabilityEstimate {
        epsilon_hat: mean.sqrt(),
        stderr,
        lower,
        upper,
        per_rep_max_sq,
        failed_reps: failed,
    })
}

fn stability_rep(
    family: &ProblemFamily,
    n: usize,
    config: &OptimizerConfig,
    opts: &HarnessOptions,
    rep: u64,
) -> Result<f64> {
    use rand::Rng;
    let rep_seed = config.seed.child(DATASET_STREAM).child(rep);
    let mut data_rng = rep_seed.child(0).build();
    let dataset = family.make_dataset(n, &mut data_rng)?;
    let problem = ProblemInstance::new(family.clone(), dataset)?;

    let mut repl_rng = config.seed.child(REPLACEMENT_STREAM).child(rep).build();
    let index = repl_rng.random_range(0..n);
    let pair = make_neighbor(&problem, index, &mut repl_rng)?;

    let run_config = OptimizerConfig {
        seed: config.seed.child(RUN_STREAM).child(rep),
        record_every: config.schedule.t_steps.max(1),
        ..config.clone()
    };
    let coupled = coupled_run(&pair, &run_config)?;

    let mut probe_rng = config.seed.child(PROBE_STREAM).child(rep).build();
    let mut worst = 0.0f64;
    for _ in 0..opts.probe_count {
        let probe = family.sample_record(&mut probe_rng);
        let ga = pair.base.record_grad(&coupled.base.output, &probe)?;
        let gb = pair.base.record_grad(&coupled.perturbed.output, &probe)?;
        worst = worst.max(ga.sub(&gb).norm().powi(2));
    }
    Ok(worst)
}

/// Aggregated generalization-gap estimate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GapEstimate {
    /// Mean over replications of `‖∇F(A(S)) - ∇F_S(A(S))‖`.
    pub gap_hat: f64,
    pub stderr: f64,
    pub per_rep: Vec<f64>,
    pub failed_reps: usize,
    /// Worst Monte Carlo standard error among holdout-based population
    /// gradients (zero when the family has a closed form).
    pub population_mc_stderr: f64,
}

/// Estimates the gap between population and training gradients at the
/// algorithm's output, averaged over fresh datasets of size n.
pub fn empirical_gen_gap(
    family: &ProblemFamily,
    n: usize,
    config: &OptimizerConfig,
    opts: &HarnessOptions,
) -> Result<GapEstimate> {
    if opts.reps < 1 {
        return Err(Error::invalid("gap estimation needs reps >= 1"));
    }
    if n < 1 {
        return Err(Error::invalid("n must be >= 1"));
    }
    let results: Vec<Result<(f64, f64)>> = (0..opts.reps)
        .into_par_iter()
        .map(|k| gap_rep(family, n, config, opts, k as u64))
        .collect();
    let mut per_rep = Vec::with_capacity(opts.reps);
    let mut failed = 0usize;
    let mut mc_worst = 0.0f64;
    for r in results {
        match r {
            Ok((gap, mc)) => {
                per_rep.push(gap);
                mc_worst = mc_worst.max(mc);
            }
            Err(_) => failed += 1,
        }
    }
    if per_rep.is_empty() {
        return Err(Error::Report(format!("all {} gap replications failed", opts.reps)));
    }
    let mean = per_rep.iter().sum::<f64>() / per_rep.len() as f64;
    let stderr = bootstrap_mean_stderr(&per_rep, config.seed.child(BOOTSTRAP_STREAM).child(1));
    Ok(GapEstimate { gap_hat: mean, stderr, per_rep, failed_reps: failed, population_mc_stderr: mc_worst })
}

fn gap_rep(
    family: &ProblemFamily,
    n: usize,
    config: &OptimizerConfig,
    opts: &HarnessOptions,
    rep: u64,
) -> Result<(f64, f64)> {
    let rep_seed = config.seed.child(DATASET_STREAM).child(rep);
    let mut data_rng = rep_seed.child(0).build();
    let dataset = family.make_dataset(n, &mut data_rng)?;
    let mut problem = ProblemInstance::new(family.clone(), dataset)?;
    if opts.holdout > 0 {
        problem = problem.with_holdout(opts.holdout, config.seed.child(HOLDOUT_STREAM).child(rep))?;
    }
    let run_config = OptimizerConfig {
        seed: config.seed.child(RUN_STREAM).child(rep),
        record_every: config.schedule.t_steps.max(1),
        ..config.clone()
    };
    let traj = run(&problem, &run_config)?;
    let (pop, mc) = problem.population_grad_with_stderr(&traj.output)?;
    let emp = problem.empirical_grad(&traj.output)?;
    Ok((pop.sub(&emp).norm(), mc))
}

pub(crate) fn bootstrap_mean_stderr(values: &[f64], seed: RngSpec) -> f64 {
    use rand::Rng;
    let mut rng = seed.build();
    let mut estimates = Vec::with_capacity(BOOTSTRAP_RESAMPLES);
    for _ in 0..BOOTSTRAP_RESAMPLES {
        let mut acc = 0.0;
        for _ in 0..values.len() {
            acc += values[rng.random_range(0..values.len())];
        }
        estimates.push(acc / values.len() as f64);
    }
    let mean: f64 = estimates.iter().sum::<f64>() / estimates.len() as f64;
    (estimates.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>()
        / (estimates.len() - 1) as f64)
        .sqrt()
}

/// Empirical moments of clipped noise against their closed-form caps, all
/// computed from the same sample set (the caps use the plug-in moment
/// estimate, so the comparisons are self-contained).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TruncationDecomposition {
    pub tau: f64,
    pub p: f64,
    /// Plug-in estimate of the p-th noise moment from the samples.
    pub sigma_p_hat: f64,
    /// Mean clipped vector (estimates the truncation-induced mean shift).
    pub clipped_mean_norm: f64,
    /// `mean ‖clip(s) - mean clip‖^2`.
    pub centered_second_moment: f64,
    /// Cap `tau^{2-p} sigma_hat^p`.
    pub second_moment_bound: f64,
    /// `mean ‖s - clip(s)‖`.
    pub residual_first_moment: f64,
    /// Cap `2 sigma_hat^p / tau^{p-1}`.
    pub residual_bound: f64,
}

/// Splits centered noise draws into a clipped part and a residual and
/// checks both against their moment caps.
pub fn truncation_check(
    samples: &[Vector],
    tail: &TailParams,
    tau: f64,
) -> Result<TruncationDecomposition> {
    if samples.is_empty() {
        return Err(Error::invalid("truncation_check needs at least one sample"));
    }
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::invalid(format!("tau must be positive and finite, got {tau}")));
    }
    TailParams::new(tail.p, tail.sigma_p)?;
    let p = tail.p;
    let dim = samples[0].dim();
    let center = Vector::zeros(dim);
    let sigma_hat = estimate_p_moment(samples, &center, p)?;

    let mut clipped = Vec::with_capacity(samples.len());
    let mut residual_acc = 0.0;
    let mut mean = Vector::zeros(dim);
    for s in samples {
        if s.dim() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: s.dim() });
        }
        let c = clip(s, tau)?;
        residual_acc += s.sub(&c).norm();
        mean.axpy(1.0, &c);
        clipped.push(c);
    }
    let m = samples.len() as f64;
    let mean = mean.scaled(1.0 / m);
    let centered_second: f64 =
        clipped.iter().map(|c| c.sub(&mean).norm().powi(2)).sum::<f64>() / m;

    let sp = sigma_hat.powf(p);
    Ok(TruncationDecomposition {
        tau,
        p,
        sigma_p_hat: sigma_hat,
        clipped_mean_norm: mean.norm(),
        centered_second_moment: centered_second,
        second_moment_bound: tau.powf(2.0 - p) * sp,
        residual_first_moment: residual_acc / m,
        residual_bound: 2.0 * sp / tau.powf(p - 1.0),
    })
}

/// Which part of the bound a term belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TermKind {
    Optimization,
    Stability,
    Moment,
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundTerm {
    pub label: &'static str,
    pub kind: TermKind,
    pub value: f64,
}

/// A population gradient-norm bound split into labeled terms.
#[derive(Debug, Clone, Serialize)]
pub struct BoundReport {
    pub algorithm: Algorithm,
    pub terms: Vec<BoundTerm>,
    pub total: f64,
}

impl BoundReport {
    pub fn term(&self, label: &str) -> Option<f64> {
        self.terms.iter().find(|t| t.label == label).map(|t| t.value)
    }
}

/// Closed-form bound on the expected population gradient norm at the output
/// of the named algorithm, broken into labeled terms. The stability term
/// enters with its factor 4 already applied.
pub fn theoretical_report(
    algorithm: Algorithm,
    schedule: &Schedule,
    theory: &TheoryParams,
    tail: &TailParams,
    n: usize,
) -> Result<BoundReport> {
    schedule.validate_for(algorithm)?;
    TailParams::new(tail.p, tail.sigma_p)?;
    if n < 1 {
        return Err(Error::invalid("n must be >= 1"));
    }
    let l = theory.l_smooth;
    let g = theory.g_moment;
    let delta = theory.delta;
    let p = tail.p;
    let t = schedule.t_steps as f64;
    let nf = n as f64;
    let eta = schedule.eta;

    let moment_term = BoundTerm {
        label: "heavy-tail moment",
        kind: TermKind::Moment,
        value: moment_constant(p)? * tail.sigma_p * nf.powf(-(p - 1.0) / p),
    };
    use TermKind::{Optimization, Stability};
    let terms = match algorithm {
        Algorithm::ClippedSgd => {
            let gamma = schedule.gamma.unwrap();
            vec![
                BoundTerm {
                    label: "initialization",
                    kind: Optimization,
                    value: (2.0 * delta / (eta * t)).sqrt(),
                },
                BoundTerm {
                    label: "clip bias",
                    kind: Optimization,
                    value: g.powf(p) * gamma.powf(1.0 - p),
                },
                BoundTerm {
                    label: "clip variance",
                    kind: Optimization,
                    value: (l * eta * g.powf(p) * gamma.powf(2.0 - p)).sqrt(),
                },
                BoundTerm {
                    label: "stability",
                    kind: Stability,
                    value: 8.0 * l * gamma * eta * t * (t / nf).sqrt(),
                },
                moment_term,
            ]
        }
        Algorithm::NsgdB => {
            let b = schedule.batch.unwrap() as f64;
            vec![
                BoundTerm {
                    label: "initialization",
                    kind: Optimization,
                    value: delta / (eta * t),
                },
                BoundTerm { label: "smoothness", kind: Optimization, value: l * eta / 2.0 },
                BoundTerm {
                    label: "batch bias",
                    kind: Optimization,
                    value: 4.0 * g * b.powf(-(p - 1.0) / p),
                },
                BoundTerm {
                    label: "stability",
                    kind: Stability,
                    value: 8.0 * l * eta * t * (b * t / nf).sqrt(),
                },
                moment_term,
            ]
        }
        Algorithm::NsgdM | Algorithm::NsgdCm => {
            let beta = schedule.beta.unwrap();
            let mut terms = vec![
                BoundTerm {
                    label: "initialization",
                    kind: Optimization,
                    value: delta / (eta * t),
                },
                BoundTerm { label: "smoothness", kind: Optimization, value: l * eta / 2.0 },
            ];
            if algorithm == Algorithm::NsgdCm {
                let gamma = schedule.gamma.unwrap();
                terms.push(BoundTerm {
                    label: "momentum drift",
                    kind: Optimization,
                    value: 2.0 * l * eta / (1.0 - beta),
                });
                terms.push(BoundTerm {
                    label: "clip bias",
                    kind: Optimization,
                    value: 2.0 * g.powf(p) * gamma.powf(1.0 - p),
                });
            } else {
                terms.push(BoundTerm {
                    label: "momentum drift",
                    kind: Optimization,
                    value: 2.0 * l * eta * beta / (1.0 - beta),
                });
            }
            terms.extend([
                BoundTerm {
                    label: "momentum bias",
                    kind: Optimization,
                    value: 8.0 * g * (1.0 - beta).powf((p - 1.0) / p),
                },
                BoundTerm { label: "horizon", kind: Optimization, value: 4.0 * g / t },
                BoundTerm {
                    label: "momentum horizon",
                    kind: Optimization,
                    value: 4.0 * g * beta / ((1.0 - beta) * t),
                },
                BoundTerm {
                    label: "stability",
                    kind: Stability,
                    value: 8.0 * l * eta * t * (t / nf).sqrt(),
                },
                moment_term,
            ]);
            terms
        }
    };
    let total = terms.iter().map(|t| t.value).sum();
    Ok(BoundReport { algorithm, terms, total })
}

/// Plug-in estimates of the constants entering [`theoretical_report`]:
/// smoothness from the family's closed form, the gradient moment bound from
/// fresh draws along recorded trajectories, and the initial suboptimality
/// from the observed objective drop (a lower plug-in for the true gap).
pub fn estimate_theory_params(
    family: &ProblemFamily,
    n: usize,
    config: &OptimizerConfig,
    p: f64,
    reps: usize,
    draws_per_iterate: usize,
) -> Result<TheoryParams> {
    if reps < 1 || draws_per_iterate < 1 {
        return Err(Error::invalid("estimation needs reps >= 1 and draws >= 1"));
    }
    let results: Vec<Result<(f64, f64, f64)>> = (0..reps)
        .into_par_iter()
        .map(|k| {
            let rep = k as u64;
            let rep_seed = config.seed.child(DATASET_STREAM).child(rep);
            let mut data_rng = rep_seed.child(0).build();
            let dataset = family.make_dataset(n, &mut data_rng)?;
            let problem = ProblemInstance::new(family.clone(), dataset)?;
            let run_config = OptimizerConfig {
                seed: config.seed.child(RUN_STREAM).child(rep),
                record_every: 1,
                ..config.clone()
            };
            let traj = run(&problem, &run_config)?;
            let mut probe_rng = config.seed.child(PROBE_STREAM).child(rep).build();
            let mut worst_moment = 0.0f64;
            let mut best_value = f64::INFINITY;
            for (_, x) in &traj.iterates {
                let mut acc = 0.0;
                for _ in 0..draws_per_iterate {
                    let record = family.sample_record(&mut probe_rng);
                    acc += problem.record_grad(x, &record)?.norm().powf(p);
                }
                worst_moment = worst_moment.max(acc / draws_per_iterate as f64);
                best_value = best_value.min(problem.empirical_value(x)?);
            }
            let start = problem.empirical_value(&traj.iterates[0].1)?;
            Ok((problem.smoothness(), worst_moment, (start - best_value).max(0.0)))
        })
        .collect();
    let mut l = 0.0f64;
    let mut moment = 0.0f64;
    let mut delta = 0.0f64;
    let mut ok = 0usize;
    for r in results {
        let (li, mi, di) = r?;
        l = l.max(li);
        moment = moment.max(mi);
        delta = delta.max(di);
        ok += 1;
    }
    debug_assert!(ok > 0);
    TheoryParams::new(l, moment.powf(1.0 / p), delta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::{NoiseFamily, NoiseSpec};
    use crate::problems::make_quad_plus_sine;

    fn family(dim: usize) -> ProblemFamily {
        let noise = NoiseSpec::new(NoiseFamily::Gaussian, 1.0, dim).unwrap();
        ProblemFamily::quad_plus_sine(dim, 0.1, noise).unwrap()
    }

    fn config(alg: Algorithm, t: usize, seed: u64) -> OptimizerConfig {
        let schedule = Schedule {
            t_steps: t,
            eta: 0.05,
            gamma: alg.uses_clip().then_some(1.0),
            beta: alg.uses_momentum().then_some(0.6),
            batch: (alg == Algorithm::NsgdB).then_some(2),
        };
        OptimizerConfig::new(alg, schedule, Vector::zeros(3), RngSpec::new(seed))
    }

    #[test]
    fn neighbor_differs_in_one_row() {
        let problem = make_quad_plus_sine(
            32,
            3,
            0.1,
            NoiseSpec::new(NoiseFamily::Gaussian, 1.0, 3).unwrap(),
            RngSpec::new(1),
        )
        .unwrap();
        let mut rng = RngSpec::new(2).build();
        let pair = make_neighbor(&problem, 7, &mut rng).unwrap();
        for i in 0..32 {
            let same = pair.base.dataset().row(i) == pair.perturbed.dataset().row(i);
            assert_eq!(same, i != 7, "row {i}");
        }
        assert!(make_neighbor(&problem, 32, &mut rng).is_err());
    }

    #[test]
    fn coupled_runs_share_index_log_and_agree_until_hit() {
        let fam = family(3);
        let mut data_rng = RngSpec::new(3).child(0).build();
        let dataset = fam.make_dataset(16, &mut data_rng).unwrap();
        let problem = ProblemInstance::new(fam.clone(), dataset).unwrap();
        let mut rng = RngSpec::new(4).build();
        for alg in Algorithm::ALL {
            let pair = make_neighbor(&problem, 5, &mut rng).unwrap();
            let cfg = config(alg, 30, 11);
            let coupled = coupled_run(&pair, &cfg).unwrap();
            assert_eq!(coupled.base.index_log, coupled.perturbed.index_log);
            let per_step = if alg == Algorithm::NsgdB { 2 } else { 1 };
            let first_hit = coupled
                .base
                .index_log
                .iter()
                .position(|i| *i == 5)
                .map(|pos| pos / per_step);
            let horizon = first_hit.unwrap_or(30);
            for (t, x) in &coupled.base.iterates {
                if *t <= horizon {
                    assert_eq!(Some(x), coupled.perturbed.iterate_at(*t), "{alg} step {t}");
                }
            }
            if first_hit.is_none() {
                assert_eq!(coupled.base.output, coupled.perturbed.output, "{alg}");
            }
        }
    }

    #[test]
    fn stability_estimate_behaves() {
        let fam = family(3);
        let cfg = config(Algorithm::NsgdM, 12, 42);
        let opts = HarnessOptions { reps: 40, probe_count: 8, holdout: 0 };
        let est = empirical_stability(&fam, 24, &cfg, &opts).unwrap();
        assert!(est.epsilon_hat >= 0.0);
        assert!(est.stderr >= 0.0);
        assert!(est.lower <= est.epsilon_hat + 1e-12);
        assert!(est.upper >= est.epsilon_hat - 1e-12);
        assert_eq!(est.per_rep_max_sq.len(), 40);
        assert_eq!(est.failed_reps, 0);
        // deterministic
        let again = empirical_stability(&fam, 24, &cfg, &opts).unwrap();
        assert_eq!(est.epsilon_hat, again.epsilon_hat);
        assert_eq!(est.stderr, again.stderr);
    }

    #[test]
    fn gap_estimate_behaves() {
        let fam = family(3);
        let cfg = config(Algorithm::NsgdB, 10, 43);
        let opts = HarnessOptions { reps: 30, probe_count: 1, holdout: 0 };
        let est = empirical_gen_gap(&fam, 32, &cfg, &opts).unwrap();
        assert!(est.gap_hat > 0.0);
        assert!(est.stderr >= 0.0);
        assert_eq!(est.per_rep.len(), 30);
        assert_eq!(est.population_mc_stderr, 0.0);
        let again = empirical_gen_gap(&fam, 32, &cfg, &opts).unwrap();
        assert_eq!(est.gap_hat, again.gap_hat);
    }

    #[test]
    fn truncation_caps_hold_deterministically() {
        // the caps use the plug-in moment from the same samples, so they
        // hold sample-by-sample, not just in expectation
        let spec = NoiseSpec::new(
            NoiseFamily::SymmetricAlphaStable { alpha: 1.6 },
            1.0,
            2,
        )
        .unwrap();
        let mut rng = RngSpec::new(9).build();
        let samples: Vec<Vector> = (0..20_000).map(|_| spec.sample(&mut rng)).collect();
        let tail = TailParams::new(1.4, 1.0).unwrap();
        for tau in [0.5, 2.0, 25.0, 400.0] {
            let d = truncation_check(&samples, &tail, tau).unwrap();
            assert!(
                d.centered_second_moment <= d.second_moment_bound * (1.0 + 1e-12),
                "tau {tau}: {} > {}",
                d.centered_second_moment,
                d.second_moment_bound
            );
            assert!(
                d.residual_first_moment <= d.residual_bound * (1.0 + 1e-12) / 2.0,
                "tau {tau}: residual {} above one-sided cap {}",
                d.residual_first_moment,
                d.residual_bound / 2.0
            );
        }
    }

    #[test]
    fn report_terms_sum_to_total() {
        let theory = TheoryParams::new(1.5, 2.0, 0.7).unwrap();
        let tail = TailParams::new(1.7, 1.3).unwrap();
        for alg in Algorithm::ALL {
            let schedule = crate::theory::schedule_for(alg, 512, 1.7, 1.0).unwrap();
            let report = theoretical_report(alg, &schedule, &theory, &tail, 512).unwrap();
            let sum: f64 = report.terms.iter().map(|t| t.value).sum();
            assert!((sum - report.total).abs() < 1e-12 * report.total.abs().max(1.0));
            assert!(report.terms.iter().any(|t| t.kind == TermKind::Stability));
            assert!(report.terms.iter().any(|t| t.kind == TermKind::Moment));
            assert!(report.total.is_finite() && report.total > 0.0);
        }
    }

    #[test]
    fn batch_report_limit() {
        // full batch, zero initial gap, vanishing step: only the batch bias
        // and the moment term survive
        let n = 10_000usize;
        let theory = TheoryParams::new(1.0, 1.0, 0.0).unwrap();
        let tail = TailParams::new(2.0, 1.0).unwrap();
        let schedule = Schedule {
            t_steps: 100,
            eta: 1e-9,
            gamma: None,
            beta: None,
            batch: Some(n),
        };
        let report = theoretical_report(Algorithm::NsgdB, &schedule, &theory, &tail, n).unwrap();
        let expect = (4.0 + 1.0) * (n as f64).powf(-0.5);
        assert!(
            (report.total - expect).abs() < 1e-3 * expect,
            "total {} expected about {expect}",
            report.total
        );
    }

    #[test]
    fn momentum_reports_match_at_infinite_clip() {
        let theory = TheoryParams::new(1.0, 2.0, 0.5).unwrap();
        let tail = TailParams::new(1.8, 1.0).unwrap();
        let m = Schedule { t_steps: 64, eta: 0.02, gamma: None, beta: Some(0.85), batch: None };
        let cm = Schedule { gamma: Some(f64::INFINITY), ..m };
        let rm = theoretical_report(Algorithm::NsgdM, &m, &theory, &tail, 1024).unwrap();
        let rcm = theoretical_report(Algorithm::NsgdCm, &cm, &theory, &tail, 1024).unwrap();
        assert_eq!(rcm.term("clip bias").unwrap(), 0.0);
        for label in [
            "initialization",
            "smoothness",
            "momentum bias",
            "horizon",
            "momentum horizon",
            "stability",
            "heavy-tail moment",
        ] {
            assert_eq!(rm.term(label).unwrap(), rcm.term(label).unwrap(), "{label}");
        }
        // the drift term differs exactly by the factor beta
        let beta = 0.85;
        let drift_m = rm.term("momentum drift").unwrap();
        let drift_cm = rcm.term("momentum drift").unwrap();
        assert!((drift_m - beta * drift_cm).abs() < 1e-15);
    }

    #[test]
    fn theory_param_estimation_is_sane() {
        let fam = family(3);
        let cfg = config(Algorithm::NsgdM, 15, 77);
        let est = estimate_theory_params(&fam, 32, &cfg, 2.0, 8, 16).unwrap();
        assert!((est.l_smooth - 1.1).abs() < 1e-12);
        // gradients near the origin are noise-dominated: G should land near
        // sqrt(E‖xi‖^2 + ...) which for unit Gaussian noise in 3 dims is
        // at least sqrt(3)
        assert!(est.g_moment > 1.0 && est.g_moment < 10.0, "G {}", est.g_moment);
        assert!(est.delta >= 0.0);
    }
}
