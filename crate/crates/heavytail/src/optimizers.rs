//! Clipped SGD and three normalized SGD variants over finite-sum problems.
//!
//! All four methods share one gradient-estimate path and one step routine,
//! which makes the reduction identities exact at the bit level: the clipped
//! momentum method with an infinite clip level replays the plain momentum
//! method, and the momentum method with beta = 0 replays the batch method
//! with batch size 1.
//!
//! Randomness is split across two streams derived from the config seed: one
//! for component index sampling, one for the uniform output draw. The output
//! draw therefore never perturbs the index sequence, and two runs with equal
//! configs sample identical indices even on different datasets (the coupling
//! used by the stability harness).

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::clip::clip;
use crate::error::{Error, Result};
use crate::problems::ProblemInstance;
use crate::rng::RngSpec;
use crate::theory::{Algorithm, Schedule};
use crate::vector::Vector;

const INDEX_STREAM: u64 = 1;
const OUTPUT_STREAM: u64 = 2;

/// Everything a run needs besides the problem itself.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub algorithm: Algorithm,
    pub schedule: Schedule,
    pub x0: Vector,
    pub seed: RngSpec,
    /// Candidate iterates are stored every this many steps (t = 0 and
    /// t = T-1 are always kept).
    pub record_every: usize,
}

impl OptimizerConfig {
    pub fn new(algorithm: Algorithm, schedule: Schedule, x0: Vector, seed: RngSpec) -> Self {
        OptimizerConfig { algorithm, schedule, x0, seed, record_every: 1 }
    }

    pub fn with_record_every(mut self, record_every: usize) -> Self {
        self.record_every = record_every;
        self
    }

    fn validate(&self, problem: &ProblemInstance) -> Result<()> {
        self.schedule.validate_for(self.algorithm)?;
        if self.record_every < 1 {
            return Err(Error::invalid("record_every must be >= 1"));
        }
        if self.x0.dim() != problem.dim() {
            return Err(Error::DimensionMismatch {
                expected: problem.dim(),
                got: self.x0.dim(),
            });
        }
        Ok(())
    }
}

/// Full record of one run. The candidates are `x_0 .. x_{T-1}`; `output` is
/// the uniformly drawn candidate the method returns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    /// Stored candidates as (step, iterate) pairs.
    pub iterates: Vec<(usize, Vector)>,
    /// Every sampled component index, in draw order (`B` per step for the
    /// batch method, one per step otherwise).
    pub index_log: Vec<usize>,
    /// `‖x_{t+1} - x_t‖` for each of the T updates.
    pub step_norms: Vec<f64>,
    /// Norm of the raw gradient estimate fed to each update.
    pub grad_norms: Vec<f64>,
    /// Norm of the direction vector after clipping/momentum, before the
    /// step is taken.
    pub direction_norms: Vec<f64>,
    pub output: Vector,
    pub output_index: usize,
}

impl Trajectory {
    /// The stored candidate at step `t`, if it was recorded.
    pub fn iterate_at(&self, t: usize) -> Option<&Vector> {
        self.iterates
            .binary_search_by_key(&t, |(s, _)| *s)
            .ok()
            .map(|k| &self.iterates[k].1)
    }
}

/// Mean of `count` freshly indexed component gradients. Shared by all
/// algorithms so a batch of one is bitwise identical to a single draw.
fn batch_gradient(
    problem: &ProblemInstance,
    x: &Vector,
    count: usize,
    idx_rng: &mut impl Rng,
    index_log: &mut Vec<usize>,
) -> Result<Vector> {
    let n = problem.n();
    let mut g = Vector::zeros(x.dim());
    for _ in 0..count {
        let i = idx_rng.random_range(0..n);
        index_log.push(i);
        g.axpy(1.0, &problem.component_grad(x, i)?);
    }
    Ok(g.scaled(1.0 / count as f64))
}

/// Runs `config.algorithm` on the problem. Errors if an iterate picks up a
/// non-finite coordinate.
pub fn run(problem: &ProblemInstance, config: &OptimizerConfig) -> Result<Trajectory> {
    config.validate(problem)?;
    let schedule = &config.schedule;
    let t_steps = schedule.t_steps;
    let eta = schedule.eta;
    let batch = if config.algorithm == Algorithm::NsgdB { schedule.batch.unwrap() } else { 1 };

    let mut idx_rng = config.seed.child(INDEX_STREAM).build();
    let mut out_rng = config.seed.child(OUTPUT_STREAM).build();
    let output_index = out_rng.random_range(0..t_steps);

    let mut x = config.x0.clone();
    let mut momentum = Vector::zeros(x.dim());
    let mut iterates = Vec::new();
    let mut index_log = Vec::with_capacity(batch * t_steps);
    let mut step_norms = Vec::with_capacity(t_steps);
    let mut grad_norms = Vec::with_capacity(t_steps);
    let mut direction_norms = Vec::with_capacity(t_steps);
    let mut output = None;

    for t in 0..t_steps {
        if t == output_index {
            output = Some(x.clone());
        }
        if t % config.record_every == 0 || t == t_steps - 1 {
            iterates.push((t, x.clone()));
        }

        let g = batch_gradient(problem, &x, batch, &mut idx_rng, &mut index_log)?;
        grad_norms.push(g.norm());

        let direction = match config.algorithm {
            Algorithm::ClippedSgd => clip(&g, schedule.gamma.unwrap())?,
            Algorithm::NsgdB => g,
            Algorithm::NsgdM | Algorithm::NsgdCm => {
                let fed = if config.algorithm == Algorithm::NsgdCm {
                    clip(&g, schedule.gamma.unwrap())?
                } else {
                    g
                };
                let beta = schedule.beta.unwrap();
                momentum = momentum.scaled(beta);
                momentum.axpy(1.0 - beta, &fed);
                momentum.clone()
            }
        };
        direction_norms.push(direction.norm());

        let delta = match config.algorithm {
            Algorithm::ClippedSgd => direction.scaled(-eta),
            _ => {
                let norm = direction.norm();
                if norm == 0.0 {
                    Vector::zeros(x.dim())
                } else {
                    direction.scaled(-eta / norm)
                }
            }
        };
        step_norms.push(delta.norm());
        x.axpy(1.0, &delta);
        if !x.is_finite() {
            return Err(Error::Divergence { step: t });
        }
    }

    Ok(Trajectory {
        iterates,
        index_log,
        step_norms,
        grad_norms,
        direction_norms,
        output: output.expect("output_index < t_steps"),
        output_index,
    })
}

fn run_as(algorithm: Algorithm, problem: &ProblemInstance, config: &OptimizerConfig) -> Result<Trajectory> {
    if config.algorithm != algorithm {
        return Err(Error::invalid(format!(
            "config names {}, but the caller runs {}",
            config.algorithm, algorithm
        )));
    }
    run(problem, config)
}

pub fn run_clipped_sgd(problem: &ProblemInstance, config: &OptimizerConfig) -> Result<Trajectory> {
    run_as(Algorithm::ClippedSgd, problem, config)
}

pub fn run_nsgd_b(problem: &ProblemInstance, config: &OptimizerConfig) -> Result<Trajectory> {
    run_as(Algorithm::NsgdB, problem, config)
}

pub fn run_nsgd_m(problem: &ProblemInstance, config: &OptimizerConfig) -> Result<Trajectory> {
    run_as(Algorithm::NsgdM, problem, config)
}

pub fn run_nsgd_cm(problem: &ProblemInstance, config: &OptimizerConfig) -> Result<Trajectory> {
    run_as(Algorithm::NsgdCm, problem, config)
}

/// Uniform draw over the stored candidates. Deterministic in the supplied
/// generator; with `record_every = 1` this is uniform over all T candidates.
pub fn sample_output(trajectory: &Trajectory, rng: &mut impl Rng) -> Result<Vector> {
    if trajectory.iterates.is_empty() {
        return Err(Error::invalid("trajectory has no stored candidates"));
    }
    let k = rng.random_range(0..trajectory.iterates.len());
    Ok(trajectory.iterates[k].1.clone())
}
