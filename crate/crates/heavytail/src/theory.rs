//! Closed-form constants, bounds, and parameter schedules for first-order
//! methods run on n-sample objectives whose gradient noise has a finite
//! p-th central moment, p in (1, 2].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tail description of the gradient noise: `E‖∇f(x;ξ) − ∇F(x)‖^p <= sigma_p^p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailParams {
    pub p: f64,
    pub sigma_p: f64,
}

impl TailParams {
    /// Requires `1 < p <= 2` and a positive finite `sigma_p`.
    pub fn new(p: f64, sigma_p: f64) -> Result<Self> {
        if !(p > 1.0 && p <= 2.0) {
            return Err(Error::invalid(format!("p must lie in (1, 2], got {p}")));
        }
        if !(sigma_p > 0.0 && sigma_p.is_finite()) {
            return Err(Error::invalid(format!(
                "sigma_p must be positive and finite, got {sigma_p}"
            )));
        }
        Ok(TailParams { p, sigma_p })
    }
}

/// Problem-level constants entering the theoretical bounds: smoothness `L`,
/// a uniform p-th moment bound `G` on stochastic gradients
/// (`E‖∇f(x;ξ)‖^p <= G^p`), and the initial suboptimality `delta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoryParams {
    pub l_smooth: f64,
    pub g_moment: f64,
    pub delta: f64,
}

impl TheoryParams {
    pub fn new(l_smooth: f64, g_moment: f64, delta: f64) -> Result<Self> {
        if !(l_smooth > 0.0 && l_smooth.is_finite()) {
            return Err(Error::invalid(format!("L must be positive, got {l_smooth}")));
        }
        if !(g_moment >= 0.0) || !(delta >= 0.0) {
            return Err(Error::invalid("G and delta must be nonnegative"));
        }
        Ok(TheoryParams { l_smooth, g_moment, delta })
    }
}

/// The four methods covered by the bounds and the experiment harness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
#[clap(rename_all = "kebab-case")]
pub enum Algorithm {
    /// SGD with norm-clipped stochastic gradients.
    ClippedSgd,
    /// Normalized SGD on mini-batch gradient means.
    NsgdB,
    /// Normalized SGD with momentum.
    NsgdM,
    /// Normalized SGD with clipping inside the momentum recursion.
    NsgdCm,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] =
        [Algorithm::ClippedSgd, Algorithm::NsgdB, Algorithm::NsgdM, Algorithm::NsgdCm];

    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::ClippedSgd => "clipped-sgd",
            Algorithm::NsgdB => "nsgd-b",
            Algorithm::NsgdM => "nsgd-m",
            Algorithm::NsgdCm => "nsgd-cm",
        }
    }

    pub fn uses_clip(&self) -> bool {
        matches!(self, Algorithm::ClippedSgd | Algorithm::NsgdCm)
    }

    pub fn uses_momentum(&self) -> bool {
        matches!(self, Algorithm::NsgdM | Algorithm::NsgdCm)
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Algorithm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "clipped-sgd" => Ok(Algorithm::ClippedSgd),
            "nsgd-b" => Ok(Algorithm::NsgdB),
            "nsgd-m" => Ok(Algorithm::NsgdM),
            "nsgd-cm" => Ok(Algorithm::NsgdCm),
            other => Err(Error::invalid(format!("unknown algorithm `{other}`"))),
        }
    }
}

/// Run-length and step-size plan. `eta` is a constant step size; `gamma`,
/// `beta`, and `batch` are present only for the algorithms that use them.
/// `gamma = +inf` is a valid sentinel that disables clipping.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub t_steps: usize,
    pub eta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub batch: Option<usize>,
}

impl Schedule {
    /// Checks internal invariants and that the fields the named algorithm
    /// needs are present.
    pub fn validate_for(&self, alg: Algorithm) -> Result<()> {
        if self.t_steps < 1 {
            return Err(Error::invalid("schedule needs t_steps >= 1"));
        }
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(Error::invalid(format!("eta must be positive and finite, got {}", self.eta)));
        }
        if let Some(g) = self.gamma {
            if g.is_nan() || g <= 0.0 {
                return Err(Error::invalid(format!("gamma must be positive, got {g}")));
            }
        }
        if let Some(b) = self.beta {
            if !(0.0..1.0).contains(&b) {
                return Err(Error::invalid(format!("beta must lie in [0, 1), got {b}")));
            }
        }
        if let Some(bs) = self.batch {
            if bs < 1 {
                return Err(Error::invalid("batch must be >= 1"));
            }
        }
        let missing = |f: &str| Err(Error::invalid(format!("{} requires `{f}` in the schedule", alg)));
        match alg {
            Algorithm::ClippedSgd if self.gamma.is_none() => missing("gamma"),
            Algorithm::NsgdB if self.batch.is_none() => missing("batch"),
            Algorithm::NsgdM if self.beta.is_none() => missing("beta"),
            Algorithm::NsgdCm if self.beta.is_none() => missing("beta"),
            Algorithm::NsgdCm if self.gamma.is_none() => missing("gamma"),
            _ => Ok(()),
        }
    }

    /// Sum of step sizes over the horizon (constant schedule).
    pub fn eta_sum(&self) -> f64 {
        self.eta * self.t_steps as f64
    }
}

fn check_tail_n(tail: &TailParams, n: usize) -> Result<()> {
    TailParams::new(tail.p, tail.sigma_p)?;
    if n < 1 {
        return Err(Error::invalid("n must be >= 1"));
    }
    Ok(())
}

/// Constant in front of the `sigma_p n^{-(p-1)/p}` moment term. Equals 1 at
/// p = 2, stays within [1, 3] over (1, 2], and attains 3 at p = 1.2.
pub fn moment_constant(p: f64) -> Result<f64> {
    if !(p > 1.0 && p <= 2.0) {
        return Err(Error::invalid(format!("p must lie in (1, 2], got {p}")));
    }
    if p == 2.0 {
        return Ok(1.0);
    }
    let ratio = 4.0 * (p - 1.0) / (2.0 - p);
    Ok(p / (2.0 * (p - 1.0)) * ratio.powf((2.0 - p) / p))
}

/// Value of the truncation trade-off at level `tau`: a concentration part
/// that grows with `tau` plus a bias part that shrinks with it.
pub fn truncation_objective(tau: f64, tail: &TailParams, n: usize) -> Result<f64> {
    check_tail_n(tail, n)?;
    if !(tau > 0.0) {
        return Err(Error::invalid(format!("tau must be positive, got {tau}")));
    }
    let sp = tail.sigma_p.powf(tail.p);
    Ok((sp / n as f64).sqrt() * tau.powf((2.0 - tail.p) / 2.0) + 2.0 * sp * tau.powf(1.0 - tail.p))
}

/// Minimizer of [`truncation_objective`] in closed form. Returns `+inf` for
/// p = 2, where the objective is decreasing and no finite truncation helps.
pub fn optimal_truncation_level(tail: &TailParams, n: usize) -> Result<f64> {
    check_tail_n(tail, n)?;
    if tail.p == 2.0 {
        return Ok(f64::INFINITY);
    }
    let base = 4.0 * (tail.p - 1.0) / (2.0 - tail.p)
        * (n as f64 * tail.sigma_p.powf(tail.p)).sqrt();
    Ok(base.powf(2.0 / tail.p))
}

/// Bound on `‖∇F(A(S)) − ∇F_S(A(S))‖` for an `epsilon`-stable method on n
/// samples: `4 epsilon + C_p sigma_p n^{-(p-1)/p}`.
pub fn generalization_bound(epsilon: f64, tail: &TailParams, n: usize) -> Result<f64> {
    check_tail_n(tail, n)?;
    if !(epsilon >= 0.0) {
        return Err(Error::invalid(format!("epsilon must be nonnegative, got {epsilon}")));
    }
    let moment = moment_constant(tail.p)? * tail.sigma_p * (n as f64).powf(-(tail.p - 1.0) / tail.p);
    Ok(4.0 * epsilon + moment)
}

/// Gradient-stability bound for the named algorithm on n samples. Grows with
/// the horizon and step size, shrinks with n; for the clipped-momentum
/// variant it does not involve the clip level.
pub fn stability_bound(
    alg: Algorithm,
    schedule: &Schedule,
    theory: &TheoryParams,
    n: usize,
) -> Result<f64> {
    schedule.validate_for(alg)?;
    if n < 1 {
        return Err(Error::invalid("n must be >= 1"));
    }
    let l = theory.l_smooth;
    let t = schedule.t_steps as f64;
    let nf = n as f64;
    let eta_sum = schedule.eta_sum();
    Ok(match alg {
        Algorithm::ClippedSgd => 2.0 * l * schedule.gamma.unwrap() * (t / nf).sqrt() * eta_sum,
        Algorithm::NsgdB => {
            2.0 * l * (schedule.batch.unwrap() as f64 * t / nf).sqrt() * eta_sum
        }
        Algorithm::NsgdM | Algorithm::NsgdCm => 2.0 * l * (t / nf).sqrt() * eta_sum,
    })
}

/// Exponent table behind [`schedule_for`]; all fields are powers of n.
struct ScheduleExponents {
    t: f64,
    eta: f64,
    gamma: Option<f64>,
    one_minus_beta: Option<f64>,
    batch: Option<f64>,
}

fn schedule_exponents(alg: Algorithm, p: f64) -> ScheduleExponents {
    match alg {
        Algorithm::ClippedSgd => ScheduleExponents {
            t: 1.0 / 3.0,
            eta: -p / (3.0 * (3.0 * p - 2.0)),
            gamma: Some(1.0 / (3.0 * (3.0 * p - 2.0))),
            one_minus_beta: None,
            batch: None,
        },
        Algorithm::NsgdB => ScheduleExponents {
            t: 2.0 * (p - 1.0) / (7.0 * p - 6.0),
            eta: -(p - 1.0) / (7.0 * p - 6.0),
            gamma: None,
            one_minus_beta: None,
            batch: Some(p / (7.0 * p - 6.0)),
        },
        Algorithm::NsgdM | Algorithm::NsgdCm => ScheduleExponents {
            t: (3.0 * p - 2.0) / (7.0 * p - 6.0),
            eta: -(2.0 * p - 1.0) / (7.0 * p - 6.0),
            gamma: if alg == Algorithm::NsgdCm {
                Some(1.0 / (7.0 * p - 6.0))
            } else {
                None
            },
            one_minus_beta: Some(p / (7.0 * p - 6.0)),
            batch: None,
        },
    }
}

/// Theory-prescribed schedule for a run on n samples, every field of the
/// form `scale · n^exponent`. Integer fields (`t_steps`, `batch`) round up
/// with a floor of 1; `beta` is `1 - scale · n^{-e}` clamped into [0, 1).
pub fn schedule_for(alg: Algorithm, n: usize, p: f64, scale: f64) -> Result<Schedule> {
    if !(p > 1.0 && p <= 2.0) {
        return Err(Error::invalid(format!("p must lie in (1, 2], got {p}")));
    }
    if n < 1 {
        return Err(Error::invalid("n must be >= 1"));
    }
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::invalid(format!("scale must be positive and finite, got {scale}")));
    }
    let e = schedule_exponents(alg, p);
    let nf = n as f64;
    let round_up = |x: f64| (x.ceil() as usize).max(1);
    Ok(Schedule {
        t_steps: round_up(scale * nf.powf(e.t)),
        eta: scale * nf.powf(e.eta),
        gamma: e.gamma.map(|g| scale * nf.powf(g)),
        beta: e.one_minus_beta.map(|b| (1.0 - scale * nf.powf(-b)).max(0.0)),
        batch: e.batch.map(|b| round_up(scale * nf.powf(b))),
    })
}

/// Predicted power of n at which the population gradient norm decays when
/// the method runs its prescribed schedule. More negative is faster.
pub fn predicted_rate_exponent(alg: Algorithm, p: f64) -> Result<f64> {
    if !(p > 1.0 && p <= 2.0) {
        return Err(Error::invalid(format!("p must lie in (1, 2], got {p}")));
    }
    Ok(match alg {
        Algorithm::ClippedSgd => -(p - 1.0) / (3.0 * (3.0 * p - 2.0)),
        Algorithm::NsgdB | Algorithm::NsgdM | Algorithm::NsgdCm => -(p - 1.0) / (7.0 * p - 6.0),
    })
}
