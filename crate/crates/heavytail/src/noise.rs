//! Mean-zero noise families with controllable tail weight, plus empirical
//! moment estimation. Coordinates are sampled i.i.d.; every sampler is a
//! pure function of the supplied generator, so a fixed (seed, stream)
//! replays the same sequence.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Exp1, Pareto, StandardNormal, StudentT};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problems::ProblemInstance;
use crate::rng::RngSpec;
use crate::vector::Vector;

/// Distribution family of one noise coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum NoiseFamily {
    /// Normal with standard deviation `scale`.
    Gaussian,
    /// Symmetric alpha-stable with characteristic function
    /// `exp(-scale |w|^alpha)`, `0 < alpha <= 2`. Moments of order
    /// `q < alpha` are finite; higher orders diverge (except alpha = 2).
    SymmetricAlphaStable { alpha: f64 },
    /// Random sign times a Pareto(alpha) magnitude with minimum 1, scaled by
    /// `scale`. Symmetric, hence mean zero for `alpha > 1`.
    ParetoSymmetric { alpha: f64 },
    /// Student t with `nu > 1` degrees of freedom, scaled by `scale`.
    StudentT { nu: f64 },
}

/// A noise source: family, per-coordinate scale, and dimension.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    #[serde(flatten)]
    pub family: NoiseFamily,
    pub scale: f64,
    pub dim: usize,
}

impl NoiseSpec {
    pub fn new(family: NoiseFamily, scale: f64, dim: usize) -> Result<Self> {
        let spec = NoiseSpec { family, scale, dim };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return Err(Error::invalid(format!(
                "noise scale must be positive and finite, got {}",
                self.scale
            )));
        }
        if self.dim < 1 {
            return Err(Error::invalid("noise dim must be >= 1"));
        }
        match self.family {
            NoiseFamily::Gaussian => Ok(()),
            NoiseFamily::SymmetricAlphaStable { alpha } => {
                if alpha > 0.0 && alpha <= 2.0 {
                    Ok(())
                } else {
                    Err(Error::invalid(format!("stable alpha must lie in (0, 2], got {alpha}")))
                }
            }
            NoiseFamily::ParetoSymmetric { alpha } => {
                if alpha > 1.0 && alpha.is_finite() {
                    Ok(())
                } else {
                    Err(Error::invalid(format!("pareto alpha must exceed 1, got {alpha}")))
                }
            }
            NoiseFamily::StudentT { nu } => {
                if nu > 1.0 && nu.is_finite() {
                    Ok(())
                } else {
                    Err(Error::invalid(format!("student nu must exceed 1, got {nu}")))
                }
            }
        }
    }

    /// Largest q for which the q-th absolute moment is finite (`+inf` for
    /// Gaussian; the boundary itself is excluded for the other families).
    pub fn tail_index(&self) -> f64 {
        match self.family {
            NoiseFamily::Gaussian => f64::INFINITY,
            NoiseFamily::SymmetricAlphaStable { alpha } => {
                if alpha == 2.0 {
                    f64::INFINITY
                } else {
                    alpha
                }
            }
            NoiseFamily::ParetoSymmetric { alpha } => alpha,
            NoiseFamily::StudentT { nu } => nu,
        }
    }

    /// One coordinate draw.
    pub fn sample_scalar(&self, rng: &mut impl Rng) -> f64 {
        match self.family {
            NoiseFamily::Gaussian => {
                let z: f64 = StandardNormal.sample(rng);
                self.scale * z
            }
            NoiseFamily::SymmetricAlphaStable { alpha } => {
                self.scale.powf(1.0 / alpha) * stable_standard(alpha, rng)
            }
            NoiseFamily::ParetoSymmetric { alpha } => {
                let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                let magnitude = Pareto::new(1.0, alpha)
                    .expect("validated alpha")
                    .sample(rng);
                self.scale * sign * magnitude
            }
            NoiseFamily::StudentT { nu } => {
                let t: f64 = StudentT::new(nu).expect("validated nu").sample(rng);
                self.scale * t
            }
        }
    }

    /// One `dim`-dimensional draw with i.i.d. coordinates.
    pub fn sample(&self, rng: &mut impl Rng) -> Vector {
        let mut out = Vec::with_capacity(self.dim);
        for _ in 0..self.dim {
            out.push(self.sample_scalar(rng));
        }
        Vector::new(out).expect("samplers produce finite values")
    }
}

/// Standard symmetric alpha-stable draw (characteristic function
/// `exp(-|w|^alpha)`) by the Chambers-Mallows-Stuck transform: with
/// U ~ uniform(-pi/2, pi/2) and W ~ Exp(1),
/// `sin(alpha U) / cos(U)^{1/alpha} * (cos((1-alpha) U) / W)^{(1-alpha)/alpha}`.
fn stable_standard(alpha: f64, rng: &mut impl Rng) -> f64 {
    let u = (rng.random::<f64>() - 0.5) * PI;
    let w: f64 = Exp1.sample(rng);
    if alpha == 1.0 {
        return u.tan();
    }
    let direction = (alpha * u).sin() / u.cos().powf(1.0 / alpha);
    let tilt = ((1.0 - alpha) * u).cos() / w;
    direction * tilt.powf((1.0 - alpha) / alpha)
}

/// Empirical p-th root of the mean p-th power distance from `center`:
/// `(mean_i ‖s_i - center‖^p)^(1/p)`.
pub fn estimate_p_moment(samples: &[Vector], center: &Vector, p: f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::invalid("estimate_p_moment needs at least one sample"));
    }
    if !(p > 0.0 && p.is_finite()) {
        return Err(Error::invalid(format!("moment order must be positive, got {p}")));
    }
    let mut acc = 0.0;
    for s in samples {
        if s.dim() != center.dim() {
            return Err(Error::DimensionMismatch { expected: center.dim(), got: s.dim() });
        }
        acc += s.sub(center).norm().powf(p);
    }
    Ok((acc / samples.len() as f64).powf(1.0 / p))
}

/// Per-point and worst-case estimates of the p-th central gradient moment.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MomentCheck {
    pub p: f64,
    pub draws: usize,
    pub per_point: Vec<f64>,
    pub max_sigma_p: f64,
}

/// Estimates `sigma_p(x) = (E‖∇f(x;ξ) - ∇F(x)‖^p)^(1/p)` over a probe set by
/// drawing fresh samples from the problem's population at each point, and
/// reports the worst case. Requires a population gradient.
pub fn verify_p_bcm(
    problem: &ProblemInstance,
    points: &[Vector],
    p: f64,
    draws: usize,
    seed: RngSpec,
) -> Result<MomentCheck> {
    if points.is_empty() {
        return Err(Error::invalid("verify_p_bcm needs at least one probe point"));
    }
    if draws < 1 {
        return Err(Error::invalid("verify_p_bcm needs draws >= 1"));
    }
    if !(p > 0.0 && p.is_finite()) {
        return Err(Error::invalid(format!("moment order must be positive, got {p}")));
    }
    let mut per_point = Vec::with_capacity(points.len());
    for (j, x) in points.iter().enumerate() {
        let pop = problem.population_grad(x)?;
        let mut rng = seed.child(j as u64).build();
        let mut acc = 0.0;
        for _ in 0..draws {
            let record = problem.family().sample_record(&mut rng);
            let dev = problem.record_grad(x, &record)?.sub(&pop);
            acc += dev.norm().powf(p);
        }
        per_point.push((acc / draws as f64).powf(1.0 / p));
    }
    let max_sigma_p = per_point.iter().cloned().fold(0.0, f64::max);
    Ok(MomentCheck { p, draws, per_point, max_sigma_p })
}
