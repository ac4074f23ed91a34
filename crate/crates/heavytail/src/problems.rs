//! Synthetic finite-sum objectives `F_S(x) = (1/n) sum_i f(x; xi_i)` with
//! per-component gradients, known smoothness constants, and population
//! gradients (closed form where the family allows it, a stored holdout
//! estimate otherwise).

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, FamilyTag};
use crate::error::{Error, Result};
use crate::noise::NoiseSpec;
use crate::rng::RngSpec;
use crate::vector::Vector;

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// A problem family doubles as the population law: it can draw fresh sample
/// records, assemble datasets, and evaluate per-record losses and gradients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum ProblemFamily {
    /// Two scalar components `log(1 + exp(s x))`, s = +1 or -1; the
    /// population puts mass 1/2 on each sign. Each component is 1/4-smooth.
    LogisticPair,
    /// `f(x; (a, b)) = rho(<a, x> - b)` with the saturating loss
    /// `rho(r) = r^2 / (1 + r^2)`; rows `a` lie on the unit sphere and
    /// `b = <a, x_true> + label noise`. Nonconvex; `|rho''| <= 2`.
    RobustRegression { x_true: Vector, label_noise: NoiseSpec },
    /// `f(x; xi) = 0.5 ‖x - xi‖^2 + c sum_j sin(x_j)` with `xi` drawn from a
    /// mean-zero noise family, so `∇F(x) = x + c cos(x)` coordinatewise.
    /// Smoothness constant `1 + |c|`.
    QuadPlusSine { c: f64, noise: NoiseSpec },
}

impl ProblemFamily {
    pub fn robust_regression(x_true: Vector, label_noise: NoiseSpec) -> Result<Self> {
        if label_noise.dim != 1 {
            return Err(Error::invalid("label noise must be one-dimensional"));
        }
        label_noise.validate()?;
        Ok(ProblemFamily::RobustRegression { x_true, label_noise })
    }

    pub fn quad_plus_sine(dim: usize, c: f64, noise: NoiseSpec) -> Result<Self> {
        if !c.is_finite() {
            return Err(Error::invalid("c must be finite"));
        }
        if noise.dim != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: noise.dim });
        }
        noise.validate()?;
        Ok(ProblemFamily::QuadPlusSine { c, noise })
    }

    pub fn tag(&self) -> FamilyTag {
        match self {
            ProblemFamily::LogisticPair => FamilyTag::LogisticPair,
            ProblemFamily::RobustRegression { .. } => FamilyTag::RobustRegression,
            ProblemFamily::QuadPlusSine { .. } => FamilyTag::QuadPlusSine,
        }
    }

    /// Dimension of the optimization variable.
    pub fn dim(&self) -> usize {
        match self {
            ProblemFamily::LogisticPair => 1,
            ProblemFamily::RobustRegression { x_true, .. } => x_true.dim(),
            ProblemFamily::QuadPlusSine { noise, .. } => noise.dim,
        }
    }

    /// Width of one sample record.
    pub fn record_width(&self) -> usize {
        match self {
            ProblemFamily::LogisticPair => 1,
            ProblemFamily::RobustRegression { x_true, .. } => x_true.dim() + 1,
            ProblemFamily::QuadPlusSine { noise, .. } => noise.dim,
        }
    }

    /// One fresh record from the population law.
    pub fn sample_record(&self, rng: &mut impl Rng) -> Vec<f64> {
        match self {
            ProblemFamily::LogisticPair => {
                vec![if rng.random::<bool>() { 1.0 } else { -1.0 }]
            }
            ProblemFamily::RobustRegression { x_true, label_noise } => {
                let d = x_true.dim();
                let mut a: Vec<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
                let norm = a.iter().map(|v| v * v).sum::<f64>().sqrt();
                // resample on the (measure-zero) degenerate draw
                if norm == 0.0 {
                    return self.sample_record(rng);
                }
                for v in &mut a {
                    *v /= norm;
                }
                let signal: f64 = a.iter().zip(x_true.as_slice()).map(|(ai, xi)| ai * xi).sum();
                let b = signal + label_noise.sample_scalar(rng);
                a.push(b);
                a
            }
            ProblemFamily::QuadPlusSine { noise, .. } => noise.sample(rng).into_vec(),
        }
    }

    pub fn make_dataset(&self, n: usize, rng: &mut impl Rng) -> Result<Dataset> {
        if n < 1 {
            return Err(Error::invalid("dataset size must be >= 1"));
        }
        let width = self.record_width();
        let mut values = Vec::with_capacity(n * width);
        for _ in 0..n {
            values.extend(self.sample_record(rng));
        }
        Dataset::new(self.tag(), width, values)
    }

    /// Loss of one record at `x`.
    pub fn record_value(&self, x: &Vector, record: &[f64]) -> Result<f64> {
        self.check_shapes(x, record)?;
        Ok(match self {
            ProblemFamily::LogisticPair => softplus(record[0] * x[0]),
            ProblemFamily::RobustRegression { .. } => {
                let r = residual(x, record);
                r * r / (1.0 + r * r)
            }
            ProblemFamily::QuadPlusSine { c, .. } => {
                let quad: f64 = x
                    .as_slice()
                    .iter()
                    .zip(record)
                    .map(|(xj, kj)| (xj - kj) * (xj - kj))
                    .sum();
                0.5 * quad + c * x.as_slice().iter().map(|xj| xj.sin()).sum::<f64>()
            }
        })
    }

    /// Gradient of one record's loss at `x`.
    pub fn record_grad(&self, x: &Vector, record: &[f64]) -> Result<Vector> {
        self.check_shapes(x, record)?;
        let grad = match self {
            ProblemFamily::LogisticPair => {
                let s = record[0];
                vec![s * sigmoid(s * x[0])]
            }
            ProblemFamily::RobustRegression { .. } => {
                let r = residual(x, record);
                let w = 2.0 * r / ((1.0 + r * r) * (1.0 + r * r));
                record[..x.dim()].iter().map(|ai| w * ai).collect()
            }
            ProblemFamily::QuadPlusSine { c, .. } => x
                .as_slice()
                .iter()
                .zip(record)
                .map(|(xj, kj)| (xj - kj) + c * xj.cos())
                .collect(),
        };
        Vector::new(grad)
    }

    /// Closed-form population gradient, for the families that have one.
    pub fn population_grad(&self, x: &Vector) -> Result<Vector> {
        match self {
            ProblemFamily::LogisticPair => {
                Vector::new(vec![(sigmoid(x[0]) - sigmoid(-x[0])) / 2.0])
            }
            ProblemFamily::QuadPlusSine { c, .. } => Vector::new(
                x.as_slice().iter().map(|xj| xj + c * xj.cos()).collect(),
            ),
            ProblemFamily::RobustRegression { .. } => Err(Error::NotAvailable(
                "robust regression has no closed-form population gradient; attach a holdout"
                    .into(),
            )),
        }
    }

    /// Smoothness constant valid for every record the family can produce,
    /// given the realized rows.
    pub fn smoothness(&self, dataset: &Dataset) -> f64 {
        match self {
            ProblemFamily::LogisticPair => 0.25,
            ProblemFamily::QuadPlusSine { c, .. } => 1.0 + c.abs(),
            ProblemFamily::RobustRegression { x_true, .. } => {
                // |rho''| <= 2, so each component is 2‖a_i‖^2-smooth
                let d = x_true.dim();
                let max_sq = dataset
                    .rows()
                    .map(|row| row[..d].iter().map(|v| v * v).sum::<f64>())
                    .fold(0.0, f64::max);
                2.0 * max_sq
            }
        }
    }

    fn check_shapes(&self, x: &Vector, record: &[f64]) -> Result<()> {
        if x.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: x.dim() });
        }
        if record.len() != self.record_width() {
            return Err(Error::DimensionMismatch {
                expected: self.record_width(),
                got: record.len(),
            });
        }
        Ok(())
    }
}

fn residual(x: &Vector, record: &[f64]) -> f64 {
    let d = x.dim();
    let pred: f64 = record[..d].iter().zip(x.as_slice()).map(|(ai, xi)| ai * xi).sum();
    pred - record[d]
}

/// A family bound to a concrete dataset, with its smoothness constant and an
/// optional holdout for Monte Carlo population gradients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemInstance {
    family: ProblemFamily,
    dataset: Dataset,
    smoothness: f64,
    holdout: Option<Dataset>,
}

impl ProblemInstance {
    pub fn new(family: ProblemFamily, dataset: Dataset) -> Result<Self> {
        if dataset.tag() != family.tag() {
            return Err(Error::invalid(format!(
                "dataset tagged {:?} does not match family {:?}",
                dataset.tag(),
                family.tag()
            )));
        }
        if dataset.width() != family.record_width() {
            return Err(Error::DimensionMismatch {
                expected: family.record_width(),
                got: dataset.width(),
            });
        }
        let smoothness = family.smoothness(&dataset);
        Ok(ProblemInstance { family, dataset, smoothness, holdout: None })
    }

    /// Attaches `size` fresh records for Monte Carlo population gradients.
    pub fn with_holdout(mut self, size: usize, seed: RngSpec) -> Result<Self> {
        let mut rng = seed.build();
        self.holdout = Some(self.family.make_dataset(size, &mut rng)?);
        Ok(self)
    }

    pub fn family(&self) -> &ProblemFamily {
        &self.family
    }

    pub fn dataset(&self) -> &Dataset {
        &self.dataset
    }

    pub fn n(&self) -> usize {
        self.dataset.n()
    }

    pub fn dim(&self) -> usize {
        self.family.dim()
    }

    pub fn smoothness(&self) -> f64 {
        self.smoothness
    }

    /// Swaps the bound dataset, keeping the family. The replacement must
    /// have the same shape.
    pub fn with_dataset(&self, dataset: Dataset) -> Result<ProblemInstance> {
        if dataset.n() != self.n() {
            return Err(Error::invalid("replacement dataset must keep the same n"));
        }
        let mut other = ProblemInstance::new(self.family.clone(), dataset)?;
        other.holdout = self.holdout.clone();
        Ok(other)
    }

    pub fn component_value(&self, x: &Vector, i: usize) -> Result<f64> {
        self.check_index(i)?;
        self.family.record_value(x, self.dataset.row(i))
    }

    pub fn component_grad(&self, x: &Vector, i: usize) -> Result<Vector> {
        self.check_index(i)?;
        self.family.record_grad(x, self.dataset.row(i))
    }

    pub fn record_grad(&self, x: &Vector, record: &[f64]) -> Result<Vector> {
        self.family.record_grad(x, record)
    }

    pub fn empirical_value(&self, x: &Vector) -> Result<f64> {
        let mut acc = 0.0;
        for row in self.dataset.rows() {
            acc += self.family.record_value(x, row)?;
        }
        Ok(acc / self.n() as f64)
    }

    pub fn empirical_grad(&self, x: &Vector) -> Result<Vector> {
        let mut acc = Vector::zeros(self.dim());
        for row in self.dataset.rows() {
            acc.axpy(1.0, &self.family.record_grad(x, row)?);
        }
        Ok(acc.scaled(1.0 / self.n() as f64))
    }

    /// Population gradient: closed form where available, otherwise the
    /// holdout mean. Errors if neither exists.
    pub fn population_grad(&self, x: &Vector) -> Result<Vector> {
        match self.family.population_grad(x) {
            Ok(g) => Ok(g),
            Err(Error::NotAvailable(_)) => Ok(self.holdout_grad(x)?.0),
            Err(e) => Err(e),
        }
    }

    /// Population gradient with its Monte Carlo standard error (zero for
    /// closed-form families).
    pub fn population_grad_with_stderr(&self, x: &Vector) -> Result<(Vector, f64)> {
        match self.family.population_grad(x) {
            Ok(g) => Ok((g, 0.0)),
            Err(Error::NotAvailable(_)) => self.holdout_grad(x),
            Err(e) => Err(e),
        }
    }

    fn holdout_grad(&self, x: &Vector) -> Result<(Vector, f64)> {
        let holdout = self.holdout.as_ref().ok_or_else(|| {
            Error::NotAvailable(
                "population gradient needs a holdout; call with_holdout first".into(),
            )
        })?;
        let h = holdout.n();
        let mut mean = Vector::zeros(self.dim());
        let mut grads = Vec::with_capacity(h);
        for row in holdout.rows() {
            let g = self.family.record_grad(x, row)?;
            mean.axpy(1.0, &g);
            grads.push(g);
        }
        let mean = mean.scaled(1.0 / h as f64);
        // standard error of the vector mean: sqrt(sum_j var_j / h)
        let sq_dev: f64 = grads.iter().map(|g| g.sub(&mean).norm().powi(2)).sum();
        let stderr = if h > 1 { (sq_dev / ((h - 1) as f64 * h as f64)).sqrt() } else { f64::NAN };
        Ok((mean, stderr))
    }

    fn check_index(&self, i: usize) -> Result<()> {
        if i >= self.n() {
            return Err(Error::IndexOutOfRange { index: i, len: self.n() });
        }
        Ok(())
    }
}

/// The two-component scalar problem: `log(1 + e^x)` and `log(1 + e^{-x})`.
pub fn make_logistic_pair() -> ProblemInstance {
    let dataset = Dataset::new(FamilyTag::LogisticPair, 1, vec![1.0, -1.0])
        .expect("static layout is valid");
    ProblemInstance::new(ProblemFamily::LogisticPair, dataset).expect("static layout is valid")
}

/// Robust regression on n unit-sphere design rows with heavy-tailed label
/// noise. `x_true` is drawn uniformly from the unit sphere.
pub fn make_robust_regression(
    n: usize,
    dim: usize,
    label_noise: NoiseSpec,
    seed: RngSpec,
) -> Result<ProblemInstance> {
    if dim < 1 {
        return Err(Error::invalid("dim must be >= 1"));
    }
    let mut rng = seed.build();
    let mut x_true: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
    let norm = x_true.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > 0.0 {
        for v in &mut x_true {
            *v /= norm;
        }
    } else {
        x_true[0] = 1.0;
    }
    let family = ProblemFamily::robust_regression(Vector::new(x_true)?, label_noise)?;
    let dataset = family.make_dataset(n, &mut rng)?;
    ProblemInstance::new(family, dataset)
}

/// Quadratic-plus-sine objective on n noise draws.
pub fn make_quad_plus_sine(
    n: usize,
    dim: usize,
    c: f64,
    noise: NoiseSpec,
    seed: RngSpec,
) -> Result<ProblemInstance> {
    let family = ProblemFamily::quad_plus_sine(dim, c, noise)?;
    let mut rng = seed.build();
    let dataset = family.make_dataset(n, &mut rng)?;
    ProblemInstance::new(family, dataset)
}
