//! Least-squares power-law fits on (n, metric) sweeps.

use serde::Serialize;

use crate::error::{Error, Result};

/// Ordinary least squares on `(ln n, ln metric)`.
#[derive(Debug, Clone, Serialize)]
pub struct RateFit {
    /// Fitted exponent of n.
    pub slope: f64,
    /// Standard error of the slope (NaN-free; 0 when only two points).
    pub slope_stderr: f64,
    pub intercept: f64,
    /// 1 - SSR/SST; 1.0 for a two-point fit.
    pub r_squared: f64,
    /// The (ln n, ln metric) pairs that were fitted.
    pub points: Vec<(f64, f64)>,
}

impl RateFit {
    /// Metric value the fit predicts at sample size n.
    pub fn predict(&self, n: f64) -> f64 {
        (self.intercept + self.slope * n.ln()).exp()
    }
}

/// Fits `metric ~ C * n^slope` through log-log least squares. Every metric
/// must be positive; the ns must be distinct.
pub fn fit_rate(ns: &[f64], metrics: &[f64]) -> Result<RateFit> {
    if ns.len() != metrics.len() {
        return Err(Error::invalid(format!(
            "fit needs matched lengths, got {} ns and {} metrics",
            ns.len(),
            metrics.len()
        )));
    }
    if ns.len() < 2 {
        return Err(Error::invalid("fit needs at least two points"));
    }
    let mut points = Vec::with_capacity(ns.len());
    for (&n, &m) in ns.iter().zip(metrics) {
        if !(n > 0.0 && n.is_finite()) || !(m > 0.0 && m.is_finite()) {
            return Err(Error::invalid(format!(
                "fit needs positive finite points, got ({n}, {m})"
            )));
        }
        points.push((n.ln(), m.ln()));
    }
    let k = points.len() as f64;
    let mean_x: f64 = points.iter().map(|(x, _)| x).sum::<f64>() / k;
    let mean_y: f64 = points.iter().map(|(_, y)| y).sum::<f64>() / k;
    let sxx: f64 = points.iter().map(|(x, _)| (x - mean_x) * (x - mean_x)).sum();
    if sxx == 0.0 {
        return Err(Error::invalid("fit needs at least two distinct n values"));
    }
    let sxy: f64 = points.iter().map(|(x, y)| (x - mean_x) * (y - mean_y)).sum();
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let ssr: f64 = points
        .iter()
        .map(|(x, y)| {
            let r = y - (intercept + slope * x);
            r * r
        })
        .sum();
    let sst: f64 = points.iter().map(|(_, y)| (y - mean_y) * (y - mean_y)).sum();
    let slope_stderr = if points.len() > 2 {
        (ssr / (k - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    let r_squared = if sst > 0.0 { 1.0 - ssr / sst } else { 1.0 };
    Ok(RateFit { slope, slope_stderr, intercept, r_squared, points })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_law_recovered() {
        // metric = 3 n^{-1/2}
        let ns = [16.0f64, 64.0, 256.0, 1024.0];
        let ms: Vec<f64> = ns.iter().map(|n| 3.0 * n.powf(-0.5)).collect();
        let fit = fit_rate(&ns, &ms).unwrap();
        assert!((fit.slope + 0.5).abs() < 1e-12);
        assert!((fit.intercept - 3.0f64.ln()).abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
        assert!(fit.slope_stderr < 1e-12);
        assert!((fit.predict(4096.0) - 3.0 * 4096.0f64.powf(-0.5)).abs() < 1e-12);
    }

    #[test]
    fn noisy_fit_reports_uncertainty() {
        let ns = [10.0, 100.0, 1000.0, 10000.0];
        // slope -1 but with multiplicative wobble
        let ms = [0.11, 0.009, 0.0012, 0.000095];
        let fit = fit_rate(&ns, &ms).unwrap();
        assert!(fit.slope < -0.9 && fit.slope > -1.1, "slope {}", fit.slope);
        assert!(fit.slope_stderr > 0.0);
        assert!(fit.r_squared > 0.97);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(fit_rate(&[1.0], &[1.0]).is_err());
        assert!(fit_rate(&[1.0, 2.0], &[1.0]).is_err());
        assert!(fit_rate(&[1.0, 2.0], &[1.0, -1.0]).is_err());
        assert!(fit_rate(&[1.0, 2.0], &[1.0, 0.0]).is_err());
        assert!(fit_rate(&[4.0, 4.0], &[1.0, 2.0]).is_err());
    }
}
