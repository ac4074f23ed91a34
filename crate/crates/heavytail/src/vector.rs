use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense real vector with finite components and dimension >= 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Vector(Vec<f64>);

impl Vector {
    /// Builds a vector, rejecting empty input and non-finite components.
    pub fn new(components: Vec<f64>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::invalid("vector dimension must be >= 1"));
        }
        if let Some(j) = components.iter().position(|c| !c.is_finite()) {
            return Err(Error::invalid(format!(
                "vector component {j} is not finite"
            )));
        }
        Ok(Vector(components))
    }

    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 1, "vector dimension must be >= 1");
        Vector(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn norm(&self) -> f64 {
        let naive = self.0.iter().map(|c| c * c).sum::<f64>().sqrt();
        if naive.is_finite() {
            return naive;
        }
        // rescale to dodge squared-term overflow
        let max = self.0.iter().fold(0.0f64, |m, c| m.max(c.abs()));
        if !max.is_finite() {
            return f64::INFINITY;
        }
        max * self.0.iter().map(|c| (c / max) * (c / max)).sum::<f64>().sqrt()
    }

    pub fn dot(&self, other: &Vector) -> f64 {
        assert_eq!(self.dim(), other.dim(), "dot on mismatched dimensions");
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    pub fn scaled(&self, s: f64) -> Vector {
        Vector(self.0.iter().map(|c| c * s).collect())
    }

    pub fn add(&self, other: &Vector) -> Vector {
        assert_eq!(self.dim(), other.dim(), "add on mismatched dimensions");
        Vector(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, other: &Vector) -> Vector {
        assert_eq!(self.dim(), other.dim(), "sub on mismatched dimensions");
        Vector(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    /// self += s * other, in place.
    pub fn axpy(&mut self, s: f64, other: &Vector) {
        assert_eq!(self.dim(), other.dim(), "axpy on mismatched dimensions");
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a += s * b;
        }
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|c| c.is_finite())
    }
}

impl std::ops::Index<usize> for Vector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl From<Vector> for Vec<f64> {
    fn from(v: Vector) -> Vec<f64> {
        v.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_empty_and_non_finite() {
        assert!(Vector::new(vec![]).is_err());
        assert!(Vector::new(vec![1.0, f64::NAN]).is_err());
        assert!(Vector::new(vec![f64::INFINITY]).is_err());
        assert!(Vector::new(vec![0.0]).is_ok());
    }

    #[test]
    fn norm_and_dot() {
        let v = Vector::new(vec![3.0, 4.0]).unwrap();
        assert_eq!(v.norm(), 5.0);
        let w = Vector::new(vec![-1.0, 2.0]).unwrap();
        assert_eq!(v.dot(&w), 5.0);
    }

    #[test]
    fn norm_survives_squared_overflow() {
        let v = Vector(vec![1.0e200, -1.0e200]);
        assert!((v.norm() - 1.0e200 * 2.0f64.sqrt()).abs() < 1e186);
        let w = Vector(vec![3.0e307, 4.0e307]);
        assert!((w.norm() - 5.0e307).abs() < 1e293);
    }

    #[test]
    fn axpy_matches_scaled_add() {
        let v = Vector::new(vec![1.0, -2.0, 0.5]).unwrap();
        let w = Vector::new(vec![4.0, 0.25, -3.0]).unwrap();
        let mut u = v.clone();
        u.axpy(-0.5, &w);
        assert_eq!(u, v.add(&w.scaled(-0.5)));
    }
}
