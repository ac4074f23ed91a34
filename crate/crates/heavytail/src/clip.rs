use crate::error::{Error, Result};
use crate::vector::Vector;

/// Norm clipping: returns `u` unchanged when `‖u‖ <= threshold`, otherwise
/// rescales to norm `threshold`. The zero vector maps to itself; the
/// direction is never altered. `threshold` may be `+inf`, which makes the
/// operator the identity.
pub fn clip(u: &Vector, threshold: f64) -> Result<Vector> {
    if threshold.is_nan() || threshold <= 0.0 {
        return Err(Error::invalid(format!(
            "clip threshold must be positive, got {threshold}"
        )));
    }
    let norm = u.norm();
    if norm <= threshold {
        Ok(u.clone())
    } else {
        Ok(u.scaled(threshold / norm))
    }
}
