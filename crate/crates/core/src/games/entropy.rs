//! Single-shot entropies in bits.

use crate::error::{Error, Result};

const NORM_TOL: f64 = 1e-10;

fn check_distribution(p: &[f64]) -> Result<()> {
    if p.is_empty() || p.iter().any(|&v| v < -NORM_TOL || !v.is_finite()) {
        return Err(Error::input("probabilities must be finite and nonnegative"));
    }
    let s: f64 = p.iter().sum();
    if (s - 1.0).abs() > NORM_TOL {
        return Err(Error::input(format!("probabilities sum to {s:.12}, not 1")));
    }
    Ok(())
}

/// H_min(X) = −log₂ max_x p(x).
pub fn min_entropy(p: &[f64]) -> Result<f64> {
    check_distribution(p)?;
    Ok(-p.iter().copied().fold(0.0, f64::max).log2())
}

/// H_min(X|G) = −log₂ Σ_g max_x p(x, g) for a joint table stored row-major
/// with shape (|X|, |G|).
pub fn cond_min_entropy(joint: &[f64], shape: (usize, usize)) -> Result<f64> {
    if joint.len() != shape.0 * shape.1 {
        return Err(Error::input(format!("joint table of length {} does not have shape {shape:?}", joint.len())));
    }
    check_distribution(joint)?;
    let guess: f64 = (0..shape.1)
        .map(|g| (0..shape.0).map(|x| joint[x * shape.1 + g]).fold(0.0, f64::max))
        .sum();
    Ok(-guess.log2())
}
