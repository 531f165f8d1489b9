use num_complex::Complex64;

use crate::error::{Error, Result};

/// Floor substituted for a zero regularizer.
pub const MIN_REGULARIZATION: f64 = 1e-12;

fn effective_alpha(alpha: f64) -> Result<f64> {
    if alpha.is_nan() || alpha < 0.0 {
        return Err(Error::invalid(format!(
            "regularizer must be >= 0, got {alpha}"
        )));
    }
    Ok(alpha.max(MIN_REGULARIZATION))
}

/// One complex NLMS step on a subband weight vector:
/// `w + mu * conj(x) * e / (alpha + |x|^2)`.
///
/// `x_block` is the subband reference history, newest sample first.
pub fn nlms_update(
    weights: &[Complex64],
    x_block: &[Complex64],
    error: Complex64,
    mu: f64,
    alpha: f64,
) -> Result<Vec<Complex64>> {
    let mut out = weights.to_vec();
    nlms_update_in_place(&mut out, x_block, error, mu, alpha)?;
    Ok(out)
}

pub fn nlms_update_in_place(
    weights: &mut [Complex64],
    x_block: &[Complex64],
    error: Complex64,
    mu: f64,
    alpha: f64,
) -> Result<()> {
    if weights.len() != x_block.len() {
        return Err(Error::invalid(format!(
            "weight length {} does not match input block length {}",
            weights.len(),
            x_block.len()
        )));
    }
    let alpha = effective_alpha(alpha)?;
    let energy: f64 = x_block.iter().map(|x| x.norm_sqr()).sum();
    let gain = error * (mu / (alpha + energy));
    for (w, x) in weights.iter_mut().zip(x_block) {
        *w += x.conj() * gain;
    }
    Ok(())
}
