//! Closed-form proximal maps: soft shrinkage, half shrinkage (the prox of
//! the square-root penalty), and singular-value thresholding.

use crate::error::Result;
use crate::numerics::{svd, Matrix};

/// Global minimizer of `(1/2)(s - a)^2 + tau * |s|`:
/// `sign(a) * max(|a| - tau, 0)`.
pub fn soft_shrink(a: f64, tau: f64) -> f64 {
    debug_assert!(tau >= 0.0);
    let mag = a.abs() - tau;
    if mag > 0.0 {
        a.signum() * mag
    } else {
        0.0
    }
}

/// Global minimizer of `(1/2)(s - a)^2 + tau * sqrt(|s|)`.
///
/// The output is zero iff `|a| <= (3/2) tau^(2/3)` (the boundary tie
/// resolves to zero); otherwise it is the larger root of the stationarity
/// cubic `t^3 - |a| t + tau/2 = 0` in `t = sqrt(s)`, squared and signed.
pub fn half_shrink(a: f64, tau: f64) -> f64 {
    debug_assert!(tau >= 0.0);
    if tau == 0.0 {
        return a;
    }
    let abs = a.abs();
    let threshold = 1.5 * tau.powf(2.0 / 3.0);
    if abs <= threshold {
        return 0.0;
    }
    // Trigonometric root of the depressed cubic. The argument of acos is
    // at most sqrt(2)/2 for |a| above the threshold.
    let u = 0.75 * 3f64.sqrt() * tau / abs.powf(1.5);
    let t = 2.0 * (abs / 3.0).sqrt() * (((std::f64::consts::PI - u.acos()) / 3.0).cos());
    a.signum() * t * t
}

/// Entrywise [`soft_shrink`].
pub fn soft_shrink_matrix(m: &Matrix, tau: f64) -> Matrix {
    m.map(|v| soft_shrink(v, tau))
}

/// Entrywise [`half_shrink`].
pub fn half_shrink_matrix(m: &Matrix, tau: f64) -> Matrix {
    m.map(|v| half_shrink(v, tau))
}

/// Singular-value thresholding: `U diag(soft_shrink(s_i, tau)) V^T`,
/// the global minimizer of `(1/2)||X - M||_F^2 + tau ||X||_*`.
pub fn svt(m: &Matrix, tau: f64) -> Result<Matrix> {
    Ok(svt_with_values(m, tau)?.0)
}

/// [`svt`] that also returns the thresholded singular values, so callers
/// can read the nuclear norm of the output without a second decomposition.
pub fn svt_with_values(m: &Matrix, tau: f64) -> Result<(Matrix, Vec<f64>)> {
    debug_assert!(tau >= 0.0);
    let mut dec = svd(m)?;
    for s in dec.singular_values.iter_mut() {
        *s = soft_shrink(*s, tau);
    }
    Ok((dec.reconstruct(), dec.singular_values))
}
