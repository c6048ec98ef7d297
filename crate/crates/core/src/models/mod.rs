//! Concrete problem instances on top of the generic engine.

pub mod linear;
pub mod rpca;

use crate::error::{Error, Result};
use crate::numerics::{fro_norm, Matrix};

/// `||estimate - truth||_F / ||truth||_F`.
pub fn relerr(estimate: &Matrix, truth: &Matrix) -> Result<f64> {
    if !estimate.same_shape(truth) {
        return Err(Error::shape(
            format!("{:?}", truth.shape()),
            format!("{:?}", estimate.shape()),
            "relerr",
        ));
    }
    let denom = fro_norm(truth);
    if denom == 0.0 {
        return Err(Error::invalid("truth", "zero Frobenius norm"));
    }
    Ok(fro_norm(&estimate.sub(truth)) / denom)
}

/// [`relerr`] with a degenerate-case fallback for trace columns: when the
/// truth has zero norm the absolute error is recorded instead.
pub fn relerr_or_abs(estimate: &Matrix, truth: &Matrix) -> f64 {
    let denom = fro_norm(truth);
    let num = fro_norm(&estimate.sub(truth));
    if denom == 0.0 {
        num
    } else {
        num / denom
    }
}
