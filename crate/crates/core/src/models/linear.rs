//! Block-split homogeneous linear systems.
//!
//! For `A = [A_1 ... A_N]` the problem `min 0 s.t. sum_i A_i x_i = 0` is a
//! degenerate instance of the block-composite template: every objective is
//! zero and each sweep minimizes
//! `(alpha/2) ||A_i x_i + rest + p/alpha||^2 + (gamma_i/2) ||x_i - x_i^k||^2`
//! in closed form:
//!
//! ```text
//! x_i <- (alpha A_i^T A_i + gamma_i I)^{-1}
//!        (gamma_i x_i^k - alpha A_i^T (rest + p/alpha))
//! ```
//!
//! Convergence requires the last block to be square and nonsingular; any
//! limit is a solution of `A x = 0`.

use crate::bregman::BregmanDistance;
use crate::engine::{BlockSpec, Mode, ProblemSpec, SubproblemInput};
use crate::error::{Error, Result};
use crate::numerics::{spectral_norm_lower_bound, Matrix};

/// Builds the engine problem for the given blocks and generator weights.
pub fn linear_system_spec(
    a_blocks: Vec<Matrix>,
    bregman_gammas: Vec<f64>,
    alpha: f64,
) -> Result<ProblemSpec> {
    if a_blocks.is_empty() {
        return Err(Error::invalid("a_blocks", "need at least one block"));
    }
    if a_blocks.len() != bregman_gammas.len() {
        return Err(Error::invalid(
            "bregman_gammas",
            "one weight required per block",
        ));
    }
    if alpha <= 0.0 {
        return Err(Error::invalid("alpha", "must be > 0"));
    }
    let m = a_blocks[0].rows();
    for a in &a_blocks {
        if a.rows() != m {
            return Err(Error::shape(
                format!("{m} rows"),
                format!("{} rows", a.rows()),
                "linear_system_spec",
            ));
        }
    }
    let last = a_blocks.last().expect("nonempty");
    if last.rows() != last.cols() {
        return Err(Error::invalid(
            "a_blocks",
            "last block must be square (and nonsingular)",
        ));
    }
    if spectral_norm_lower_bound(last)? == 0.0 {
        return Err(Error::RankDeficient);
    }

    let mut blocks = Vec::with_capacity(a_blocks.len());
    for (i, (a, gamma)) in a_blocks.into_iter().zip(bregman_gammas).enumerate() {
        if gamma <= 0.0 {
            return Err(Error::invalid("bregman_gammas", "weights must be > 0"));
        }
        let ata = a.transpose().matmul(&a);
        let at = a.transpose();
        blocks.push(BlockSpec {
            name: format!("x{}", i + 1),
            constraint_matrix: a,
            objective: Box::new(|_| 0.0),
            solver: Box::new(move |inp: &SubproblemInput| {
                let n = ata.rows();
                let mut lhs = ata.scale(inp.alpha);
                for d in 0..n {
                    lhs.set(d, d, lhs.get(d, d) + gamma);
                }
                let rhs = if inp.alpha > 0.0 {
                    inp.prev.scale(gamma).sub(
                        &at.matmul(&inp.rest.add(&inp.multiplier.scale(1.0 / inp.alpha)))
                            .scale(inp.alpha),
                    )
                } else {
                    inp.prev.scale(gamma)
                };
                lhs.solve_spd(&rhs)
                    .map_err(|_| Error::Numeric("singular block normal matrix".into()))
            }),
            bregman: BregmanDistance::squared_euclidean(gamma)?,
            objective_smooth_lipschitz: Some(0.0),
            objective_strong_convexity: 0.0,
        });
    }
    Ok(ProblemSpec {
        blocks,
        alpha,
        alpha_schedule: None,
        mode: Mode::Constrained,
    })
}
