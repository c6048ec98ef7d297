//! Low-rank + sparse + noise matrix decomposition:
//!
//! ```text
//! min ||L||_* + lambda ||S||_{1/2}^{1/2} + (mu/2) ||T - M||_F^2
//! s.t. T = L + S
//! ```
//!
//! solved by three-block Bregman ADMM with squared-Euclidean generators
//! (weights `gamma1`, `gamma1`, `gamma2`). The block updates have closed
//! forms: singular-value thresholding for `L`, entrywise half shrinkage for
//! `S`, and a convex average for `T`. The fused path below applies them
//! directly; [`engine_spec`] builds the same problem for the generic engine
//! so the two routes can be cross-checked.
//!
//! The singular-value threshold is `1/(alpha + gamma1)`: the nuclear-norm
//! coefficient divided by the quadratic curvature of the `L` subproblem.
//! (A weight of `gamma1/(alpha + gamma1)` does not minimize the subproblem;
//! the exactness audit in the test suite distinguishes the two.)
//!
//! Sign convention: the engine mapping uses constraint matrices `-I`, `-I`,
//! `+I` so the constraint reads `T - L - S = 0`, matching the multiplier
//! update `p <- p + alpha (T - L - S)`.

use serde::{Deserialize, Serialize};

use crate::bregman::BregmanDistance;
use crate::engine::{
    self, BlockSpec, IterateState, Mode, ProblemSpec, StoppingRule, SubproblemInput, Trace,
    TraceRecord,
};
use crate::error::{Error, Result};
use crate::numerics::{fro_norm, inner, svd, Matrix};
use crate::prox::{half_shrink_matrix, svt_with_values};

/// Model and solver parameters.
///
/// `lambda = None` resolves to `60 / max(m, n)`; `gamma1 = None` tracks the
/// current penalty (`gamma1 = alpha`) and `gamma2 = None` tracks
/// `alpha + mu`. A growth factor <= 1 disables the penalty schedule.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct RpcaConfig {
    pub lambda: Option<f64>,
    pub mu: f64,
    pub gamma1: Option<f64>,
    pub gamma2: Option<f64>,
    pub alpha0: f64,
    pub alpha_growth: f64,
    pub alpha_max: f64,
    pub init_rank_fraction: f64,
    pub relchg_threshold: f64,
    pub max_iterations: usize,
}

impl Default for RpcaConfig {
    fn default() -> Self {
        RpcaConfig {
            lambda: None,
            mu: 1e4,
            gamma1: None,
            gamma2: None,
            alpha0: 1.0,
            alpha_growth: 1.1,
            alpha_max: 1e8,
            init_rank_fraction: 0.01,
            relchg_threshold: 1e-8,
            max_iterations: 5000,
        }
    }
}

impl RpcaConfig {
    pub fn resolved_lambda(&self, rows: usize, cols: usize) -> f64 {
        self.lambda.unwrap_or(60.0 / rows.max(cols) as f64)
    }

    /// Generator weights in effect at penalty `alpha`.
    pub fn gammas_at(&self, alpha: f64) -> (f64, f64) {
        (
            self.gamma1.unwrap_or(alpha),
            self.gamma2.unwrap_or(alpha + self.mu),
        )
    }

    pub fn validate(&self) -> Result<()> {
        if self.mu <= 0.0 {
            return Err(Error::invalid("mu", "must be > 0"));
        }
        if self.alpha0 <= 0.0 {
            return Err(Error::invalid("alpha0", "must be > 0"));
        }
        if let Some(l) = self.lambda {
            if l <= 0.0 {
                return Err(Error::invalid("lambda", "must be > 0"));
            }
        }
        for (name, g) in [("gamma1", self.gamma1), ("gamma2", self.gamma2)] {
            if let Some(g) = g {
                if g < 0.0 {
                    return Err(Error::invalid(name, "must be >= 0"));
                }
            }
        }
        if self.init_rank_fraction < 0.0 || self.init_rank_fraction > 1.0 {
            return Err(Error::invalid("init_rank_fraction", "must be in [0, 1]"));
        }
        Ok(())
    }
}

/// Solver state: the three blocks, the multiplier, the previous `T` (the
/// merit anchor), and the current penalty.
#[derive(Debug, Clone)]
pub struct RpcaState {
    pub l: Matrix,
    pub s: Matrix,
    pub t: Matrix,
    pub p: Matrix,
    pub prev_t: Matrix,
    pub alpha_current: f64,
    pub iteration: usize,
}

/// Per-step byproducts: step norms plus the thresholded singular values of
/// the new `L` (its nuclear norm without a second decomposition).
#[derive(Debug, Clone)]
pub struct RpcaStepInfo {
    pub block_steps: [f64; 3],
    pub multiplier_step: f64,
    pub primal_residual: f64,
    pub alpha_used: f64,
    pub l_singular_values: Vec<f64>,
}

/// Initial state: `L` is the best rank-`r` approximation of the
/// observation with `r = max(1, ceil(init_rank_fraction * min(m, n)))`,
/// `S = 0`, `T = L`, `p = 0`.
pub fn rpca_init(m_obs: &Matrix, cfg: &RpcaConfig) -> Result<RpcaState> {
    cfg.validate()?;
    let r = ((cfg.init_rank_fraction * m_obs.rows().min(m_obs.cols()) as f64).ceil() as usize)
        .max(1);
    let dec = svd(m_obs)?;
    let l = dec.reconstruct_truncated(r);
    let t = l.clone();
    Ok(RpcaState {
        prev_t: t.clone(),
        s: Matrix::zeros(m_obs.rows(), m_obs.cols()),
        p: Matrix::zeros(m_obs.rows(), m_obs.cols()),
        l,
        t,
        alpha_current: cfg.alpha0,
        iteration: 0,
    })
}

// Shared update kernels. The engine solvers call the same functions on the
// same intermediate quantities, so the fused and generic paths agree
// bitwise.

fn l_update(
    t_minus_s: &Matrix,
    p: &Matrix,
    l_prev: &Matrix,
    alpha: f64,
    gamma1: f64,
) -> Result<(Matrix, Vec<f64>)> {
    let denom = alpha + gamma1;
    let anchor = t_minus_s
        .add(&p.scale(1.0 / alpha))
        .scale(alpha)
        .add(&l_prev.scale(gamma1))
        .scale(1.0 / denom);
    svt_with_values(&anchor, 1.0 / denom)
}

fn s_update(
    t_minus_l: &Matrix,
    p: &Matrix,
    s_prev: &Matrix,
    alpha: f64,
    gamma1: f64,
    lambda: f64,
) -> Matrix {
    let denom = alpha + gamma1;
    let anchor = t_minus_l
        .add(&p.scale(1.0 / alpha))
        .scale(alpha)
        .add(&s_prev.scale(gamma1))
        .scale(1.0 / denom);
    half_shrink_matrix(&anchor, lambda / denom)
}

fn t_update(
    l_plus_s: &Matrix,
    p: &Matrix,
    t_prev: &Matrix,
    m_obs: &Matrix,
    mu: f64,
    alpha: f64,
    gamma2: f64,
) -> Matrix {
    let denom = mu + alpha + gamma2;
    m_obs
        .scale(mu)
        .add(&l_plus_s.sub(&p.scale(1.0 / alpha)).scale(alpha))
        .add(&t_prev.scale(gamma2))
        .scale(1.0 / denom)
}

/// One sweep of the closed-form updates, then the penalty schedule.
pub fn rpca_step(
    state: &RpcaState,
    cfg: &RpcaConfig,
    m_obs: &Matrix,
) -> Result<(RpcaState, RpcaStepInfo)> {
    let alpha = state.alpha_current;
    let (g1, g2) = cfg.gammas_at(alpha);
    let lambda = cfg.resolved_lambda(m_obs.rows(), m_obs.cols());

    let (l_new, l_values) = l_update(&state.t.sub(&state.s), &state.p, &state.l, alpha, g1)?;
    let s_new = s_update(&state.t.sub(&l_new), &state.p, &state.s, alpha, g1, lambda);
    let t_new = t_update(
        &l_new.add(&s_new),
        &state.p,
        &state.t,
        m_obs,
        cfg.mu,
        alpha,
        g2,
    );
    let residual = t_new.sub(&l_new.add(&s_new));
    let p_new = state.p.add(&residual.scale(alpha));

    let info = RpcaStepInfo {
        block_steps: [
            fro_norm(&l_new.sub(&state.l)),
            fro_norm(&s_new.sub(&state.s)),
            fro_norm(&t_new.sub(&state.t)),
        ],
        multiplier_step: fro_norm(&p_new.sub(&state.p)),
        primal_residual: fro_norm(&residual),
        alpha_used: alpha,
        l_singular_values: l_values,
    };
    let alpha_next = if cfg.alpha_growth > 1.0 {
        (alpha * cfg.alpha_growth).min(cfg.alpha_max)
    } else {
        alpha
    };
    Ok((
        RpcaState {
            prev_t: state.t.clone(),
            l: l_new,
            s: s_new,
            t: t_new,
            p: p_new,
            alpha_current: alpha_next,
            iteration: state.iteration + 1,
        },
        info,
    ))
}

/// Descent-machinery constants for this model at fixed `alpha`:
/// `sigma_C = 1`, `ell_h = mu`, `ell_phi = gamma2`,
/// `mu_3 = max(mu, gamma2)` (both the data term and the generator are
/// strongly convex; the larger modulus gives the tighter constant).
pub fn rpca_descent_constants(mu: f64, gamma1: f64, gamma2: f64, alpha: f64) -> (f64, f64) {
    let sigma0 = 2.0 * gamma2 * gamma2 / alpha;
    let mu3 = mu.max(gamma2);
    let tail = mu3 - 4.0 * (mu + gamma2).powi(2) / alpha - 4.0 * gamma2 * gamma2 / alpha;
    let sigma1 = 0.5 * gamma1.min(tail);
    (sigma0, sigma1)
}

/// The model objective
/// `||L||_* + lambda sum sqrt|S_ij| + (mu/2) ||T - M||_F^2`.
pub fn rpca_objective(
    l: &Matrix,
    s: &Matrix,
    t: &Matrix,
    m_obs: &Matrix,
    lambda: f64,
    mu: f64,
) -> Result<f64> {
    Ok(svd(l)?.nuclear_norm() + lambda * half_quasi_norm(s) + 0.5 * mu * fro_norm(&t.sub(m_obs)).powi(2))
}

fn half_quasi_norm(s: &Matrix) -> f64 {
    s.to_row_major().iter().map(|v| v.abs().sqrt()).sum()
}

/// Ground truth for the three blocks, used to fill the trace's relative
/// error columns.
pub struct RpcaTruth<'a> {
    pub l: &'a Matrix,
    pub s: &'a Matrix,
    pub t: &'a Matrix,
}

pub fn rpca_solve(m_obs: &Matrix, cfg: &RpcaConfig) -> Result<(RpcaState, Trace)> {
    rpca_solve_with_truth(m_obs, cfg, None)
}

/// Runs init + sweep until `relChg < relchg_threshold` or the iteration
/// cap, recording the full trace.
pub fn rpca_solve_with_truth(
    m_obs: &Matrix,
    cfg: &RpcaConfig,
    truth: Option<&RpcaTruth>,
) -> Result<(RpcaState, Trace)> {
    let mut state = rpca_init(m_obs, cfg)?;
    let lambda = cfg.resolved_lambda(m_obs.rows(), m_obs.cols());
    let mut trace = Trace::new(vec!["L".into(), "S".into(), "T".into()]);
    for _ in 0..cfg.max_iterations {
        let (next, info) = rpca_step(&state, cfg, m_obs)?;
        let record = fused_trace_record(&state, &next, &info, cfg, m_obs, lambda, truth)?;
        let rc = record.relchg;
        trace.records.push(record);
        state = next;
        if rc < cfg.relchg_threshold {
            break;
        }
    }
    Ok((state, trace))
}

fn fused_trace_record(
    prev: &RpcaState,
    next: &RpcaState,
    info: &RpcaStepInfo,
    cfg: &RpcaConfig,
    m_obs: &Matrix,
    lambda: f64,
    truth: Option<&RpcaTruth>,
) -> Result<TraceRecord> {
    let alpha = info.alpha_used;
    let (g1, g2) = cfg.gammas_at(alpha);
    let objective = info.l_singular_values.iter().sum::<f64>()
        + lambda * half_quasi_norm(&next.s)
        + 0.5 * cfg.mu * fro_norm(&next.t.sub(m_obs)).powi(2);
    let residual = next.t.sub(&next.l.add(&next.s));
    let lagrangian =
        objective + inner(&next.p, &residual)? + 0.5 * alpha * fro_norm(&residual).powi(2);
    let (sigma0, _) = rpca_descent_constants(cfg.mu, g1, g2, alpha);
    let merit = lagrangian + sigma0 * info.block_steps[2] * info.block_steps[2];

    let dl = next.l.sub(&prev.l);
    let ds = next.s.sub(&prev.s);
    let dt = next.t.sub(&prev.t);
    let dp = next.p.sub(&prev.p);
    let res_l = ds.sub(&dt).scale(alpha).sub(&dl.scale(g1)).sub(&dp);
    let res_s = dt.scale(-alpha).sub(&ds.scale(g1)).sub(&dp);
    let res_t = dp.sub(&dt.scale(g2)).add(&dt.scale(2.0 * sigma0));
    let stationarity = fro_norm(&res_l).max(fro_norm(&res_s)).max(fro_norm(&res_t));

    let relerr = truth.map(|t| {
        vec![
            super::relerr_or_abs(&next.l, t.l),
            super::relerr_or_abs(&next.s, t.s),
            super::relerr_or_abs(&next.t, t.t),
        ]
    });

    Ok(TraceRecord {
        iteration: next.iteration,
        alpha,
        objective,
        lagrangian,
        merit_lhat: Some(merit),
        relchg: engine::relchg_blocks(
            &[prev.l.clone(), prev.s.clone(), prev.t.clone()],
            &[next.l.clone(), next.s.clone(), next.t.clone()],
        ),
        relerr,
        primal_residual: info.primal_residual,
        stationarity_residual: stationarity,
        block_steps: info.block_steps.to_vec(),
        multiplier_step: info.multiplier_step,
    })
}

/// Builds the same problem for the generic engine, with the generator
/// weights frozen at `cfg.alpha0` and no penalty schedule. Used to
/// cross-validate the fused path and to drive the parameter validators.
pub fn engine_spec(m_obs: &Matrix, cfg: &RpcaConfig) -> Result<ProblemSpec> {
    cfg.validate()?;
    let alpha = cfg.alpha0;
    let (g1, g2) = cfg.gammas_at(alpha);
    if g1 <= 0.0 || g2 <= 0.0 {
        return Err(Error::invalid(
            "gamma",
            "engine path requires strictly positive generator weights",
        ));
    }
    let m = m_obs.rows();
    let lambda = cfg.resolved_lambda(m_obs.rows(), m_obs.cols());
    let mu = cfg.mu;
    let neg_i = Matrix::identity(m).scale(-1.0);

    let l_block = BlockSpec {
        name: "L".to_string(),
        constraint_matrix: neg_i.clone(),
        objective: Box::new(|l: &Matrix| {
            svd(l).map(|d| d.nuclear_norm()).unwrap_or(f64::INFINITY)
        }),
        solver: Box::new(move |inp: &SubproblemInput| {
            // rest = T - S for this block ordering
            Ok(l_update(inp.rest, inp.multiplier, inp.prev, inp.alpha, g1)?.0)
        }),
        bregman: BregmanDistance::squared_euclidean(g1)?,
        objective_smooth_lipschitz: None,
        objective_strong_convexity: 0.0,
    };
    let s_block = BlockSpec {
        name: "S".to_string(),
        constraint_matrix: neg_i,
        objective: Box::new(move |s: &Matrix| lambda * half_quasi_norm(s)),
        solver: Box::new(move |inp: &SubproblemInput| {
            Ok(s_update(inp.rest, inp.multiplier, inp.prev, inp.alpha, g1, lambda))
        }),
        bregman: BregmanDistance::squared_euclidean(g1)?,
        objective_smooth_lipschitz: None,
        objective_strong_convexity: 0.0,
    };
    let m_for_obj = m_obs.clone();
    let m_for_solver = m_obs.clone();
    let t_block = BlockSpec {
        name: "T".to_string(),
        constraint_matrix: Matrix::identity(m),
        objective: Box::new(move |t: &Matrix| {
            0.5 * mu * fro_norm(&t.sub(&m_for_obj)).powi(2)
        }),
        solver: Box::new(move |inp: &SubproblemInput| {
            // rest = -(L + S); negation is exact
            Ok(t_update(
                &inp.rest.neg(),
                inp.multiplier,
                inp.prev,
                &m_for_solver,
                mu,
                inp.alpha,
                g2,
            ))
        }),
        bregman: BregmanDistance::squared_euclidean(g2)?,
        objective_smooth_lipschitz: Some(mu),
        objective_strong_convexity: mu,
    };
    Ok(ProblemSpec {
        blocks: vec![l_block, s_block, t_block],
        alpha,
        alpha_schedule: None,
        mode: Mode::Constrained,
    })
}

/// Engine state mirroring an [`RpcaState`].
pub fn engine_state(spec: &ProblemSpec, state: &RpcaState) -> Result<IterateState> {
    let mut st = IterateState::new(
        spec,
        vec![state.l.clone(), state.s.clone(), state.t.clone()],
    )?;
    st.p = state.p.clone();
    st.prev_last_block = state.prev_t.clone();
    st.iteration = state.iteration;
    st.alpha_current = state.alpha_current;
    Ok(st)
}

/// Convenience wrapper: solve through the generic engine instead of the
/// fused path (fixed penalty, weights resolved at `alpha0`).
pub fn rpca_solve_engine(
    m_obs: &Matrix,
    cfg: &RpcaConfig,
    stop: &StoppingRule,
) -> Result<(IterateState, Trace)> {
    let spec = engine_spec(m_obs, cfg)?;
    let init = engine_state(&spec, &rpca_init(m_obs, cfg)?)?;
    engine::run(&spec, init, stop).into_result()
}
