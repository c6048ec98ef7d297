//! Generic N-block Bregman ADMM.
//!
//! A problem is a list of blocks, each carrying its constraint matrix, its
//! objective term, a Bregman distance, and an exact subproblem solver. One
//! sweep updates the blocks in order (each solver sees the freshest values
//! of the blocks before it and the previous values of the blocks after it),
//! then ascends the multiplier:
//!
//! ```text
//! x_i^{k+1} = argmin f_i(x_i) + <p^k, A_i x_i> + (alpha/2) ||A_i x_i + rest||^2
//!             + D_{phi_i}(x_i, x_i^k)
//! p^{k+1}   = p^k + alpha (A_1 x_1^{k+1} + ... + A_N x_N^{k+1})
//! ```
//!
//! The constraint right-hand side is fixed at zero; a model with a nonzero
//! target must absorb it into one of its blocks.
//!
//! Solvers are trusted to return exact minimizers of their subproblem;
//! everything the diagnostics layer certifies (merit descent, multiplier
//! bounds) depends on that contract. [`block_subproblem_objective`] plus
//! [`audit_solution`] provide a randomized check of it.

use serde::{Deserialize, Serialize};

use crate::bregman::BregmanDistance;
use crate::error::{Error, Result};
use crate::numerics::{fro_norm, inner, spectral_norm_lower_bound, Matrix};

pub type ObjectiveFn = Box<dyn Fn(&Matrix) -> f64 + Send + Sync>;
pub type SolverFn = Box<dyn Fn(&SubproblemInput) -> Result<Matrix> + Send + Sync>;

/// Everything a block solver sees when asked for the next iterate.
pub struct SubproblemInput<'a> {
    /// `sum_{j != i} A_j x_j`, fresh for blocks already updated this sweep.
    pub rest: &'a Matrix,
    /// Current multiplier (all zeros in unconstrained mode).
    pub multiplier: &'a Matrix,
    /// Penalty weight in effect (0 in unconstrained mode).
    pub alpha: f64,
    /// This block's previous iterate, the Bregman anchor.
    pub prev: &'a Matrix,
}

pub struct BlockSpec {
    pub name: String,
    pub constraint_matrix: Matrix,
    pub objective: ObjectiveFn,
    pub solver: SolverFn,
    pub bregman: BregmanDistance,
    /// Lipschitz constant of the objective gradient; required on the last
    /// block (whose objective must be smooth).
    pub objective_smooth_lipschitz: Option<f64>,
    pub objective_strong_convexity: f64,
}

impl BlockSpec {
    /// Strong-convexity modulus available to the descent analysis:
    /// the larger of the objective's and the generator's.
    pub fn effective_modulus(&self) -> f64 {
        self.objective_strong_convexity
            .max(self.bregman.strong_convexity_mu)
    }
}

impl std::fmt::Debug for BlockSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BlockSpec")
            .field("name", &self.name)
            .field("constraint", &self.constraint_matrix.shape())
            .field("bregman", &self.bregman)
            .finish()
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct AlphaSchedule {
    pub growth_factor: f64,
    pub alpha_max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Constrained,
    /// No constraint coupling: each block minimizes its own objective plus
    /// the Bregman term. The multiplier stays at zero.
    UnconstrainedBadm,
}

#[derive(Debug)]
pub struct ProblemSpec {
    pub blocks: Vec<BlockSpec>,
    pub alpha: f64,
    pub alpha_schedule: Option<AlphaSchedule>,
    pub mode: Mode,
}

impl ProblemSpec {
    pub fn block_names(&self) -> Vec<String> {
        self.blocks.iter().map(|b| b.name.clone()).collect()
    }

    /// All constraint matrices must share a row count.
    pub fn validate_shapes(&self, x: &[Matrix]) -> Result<()> {
        if x.len() != self.blocks.len() {
            return Err(Error::shape(
                format!("{} blocks", self.blocks.len()),
                format!("{} iterates", x.len()),
                "ProblemSpec::validate_shapes",
            ));
        }
        let m = self.blocks[0].constraint_matrix.rows();
        let mut out_cols = None;
        for (b, xi) in self.blocks.iter().zip(x) {
            if b.constraint_matrix.rows() != m {
                return Err(Error::shape(
                    format!("{m} constraint rows"),
                    format!("{} on block '{}'", b.constraint_matrix.rows(), b.name),
                    "ProblemSpec::validate_shapes",
                ));
            }
            if b.constraint_matrix.cols() != xi.rows() {
                return Err(Error::shape(
                    format!("{} rows in iterate", b.constraint_matrix.cols()),
                    format!("{} on block '{}'", xi.rows(), b.name),
                    "ProblemSpec::validate_shapes",
                ));
            }
            match out_cols {
                None => out_cols = Some(xi.cols()),
                Some(c) if c != xi.cols() => {
                    return Err(Error::shape(
                        format!("{c} iterate cols"),
                        format!("{} on block '{}'", xi.cols(), b.name),
                        "ProblemSpec::validate_shapes",
                    ))
                }
                _ => {}
            }
        }
        Ok(())
    }
}

/// Block iterates, multiplier, and the previous last-block iterate that the
/// merit function tracks.
#[derive(Debug, Clone)]
pub struct IterateState {
    pub x: Vec<Matrix>,
    pub p: Matrix,
    pub prev_last_block: Matrix,
    pub iteration: usize,
    pub alpha_current: f64,
}

impl IterateState {
    /// Initial state: multiplier zero, merit anchor equal to the starting
    /// last-block iterate.
    pub fn new(spec: &ProblemSpec, x: Vec<Matrix>) -> Result<Self> {
        spec.validate_shapes(&x)?;
        let m = spec.blocks[0].constraint_matrix.rows();
        let cols = x[0].cols();
        let last = x.last().expect("validated nonempty").clone();
        Ok(IterateState {
            x,
            p: Matrix::zeros(m, cols),
            prev_last_block: last,
            iteration: 0,
            alpha_current: spec.alpha,
        })
    }
}

/// `sum_i A_i x_i`.
pub fn constraint_sum(spec: &ProblemSpec, x: &[Matrix]) -> Matrix {
    let mut acc: Option<Matrix> = None;
    for (b, xi) in spec.blocks.iter().zip(x) {
        let term = b.constraint_matrix.matmul(xi);
        acc = Some(match acc {
            Some(a) => a.add(&term),
            None => term,
        });
    }
    acc.expect("at least one block")
}

fn effective_alpha(spec: &ProblemSpec, state: &IterateState) -> f64 {
    match spec.mode {
        Mode::Constrained => state.alpha_current,
        Mode::UnconstrainedBadm => 0.0,
    }
}

/// `sum f_i(x_i) + <p, sum A_i x_i> + (alpha/2) ||sum A_i x_i||^2`,
/// evaluated at the state's current penalty (zero in unconstrained mode).
pub fn augmented_lagrangian(spec: &ProblemSpec, state: &IterateState) -> Result<f64> {
    spec.validate_shapes(&state.x)?;
    let alpha = effective_alpha(spec, state);
    let mut total = 0.0;
    for (b, xi) in spec.blocks.iter().zip(&state.x) {
        total += (b.objective)(xi);
    }
    let r = constraint_sum(spec, &state.x);
    total += inner(&state.p, &r)?;
    total += 0.5 * alpha * fro_norm(&r).powi(2);
    Ok(total)
}

/// Descent machinery constants: the merit function adds
/// `sigma0 ||z - z_prev||^2` to the Lagrangian, and each sweep is
/// guaranteed to decrease the merit by `sigma1` times the squared step.
#[derive(Debug, Clone, Copy)]
pub struct DescentConstants {
    pub sigma0: f64,
    pub sigma1: f64,
    pub sigma_c: f64,
    pub ell_f_last: f64,
    pub ell_phi_last: f64,
    pub mu_last: f64,
}

/// Constants at the spec's initial penalty. See [`sigma_constants_at`].
pub fn sigma_constants(spec: &ProblemSpec) -> Result<DescentConstants> {
    sigma_constants_at(spec, spec.alpha)
}

/// `sigma0 = 2 ell_phi^2 / (alpha sigma_C)` and
/// `sigma1 = (1/2) min(mu_1, ..., mu_{N-1},
///                     mu_N - 4 (ell_f + ell_phi)^2 / (alpha sigma_C)
///                          - 4 ell_phi^2 / (alpha sigma_C))`
/// where `sigma_C` is the smallest eigenvalue of `A_N A_N^T`, `ell_f` and
/// `ell_phi` are the last block's objective-gradient and generator-gradient
/// Lipschitz constants, and `mu_i` are the per-block effective moduli.
///
/// Errors when a block has no positive modulus, when the last block's
/// constants are unavailable, or when `A_N` is row-rank deficient.
pub fn sigma_constants_at(spec: &ProblemSpec, alpha: f64) -> Result<DescentConstants> {
    let n = spec.blocks.len();
    if n == 0 {
        return Err(Error::invalid("blocks", "need at least one block"));
    }
    let last = &spec.blocks[n - 1];
    let mut mu_min_head = f64::INFINITY;
    for b in &spec.blocks {
        let mu = b.effective_modulus();
        if mu <= 0.0 {
            return Err(Error::invalid(
                "block modulus",
                format!(
                    "block '{}' has no strong convexity (objective or generator)",
                    b.name
                ),
            ));
        }
        if !std::ptr::eq(b, last) {
            mu_min_head = mu_min_head.min(mu);
        }
    }
    let ell_f = last.objective_smooth_lipschitz.ok_or_else(|| {
        Error::invalid(
            "objective_smooth_lipschitz",
            format!("required on last block '{}'", last.name),
        )
    })?;
    if !last.bregman.constants_available() {
        return Err(Error::invalid(
            "bregman",
            format!(
                "last block '{}' uses generator '{}' with unavailable constants",
                last.name,
                last.bregman.name()
            ),
        ));
    }
    let ell_phi = last.bregman.grad_lipschitz_ell;
    let sigma_c = spectral_norm_lower_bound(&last.constraint_matrix)?;
    if sigma_c == 0.0 {
        return Err(Error::RankDeficient);
    }
    if alpha <= 0.0 {
        return Err(Error::invalid("alpha", "must be > 0 for descent constants"));
    }
    let mu_last = last.effective_modulus();
    let denom = alpha * sigma_c;
    let sigma0 = 2.0 * ell_phi * ell_phi / denom;
    let tail = mu_last
        - 4.0 * (ell_f + ell_phi).powi(2) / denom
        - 4.0 * ell_phi * ell_phi / denom;
    let sigma1 = 0.5 * mu_min_head.min(tail);
    Ok(DescentConstants {
        sigma0,
        sigma1,
        sigma_c,
        ell_f_last: ell_f,
        ell_phi_last: ell_phi,
        mu_last,
    })
}

/// Merit function: the augmented Lagrangian plus
/// `sigma0 ||x_N - prev_last_block||^2`.
pub fn merit_lhat(spec: &ProblemSpec, state: &IterateState) -> Result<f64> {
    let lag = augmented_lagrangian(spec, state)?;
    let alpha = effective_alpha(spec, state);
    let last = state.x.last().expect("nonempty");
    let gap = fro_norm(&last.sub(&state.prev_last_block)).powi(2);
    let ell_phi = spec
        .blocks
        .last()
        .expect("nonempty")
        .bregman
        .grad_lipschitz_ell;
    if ell_phi == 0.0 {
        return Ok(lag);
    }
    let c = sigma_constants_at(spec, alpha)?;
    Ok(lag + c.sigma0 * gap)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConditionStatus {
    Pass,
    Fail,
    /// Holds by the model author's assertion; not mechanically checkable.
    Asserted,
    Unavailable,
}

#[derive(Debug, Clone)]
pub struct ConditionReport {
    pub name: String,
    pub status: ConditionStatus,
    pub detail: String,
}

#[derive(Debug, Clone)]
pub struct ValidationReport {
    pub pass: bool,
    pub threshold: Option<f64>,
    pub conditions: Vec<ConditionReport>,
}

impl std::fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "overall: {}", if self.pass { "PASS" } else { "FAIL" })?;
        for c in &self.conditions {
            writeln!(f, "  [{:?}] {}: {}", c.status, c.name, c.detail)?;
        }
        Ok(())
    }
}

/// Checks the penalty lower bound
/// `alpha > 4 [(ell_f + ell_phi)^2 + ell_phi^2] / (mu_N sigma_C)`
/// (the condition making `sigma1 > 0` possible). Never errors; problems
/// computing the threshold are reported in the result.
pub fn validate_alpha(spec: &ProblemSpec) -> ValidationReport {
    let mut conditions = Vec::new();
    let c = match sigma_constants_at(spec, spec.alpha.max(f64::MIN_POSITIVE)) {
        Ok(c) => c,
        Err(e) => {
            conditions.push(ConditionReport {
                name: "constants".to_string(),
                status: ConditionStatus::Unavailable,
                detail: e.to_string(),
            });
            return ValidationReport {
                pass: false,
                threshold: None,
                conditions,
            };
        }
    };
    let threshold = 4.0 * ((c.ell_f_last + c.ell_phi_last).powi(2) + c.ell_phi_last.powi(2))
        / (c.mu_last * c.sigma_c);
    let pass = spec.alpha > threshold;
    conditions.push(ConditionReport {
        name: "alpha above penalty threshold".to_string(),
        status: if pass {
            ConditionStatus::Pass
        } else {
            ConditionStatus::Fail
        },
        detail: format!("alpha = {} vs threshold = {}", spec.alpha, threshold),
    });
    ValidationReport {
        pass,
        threshold: Some(threshold),
        conditions,
    }
}

/// Checks the mechanically verifiable boundedness conditions and lists the
/// rest as asserted. `beta0` is the caller-chosen constant in the
/// `f_N - beta0 ||grad f_N||^2` coercivity condition.
pub fn validate_boundedness(spec: &ProblemSpec, beta0: f64) -> ValidationReport {
    let mut conditions = Vec::new();
    let mut mechanical_ok = true;

    let constants = sigma_constants_at(spec, spec.alpha.max(f64::MIN_POSITIVE));
    let last = spec.blocks.last().expect("nonempty");

    // full row rank of the last constraint matrix
    let sigma_c = spectral_norm_lower_bound(&last.constraint_matrix).unwrap_or(0.0);
    let rank_ok = sigma_c > 0.0;
    mechanical_ok &= rank_ok;
    conditions.push(ConditionReport {
        name: "last constraint matrix full row rank".to_string(),
        status: if rank_ok {
            ConditionStatus::Pass
        } else {
            ConditionStatus::Fail
        },
        detail: format!("sigma = {sigma_c}"),
    });

    // strong convexity per block
    for b in &spec.blocks {
        let mu = b.effective_modulus();
        let ok = mu > 0.0;
        mechanical_ok &= ok;
        conditions.push(ConditionReport {
            name: format!("block '{}' strongly convex (objective or generator)", b.name),
            status: if ok {
                ConditionStatus::Pass
            } else {
                ConditionStatus::Fail
            },
            detail: format!("modulus = {mu}"),
        });
    }

    // gradient Lipschitz data on the last block
    let lips_ok = last.objective_smooth_lipschitz.is_some() && last.bregman.constants_available();
    mechanical_ok &= lips_ok;
    conditions.push(ConditionReport {
        name: "last block gradient Lipschitz constants known".to_string(),
        status: if lips_ok {
            ConditionStatus::Pass
        } else {
            ConditionStatus::Unavailable
        },
        detail: format!(
            "objective: {:?}, generator: {}",
            last.objective_smooth_lipschitz,
            last.bregman.grad_lipschitz_ell
        ),
    });

    // non-mechanical conditions
    for name in [
        "objectives bounded below (and f_N - beta0 ||grad f_N||^2 bounded below)",
        "head objectives coercive",
        "objective sum subanalytic",
    ] {
        conditions.push(ConditionReport {
            name: name.to_string(),
            status: ConditionStatus::Asserted,
            detail: "asserted by model, not verified".to_string(),
        });
    }

    // penalty floor, both branches where computable
    let mut alpha_ok = false;
    if let Ok(c) = constants {
        let bound_term =
            4.0 * ((c.ell_f_last + c.ell_phi_last).powi(2) + c.ell_phi_last.powi(2)) / c.mu_last;
        if beta0 > 0.0 {
            let alpha0 = (2.0 / (beta0 * c.sigma_c)).max(bound_term / c.sigma_c);
            let ok = spec.alpha > alpha0;
            alpha_ok |= ok;
            conditions.push(ConditionReport {
                name: "alpha floor (coercive branch)".to_string(),
                status: if ok {
                    ConditionStatus::Pass
                } else {
                    ConditionStatus::Fail
                },
                detail: format!(
                    "alpha = {} vs alpha0 = {alpha0} (branch coercivity asserted)",
                    spec.alpha
                ),
            });
        }
        let a_n = &last.constraint_matrix;
        if a_n.rows() == a_n.cols() && c.sigma_c > 0.0 {
            let inv_norm_sq = 1.0 / c.sigma_c;
            let alpha0 = inv_norm_sq * c.ell_f_last.max(bound_term);
            let ok = spec.alpha > alpha0;
            alpha_ok |= ok;
            conditions.push(ConditionReport {
                name: "alpha floor (square last-block branch)".to_string(),
                status: if ok {
                    ConditionStatus::Pass
                } else {
                    ConditionStatus::Fail
                },
                detail: format!("alpha = {} vs alpha0 = {alpha0}", spec.alpha),
            });
        }
    } else if let Err(e) = constants {
        conditions.push(ConditionReport {
            name: "alpha floor".to_string(),
            status: ConditionStatus::Unavailable,
            detail: e.to_string(),
        });
    }

    ValidationReport {
        pass: mechanical_ok && alpha_ok,
        threshold: None,
        conditions,
    }
}

/// Step norms produced by one sweep.
#[derive(Debug, Clone)]
pub struct StepRecord {
    pub block_steps: Vec<f64>,
    pub multiplier_step: f64,
    pub primal_residual: f64,
    pub alpha_used: f64,
}

/// One Gauss-Seidel sweep plus the multiplier update.
pub fn step(spec: &ProblemSpec, state: &IterateState) -> Result<(IterateState, StepRecord)> {
    spec.validate_shapes(&state.x)?;
    let n = spec.blocks.len();
    let alpha = effective_alpha(spec, state);
    let mut x_new = state.x.clone();
    let mut block_steps = vec![0.0; n];

    for i in 0..n {
        let rest = if n == 1 {
            Matrix::zeros(spec.blocks[0].constraint_matrix.rows(), state.x[0].cols())
        } else {
            let mut acc: Option<Matrix> = None;
            for (j, b) in spec.blocks.iter().enumerate() {
                if j == i {
                    continue;
                }
                // x_new[j] holds the fresh iterate for j < i and the
                // previous one for j > i
                let term = b.constraint_matrix.matmul(&x_new[j]);
                acc = Some(match acc {
                    Some(a) => a.add(&term),
                    None => term,
                });
            }
            acc.expect("n > 1")
        };
        let input = SubproblemInput {
            rest: &rest,
            multiplier: &state.p,
            alpha,
            prev: &state.x[i],
        };
        let xi = (spec.blocks[i].solver)(&input).map_err(|e| Error::SolverFailure {
            block: spec.blocks[i].name.clone(),
            source: Box::new(e),
        })?;
        if !xi.same_shape(&state.x[i]) {
            return Err(Error::shape(
                format!("{:?}", state.x[i].shape()),
                format!("{:?}", xi.shape()),
                &format!("solver output for block '{}'", spec.blocks[i].name),
            ));
        }
        if !xi.is_finite() {
            return Err(Error::Numeric(format!(
                "solver for block '{}' returned non-finite entries",
                spec.blocks[i].name
            )));
        }
        block_steps[i] = fro_norm(&xi.sub(&state.x[i]));
        x_new[i] = xi;
    }

    let residual = constraint_sum(spec, &x_new);
    let (p_new, multiplier_step) = match spec.mode {
        Mode::Constrained => {
            let p_new = state.p.add(&residual.scale(alpha));
            let ms = fro_norm(&p_new.sub(&state.p));
            (p_new, ms)
        }
        Mode::UnconstrainedBadm => (state.p.clone(), 0.0),
    };

    let record = StepRecord {
        block_steps,
        multiplier_step,
        primal_residual: fro_norm(&residual),
        alpha_used: state.alpha_current,
    };
    let new_state = IterateState {
        prev_last_block: state.x[n - 1].clone(),
        x: x_new,
        p: p_new,
        iteration: state.iteration + 1,
        alpha_current: state.alpha_current,
    };
    Ok((new_state, record))
}

/// `sqrt(sum_i ||dx_i||^2) / (sqrt(sum_i ||x_i^k||^2) + 1)`.
pub fn relchg(prev: &IterateState, next: &IterateState) -> f64 {
    relchg_blocks(&prev.x, &next.x)
}

pub fn relchg_blocks(prev: &[Matrix], next: &[Matrix]) -> f64 {
    let num: f64 = prev
        .iter()
        .zip(next)
        .map(|(a, b)| fro_norm(&b.sub(a)).powi(2))
        .sum::<f64>()
        .sqrt();
    let den: f64 = prev.iter().map(|a| fro_norm(a).powi(2)).sum::<f64>().sqrt() + 1.0;
    num / den
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct StoppingRule {
    pub relchg_threshold: f64,
    pub max_iterations: usize,
}

impl Default for StoppingRule {
    fn default() -> Self {
        StoppingRule {
            relchg_threshold: 1e-8,
            max_iterations: 5000,
        }
    }
}

#[derive(Debug)]
pub enum StopReason {
    RelChgBelowThreshold,
    IterationCap,
    Failure(Error),
}

#[derive(Debug)]
pub struct RunOutcome {
    pub state: IterateState,
    pub trace: Trace,
    pub stop: StopReason,
}

impl RunOutcome {
    pub fn into_result(self) -> Result<(IterateState, Trace)> {
        match self.stop {
            StopReason::Failure(e) => Err(e),
            _ => Ok((self.state, self.trace)),
        }
    }
}

/// Iterates [`step`] until the relative change drops below the threshold or
/// the iteration cap is reached, applying the penalty schedule after each
/// sweep. A solver failure stops the run and preserves the partial trace.
pub fn run(spec: &ProblemSpec, init: IterateState, stop: &StoppingRule) -> RunOutcome {
    run_with_truth(spec, init, stop, None)
}

/// [`run`] that also records per-block relative errors against the supplied
/// ground truth.
pub fn run_with_truth(
    spec: &ProblemSpec,
    init: IterateState,
    stop: &StoppingRule,
    truth: Option<&[Matrix]>,
) -> RunOutcome {
    let mut trace = Trace::new(spec.block_names());
    let mut state = init;
    for _ in 0..stop.max_iterations {
        let (next, rec) = match step(spec, &state) {
            Ok(v) => v,
            Err(e) => {
                return RunOutcome {
                    state,
                    trace,
                    stop: StopReason::Failure(e),
                }
            }
        };
        let record = match trace_record(spec, &state, &next, &rec, truth) {
            Ok(r) => r,
            Err(e) => {
                return RunOutcome {
                    state,
                    trace,
                    stop: StopReason::Failure(e),
                }
            }
        };
        let rc = record.relchg;
        trace.records.push(record);
        state = next;
        if rc < stop.relchg_threshold {
            return RunOutcome {
                state,
                trace,
                stop: StopReason::RelChgBelowThreshold,
            };
        }
        if spec.mode == Mode::Constrained {
            if let Some(s) = &spec.alpha_schedule {
                state.alpha_current = (state.alpha_current * s.growth_factor).min(s.alpha_max);
            }
        }
    }
    RunOutcome {
        state,
        trace,
        stop: StopReason::IterationCap,
    }
}

fn trace_record(
    spec: &ProblemSpec,
    prev: &IterateState,
    next: &IterateState,
    rec: &StepRecord,
    truth: Option<&[Matrix]>,
) -> Result<TraceRecord> {
    let objective: f64 = spec
        .blocks
        .iter()
        .zip(&next.x)
        .map(|(b, xi)| (b.objective)(xi))
        .sum();
    let lagrangian = augmented_lagrangian(spec, next)?;
    let merit = merit_lhat(spec, next).ok();
    let relchg = relchg(prev, next);
    let relerr = truth.map(|t| {
        next.x
            .iter()
            .zip(t)
            .map(|(xi, ti)| crate::models::relerr_or_abs(xi, ti))
            .collect()
    });
    let resid = crate::diagnostics::stationarity_residual(spec, next, prev)?;
    Ok(TraceRecord {
        iteration: next.iteration,
        alpha: rec.alpha_used,
        objective,
        lagrangian,
        merit_lhat: merit,
        relchg,
        relerr,
        primal_residual: rec.primal_residual,
        stationarity_residual: resid.max_block_residual(),
        block_steps: rec.block_steps.clone(),
        multiplier_step: rec.multiplier_step,
    })
}

/// One completed sweep, as recorded in a [`Trace`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceRecord {
    pub iteration: usize,
    pub alpha: f64,
    pub objective: f64,
    pub lagrangian: f64,
    pub merit_lhat: Option<f64>,
    pub relchg: f64,
    pub relerr: Option<Vec<f64>>,
    pub primal_residual: f64,
    pub stationarity_residual: f64,
    pub block_steps: Vec<f64>,
    pub multiplier_step: f64,
}

/// Append-only per-iteration record of a run.
///
/// CSV column order (fixed):
/// `iter,alpha,objective,lagrangian,lhat,relChg,relErr_<name>...,
///  primal_res,stationarity_res,step_<name>...,multiplier_step`.
/// Empty cells encode unavailable values. Floats use shortest round-trip
/// formatting.
#[derive(Debug, Clone)]
pub struct Trace {
    pub block_names: Vec<String>,
    pub records: Vec<TraceRecord>,
}

impl Trace {
    pub fn new(block_names: Vec<String>) -> Self {
        Trace {
            block_names,
            records: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn csv_header(&self) -> String {
        let mut cols = vec![
            "iter".to_string(),
            "alpha".to_string(),
            "objective".to_string(),
            "lagrangian".to_string(),
            "lhat".to_string(),
            "relChg".to_string(),
        ];
        for n in &self.block_names {
            cols.push(format!("relErr_{n}"));
        }
        cols.push("primal_res".to_string());
        cols.push("stationarity_res".to_string());
        for n in &self.block_names {
            cols.push(format!("step_{n}"));
        }
        cols.push("multiplier_step".to_string());
        cols.join(",")
    }

    pub fn to_csv(&self) -> String {
        use crate::io::format_f64 as f;
        let mut out = String::new();
        out.push_str(&self.csv_header());
        out.push('\n');
        let nb = self.block_names.len();
        for r in &self.records {
            let mut cols = vec![
                r.iteration.to_string(),
                f(r.alpha),
                f(r.objective),
                f(r.lagrangian),
                r.merit_lhat.map(f).unwrap_or_default(),
                f(r.relchg),
            ];
            match &r.relerr {
                Some(v) => cols.extend(v.iter().map(|x| f(*x))),
                None => cols.extend(std::iter::repeat(String::new()).take(nb)),
            }
            cols.push(f(r.primal_residual));
            cols.push(f(r.stationarity_residual));
            cols.extend(r.block_steps.iter().map(|x| f(*x)));
            cols.push(f(r.multiplier_step));
            out.push_str(&cols.join(","));
            out.push('\n');
        }
        out
    }

    /// Line-delimited JSON: one header object, then one object per record.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        out.push_str(
            &serde_json::json!({ "block_names": self.block_names }).to_string(),
        );
        out.push('\n');
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("trace record serializes"));
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Trace> {
        let perr = |line: usize, reason: String| Error::Parse {
            path: "<trace csv>".to_string(),
            line,
            reason,
        };
        let mut lines = text.lines().enumerate();
        let (_, header) = lines
            .next()
            .ok_or_else(|| perr(0, "empty trace file".to_string()))?;
        let cols: Vec<&str> = header.split(',').collect();
        let block_names: Vec<String> = cols
            .iter()
            .filter_map(|c| c.strip_prefix("relErr_").map(|s| s.to_string()))
            .collect();
        let nb = block_names.len();
        if cols.len() != 8 + 2 * nb + 1 {
            return Err(perr(1, format!("unexpected column count {}", cols.len())));
        }
        let mut records = Vec::new();
        for (lineno, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.split(',').collect();
            if parts.len() != cols.len() {
                return Err(perr(lineno + 1, "wrong field count".to_string()));
            }
            let num = |s: &str| -> Result<f64> {
                s.parse()
                    .map_err(|_| perr(lineno + 1, format!("bad number '{s}'")))
            };
            let opt = |s: &str| -> Result<Option<f64>> {
                if s.is_empty() {
                    Ok(None)
                } else {
                    num(s).map(Some)
                }
            };
            let iteration: usize = parts[0]
                .parse()
                .map_err(|_| perr(lineno + 1, "bad iteration".to_string()))?;
            let relerr_cells: Vec<Option<f64>> = parts[6..6 + nb]
                .iter()
                .map(|s| opt(s))
                .collect::<Result<_>>()?;
            let relerr = if relerr_cells.iter().all(|c| c.is_some()) {
                Some(relerr_cells.iter().map(|c| c.unwrap()).collect())
            } else {
                None
            };
            records.push(TraceRecord {
                iteration,
                alpha: num(parts[1])?,
                objective: num(parts[2])?,
                lagrangian: num(parts[3])?,
                merit_lhat: opt(parts[4])?,
                relchg: num(parts[5])?,
                relerr,
                primal_residual: num(parts[6 + nb])?,
                stationarity_residual: num(parts[7 + nb])?,
                block_steps: parts[8 + nb..8 + 2 * nb]
                    .iter()
                    .map(|s| num(s))
                    .collect::<Result<_>>()?,
                multiplier_step: num(parts[8 + 2 * nb])?,
            });
        }
        Ok(Trace {
            block_names,
            records,
        })
    }
}

/// The objective of block `i`'s subproblem at the point `x`:
/// `f_i(x) + <p, A_i x> + (alpha/2) ||A_i x + rest||^2 + D_phi(x, prev)`.
pub fn block_subproblem_objective(
    spec: &ProblemSpec,
    block: usize,
    input: &SubproblemInput,
    x: &Matrix,
) -> Result<f64> {
    let b = &spec.blocks[block];
    let ax = b.constraint_matrix.matmul(x);
    let mut total = (b.objective)(x);
    total += inner(input.multiplier, &ax)?;
    total += 0.5 * input.alpha * fro_norm(&ax.add(input.rest)).powi(2);
    total += b.bregman.distance(x, input.prev)?;
    Ok(total)
}

/// Perturbs a solver's output along random unit directions at a few scales
/// and returns the worst objective decrease observed (positive = some
/// perturbation beat the solver, i.e. the solver is not an exact minimizer).
pub fn audit_solution(
    spec: &ProblemSpec,
    block: usize,
    input: &SubproblemInput,
    x: &Matrix,
    n_dirs: usize,
    seed: u64,
) -> Result<f64> {
    let base = block_subproblem_objective(spec, block, input, x)?;
    let mut rng = crate::datagen::Rng::new(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..n_dirs {
        let dir = Matrix::from_fn(x.rows(), x.cols(), |_, _| rng.next_gaussian());
        let dir = dir.scale(1.0 / fro_norm(&dir).max(1e-300));
        for scale in [1e-2, 1e-4, 1e-6] {
            let cand = x.add(&dir.scale(scale * (1.0 + fro_norm(x))));
            let obj = block_subproblem_objective(spec, block, input, &cand)?;
            worst = worst.max(base - obj);
        }
    }
    Ok(worst)
}
