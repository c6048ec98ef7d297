//! Numerical verification of the convergence machinery along a trace:
//! merit descent, multiplier step bounds, stationarity residuals, and a
//! summability proxy.
//!
//! Every check is a pure function of its inputs; running a check twice on
//! the same trace yields the same report. Checks that depend on per-run
//! constants restrict themselves to the trailing segment where the penalty
//! has stopped changing, since the constants they certify are defined for a
//! fixed penalty.

use crate::engine::{sigma_constants_at, IterateState, Mode, ProblemSpec, Trace};
use crate::error::Result;
use crate::numerics::{fro_norm, Matrix};

/// Dual residual norms (one per block) plus the primal infeasibility, for a
/// completed transition `prev -> state`.
#[derive(Debug, Clone)]
pub struct StationarityResiduals {
    pub block_names: Vec<String>,
    pub block: Vec<f64>,
    pub primal: f64,
}

impl StationarityResiduals {
    /// Largest dual residual norm.
    pub fn max_block_residual(&self) -> f64 {
        self.block.iter().cloned().fold(0.0, f64::max)
    }

    /// Largest residual overall, primal included. All of these vanish
    /// exactly at a stationary pair.
    pub fn max_residual(&self) -> f64 {
        self.max_block_residual().max(self.primal)
    }
}

/// Explicit subgradient elements of the merit function at `state`, given
/// the transition that produced it.
///
/// For a non-last block `i` the element is
/// `alpha A_i^T sum_{j>i} A_j (x_j - x_j_prev) + grad_phi_i(x_i_prev)
///  - grad_phi_i(x_i) + A_i^T (p - p_prev)`;
/// for the last block it is
/// `grad_phi_N(x_N_prev) - grad_phi_N(x_N) + A_N^T (p - p_prev)
///  + 2 sigma0 (x_N - x_N_prev)`.
/// The primal residual is `||sum_i A_i x_i||`. All norms tend to zero iff
/// the iterates approach a stationary point.
pub fn stationarity_residual(
    spec: &ProblemSpec,
    state: &IterateState,
    prev: &IterateState,
) -> Result<StationarityResiduals> {
    let n = spec.blocks.len();
    let alpha = match spec.mode {
        Mode::Constrained => prev.alpha_current,
        Mode::UnconstrainedBadm => 0.0,
    };
    let dp = state.p.sub(&prev.p);
    let diffs: Vec<Matrix> = state
        .x
        .iter()
        .zip(&prev.x)
        .map(|(a, b)| a.sub(b))
        .collect();

    // suffix[i] = sum_{j > i} A_j (x_j - x_j_prev)
    let m = spec.blocks[0].constraint_matrix.rows();
    let cols = state.x[0].cols();
    let mut suffix = vec![Matrix::zeros(m, cols); n];
    for i in (0..n.saturating_sub(1)).rev() {
        let term = spec.blocks[i + 1].constraint_matrix.matmul(&diffs[i + 1]);
        suffix[i] = if i + 1 < n - 1 {
            suffix[i + 1].add(&term)
        } else {
            term
        };
    }

    let sigma0 = {
        let last = spec.blocks.last().expect("nonempty");
        if spec.mode == Mode::Constrained && last.bregman.grad_lipschitz_ell > 0.0 {
            sigma_constants_at(spec, alpha).map(|c| c.sigma0).unwrap_or(0.0)
        } else {
            0.0
        }
    };

    let mut block = Vec::with_capacity(n);
    for (i, b) in spec.blocks.iter().enumerate() {
        let grad_gap = b.bregman.grad_phi(&prev.x[i])?.sub(&b.bregman.grad_phi(&state.x[i])?);
        let at = b.constraint_matrix.transpose();
        let residual = if i + 1 < n {
            at.matmul(&suffix[i].scale(alpha).add(&dp)).add(&grad_gap)
        } else {
            at.matmul(&dp)
                .add(&grad_gap)
                .add(&diffs[i].scale(2.0 * sigma0))
        };
        block.push(fro_norm(&residual));
    }
    let primal = fro_norm(&crate::engine::constraint_sum(spec, &state.x));
    Ok(StationarityResiduals {
        block_names: spec.block_names(),
        block,
        primal,
    })
}

/// Result of one inequality check over a trace segment.
#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: String,
    /// Iteration index of the first checked transition (record index).
    pub first_checked: usize,
    /// Per-transition margins; nonnegative (within slack) means the
    /// inequality held.
    pub margins: Vec<f64>,
    pub violations: usize,
    pub worst_margin: f64,
    /// False when the check is informative only (constants invalid for an
    /// assertion, or too little data).
    pub assertable: bool,
    pub note: String,
}

impl CheckResult {
    fn empty(name: &str, note: &str) -> Self {
        CheckResult {
            name: name.to_string(),
            first_checked: 0,
            margins: Vec::new(),
            violations: 0,
            worst_margin: 0.0,
            assertable: false,
            note: note.to_string(),
        }
    }
}

/// Index of the first record of the trailing constant-penalty segment.
fn fixed_alpha_suffix_start(trace: &Trace) -> usize {
    let Some(last) = trace.records.last() else {
        return 0;
    };
    let alpha = last.alpha;
    let mut start = trace.len() - 1;
    while start > 0 && trace.records[start - 1].alpha == alpha {
        start -= 1;
    }
    start
}

/// Merit descent check: along a fixed-penalty segment,
/// `lhat_k - lhat_{k+1} >= sigma1 * sum_i ||x_i^{k+1} - x_i^k||^2`,
/// with slack `1e-8 (1 + |lhat_k|)`.
pub fn check_descent(trace: &Trace, sigma1: f64) -> CheckResult {
    let name = "merit descent";
    if trace.len() < 2 {
        return CheckResult::empty(name, "fewer than two recorded iterations");
    }
    let start = fixed_alpha_suffix_start(trace);
    if trace.len() - start < 2 {
        return CheckResult::empty(name, "no fixed-penalty segment of length >= 2");
    }
    let mut margins = Vec::new();
    let mut violations = 0;
    let mut worst = f64::INFINITY;
    let mut missing_lhat = false;
    for j in start + 1..trace.len() {
        let (prev, cur) = (&trace.records[j - 1], &trace.records[j]);
        let (Some(l0), Some(l1)) = (prev.merit_lhat, cur.merit_lhat) else {
            missing_lhat = true;
            continue;
        };
        let steps_sq: f64 = cur.block_steps.iter().map(|s| s * s).sum();
        let margin = l0 - l1 - sigma1 * steps_sq;
        if margin < -1e-8 * (1.0 + l0.abs()) {
            violations += 1;
        }
        worst = worst.min(margin);
        margins.push(margin);
    }
    if margins.is_empty() {
        return CheckResult::empty(name, "merit values unavailable");
    }
    let assertable = sigma1 > 0.0 && !missing_lhat;
    let note = if !assertable && sigma1 <= 0.0 {
        format!("sigma1 = {sigma1} <= 0: descent not guaranteed, informative only")
    } else if missing_lhat {
        "some merit values unavailable".to_string()
    } else {
        format!("checked fixed-penalty segment starting at record {start}")
    };
    CheckResult {
        name: name.to_string(),
        first_checked: start + 1,
        margins,
        violations,
        worst_margin: worst,
        assertable,
        note,
    }
}

/// Constants of the multiplier-step bound
/// `||dp_k||^2 <= (2 (ell_f + ell_phi)^2 / sigma_c) ||dz_k||^2
///              + (2 ell_phi^2 / sigma_c) ||dz_{k-1}||^2`.
#[derive(Debug, Clone, Copy)]
pub struct MultiplierBoundConstants {
    pub ell_f_last: f64,
    pub ell_phi_last: f64,
    pub sigma_c: f64,
}

/// Multiplier-step bound check over the trailing constant-penalty segment,
/// with relative slack 1e-10. The first transition of a trace is not
/// checkable (the bound needs one completed sweep behind it).
pub fn check_multiplier_bound(trace: &Trace, constants: &MultiplierBoundConstants) -> CheckResult {
    let name = "multiplier step bound";
    if trace.len() < 2 {
        return CheckResult::empty(name, "fewer than two recorded iterations");
    }
    if constants.sigma_c <= 0.0 {
        return CheckResult::empty(name, "sigma_c <= 0: bound undefined");
    }
    let start = fixed_alpha_suffix_start(trace).max(1);
    let c_cur = 2.0 * (constants.ell_f_last + constants.ell_phi_last).powi(2) / constants.sigma_c;
    let c_prev = 2.0 * constants.ell_phi_last.powi(2) / constants.sigma_c;
    let mut margins = Vec::new();
    let mut violations = 0;
    let mut worst = f64::INFINITY;
    for j in start..trace.len() {
        let cur = &trace.records[j];
        let prev = &trace.records[j - 1];
        let dz = *cur.block_steps.last().expect("at least one block");
        let dz_prev = *prev.block_steps.last().expect("at least one block");
        let rhs = c_cur * dz * dz + c_prev * dz_prev * dz_prev;
        let lhs = cur.multiplier_step * cur.multiplier_step;
        let margin = rhs - lhs;
        if margin < -1e-10 * (1.0 + rhs) {
            violations += 1;
        }
        worst = worst.min(margin);
        margins.push(margin);
    }
    if margins.is_empty() {
        return CheckResult::empty(name, "no checkable transitions");
    }
    CheckResult {
        name: name.to_string(),
        first_checked: start,
        margins,
        violations,
        worst_margin: worst,
        assertable: true,
        note: format!("checked transitions {start}..{}", trace.len() - 1),
    }
}

/// Partial sums of step norms with a finiteness proxy: the ratio of the
/// last quartile's contribution to the preceding quartile's. A ratio below
/// 0.5 is flagged consistent with a summable series; it is a labelled
/// heuristic, never a proof.
#[derive(Debug, Clone)]
pub struct SummabilityReport {
    pub total_l1: f64,
    pub total_sq: f64,
    pub running_l1: Vec<f64>,
    pub running_sq: Vec<f64>,
    pub quartile_ratio_l1: Option<f64>,
    pub consistent_with_summability: Option<bool>,
}

pub fn summability_report(trace: &Trace) -> SummabilityReport {
    let l1: Vec<f64> = trace
        .records
        .iter()
        .map(|r| r.block_steps.iter().sum::<f64>() + r.multiplier_step)
        .collect();
    let sq: Vec<f64> = trace
        .records
        .iter()
        .map(|r| {
            r.block_steps.iter().map(|s| s * s).sum::<f64>()
                + r.multiplier_step * r.multiplier_step
        })
        .collect();
    let mut running_l1 = Vec::with_capacity(l1.len());
    let mut running_sq = Vec::with_capacity(sq.len());
    let (mut acc1, mut acc2) = (0.0, 0.0);
    for (a, b) in l1.iter().zip(&sq) {
        acc1 += a;
        acc2 += b;
        running_l1.push(acc1);
        running_sq.push(acc2);
    }
    let n = l1.len();
    let (quartile_ratio_l1, consistent) = if n >= 8 {
        let q = n / 4;
        let s_last: f64 = l1[n - q..].iter().sum();
        let s_prev: f64 = l1[n - 2 * q..n - q].iter().sum();
        let ratio = if s_prev == 0.0 {
            0.0
        } else {
            s_last / s_prev
        };
        (Some(ratio), Some(ratio < 0.5))
    } else {
        (None, None)
    };
    SummabilityReport {
        total_l1: acc1,
        total_sq: acc2,
        running_l1,
        running_sq,
        quartile_ratio_l1,
        consistent_with_summability: consistent,
    }
}

/// Bundle of every trace-level check.
#[derive(Debug, Clone)]
pub struct DiagnosticsReport {
    pub checks: Vec<CheckResult>,
    pub summability: SummabilityReport,
}

impl DiagnosticsReport {
    /// True iff no assertable check recorded a violation.
    pub fn verdict(&self) -> bool {
        self.checks
            .iter()
            .all(|c| !c.assertable || c.violations == 0)
    }
}

impl std::fmt::Display for DiagnosticsReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for c in &self.checks {
            writeln!(
                f,
                "{}: {} ({} transitions, {} violations, worst margin {:.3e}) - {}",
                c.name,
                if !c.assertable {
                    "INFO"
                } else if c.violations == 0 {
                    "PASS"
                } else {
                    "FAIL"
                },
                c.margins.len(),
                c.violations,
                c.worst_margin,
                c.note
            )?;
        }
        write!(
            f,
            "summability proxy: total |dw|_1 = {:.6e}, quartile ratio = {}",
            self.summability.total_l1,
            match self.summability.quartile_ratio_l1 {
                Some(r) => format!(
                    "{r:.3e} ({})",
                    if self.summability.consistent_with_summability == Some(true) {
                        "consistent with summability"
                    } else {
                        "inconsistent"
                    }
                ),
                None => "insufficient data".to_string(),
            }
        )
    }
}

/// Runs every check that the supplied constants permit.
pub fn diagnose(
    trace: &Trace,
    sigma1: Option<f64>,
    multiplier_constants: Option<&MultiplierBoundConstants>,
) -> DiagnosticsReport {
    let mut checks = Vec::new();
    match sigma1 {
        Some(s) => checks.push(check_descent(trace, s)),
        None => checks.push(CheckResult::empty("merit descent", "sigma1 unavailable")),
    }
    match multiplier_constants {
        Some(c) => checks.push(check_multiplier_bound(trace, c)),
        None => checks.push(CheckResult::empty(
            "multiplier step bound",
            "constants unavailable",
        )),
    }
    DiagnosticsReport {
        checks,
        summability: summability_report(trace),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::TraceRecord;

    fn record(
        iteration: usize,
        lhat: f64,
        steps: Vec<f64>,
        multiplier_step: f64,
    ) -> TraceRecord {
        TraceRecord {
            iteration,
            alpha: 1.0,
            objective: 0.0,
            lagrangian: lhat,
            merit_lhat: Some(lhat),
            relchg: 0.0,
            relerr: None,
            primal_residual: 0.0,
            stationarity_residual: 0.0,
            block_steps: steps,
            multiplier_step,
        }
    }

    #[test]
    fn constant_trace_has_no_violations() {
        let mut trace = Trace::new(vec!["z".into()]);
        for k in 0..10 {
            trace.records.push(record(k + 1, 5.0, vec![0.0], 0.0));
        }
        let d = check_descent(&trace, 0.3);
        assert_eq!(d.violations, 0);
        assert!(d.margins.iter().all(|m| *m == 0.0));
        let m = check_multiplier_bound(
            &trace,
            &MultiplierBoundConstants {
                ell_f_last: 1.0,
                ell_phi_last: 1.0,
                sigma_c: 1.0,
            },
        );
        assert_eq!(m.violations, 0);
    }

    #[test]
    fn fabricated_violations_are_counted() {
        let mut trace = Trace::new(vec!["z".into()]);
        // merit increases at step 3; multiplier step too large at step 4
        trace.records.push(record(1, 5.0, vec![0.5], 0.1));
        trace.records.push(record(2, 4.0, vec![0.5], 0.1));
        trace.records.push(record(3, 6.0, vec![0.5], 0.1));
        trace.records.push(record(4, 5.9, vec![0.01], 10.0));
        let d = check_descent(&trace, 0.3);
        assert!(d.violations >= 1, "descent violation expected");
        let m = check_multiplier_bound(
            &trace,
            &MultiplierBoundConstants {
                ell_f_last: 1.0,
                ell_phi_last: 1.0,
                sigma_c: 1.0,
            },
        );
        assert!(m.violations >= 1, "multiplier violation expected");
        let rep = diagnose(
            &trace,
            Some(0.3),
            Some(&MultiplierBoundConstants {
                ell_f_last: 1.0,
                ell_phi_last: 1.0,
                sigma_c: 1.0,
            }),
        );
        assert!(!rep.verdict());
    }

    #[test]
    fn descent_check_skips_growing_alpha_prefix() {
        let mut trace = Trace::new(vec!["z".into()]);
        for k in 0..6 {
            let mut r = record(k + 1, 10.0 + k as f64, vec![0.1], 0.0);
            r.alpha = 1.0 + k as f64; // merit rising while alpha grows
            trace.records.push(r);
        }
        for k in 6..12 {
            let mut r = record(k + 1, 20.0 - k as f64, vec![0.1], 0.0);
            r.alpha = 6.0; // saturated
            trace.records.push(r);
        }
        let d = check_descent(&trace, 0.1);
        // only the saturated tail is checked; the fabricated rise in the
        // prefix must not count
        assert_eq!(d.violations, 0, "{d:?}");
        assert!(d.first_checked >= 6);
    }

    #[test]
    fn descent_not_assertable_with_nonpositive_sigma1() {
        let mut trace = Trace::new(vec!["z".into()]);
        trace.records.push(record(1, 5.0, vec![0.1], 0.0));
        trace.records.push(record(2, 4.0, vec![0.1], 0.0));
        let d = check_descent(&trace, -1.0);
        assert!(!d.assertable);
    }

    #[test]
    fn summability_examples() {
        // geometric decay: consistent
        let mut geo = Trace::new(vec!["z".into()]);
        for k in 0..40 {
            geo.records
                .push(record(k + 1, 0.0, vec![0.5f64.powi(k as i32)], 0.0));
        }
        let rep = summability_report(&geo);
        assert_eq!(rep.consistent_with_summability, Some(true));
        assert!(rep.quartile_ratio_l1.unwrap() < 0.01);

        // constant steps: inconsistent
        let mut flat = Trace::new(vec!["z".into()]);
        for k in 0..40 {
            flat.records.push(record(k + 1, 0.0, vec![1.0], 0.0));
        }
        let rep = summability_report(&flat);
        assert_eq!(rep.consistent_with_summability, Some(false));

        // short trace: no verdict
        let mut short = Trace::new(vec!["z".into()]);
        short.records.push(record(1, 0.0, vec![1.0], 0.0));
        let rep = summability_report(&short);
        assert_eq!(rep.consistent_with_summability, None);
    }

    #[test]
    fn reports_are_deterministic() {
        let mut trace = Trace::new(vec!["z".into()]);
        for k in 0..20 {
            trace
                .records
                .push(record(k + 1, 10.0 - 0.1 * k as f64, vec![0.3], 0.05));
        }
        let c = MultiplierBoundConstants {
            ell_f_last: 2.0,
            ell_phi_last: 0.5,
            sigma_c: 1.0,
        };
        let a = diagnose(&trace, Some(0.2), Some(&c));
        let b = diagnose(&trace, Some(0.2), Some(&c));
        assert_eq!(format!("{a}"), format!("{b}"));
    }
}
