//! Shared test support: the brute-force scalar prox oracle, instance
//! helpers, and cached solver runs reused by several acceptance criteria.
//! The oracle is independent of the closed forms it checks; it only ever
//! evaluates the prox objective pointwise.

#![allow(dead_code)]

use std::sync::OnceLock;
use std::time::Instant;

use badmm::datagen::{gen_instance, Rng, SyntheticInstance};
use badmm::engine::Trace;
use badmm::models::rpca::{rpca_solve_with_truth, RpcaConfig, RpcaState, RpcaTruth};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Penalty {
    Abs,
    SqrtAbs,
}

fn penalty_value(penalty: Penalty, s: f64) -> f64 {
    match penalty {
        Penalty::Abs => s.abs(),
        Penalty::SqrtAbs => s.abs().sqrt(),
    }
}

/// Minimizes `(1/2)(s - a)^2 + tau * pen(s)` by brute force: a coarse scan
/// of `[-|a|-1, |a|+1]`, a step-1e-4 grid around the surviving basins,
/// ternary refinement on the containing smooth branch, and (for the
/// square-root penalty) a bisection polish of the stationarity condition.
/// Returns the minimizing `s`, resolving ties toward 0.
pub fn prox_oracle(a: f64, tau: f64, penalty: Penalty) -> f64 {
    let f = |s: f64| 0.5 * (s - a) * (s - a) + tau * penalty_value(penalty, s);
    let hi = a.abs() + 1.0;
    let lo = -hi;

    // stage 1: coarse scan, keep the best few grid points
    let coarse = 1e-2;
    let n = ((hi - lo) / coarse).ceil() as usize;
    let mut best: Vec<(f64, f64)> = Vec::new(); // (value, point)
    for i in 0..=n {
        let s = lo + coarse * i as f64;
        let v = f(s);
        best.push((v, s));
        best.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
        best.truncate(4);
    }

    // stage 2: fine grid (step 1e-4) around each surviving point
    let fine = 1e-4;
    let mut candidates = vec![0.0f64];
    for &(_, center) in &best {
        let mut local_best = center;
        let mut local_val = f(center);
        let steps = (2.0 * coarse / fine).ceil() as i64;
        for i in -steps..=steps {
            let s = center + fine * i as f64;
            let v = f(s);
            if v < local_val {
                local_val = v;
                local_best = s;
            }
        }
        candidates.push(local_best);
    }

    // stage 3: ternary refinement within the fine cell, not crossing 0
    let mut refined = vec![0.0f64];
    for &c in &candidates {
        if c == 0.0 {
            continue;
        }
        let (mut left, mut right) = (c - fine, c + fine);
        if c > 0.0 {
            left = left.max(fine * 1e-6);
        } else {
            right = right.min(-fine * 1e-6);
        }
        for _ in 0..200 {
            let m1 = left + (right - left) / 3.0;
            let m2 = right - (right - left) / 3.0;
            if f(m1) <= f(m2) {
                right = m2;
            } else {
                left = m1;
            }
        }
        refined.push(0.5 * (left + right));
    }

    // stage 4 (sqrt penalty): polish by bisecting the stationarity
    // condition g(s) = (s - a) + tau * sign(s) / (2 sqrt|s|) on the branch
    if penalty == Penalty::SqrtAbs && tau > 0.0 {
        let polished: Vec<f64> = refined
            .iter()
            .filter(|s| **s != 0.0)
            .map(|&s0| {
                let sign = s0.signum();
                let g = |s: f64| (s - a) + tau * sign / (2.0 * s.abs().sqrt());
                let (mut left, mut right) = (s0 - 2.0 * fine, s0 + 2.0 * fine);
                if sign > 0.0 {
                    left = left.max(1e-12);
                } else {
                    right = right.min(-1e-12);
                }
                if g(left) * g(right) < 0.0 {
                    for _ in 0..200 {
                        let mid = 0.5 * (left + right);
                        if g(left) * g(mid) <= 0.0 {
                            right = mid;
                        } else {
                            left = mid;
                        }
                    }
                    0.5 * (left + right)
                } else {
                    s0
                }
            })
            .collect();
        refined.extend(polished);
    }

    let mut arg = 0.0;
    let mut val = f(0.0);
    for &s in &refined {
        let v = f(s);
        // strict improvement required: ties resolve toward 0
        if v < val - 1e-15 * (1.0 + val.abs()) {
            val = v;
            arg = s;
        }
    }
    arg
}

/// Seeded `(a, tau)` pairs matching the acceptance protocol:
/// `a` uniform on `[-100, 100]`, `tau` uniform on `(0, 10]`.
pub fn seeded_prox_pairs(n: usize, seed: u64) -> Vec<(f64, f64)> {
    let mut rng = Rng::new(seed);
    (0..n)
        .map(|_| {
            let a = rng.next_range(-100.0, 100.0);
            let tau = 10.0 * rng.next_f64();
            (a, tau)
        })
        .collect()
}

/// The desk-scale reproduction run shared by several criteria: m = 200,
/// rank 5, 5% sparsity, entries in [-50, 50], no noise, lambda =
/// 60/max(m, n), mu = 1e4, dynamic penalty with growth 1.1.
///
/// The free parameters are pinned where measurement put them: a small
/// starting penalty (the early large-threshold phase does the rank and
/// support selection), a cap of 100 (stationarity residuals at
/// termination scale with the cap times the final step size), and a
/// stopping threshold well below 1e-8 so the terminal steps are small
/// enough for the stationarity criterion.
pub struct DeskScaleRun {
    pub instance: SyntheticInstance,
    pub state: RpcaState,
    pub trace: Trace,
    pub csv: String,
    pub solve_seconds: f64,
    pub config: RpcaConfig,
}

pub fn desk_scale_config() -> RpcaConfig {
    RpcaConfig {
        mu: 1e4,
        alpha0: 1e-4,
        alpha_growth: 1.1,
        alpha_max: 100.0,
        relchg_threshold: 8e-14,
        max_iterations: 5000,
        ..RpcaConfig::default()
    }
}

pub fn desk_scale_instance() -> SyntheticInstance {
    gen_instance(200, 5, 0.05, 50.0, 0.0, 42).expect("valid instance")
}

fn solve_desk_scale() -> DeskScaleRun {
    let instance = desk_scale_instance();
    let config = desk_scale_config();
    let truth_t = instance.l_true.add(&instance.s_true);
    let truth = RpcaTruth {
        l: &instance.l_true,
        s: &instance.s_true,
        t: &truth_t,
    };
    let started = Instant::now();
    let (state, trace) =
        rpca_solve_with_truth(&instance.m_obs, &config, Some(&truth)).expect("solver runs");
    let solve_seconds = started.elapsed().as_secs_f64();
    let csv = trace.to_csv();
    DeskScaleRun {
        instance,
        state,
        trace,
        csv,
        solve_seconds,
        config,
    }
}

pub fn desk_scale_run() -> &'static DeskScaleRun {
    static RUN: OnceLock<DeskScaleRun> = OnceLock::new();
    RUN.get_or_init(solve_desk_scale)
}

/// Fixed-penalty run with uncoupled generator weights chosen so the
/// penalty clears its threshold (mu = 1, gamma1 = 1, gamma2 = 0.5 give
/// threshold 10; alpha = 20). Shared by the two lemma-check criteria.
pub struct FixedPenaltyRun {
    pub trace: Trace,
    pub sigma0: f64,
    pub sigma1: f64,
    pub mu: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub alpha: f64,
}

fn solve_fixed_penalty() -> FixedPenaltyRun {
    let (mu, g1, g2, alpha): (f64, f64, f64, f64) = (1.0, 1.0, 0.5, 20.0);
    let threshold = 4.0 * ((mu + g2) * (mu + g2) + g2 * g2) / mu.max(g2);
    assert!(alpha > threshold, "fixture must clear the penalty threshold");
    let inst = gen_instance(60, 3, 0.05, 50.0, 0.0, 44).expect("valid instance");
    let cfg = RpcaConfig {
        lambda: Some(1.0),
        mu,
        gamma1: Some(g1),
        gamma2: Some(g2),
        alpha0: alpha,
        alpha_growth: 1.0,
        alpha_max: alpha,
        relchg_threshold: 0.0,
        max_iterations: 260,
        ..RpcaConfig::default()
    };
    let (_, trace) = rpca_solve_with_truth(&inst.m_obs, &cfg, None).expect("solver runs");
    let (sigma0, sigma1) = badmm::models::rpca::rpca_descent_constants(mu, g1, g2, alpha);
    FixedPenaltyRun {
        trace,
        sigma0,
        sigma1,
        mu,
        gamma1: g1,
        gamma2: g2,
        alpha,
    }
}

pub fn fixed_penalty_run() -> &'static FixedPenaltyRun {
    static RUN: OnceLock<FixedPenaltyRun> = OnceLock::new();
    RUN.get_or_init(solve_fixed_penalty)
}
