//! Scratch calibration runs for picking solver defaults. Not part of the
//! test suite.

use badmm::datagen::{gen_instance, moving_square_frames};
use badmm::models::relerr;
use badmm::models::rpca::{rpca_solve_with_truth, RpcaConfig, RpcaTruth};
use badmm::numerics::fro_norm;
use std::time::Instant;

fn criterion6(alpha0: f64, alpha_max: f64, relchg: f64) {
    let inst = gen_instance(200, 5, 0.05, 50.0, 0.0, 42).unwrap();
    let cfg = RpcaConfig {
        mu: 1e4,
        alpha0,
        alpha_max,
        relchg_threshold: relchg,
        max_iterations: 5000,
        ..RpcaConfig::default()
    };
    let truth_t = inst.l_true.add(&inst.s_true);
    let truth = RpcaTruth {
        l: &inst.l_true,
        s: &inst.s_true,
        t: &truth_t,
    };
    let t0 = Instant::now();
    let (state, trace) = rpca_solve_with_truth(&inst.m_obs, &cfg, Some(&truth)).unwrap();
    let dt = t0.elapsed().as_secs_f64();
    let last = trace.records.last().unwrap();
    let p_norm = fro_norm(&state.p);
    println!(
        "c6 a0={alpha0} amax={alpha_max} thr={relchg}: iters={} time={dt:.1}s relChg={:.2e} relErr_L={:.2e} relErr_S={:.2e} stat={:.3e} primal={:.3e} bound={:.3e} p={p_norm:.2}",
        trace.len(),
        last.relchg,
        relerr(&state.l, &inst.l_true).unwrap(),
        relerr(&state.s, &inst.s_true).unwrap(),
        last.stationarity_residual,
        last.primal_residual,
        1e-6 * (1.0 + p_norm),
    );
}

fn criterion7(mu: f64) {
    let inst = gen_instance(200, 5, 0.05, 50.0, 0.2, 43).unwrap();
    let cfg = RpcaConfig {
        mu,
        alpha0: 1e-4,
        alpha_max: 100.0,
        relchg_threshold: 1e-8,
        max_iterations: 5000,
        ..RpcaConfig::default()
    };
    let truth_t = inst.l_true.add(&inst.s_true);
    let truth = RpcaTruth {
        l: &inst.l_true,
        s: &inst.s_true,
        t: &truth_t,
    };
    let (state, trace) = rpca_solve_with_truth(&inst.m_obs, &cfg, Some(&truth)).unwrap();
    println!(
        "c7 mu={mu}: iters={} relChg={:.2e} relErr_L={:.2e} relErr_S={:.2e}",
        trace.len(),
        trace.records.last().unwrap().relchg,
        relerr(&state.l, &inst.l_true).unwrap(),
        relerr(&state.s, &inst.s_true).unwrap(),
    );
}

fn criterion34() {
    let inst = gen_instance(60, 3, 0.05, 50.0, 0.0, 44).unwrap();
    // fixed penalty above the descent threshold with uncoupled weights
    let (mu, g1, g2) = (1.0, 1.0, 0.5);
    let mu3: f64 = mu;
    let thr = 4.0 * ((mu + g2) * (mu + g2) + g2 * g2) / mu3;
    let alpha = 20.0;
    assert!(alpha > thr);
    let cfg = RpcaConfig {
        lambda: Some(60.0 / 60.0),
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
    let (_, trace) = rpca_solve_with_truth(&inst.m_obs, &cfg, None).unwrap();
    let (sigma0, sigma1) = badmm::models::rpca::rpca_descent_constants(mu, g1, g2, alpha);
    println!("c34: sigma0={sigma0} sigma1={sigma1} iters={}", trace.len());
    let d = badmm::diagnostics::check_descent(&trace, sigma1);
    let m = badmm::diagnostics::check_multiplier_bound(
        &trace,
        &badmm::diagnostics::MultiplierBoundConstants {
            ell_f_last: mu,
            ell_phi_last: g2,
            sigma_c: 1.0,
        },
    );
    println!(
        "c34 descent: {} checked, {} violations, worst {:.3e}",
        d.margins.len(),
        d.violations,
        d.worst_margin
    );
    println!(
        "c34 multbound: {} checked, {} violations, worst {:.3e}",
        m.margins.len(),
        m.violations,
        m.worst_margin
    );
}

fn criterion12() {
    let seq = moving_square_frames(64, 64, 60, 16, true);
    let frames: Vec<badmm::io::GrayImage> = seq
        .frames
        .iter()
        .map(|f| badmm::io::GrayImage {
            width: 64,
            height: 64,
            pixels: f.clone(),
        })
        .collect();
    let cfg = RpcaConfig {
        alpha0: 1e-4,
        alpha_max: 100.0,
        relchg_threshold: 1e-8,
        ..RpcaConfig::default()
    };
    let t0 = Instant::now();
    let (state, trace) = badmm::cli::bgsub_frames(&frames, &cfg).unwrap();
    println!(
        "c12 moving: iters={} time={:.1}s",
        trace.len(),
        t0.elapsed().as_secs_f64()
    );
    let mut worst = 1.0f64;
    for (j, mask) in seq.masks.iter().enumerate() {
        let total = mask.iter().filter(|m| **m).count();
        let hit = mask
            .iter()
            .enumerate()
            .filter(|(px, m)| **m && state.s.get(*px, j).abs() > 1e-6)
            .count();
        worst = worst.min(hit as f64 / total as f64);
    }
    println!("c12 worst per-frame overlap = {worst:.3}");

    let seq_static = moving_square_frames(64, 64, 20, 16, false);
    let frames: Vec<badmm::io::GrayImage> = seq_static
        .frames
        .iter()
        .map(|f| badmm::io::GrayImage {
            width: 64,
            height: 64,
            pixels: f.clone(),
        })
        .collect();
    let t1 = Instant::now();
    let (state, tr2) = badmm::cli::bgsub_frames(&frames, &cfg).unwrap();
    println!("c12 static: iters={} time={:.1}s", tr2.len(), t1.elapsed().as_secs_f64());
    let m = badmm::cli::stack_frames(&frames).unwrap();
    println!(
        "c12 static: ||S||/||M|| = {:.3e}",
        fro_norm(&state.s) / fro_norm(&m)
    );
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    match args.get(1).map(|s| s.as_str()) {
        Some("c6") => {
            criterion6(0.05, 1e4, 1e-12);
            criterion6(0.05, 1e4, 1e-13);
            criterion6(0.05, 1e5, 1e-12);
            criterion6(0.5, 1e4, 1e-12);
        }
        Some("c7") => {
            for mu in [1.0, 5.0, 25.0, 100.0, 400.0] {
                criterion7(mu);
            }
        }
        Some("c34") => criterion34(),
        Some("c12") => criterion12(),
        _ => {
            criterion6(0.05, 1e4, 1e-12);
        }
    }
}
