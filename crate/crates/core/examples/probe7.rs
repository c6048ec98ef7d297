use badmm::datagen::gen_instance;
use badmm::models::relerr;
use badmm::models::rpca::{rpca_solve_with_truth, RpcaConfig, RpcaTruth};
use std::time::Instant;

fn main() {
    let inst = gen_instance(200, 5, 0.05, 50.0, 0.2, 43).unwrap();
    let truth_t = inst.l_true.add(&inst.s_true);
    let truth = RpcaTruth { l: &inst.l_true, s: &inst.s_true, t: &truth_t };
    for mu in [0.03, 0.1] {
        for alpha_max in [100.0] {
            let cfg = RpcaConfig {
                mu,
                alpha0: 1e-4,
                alpha_max,
                relchg_threshold: 1e-8,
                max_iterations: 2500,
                ..RpcaConfig::default()
            };
            let t0 = Instant::now();
            let (state, trace) = rpca_solve_with_truth(&inst.m_obs, &cfg, Some(&truth)).unwrap();
            println!(
                "mu={mu:6} amax={alpha_max:5}: iters={:4} t={:5.1}s relChg={:.1e} relErr_L={:.3e} relErr_S={:.3e}",
                trace.len(),
                t0.elapsed().as_secs_f64(),
                trace.records.last().unwrap().relchg,
                relerr(&state.l, &inst.l_true).unwrap(),
                relerr(&state.s, &inst.s_true).unwrap(),
            );
        }
    }
}
