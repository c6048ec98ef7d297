use badmm::datagen::gen_instance;
use badmm::models::relerr;
use badmm::models::rpca::{rpca_init, rpca_step, RpcaConfig};
use badmm::numerics::fro_norm;
use badmm::engine::relchg_blocks;
use std::time::Instant;

fn run(m: usize, alpha0: f64, alpha_max: f64, frac: f64, iters: usize) {
    let inst = gen_instance(m, 5, 0.05, 50.0, 0.0, 42).unwrap();
    let cfg = RpcaConfig {
        mu: 1e4, alpha0, alpha_max,
        init_rank_fraction: frac,
        relchg_threshold: 0.0,
        max_iterations: iters,
        ..RpcaConfig::default()
    };
    let mut st = rpca_init(&inst.m_obs, &cfg).unwrap();
    println!("== m={m} a0={alpha0} amax={alpha_max} frac={frac}");
    let t0 = Instant::now();
    for k in 0..iters {
        let prev = st.clone();
        let (next, info) = rpca_step(&st, &cfg, &inst.m_obs).unwrap();
        st = next;
        let rc = relchg_blocks(
            &[prev.l.clone(), prev.s.clone(), prev.t.clone()],
            &[st.l.clone(), st.s.clone(), st.t.clone()],
        );
        let done = rc < 1e-12;
        if (k + 1) % 250 == 0 || done || k + 1 == iters {
            let alpha = info.alpha_used;
            let (g1, g2) = cfg.gammas_at(alpha);
            let (s0, _) = badmm::models::rpca::rpca_descent_constants(cfg.mu, g1, g2, alpha);
            let dl = st.l.sub(&prev.l); let ds = st.s.sub(&prev.s);
            let dt = st.t.sub(&prev.t); let dp = st.p.sub(&prev.p);
            let res_l = ds.sub(&dt).scale(alpha).sub(&dl.scale(g1)).sub(&dp);
            let res_s = dt.scale(-alpha).sub(&ds.scale(g1)).sub(&dp);
            let res_t = dp.sub(&dt.scale(g2)).add(&dt.scale(2.0 * s0));
            let stat = fro_norm(&res_l).max(fro_norm(&res_s)).max(fro_norm(&res_t));
            println!(
                "  it={:5} t={:5.0}s relChg={:9.3e} relErr_L={:9.3e} relErr_S={:9.3e} stat={:9.3e} primal={:9.3e} |p|={:7.3} bound={:9.3e}",
                k + 1, t0.elapsed().as_secs_f64(), rc,
                relerr(&st.l, &inst.l_true).unwrap(),
                relerr(&st.s, &inst.s_true).unwrap(),
                stat, info.primal_residual, fro_norm(&st.p),
                1e-6 * (1.0 + fro_norm(&st.p)),
            );
        }
        if done {
            println!("  terminated at relChg < 1e-12, iter {}", k + 1);
            break;
        }
    }
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let which = args.get(1).map(|s| s.as_str()).unwrap_or("a");
    match which {
        "a" => run(200, 1e-4, 1e2, 0.01, 20000),
        "b" => run(200, 1e-4, 1e3, 0.01, 20000),
        "c" => run(200, 1e-4, 1e4, 0.01, 20000),
        _ => {}
    }
}
