use badmm::datagen::gen_instance;
use badmm::models::relerr;
use badmm::models::rpca::{rpca_init, rpca_step, RpcaConfig};
use badmm::numerics::{fro_norm, svd};

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
    for k in 0..iters {
        let (next, _info) = rpca_step(&st, &cfg, &inst.m_obs).unwrap();
        st = next;
        if (k + 1) % (iters / 10) == 0 {
            let el = relerr(&st.l, &inst.l_true).unwrap();
            let es = relerr(&st.s, &inst.s_true).unwrap();
            let sv = svd(&st.l).unwrap().singular_values;
            let rank = sv.iter().filter(|v| **v > 1e-6 * sv[0].max(1.0)).count();
            let nnz = st.s.to_row_major().iter().filter(|v| **v != 0.0).count();
            println!(
                "  it={:4} alpha={:9.2e} relErr_L={:9.3e} relErr_S={:9.3e} rank={rank} nnz={nnz} ||p||={:8.2e}",
                k + 1, st.alpha_current, el, es, fro_norm(&st.p)
            );
        }
    }
}

fn main() {
    let m = 100;
    for a0 in [1e-4, 1e-3, 1e-2, 0.1, 1.0] {
        run(m, a0, 1e4, 0.01, 300);
    }
}
