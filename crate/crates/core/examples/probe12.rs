use badmm::cli::{bgsub_frames, stack_frames};
use badmm::datagen::moving_square_frames;
use badmm::io::GrayImage;
use badmm::models::rpca::RpcaConfig;
use badmm::numerics::fro_norm;
use std::time::Instant;

fn to_images(frames: &[Vec<u8>]) -> Vec<GrayImage> {
    frames.iter().map(|f| GrayImage { width: 64, height: 64, pixels: f.clone() }).collect()
}

fn main() {
    for alpha0 in [0.3, 1.0] {
        let cfg = RpcaConfig {
            alpha0,
            alpha_max: 100.0,
            relchg_threshold: 1e-8,
            max_iterations: 3000,
            ..RpcaConfig::default()
        };
        let seq = moving_square_frames(64, 64, 60, 16, true);
        let t0 = Instant::now();
        let (state, trace) = bgsub_frames(&to_images(&seq.frames), &cfg).unwrap();
        let mut worst = 1.0f64;
        for (j, mask) in seq.masks.iter().enumerate() {
            let total = mask.iter().filter(|m| **m).count();
            let hit = mask.iter().enumerate()
                .filter(|(px, m)| **m && state.s.get(*px, j).abs() > 1e-6)
                .count();
            worst = worst.min(hit as f64 / total as f64);
        }
        println!("a0={alpha0}: moving iters={} t={:.1}s overlap={worst:.3}", trace.len(), t0.elapsed().as_secs_f64());

        let seq = moving_square_frames(64, 64, 60, 16, false);
        let imgs = to_images(&seq.frames);
        let t0 = Instant::now();
        let (state, trace) = bgsub_frames(&imgs, &cfg).unwrap();
        let m = stack_frames(&imgs).unwrap();
        println!(
            "a0={alpha0}: static iters={} t={:.1}s ratio={:.3e}",
            trace.len(), t0.elapsed().as_secs_f64(),
            fro_norm(&state.s) / fro_norm(&m)
        );
    }
}
