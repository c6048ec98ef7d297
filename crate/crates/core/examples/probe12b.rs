use badmm::cli::bgsub_frames;
use badmm::datagen::moving_square_frames;
use badmm::io::GrayImage;
use badmm::models::rpca::RpcaConfig;
use std::time::Instant;

fn main() {
    let seq = moving_square_frames(64, 64, 60, 16, true);
    let imgs: Vec<GrayImage> = seq.frames.iter()
        .map(|f| GrayImage { width: 64, height: 64, pixels: f.clone() })
        .collect();
    for cap in [60usize, 100, 150] {
        let cfg = RpcaConfig {
            alpha0: 0.3,
            alpha_max: 100.0,
            relchg_threshold: 1e-8,
            max_iterations: cap,
            ..RpcaConfig::default()
        };
        let t0 = Instant::now();
        let (state, trace) = bgsub_frames(&imgs, &cfg).unwrap();
        let mut worst = 1.0f64;
        let mut worst_frame = 0;
        for (j, mask) in seq.masks.iter().enumerate() {
            let total = mask.iter().filter(|m| **m).count();
            let hit = mask.iter().enumerate()
                .filter(|(px, m)| **m && state.s.get(*px, j).abs() > 1e-6)
                .count();
            let frac = hit as f64 / total as f64;
            if frac < worst { worst = frac; worst_frame = j; }
        }
        println!(
            "cap={cap}: iters={} t={:.1}s worst_overlap={:.3} (frame {worst_frame}) relchg={:.1e}",
            trace.len(), t0.elapsed().as_secs_f64(), worst,
            trace.records.last().unwrap().relchg
        );
    }
}
