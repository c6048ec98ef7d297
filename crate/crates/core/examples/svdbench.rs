use badmm::numerics::{svd, Matrix};
use badmm::datagen::Rng;
use std::time::Instant;
fn main() {
    let mut rng = Rng::new(1);
    for n in [60usize, 200, 500] {
        let m = Matrix::from_fn(n, n, |_, _| rng.next_gaussian());
        let t0 = Instant::now();
        let reps = if n <= 200 { 5 } else { 2 };
        for _ in 0..reps { let _ = svd(&m).unwrap(); }
        println!("svd {n}x{n}: {:.1} ms", t0.elapsed().as_secs_f64() * 1000.0 / reps as f64);
    }
    let tall = Matrix::from_fn(4096, 60, |_, _| rng.next_gaussian());
    let t0 = Instant::now();
    let _ = svd(&tall).unwrap();
    println!("svd 4096x60: {:.1} ms", t0.elapsed().as_secs_f64() * 1000.0);
}
