//! Deterministic synthetic data generation.
//!
//! Instances are reproducible across platforms: the generator below is fixed
//! in-repo (SplitMix64 for the uniform stream, Box-Muller for Gaussians,
//! Fisher-Yates prefix for support sampling), so a seed pins every entry
//! bit-for-bit.

use crate::error::{Error, Result};
use crate::numerics::Matrix;
#[cfg(test)]
use crate::numerics::fro_norm;

/// SplitMix64 stream with Box-Muller Gaussian sampling.
///
/// `next_u64` is the reference SplitMix64 step (Steele, Lea, Flood 2014).
/// `next_f64` maps the top 53 bits into (0, 1]; keeping zero out of the
/// range lets Box-Muller take a logarithm without guards.
#[derive(Debug, Clone)]
pub struct Rng {
    state: u64,
    spare_gaussian: Option<f64>,
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        Rng {
            state: seed,
            spare_gaussian: None,
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E3779B97F4A7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
        z ^ (z >> 31)
    }

    /// Uniform in (0, 1].
    pub fn next_f64(&mut self) -> f64 {
        ((self.next_u64() >> 11) + 1) as f64 * (1.0 / 9007199254740992.0)
    }

    /// Uniform in [lo, hi).
    pub fn next_range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * (1.0 - self.next_f64())
    }

    /// Standard normal via Box-Muller; draws two uniforms per pair.
    pub fn next_gaussian(&mut self) -> f64 {
        if let Some(z) = self.spare_gaussian.take() {
            return z;
        }
        let u1 = self.next_f64();
        let u2 = self.next_f64();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * u2;
        self.spare_gaussian = Some(r * theta.sin());
        r * theta.cos()
    }

    /// First `k` entries of a Fisher-Yates shuffle of `0..n`.
    pub fn sample_indices(&mut self, n: usize, k: usize) -> Vec<usize> {
        assert!(k <= n);
        let mut pool: Vec<usize> = (0..n).collect();
        for i in 0..k {
            let j = i + (self.next_u64() as usize) % (n - i);
            pool.swap(i, j);
        }
        pool.truncate(k);
        pool
    }
}

/// An `m x m` observation `m_obs = l_true + s_true + noise` with its ground
/// truth, as constructed by [`gen_instance`].
#[derive(Debug, Clone)]
pub struct SyntheticInstance {
    pub m_obs: Matrix,
    pub l_true: Matrix,
    pub s_true: Matrix,
    pub noise_sigma: f64,
    pub seed: u64,
    pub rank: usize,
    pub sparsity: f64,
    pub magnitude: f64,
}

/// Generates a square low-rank + sparse + noise instance.
///
/// `l_true = U V^T` with `U`, `V` independent `m x rank` iid standard
/// Gaussian; `s_true` has `round(sparsity * m^2)` entries on a uniformly
/// random support, each uniform on `[-magnitude, magnitude]`; the noise is
/// iid Gaussian with standard deviation `sigma` (omitted entirely when
/// `sigma == 0`, so `m_obs == l_true + s_true` bitwise).
///
/// Draw order is fixed: U, then V, then the support, then the sparse
/// values, then the noise.
pub fn gen_instance(
    m: usize,
    rank: usize,
    sparsity: f64,
    magnitude: f64,
    sigma: f64,
    seed: u64,
) -> Result<SyntheticInstance> {
    if m == 0 {
        return Err(Error::invalid("m", "must be >= 1"));
    }
    if rank == 0 || rank > m {
        return Err(Error::invalid("rank", format!("must be in 1..={m}")));
    }
    if !(0.0..=1.0).contains(&sparsity) {
        return Err(Error::invalid("sparsity", "must be in [0, 1]"));
    }
    if magnitude < 0.0 {
        return Err(Error::invalid("magnitude", "must be >= 0"));
    }
    if sigma < 0.0 {
        return Err(Error::invalid("sigma", "must be >= 0"));
    }
    let mut rng = Rng::new(seed);

    let u = Matrix::from_fn(m, rank, |_, _| rng.next_gaussian());
    let v = Matrix::from_fn(m, rank, |_, _| rng.next_gaussian());
    let l_true = u.matmul(&v.transpose());

    let k = (sparsity * (m * m) as f64).round() as usize;
    let support = rng.sample_indices(m * m, k);
    let mut s_true = Matrix::zeros(m, m);
    for idx in support {
        let value = rng.next_range(-magnitude, magnitude);
        s_true.set(idx / m, idx % m, value);
    }

    let mut m_obs = l_true.add(&s_true);
    if sigma > 0.0 {
        let noise = Matrix::from_fn(m, m, |_, _| sigma * rng.next_gaussian());
        m_obs = m_obs.add(&noise);
    }

    Ok(SyntheticInstance {
        m_obs,
        l_true,
        s_true,
        noise_sigma: sigma,
        seed,
        rank,
        sparsity,
        magnitude,
    })
}

/// Synthetic grayscale sequence for background-subtraction tests: a static
/// gradient background with a bright square translating across it. Returns
/// per-frame pixel rasters (row-major, values in 0..=255) plus the square's
/// mask per frame.
pub struct SquareSequence {
    pub width: usize,
    pub height: usize,
    pub frames: Vec<Vec<u8>>,
    pub masks: Vec<Vec<bool>>,
}

pub fn moving_square_frames(
    width: usize,
    height: usize,
    n_frames: usize,
    square: usize,
    moving: bool,
) -> SquareSequence {
    assert!(square < width && square < height);
    let bg = |i: usize, j: usize| -> u8 {
        (60.0 + 60.0 * (i as f64 / (height - 1).max(1) as f64)
            + 40.0 * (j as f64 / (width - 1).max(1) as f64)) as u8
    };
    let mut frames = Vec::with_capacity(n_frames);
    let mut masks = Vec::with_capacity(n_frames);
    for k in 0..n_frames {
        let (top, left) = if moving {
            ((k * 3) % (height - square), (k * 5) % (width - square))
        } else {
            (0, 0)
        };
        let mut frame = vec![0u8; width * height];
        let mut mask = vec![false; width * height];
        for i in 0..height {
            for j in 0..width {
                let in_square =
                    moving && i >= top && i < top + square && j >= left && j < left + square;
                frame[i * width + j] = if in_square { 230 } else { bg(i, j) };
                mask[i * width + j] = in_square;
            }
        }
        frames.push(frame);
        masks.push(mask);
    }
    SquareSequence {
        width,
        height,
        frames,
        masks,
    }
}
