//! Command-line front end: `simulate`, `bgsub`, `diagnose`, `solve-linear`,
//! `sweep-mu`.
//!
//! Exit codes: 0 success, 1 diagnostic violation, 2 usage/config error,
//! 3 numeric failure. Every command is reproducible: outputs are a pure
//! function of the config file plus inputs (binary outputs bit-exact, CSV
//! text-exact).

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::datagen::{gen_instance, SyntheticInstance};
use crate::diagnostics::{self, MultiplierBoundConstants};
use crate::engine::{self, IterateState, StoppingRule, Trace};
use crate::error::{Error, Result};
use crate::io::{self, GrayImage};
use crate::models::linear::linear_system_spec;
use crate::models::rpca::{
    rpca_descent_constants, rpca_solve_with_truth, RpcaConfig, RpcaState, RpcaTruth,
};
use crate::models::relerr;
use crate::numerics::{fro_norm, Matrix};

#[derive(Debug, Parser)]
#[command(
    name = "badmm",
    about = "Multi-block Bregman ADMM: matrix decomposition, linear systems, diagnostics",
    version
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic low-rank + sparse instance and decompose it.
    Simulate(SimulateArgs),
    /// Background subtraction on a directory of P5 PGM frames.
    Bgsub(BgsubArgs),
    /// Check the convergence inequalities along a recorded trace.
    Diagnose(DiagnoseArgs),
    /// Solve a block-split homogeneous linear system.
    SolveLinear(SolveLinearArgs),
    /// Re-run the simulation protocol over a grid of noise-fit weights.
    SweepMu(SweepMuArgs),
}

/// Full configuration of a `simulate` run; the `--config` file carries the
/// same structure in TOML.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SimulateConfig {
    pub m: usize,
    pub rank: usize,
    pub sparsity: f64,
    pub magnitude: f64,
    pub sigma: f64,
    pub seed: u64,
    pub solver: RpcaConfig,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        SimulateConfig {
            m: 200,
            rank: 5,
            sparsity: 0.05,
            magnitude: 50.0,
            sigma: 0.0,
            seed: 42,
            solver: RpcaConfig::default(),
        }
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// TOML config file; explicit flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub rank: Option<usize>,
    #[arg(long)]
    pub sparsity: Option<f64>,
    #[arg(long)]
    pub magnitude: Option<f64>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Output directory (created if missing).
    #[arg(long, short)]
    pub out: PathBuf,
    /// Also write the generated instance (observation, truth, manifest).
    #[arg(long)]
    pub save_instance: bool,
}

/// Solver flags shared by the decomposition commands.
#[derive(Debug, Args, Clone)]
pub struct SolverArgs {
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub mu: Option<f64>,
    #[arg(long)]
    pub gamma1: Option<f64>,
    #[arg(long)]
    pub gamma2: Option<f64>,
    #[arg(long)]
    pub alpha0: Option<f64>,
    #[arg(long)]
    pub alpha_growth: Option<f64>,
    #[arg(long)]
    pub alpha_max: Option<f64>,
    #[arg(long)]
    pub init_rank_fraction: Option<f64>,
    #[arg(long)]
    pub relchg_threshold: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
}

impl SolverArgs {
    fn apply(&self, cfg: &mut RpcaConfig) {
        if self.lambda.is_some() {
            cfg.lambda = self.lambda;
        }
        if let Some(v) = self.mu {
            cfg.mu = v;
        }
        if self.gamma1.is_some() {
            cfg.gamma1 = self.gamma1;
        }
        if self.gamma2.is_some() {
            cfg.gamma2 = self.gamma2;
        }
        if let Some(v) = self.alpha0 {
            cfg.alpha0 = v;
        }
        if let Some(v) = self.alpha_growth {
            cfg.alpha_growth = v;
        }
        if let Some(v) = self.alpha_max {
            cfg.alpha_max = v;
        }
        if let Some(v) = self.init_rank_fraction {
            cfg.init_rank_fraction = v;
        }
        if let Some(v) = self.relchg_threshold {
            cfg.relchg_threshold = v;
        }
        if let Some(v) = self.max_iter {
            cfg.max_iterations = v;
        }
    }
}

#[derive(Debug, Args)]
pub struct BgsubArgs {
    /// Directory of equal-sized binary (P5) PGM frames, stacked in
    /// filename order.
    #[arg(long)]
    pub frames: PathBuf,
    #[arg(long, short)]
    pub out: PathBuf,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Args)]
pub struct DiagnoseArgs {
    /// Trace CSV produced by a solver run.
    #[arg(long)]
    pub trace: PathBuf,
    /// Constants TOML written next to the trace (`constants.toml`).
    #[arg(long)]
    pub spec: PathBuf,
}

#[derive(Debug, Args)]
pub struct SolveLinearArgs {
    /// Block matrix files in order (CSV or .bmat); the last must be square
    /// and nonsingular.
    #[arg(long = "block", required = true)]
    pub blocks: Vec<PathBuf>,
    /// Comma-separated Bregman weights, one per block (default 1 each).
    #[arg(long)]
    pub gammas: Option<String>,
    /// Penalty weight; picked automatically (twice the validator
    /// threshold) when omitted.
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long, default_value = "random")]
    pub init: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1e-10)]
    pub relchg_threshold: f64,
    #[arg(long, default_value_t = 10_000)]
    pub max_iter: usize,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepMuArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub rank: Option<usize>,
    #[arg(long)]
    pub sparsity: Option<f64>,
    #[arg(long)]
    pub magnitude: Option<f64>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Comma-separated candidate noise-fit weights.
    #[arg(long)]
    pub mus: String,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

/// Constants file consumed by `diagnose`, written by the solver commands
/// next to each trace.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConstantsFile {
    pub model: String,
    /// Penalty on the trailing segment of the trace.
    pub alpha_final: f64,
    pub sigma0: f64,
    pub sigma1: f64,
    pub ell_f_last: f64,
    pub ell_phi_last: f64,
    pub sigma_c: f64,
    /// Penalty lower bound for a positive descent constant.
    pub alpha_threshold: f64,
}

pub fn run(cli: Cli) -> i32 {
    let result = match cli.command {
        Command::Simulate(args) => cmd_simulate(args),
        Command::Bgsub(args) => cmd_bgsub(args),
        Command::Diagnose(args) => cmd_diagnose(args),
        Command::SolveLinear(args) => cmd_solve_linear(args),
        Command::SweepMu(args) => cmd_sweep_mu(args),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    }
}

fn exit_code_for(e: &Error) -> i32 {
    match e {
        Error::Numeric(_) | Error::SolverFailure { .. } => 3,
        _ => 2,
    }
}

fn ensure_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        source: e,
    })
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::Io {
        path: path.display().to_string(),
        source: e,
    })
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        source: e,
    })
}

fn load_toml<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = read_text(path)?;
    toml::from_str(&text).map_err(|e| Error::Parse {
        path: path.display().to_string(),
        line: e
            .span()
            .map(|s| text[..s.start].lines().count())
            .unwrap_or(0),
        reason: e.message().to_string(),
    })
}

fn to_toml<T: Serialize>(value: &T) -> String {
    toml::to_string_pretty(value).expect("config serializes")
}

/// Writes `constants.toml` for a decomposition run so `diagnose` can check
/// the trace later. Constants are evaluated at the trace's final penalty.
fn write_constants(dir: &Path, cfg: &RpcaConfig, alpha_final: f64) -> Result<ConstantsFile> {
    let (g1, g2) = cfg.gammas_at(alpha_final);
    let (sigma0, sigma1) = rpca_descent_constants(cfg.mu, g1, g2, alpha_final);
    let mu3 = cfg.mu.max(g2);
    let constants = ConstantsFile {
        model: "rpca".to_string(),
        alpha_final,
        sigma0,
        sigma1,
        ell_f_last: cfg.mu,
        ell_phi_last: g2,
        sigma_c: 1.0,
        alpha_threshold: 4.0 * ((cfg.mu + g2).powi(2) + g2 * g2) / mu3,
    };
    write_text(&dir.join("constants.toml"), &to_toml(&constants))?;
    Ok(constants)
}

/// Everything `simulate` leaves on disk.
pub struct SimulateOutput {
    pub instance: SyntheticInstance,
    pub state: RpcaState,
    pub trace: Trace,
}

/// Library form of the `simulate` command.
pub fn simulate_to_dir(config: &SimulateConfig, out: &Path) -> Result<SimulateOutput> {
    ensure_dir(out)?;
    let instance = gen_instance(
        config.m,
        config.rank,
        config.sparsity,
        config.magnitude,
        config.sigma,
        config.seed,
    )?;
    let truth_t = instance.l_true.add(&instance.s_true);
    let truth = RpcaTruth {
        l: &instance.l_true,
        s: &instance.s_true,
        t: &truth_t,
    };
    let (state, trace) = rpca_solve_with_truth(&instance.m_obs, &config.solver, Some(&truth))?;

    write_text(&out.join("trace.csv"), &trace.to_csv())?;
    write_text(&out.join("trace.jsonl"), &trace.to_jsonl())?;
    io::write_matrix_bmat(&out.join("l.bmat"), &state.l)?;
    io::write_matrix_bmat(&out.join("s.bmat"), &state.s)?;
    io::write_matrix_bmat(&out.join("t.bmat"), &state.t)?;
    write_text(&out.join("config.toml"), &to_toml(config))?;
    let alpha_final = trace
        .records
        .last()
        .map(|r| r.alpha)
        .unwrap_or(config.solver.alpha0);
    write_constants(out, &config.solver, alpha_final)?;
    Ok(SimulateOutput {
        instance,
        state,
        trace,
    })
}

fn merge_simulate_config(args: &SimulateArgs) -> Result<SimulateConfig> {
    let mut cfg: SimulateConfig = match &args.config {
        Some(path) => load_toml(path)?,
        None => SimulateConfig::default(),
    };
    if let Some(v) = args.m {
        cfg.m = v;
    }
    if let Some(v) = args.rank {
        cfg.rank = v;
    }
    if let Some(v) = args.sparsity {
        cfg.sparsity = v;
    }
    if let Some(v) = args.magnitude {
        cfg.magnitude = v;
    }
    if let Some(v) = args.sigma {
        cfg.sigma = v;
    }
    if let Some(v) = args.seed {
        cfg.seed = v;
    }
    args.solver.apply(&mut cfg.solver);
    Ok(cfg)
}

fn cmd_simulate(args: SimulateArgs) -> Result<i32> {
    let cfg = merge_simulate_config(&args)?;
    let out = simulate_to_dir(&cfg, &args.out)?;
    if args.save_instance {
        io::write_matrix_bmat(&args.out.join("m_obs.bmat"), &out.instance.m_obs)?;
        io::write_matrix_bmat(&args.out.join("l_true.bmat"), &out.instance.l_true)?;
        io::write_matrix_bmat(&args.out.join("s_true.bmat"), &out.instance.s_true)?;
        write_text(
            &args.out.join("manifest.toml"),
            &to_toml(&serde_json::json!({
                "seed": out.instance.seed,
                "m": cfg.m,
                "rank": out.instance.rank,
                "sparsity": out.instance.sparsity,
                "magnitude": out.instance.magnitude,
                "sigma": out.instance.noise_sigma,
            })),
        )?;
    }
    let last = out.trace.records.last();
    println!(
        "simulate: {} iterations, relChg = {}, relErr_L = {}, relErr_S = {}",
        out.trace.len(),
        last.map(|r| r.relchg).unwrap_or(f64::NAN),
        last.and_then(|r| r.relerr.as_ref().map(|v| v[0]))
            .unwrap_or(f64::NAN),
        last.and_then(|r| r.relerr.as_ref().map(|v| v[1]))
            .unwrap_or(f64::NAN),
    );
    println!("outputs written to {}", args.out.display());
    Ok(0)
}

/// Stacks frames as columns of a pixels-by-frames observation matrix.
pub fn stack_frames(frames: &[GrayImage]) -> Result<Matrix> {
    let first = frames.first().ok_or_else(|| {
        Error::invalid("frames", "no frames supplied")
    })?;
    let (w, h) = (first.width, first.height);
    for (i, f) in frames.iter().enumerate() {
        if f.width != w || f.height != h {
            return Err(Error::shape(
                format!("{w}x{h}"),
                format!("{}x{} (frame {i})", f.width, f.height),
                "stack_frames",
            ));
        }
    }
    Ok(Matrix::from_fn(w * h, frames.len(), |px, j| {
        frames[j].pixels[px] as f64
    }))
}

/// Splits a pixels-by-frames matrix back into frames. `rescale` maps the
/// absolute values onto the full 8-bit range (used for the foreground);
/// otherwise values are clamped to 0..=255.
pub fn unstack_frames(m: &Matrix, width: usize, height: usize, rescale: bool) -> Vec<GrayImage> {
    let scale = if rescale {
        let peak = m.max_abs();
        if peak > 0.0 {
            255.0 / peak
        } else {
            0.0
        }
    } else {
        1.0
    };
    (0..m.cols())
        .map(|j| {
            let pixels = (0..width * height)
                .map(|px| {
                    let v = if rescale {
                        m.get(px, j).abs() * scale
                    } else {
                        m.get(px, j)
                    };
                    v.round().clamp(0.0, 255.0) as u8
                })
                .collect();
            GrayImage {
                width,
                height,
                pixels,
            }
        })
        .collect()
}

/// Library form of the `bgsub` command: stack, decompose, unstack.
pub fn bgsub_frames(frames: &[GrayImage], cfg: &RpcaConfig) -> Result<(RpcaState, Trace)> {
    let m_obs = stack_frames(frames)?;
    let mut cfg = cfg.clone();
    if cfg.lambda.is_none() {
        cfg.lambda = Some(50.0 / m_obs.rows().max(m_obs.cols()) as f64);
    }
    let (state, trace) = rpca_solve_with_truth(&m_obs, &cfg, None)?;
    Ok((state, trace))
}

fn cmd_bgsub(args: BgsubArgs) -> Result<i32> {
    let mut entries: Vec<PathBuf> = std::fs::read_dir(&args.frames)
        .map_err(|e| Error::Io {
            path: args.frames.display().to_string(),
            source: e,
        })?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().and_then(|e| e.to_str()) == Some("pgm"))
        .collect();
    entries.sort();
    if entries.is_empty() {
        return Err(Error::invalid(
            "frames",
            format!("no .pgm frames in {}", args.frames.display()),
        ));
    }
    let frames: Vec<GrayImage> = entries
        .iter()
        .map(|p| io::read_pgm(p))
        .collect::<Result<_>>()?;
    let (w, h) = (frames[0].width, frames[0].height);

    let mut cfg = RpcaConfig::default();
    args.solver.apply(&mut cfg);
    let (state, trace) = bgsub_frames(&frames, &cfg)?;

    ensure_dir(&args.out)?;
    let bg_dir = args.out.join("background");
    let fg_dir = args.out.join("foreground");
    ensure_dir(&bg_dir)?;
    ensure_dir(&fg_dir)?;
    for (j, img) in unstack_frames(&state.l, w, h, false).into_iter().enumerate() {
        io::write_pgm(&bg_dir.join(format!("frame_{j:04}.pgm")), &img)?;
    }
    for (j, img) in unstack_frames(&state.s, w, h, true).into_iter().enumerate() {
        io::write_pgm(&fg_dir.join(format!("frame_{j:04}.pgm")), &img)?;
    }
    write_text(&args.out.join("trace.csv"), &trace.to_csv())?;
    let alpha_final = trace.records.last().map(|r| r.alpha).unwrap_or(cfg.alpha0);
    let mut cfg_echo = cfg.clone();
    if cfg_echo.lambda.is_none() {
        cfg_echo.lambda = Some(50.0 / ((w * h).max(frames.len())) as f64);
    }
    write_text(&args.out.join("config.toml"), &to_toml(&cfg_echo))?;
    write_constants(&args.out, &cfg_echo, alpha_final)?;
    println!(
        "bgsub: {} frames of {}x{}, {} iterations, relChg = {}",
        frames.len(),
        w,
        h,
        trace.len(),
        trace.records.last().map(|r| r.relchg).unwrap_or(f64::NAN)
    );
    println!("outputs written to {}", args.out.display());
    Ok(0)
}

fn cmd_diagnose(args: DiagnoseArgs) -> Result<i32> {
    let trace = Trace::from_csv(&read_text(&args.trace)?)?;
    let constants: ConstantsFile = load_toml(&args.spec)?;
    if trace.is_empty() {
        println!("no iterations recorded; nothing to check");
        return Ok(0);
    }
    let report = diagnostics::diagnose(
        &trace,
        Some(constants.sigma1),
        Some(&MultiplierBoundConstants {
            ell_f_last: constants.ell_f_last,
            ell_phi_last: constants.ell_phi_last,
            sigma_c: constants.sigma_c,
        }),
    );
    println!("{report}");
    if report.verdict() {
        Ok(0)
    } else {
        Ok(1)
    }
}

fn parse_f64_list(text: &str, name: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::invalid(name, format!("bad number '{}'", t.trim())))
        })
        .collect()
}

fn cmd_solve_linear(args: SolveLinearArgs) -> Result<i32> {
    let blocks: Vec<Matrix> = args
        .blocks
        .iter()
        .map(|p| io::read_matrix_auto(p))
        .collect::<Result<_>>()?;
    let n = blocks.len();
    let gammas = match &args.gammas {
        Some(g) => {
            let g = parse_f64_list(g, "gammas")?;
            if g.len() != n {
                return Err(Error::invalid("gammas", format!("need {n} weights")));
            }
            g
        }
        None => vec![1.0; n],
    };
    let alpha = match args.alpha {
        Some(a) => a,
        None => {
            let probe = linear_system_spec(blocks.clone(), gammas.clone(), 1.0)?;
            let threshold = engine::validate_alpha(&probe)
                .threshold
                .ok_or_else(|| Error::invalid("alpha", "cannot compute threshold"))?;
            2.0 * threshold + 1.0
        }
    };
    let spec = linear_system_spec(blocks, gammas, alpha)?;
    let report = engine::validate_alpha(&spec);
    println!(
        "penalty alpha = {alpha} (threshold {}): {}",
        report.threshold.map(io::format_f64).unwrap_or_default(),
        if report.pass { "valid" } else { "below threshold" }
    );

    let mut rng = crate::datagen::Rng::new(args.seed);
    let x0: Vec<Matrix> = spec
        .blocks
        .iter()
        .map(|b| {
            let rows = b.constraint_matrix.cols();
            match args.init.as_str() {
                "zero" => Ok(Matrix::zeros(rows, 1)),
                "random" => Ok(Matrix::from_fn(rows, 1, |_, _| rng.next_gaussian())),
                other => Err(Error::invalid("init", format!("unknown mode '{other}'"))),
            }
        })
        .collect::<Result<_>>()?;
    let init = IterateState::new(&spec, x0)?;
    let outcome = engine::run(
        &spec,
        init,
        &StoppingRule {
            relchg_threshold: args.relchg_threshold,
            max_iterations: args.max_iter,
        },
    );
    let (state, trace) = outcome.into_result()?;
    let residual = fro_norm(&engine::constraint_sum(&spec, &state.x));
    println!(
        "solve-linear: {} iterations, ||sum A_i x_i|| = {residual}",
        trace.len()
    );
    if let Some(out) = &args.out {
        ensure_dir(out)?;
        for (i, x) in state.x.iter().enumerate() {
            io::write_matrix_bmat(&out.join(format!("x{}.bmat", i + 1)), x)?;
        }
        write_text(&out.join("trace.csv"), &trace.to_csv())?;
        println!("outputs written to {}", out.display());
    }
    Ok(0)
}

fn cmd_sweep_mu(args: SweepMuArgs) -> Result<i32> {
    let sim_args = SimulateArgs {
        config: args.config,
        m: args.m,
        rank: args.rank,
        sparsity: args.sparsity,
        magnitude: args.magnitude,
        sigma: args.sigma,
        seed: args.seed,
        solver: args.solver,
        out: PathBuf::new(),
        save_instance: false,
    };
    let base = merge_simulate_config(&sim_args)?;
    let mus = parse_f64_list(&args.mus, "mus")?;
    if mus.is_empty() {
        return Err(Error::invalid("mus", "need at least one value"));
    }
    let instance = gen_instance(
        base.m,
        base.rank,
        base.sparsity,
        base.magnitude,
        base.sigma,
        base.seed,
    )?;
    let truth_t = instance.l_true.add(&instance.s_true);

    let mut lines = vec!["mu,iterations,relChg,relErr_L,relErr_S".to_string()];
    let mut best: Option<(f64, f64)> = None;
    println!("{:>12} {:>6} {:>12} {:>12} {:>12}", "mu", "iters", "relChg", "relErr_L", "relErr_S");
    for mu in &mus {
        let mut cfg = base.solver.clone();
        cfg.mu = *mu;
        let truth = RpcaTruth {
            l: &instance.l_true,
            s: &instance.s_true,
            t: &truth_t,
        };
        let (state, trace) = rpca_solve_with_truth(&instance.m_obs, &cfg, Some(&truth))?;
        let err_l = relerr(&state.l, &instance.l_true)?;
        let err_s = relerr(&state.s, &instance.s_true)?;
        let rc = trace.records.last().map(|r| r.relchg).unwrap_or(f64::NAN);
        println!(
            "{:>12} {:>6} {:>12.3e} {:>12.3e} {:>12.3e}",
            mu,
            trace.len(),
            rc,
            err_l,
            err_s
        );
        lines.push(format!(
            "{},{},{},{},{}",
            io::format_f64(*mu),
            trace.len(),
            io::format_f64(rc),
            io::format_f64(err_l),
            io::format_f64(err_s)
        ));
        if best.map(|(_, e)| err_l < e).unwrap_or(true) {
            best = Some((*mu, err_l));
        }
    }
    if let Some((mu, err)) = best {
        println!("best: mu = {mu} (relErr_L = {err:.3e})");
    }
    if let Some(out) = &args.out {
        ensure_dir(out)?;
        write_text(&out.join("sweep.csv"), &format!("{}\n", lines.join("\n")))?;
    }
    Ok(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simulate_config_toml_round_trip() {
        let cfg = SimulateConfig::default();
        let text = to_toml(&cfg);
        let back: SimulateConfig = toml::from_str(&text).unwrap();
        assert_eq!(back.m, cfg.m);
        assert_eq!(back.solver.mu, cfg.solver.mu);
        assert_eq!(back.solver.lambda, cfg.solver.lambda);
    }

    #[test]
    fn stack_unstack_round_trip() {
        let frames = vec![
            GrayImage {
                width: 3,
                height: 2,
                pixels: vec![0, 50, 100, 150, 200, 250],
            },
            GrayImage {
                width: 3,
                height: 2,
                pixels: vec![5, 55, 105, 155, 205, 255],
            },
        ];
        let m = stack_frames(&frames).unwrap();
        assert_eq!(m.shape(), (6, 2));
        assert_eq!(m.get(1, 0), 50.0);
        let back = unstack_frames(&m, 3, 2, false);
        assert_eq!(back[0].pixels, frames[0].pixels);
        assert_eq!(back[1].pixels, frames[1].pixels);
    }

    #[test]
    fn stack_rejects_mismatched_frames() {
        let frames = vec![
            GrayImage {
                width: 3,
                height: 2,
                pixels: vec![0; 6],
            },
            GrayImage {
                width: 2,
                height: 2,
                pixels: vec![0; 4],
            },
        ];
        assert!(stack_frames(&frames).is_err());
        assert!(stack_frames(&[]).is_err());
    }
}
