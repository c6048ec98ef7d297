//! Drives the installed binary through every subcommand on desk-size
//! inputs and checks outputs, exit codes and reproducibility.

use std::path::Path;
use std::process::Command;

use badmm::datagen::moving_square_frames;
use badmm::engine::Trace;
use badmm::io::{self, GrayImage};
use badmm::numerics::Matrix;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_badmm"))
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap()
}

#[test]
fn simulate_runs_and_reruns_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let out1 = dir.path().join("run1");
    let out2 = dir.path().join("run2");
    for out in [&out1, &out2] {
        let status = bin()
            .args([
                "simulate",
                "--m",
                "30",
                "--rank",
                "2",
                "--sparsity",
                "0.05",
                "--sigma",
                "0",
                "--seed",
                "11",
                "--lambda",
                "0.25",
                "--alpha0",
                "1e-4",
                "--alpha-max",
                "100",
                "--relchg-threshold",
                "1e-10",
                "--max-iter",
                "2000",
                "--out",
            ])
            .arg(out)
            .status()
            .unwrap();
        assert!(status.success());
    }
    for name in ["trace.csv", "trace.jsonl", "config.toml", "constants.toml"] {
        assert_eq!(
            read(&out1.join(name)),
            read(&out2.join(name)),
            "{name} differs between identical runs"
        );
    }
    for name in ["l.bmat", "s.bmat", "t.bmat"] {
        assert_eq!(
            std::fs::read(out1.join(name)).unwrap(),
            std::fs::read(out2.join(name)).unwrap()
        );
    }
    let trace = Trace::from_csv(&read(&out1.join("trace.csv"))).unwrap();
    assert!(!trace.is_empty());
    assert!(trace.records.last().unwrap().relchg < 1e-8);
    assert_eq!(trace.block_names, vec!["L", "S", "T"]);
}

#[test]
fn simulate_zero_cap_writes_empty_trace() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("zero");
    let status = bin()
        .args(["simulate", "--m", "20", "--max-iter", "0", "--out"])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let trace = Trace::from_csv(&read(&out.join("trace.csv"))).unwrap();
    assert!(trace.is_empty());
}

#[test]
fn diagnose_passes_valid_run_and_flags_fabricated_violation() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    // fixed penalty above the descent threshold, uncoupled weights
    let status = bin()
        .args([
            "simulate",
            "--m",
            "25",
            "--rank",
            "2",
            "--sigma",
            "0",
            "--mu",
            "1",
            "--gamma1",
            "1",
            "--gamma2",
            "0.5",
            "--alpha0",
            "20",
            "--alpha-growth",
            "1.0",
            "--relchg-threshold",
            "0",
            "--max-iter",
            "120",
            "--out",
        ])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let status = bin()
        .args(["diagnose", "--trace"])
        .arg(out.join("trace.csv"))
        .arg("--spec")
        .arg(out.join("constants.toml"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));

    // corrupt the merit column of a middle record: descent must fail
    let text = read(&out.join("trace.csv"));
    let mut lines: Vec<String> = text.lines().map(|l| l.to_string()).collect();
    let mid = lines.len() / 2;
    let mut cells: Vec<String> = lines[mid].split(',').map(|c| c.to_string()).collect();
    cells[4] = "999999".to_string(); // lhat
    lines[mid] = cells.join(",");
    let bad_path = dir.path().join("bad_trace.csv");
    std::fs::write(&bad_path, format!("{}\n", lines.join("\n"))).unwrap();
    let output = bin()
        .args(["diagnose", "--trace"])
        .arg(&bad_path)
        .arg("--spec")
        .arg(out.join("constants.toml"))
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1));
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("merit descent"), "{stdout}");

    // empty trace: nothing to check, exit 0
    let empty_path = dir.path().join("empty.csv");
    let header = text.lines().next().unwrap();
    std::fs::write(&empty_path, format!("{header}\n")).unwrap();
    let status = bin()
        .args(["diagnose", "--trace"])
        .arg(&empty_path)
        .arg("--spec")
        .arg(out.join("constants.toml"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
}

#[test]
fn solve_linear_identity_and_singular_cases() {
    let dir = tempfile::tempdir().unwrap();
    let id = Matrix::identity(4);
    let a1 = dir.path().join("a1.csv");
    let a2 = dir.path().join("a2.csv");
    io::write_matrix_csv(&a1, &id).unwrap();
    io::write_matrix_csv(&a2, &id).unwrap();
    let out = dir.path().join("sol");
    let output = bin()
        .args(["solve-linear", "--init", "zero", "--block"])
        .arg(&a1)
        .arg("--block")
        .arg(&a2)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(output.status.success());
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("||sum A_i x_i|| = 0"), "{stdout}");
    assert!(out.join("x1.bmat").exists());

    // singular last block is rejected before iterating
    let sing = dir.path().join("sing.csv");
    io::write_matrix_csv(&sing, &Matrix::zeros(4, 4)).unwrap();
    let status = bin()
        .args(["solve-linear", "--block"])
        .arg(&a1)
        .arg("--block")
        .arg(&sing)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn bgsub_on_synthetic_frames_and_empty_dir() {
    let dir = tempfile::tempdir().unwrap();
    let frames_dir = dir.path().join("frames");
    std::fs::create_dir_all(&frames_dir).unwrap();
    let seq = moving_square_frames(16, 16, 8, 4, true);
    for (k, pixels) in seq.frames.iter().enumerate() {
        io::write_pgm(
            &frames_dir.join(format!("f{k:03}.pgm")),
            &GrayImage {
                width: 16,
                height: 16,
                pixels: pixels.clone(),
            },
        )
        .unwrap();
    }
    let out = dir.path().join("bg");
    let status = bin()
        .args([
            "bgsub",
            "--alpha0",
            "1e-4",
            "--alpha-max",
            "100",
            "--relchg-threshold",
            "1e-9",
            "--max-iter",
            "3000",
            "--frames",
        ])
        .arg(&frames_dir)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    assert!(out.join("background/frame_0000.pgm").exists());
    assert!(out.join("foreground/frame_0007.pgm").exists());
    assert!(out.join("trace.csv").exists());
    let bg = io::read_pgm(&out.join("background/frame_0000.pgm")).unwrap();
    assert_eq!(bg.width * bg.height, 256);

    // empty directory is a usage error
    let empty = dir.path().join("none");
    std::fs::create_dir_all(&empty).unwrap();
    let status = bin()
        .args(["bgsub", "--frames"])
        .arg(&empty)
        .arg("--out")
        .arg(dir.path().join("x"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn sweep_mu_reports_grid() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep");
    let output = bin()
        .args([
            "sweep-mu",
            "--m",
            "20",
            "--rank",
            "2",
            "--sigma",
            "0.2",
            "--lambda",
            "0.3",
            "--alpha0",
            "1e-4",
            "--alpha-max",
            "100",
            "--max-iter",
            "600",
            "--mus",
            "1,25",
            "--out",
        ])
        .arg(&out)
        .output()
        .unwrap();
    assert!(output.status.success());
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("best: mu ="), "{stdout}");
    let sweep = read(&out.join("sweep.csv"));
    assert!(sweep.lines().count() == 3, "{sweep}");
}

#[test]
fn usage_errors_exit_2() {
    let status = bin().args(["simulate"]).status().unwrap(); // missing --out
    assert_eq!(status.code(), Some(2));
    let status = bin().args(["no-such-command"]).status().unwrap();
    assert_eq!(status.code(), Some(2));
}
