//! File formats: matrix CSV, the `BMAT` binary matrix format, and binary
//! (P5) PGM frames.
//!
//! `BMAT` layout: magic bytes `BMAT`, then rows and cols as 64-bit
//! little-endian unsigned integers, then row-major IEEE-754 binary64
//! entries, little-endian. Round-trips are bit-exact.
//!
//! CSV matrices are one row per line, `.` decimal, no header. Floats are
//! written with Rust's shortest round-trip formatting (falls back to 17
//! significant digits), so parsing recovers the exact value.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::numerics::Matrix;

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Shortest round-trip decimal form of an f64.
pub fn format_f64(v: f64) -> String {
    format!("{v}")
}

pub fn write_matrix_csv(path: &Path, m: &Matrix) -> Result<()> {
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = BufWriter::new(file);
    for i in 0..m.rows() {
        let row: Vec<String> = (0..m.cols()).map(|j| format_f64(m.get(i, j))).collect();
        writeln!(w, "{}", row.join(",")).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

pub fn read_matrix_csv(path: &Path) -> Result<Matrix> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| io_err(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let mut row = Vec::new();
        for tok in line.split(',') {
            let v: f64 = tok.trim().parse().map_err(|_| Error::Parse {
                path: path.display().to_string(),
                line: lineno + 1,
                reason: format!("bad number '{}'", tok.trim()),
            })?;
            row.push(v);
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Parse {
            path: path.display().to_string(),
            line: 0,
            reason: "empty matrix file".to_string(),
        });
    }
    Matrix::from_rows(rows)
}

const BMAT_MAGIC: &[u8; 4] = b"BMAT";

pub fn write_matrix_bmat(path: &Path, m: &Matrix) -> Result<()> {
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = BufWriter::new(file);
    w.write_all(BMAT_MAGIC).map_err(|e| io_err(path, e))?;
    w.write_all(&(m.rows() as u64).to_le_bytes())
        .map_err(|e| io_err(path, e))?;
    w.write_all(&(m.cols() as u64).to_le_bytes())
        .map_err(|e| io_err(path, e))?;
    for v in m.to_row_major() {
        w.write_all(&v.to_le_bytes()).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

pub fn read_matrix_bmat(path: &Path) -> Result<Matrix> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let mut r = BufReader::new(file);
    let parse = |reason: &str| Error::Parse {
        path: path.display().to_string(),
        line: 0,
        reason: reason.to_string(),
    };
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(|e| io_err(path, e))?;
    if &magic != BMAT_MAGIC {
        return Err(parse("bad magic, expected BMAT"));
    }
    let mut dims = [0u8; 8];
    r.read_exact(&mut dims).map_err(|e| io_err(path, e))?;
    let rows = u64::from_le_bytes(dims) as usize;
    r.read_exact(&mut dims).map_err(|e| io_err(path, e))?;
    let cols = u64::from_le_bytes(dims) as usize;
    if rows == 0 || cols == 0 || rows.saturating_mul(cols) > (1usize << 32) {
        return Err(parse("unreasonable dimensions"));
    }
    let mut data = Vec::with_capacity(rows * cols);
    let mut buf = [0u8; 8];
    for _ in 0..rows * cols {
        r.read_exact(&mut buf).map_err(|e| io_err(path, e))?;
        data.push(f64::from_le_bytes(buf));
    }
    Matrix::from_row_major(rows, cols, data)
}

/// Dispatches on extension: `.bmat` binary, anything else CSV.
pub fn read_matrix_auto(path: &Path) -> Result<Matrix> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("bmat") => read_matrix_bmat(path),
        _ => read_matrix_csv(path),
    }
}

/// 8-bit grayscale raster.
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    /// Row-major pixels.
    pub pixels: Vec<u8>,
}

/// Reads a binary (P5) PGM with maxval 255. Header comments are skipped.
pub fn read_pgm(path: &Path) -> Result<GrayImage> {
    let mut bytes = Vec::new();
    File::open(path)
        .map_err(|e| io_err(path, e))?
        .read_to_end(&mut bytes)
        .map_err(|e| io_err(path, e))?;
    let parse = |reason: String| Error::Parse {
        path: path.display().to_string(),
        line: 0,
        reason,
    };
    fn next_token(bytes: &[u8], pos: usize) -> Option<(usize, usize)> {
        let mut i = pos;
        loop {
            while i < bytes.len() && bytes[i].is_ascii_whitespace() {
                i += 1;
            }
            if i < bytes.len() && bytes[i] == b'#' {
                while i < bytes.len() && bytes[i] != b'\n' {
                    i += 1;
                }
                continue;
            }
            break;
        }
        let start = i;
        while i < bytes.len() && !bytes[i].is_ascii_whitespace() {
            i += 1;
        }
        if start == i {
            None
        } else {
            Some((start, i))
        }
    }
    let mut pos = 0usize;
    let mut tokens = Vec::new();
    for _ in 0..4 {
        let (s, e) =
            next_token(&bytes, pos).ok_or_else(|| parse("truncated PGM header".into()))?;
        tokens.push(std::str::from_utf8(&bytes[s..e]).unwrap_or("").to_string());
        pos = e;
    }
    if tokens[0] != "P5" {
        return Err(parse(format!("unsupported format '{}', need binary P5", tokens[0])));
    }
    let width: usize = tokens[1].parse().map_err(|_| parse("bad width".into()))?;
    let height: usize = tokens[2].parse().map_err(|_| parse("bad height".into()))?;
    let maxval: usize = tokens[3].parse().map_err(|_| parse("bad maxval".into()))?;
    if maxval != 255 {
        return Err(parse(format!("unsupported maxval {maxval}, need 255")));
    }
    // exactly one whitespace byte separates header and raster
    pos += 1;
    if bytes.len() < pos + width * height {
        return Err(parse("truncated PGM raster".into()));
    }
    Ok(GrayImage {
        width,
        height,
        pixels: bytes[pos..pos + width * height].to_vec(),
    })
}

pub fn write_pgm(path: &Path, img: &GrayImage) -> Result<()> {
    debug_assert_eq!(img.pixels.len(), img.width * img.height);
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = BufWriter::new(file);
    write!(w, "P5\n{} {}\n255\n", img.width, img.height).map_err(|e| io_err(path, e))?;
    w.write_all(&img.pixels).map_err(|e| io_err(path, e))?;
    w.flush().map_err(|e| io_err(path, e))
}
