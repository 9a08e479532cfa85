//! Plain-text weight-matrix files.
//!
//! ```text
//! # comments start with '#'
//! name rate2
//! scale 0.5
//!
//! # weight 1
//! 1+0i 0+0i 0+0i 0+0i
//! 0+0i 1+0i 0+0i 0+0i
//! 0+0i 0+0i 0+0i 0+0i
//! 0+0i 0+0i 0+0i 0+0i
//!
//! # weight 2
//! ...
//! ```
//!
//! Matrices are separated by blank lines; each row is whitespace-separated
//! `a+bi` tokens. `name` and `scale` are optional header lines (scale
//! defaults to 1). Values are written in shortest round-trip form, so a
//! save/load cycle is bit-exact.

use std::fs;
use std::path::Path;

use num_complex::Complex64;

use super::{CodeFamilyId, LinearDispersionCode};
use crate::error::{Error, Result};
use crate::realification::ComplexMatrix;

fn format_entry(v: Complex64) -> String {
    let im = if v.im.is_sign_negative() {
        format!("{}", v.im)
    } else {
        format!("+{}", v.im)
    };
    format!("{}{}i", v.re, im)
}

/// Serializes a code to the weight-file text form.
pub fn weights_to_text(code: &LinearDispersionCode) -> String {
    let mut out = String::new();
    out.push_str("# stbc-lab weight matrices\n");
    out.push_str(&format!("name {}\n", code.family().label()));
    out.push_str(&format!("scale {}\n", code.scale()));
    for (i, w) in code.weights().iter().enumerate() {
        out.push_str(&format!("\n# weight {}\n", i + 1));
        for r in 0..w.rows() {
            let row: Vec<String> = (0..w.cols()).map(|c| format_entry(w[(r, c)])).collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
    }
    out
}

pub fn save_weights(code: &LinearDispersionCode, path: &Path) -> Result<()> {
    fs::write(path, weights_to_text(code)).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_weights(path: &Path) -> Result<LinearDispersionCode> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let fallback = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "external".into());
    parse_weights(&text, &fallback)
}

fn parse_real(tok: &str, line: usize) -> Result<f64> {
    let v: f64 = tok.parse().map_err(|_| Error::Parse {
        line,
        msg: format!("bad number '{tok}'"),
    })?;
    if !v.is_finite() {
        return Err(Error::Parse {
            line,
            msg: format!("non-finite value '{tok}'"),
        });
    }
    Ok(v)
}

/// Parses `a+bi`, `a-bi`, `a` or `bi`.
fn parse_complex(tok: &str, line: usize) -> Result<Complex64> {
    let Some(body) = tok.strip_suffix('i') else {
        return Ok(Complex64::new(parse_real(tok, line)?, 0.0));
    };
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&p| matches!(bytes[p], b'+' | b'-') && !matches!(bytes[p - 1], b'e' | b'E'));
    match split {
        Some(p) => {
            let im_str = &body[p..];
            let im = match im_str {
                "+" => 1.0,
                "-" => -1.0,
                s => parse_real(s, line)?,
            };
            Ok(Complex64::new(parse_real(&body[..p], line)?, im))
        }
        None => {
            let im = match body {
                "" | "+" => 1.0,
                "-" => -1.0,
                s => parse_real(s, line)?,
            };
            Ok(Complex64::new(0.0, im))
        }
    }
}

/// Parses weight-file text. `fallback_name` is used when the file has no `name` line.
pub fn parse_weights(text: &str, fallback_name: &str) -> Result<LinearDispersionCode> {
    let mut name = fallback_name.to_string();
    let mut scale = 1.0;
    let mut blocks: Vec<Vec<(usize, Vec<Complex64>)>> = Vec::new();
    let mut current: Vec<(usize, Vec<Complex64>)> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            if !current.is_empty() {
                blocks.push(std::mem::take(&mut current));
            }
            continue;
        }
        if line.starts_with('#') {
            continue;
        }
        let mut toks = line.split_whitespace();
        let first = toks.next().unwrap_or_default();
        match first {
            "name" => {
                name = toks.collect::<Vec<_>>().join(" ");
                continue;
            }
            "scale" => {
                let v = toks.next().ok_or_else(|| Error::Parse {
                    line: line_no,
                    msg: "missing scale value".into(),
                })?;
                scale = parse_real(v, line_no)?;
                continue;
            }
            _ => {}
        }
        let row = line
            .split_whitespace()
            .map(|t| parse_complex(t, line_no))
            .collect::<Result<Vec<_>>>()?;
        current.push((line_no, row));
    }
    if !current.is_empty() {
        blocks.push(current);
    }
    if blocks.is_empty() {
        return Err(Error::Parse {
            line: 0,
            msg: "no weight matrices found".into(),
        });
    }

    let mut weights = Vec::with_capacity(blocks.len());
    for (i, block) in blocks.into_iter().enumerate() {
        let cols = block[0].1.len();
        if let Some((line, row)) = block.iter().find(|(_, r)| r.len() != cols) {
            return Err(Error::Parse {
                line: *line,
                msg: format!("ragged row: {} entries, expected {cols}", row.len()),
            });
        }
        if block.len() != 4 || cols != 4 {
            return Err(Error::BadWeightShape {
                index: i + 1,
                rows: block.len(),
                cols,
            });
        }
        let rows: Vec<Vec<Complex64>> = block.into_iter().map(|(_, r)| r).collect();
        weights.push(ComplexMatrix::from_rows(&rows));
    }
    LinearDispersionCode::new(CodeFamilyId::External(name), weights, scale)
}
