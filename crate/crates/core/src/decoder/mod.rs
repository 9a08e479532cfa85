//! Exact ML decoding of `y′ = g·R·x̃ + n′` and R-factor structure analysis.
//!
//! All decoders minimize `‖y′ − g·R·x̃‖²` over `x̃` drawn from the
//! (unrotated) constellation, with `g = √(SNR/4)`. Equal-metric candidates
//! are resolved toward the lexicographically smallest symbol-index vector,
//! and the reported metric is always recomputed by [`metric`], so different
//! decoders agreeing on a decision report bit-identical metrics.

mod brute;
mod conditional;
mod pattern;
mod sphere;

pub use brute::{brute_force_ml, BRUTE_FORCE_LIMIT};
pub use conditional::{conditional_decode, conditional_leaf_bound, CONDITIONAL_OUTER_LIMIT};
pub use pattern::{
    classify, pattern_matches, zero_pattern, PatternSpec, ZeroPattern, DEFAULT_PATTERN_TOL,
};
pub use sphere::{babai_point, sphere_decode};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::realification::{RealMatrix, RealVector};
use crate::stbc::Constellation;

/// Outcome of one ML decode.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodeResult {
    /// Constellation point index of each complex symbol.
    pub indices: Vec<usize>,
    /// Decoded real coordinates `(x_1I, x_1Q, x_2I, …)`.
    pub x_tilde: RealVector,
    /// `‖y′ − g·R·x̃‖²` via [`metric`].
    pub metric: f64,
    /// Search-tree nodes whose partial metric was evaluated.
    pub visited: u64,
    /// Full-length candidates evaluated.
    pub leaves: u64,
    /// Set when the conditional decoder had to defer to the sphere decoder.
    pub fell_back: bool,
}

/// Selectable decoding algorithm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecoderKind {
    BruteForce,
    Sphere,
    Conditional,
}

impl std::str::FromStr for DecoderKind {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "brute" | "brute_force" | "brute-force" => Ok(DecoderKind::BruteForce),
            "sphere" => Ok(DecoderKind::Sphere),
            "conditional" => Ok(DecoderKind::Conditional),
            other => Err(format!(
                "unknown decoder '{other}' (brute, sphere, conditional)"
            )),
        }
    }
}

impl std::fmt::Display for DecoderKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            DecoderKind::BruteForce => "brute",
            DecoderKind::Sphere => "sphere",
            DecoderKind::Conditional => "conditional",
        })
    }
}

/// Runs the chosen decoder. `n_min` is only used by the conditional decoder.
pub fn decode(
    kind: DecoderKind,
    y: &[f64],
    r: &RealMatrix,
    gain: f64,
    constellation: &Constellation,
    n_min: usize,
) -> Result<DecodeResult> {
    let k = r.cols() / 2;
    let pam = || constellation.pam().ok_or(Error::UnsupportedConstellation);
    match kind {
        DecoderKind::BruteForce => brute_force_ml(y, r, gain, constellation, k),
        DecoderKind::Sphere => sphere_decode(y, r, gain, pam()?),
        DecoderKind::Conditional => conditional_decode(y, r, gain, pam()?, n_min),
    }
}

/// `‖y − g·R·x‖²`, summed row by row and column by column in index order.
pub fn metric(y: &[f64], r: &RealMatrix, gain: f64, x: &[f64]) -> f64 {
    debug_assert_eq!(r.cols(), x.len());
    let mut total = 0.0;
    for (i, &yi) in y.iter().enumerate().take(r.rows()) {
        let mut acc = 0.0;
        for (rij, xj) in r.row(i).iter().zip(x) {
            acc += rij * xj;
        }
        let e = yi - gain * acc;
        total += e * e;
    }
    total
}

/// Nearest point of a sorted alphabet; exact midpoints go to the lower point.
/// Returns `(index, value)`.
pub fn slice_pam(value: f64, alphabet: &[f64]) -> (usize, f64) {
    let i = alphabet.partition_point(|&a| a < value);
    let idx = if i == 0 {
        0
    } else if i == alphabet.len() {
        alphabet.len() - 1
    } else if value - alphabet[i - 1] <= alphabet[i] - value {
        i - 1
    } else {
        i
    };
    (idx, alphabet[idx])
}

/// Checks `y` and `R` sizes and that `R` is square with a nonzero diagonal.
fn check_triangular(y: &[f64], r: &RealMatrix) -> Result<()> {
    let n = r.cols();
    if r.rows() != n || !n.is_multiple_of(2) {
        return Err(Error::SizeMismatch(format!(
            "R must be square with even size, got {}x{}",
            r.rows(),
            r.cols()
        )));
    }
    if y.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: y.len(),
        });
    }
    let min_pivot = (0..n).fold(f64::INFINITY, |m, i| m.min(r[(i, i)].abs()));
    if n > 0 && (min_pivot.is_nan() || min_pivot <= 0.0) {
        return Err(Error::RankDeficient { min_pivot });
    }
    Ok(())
}

/// Symbol indices `a·L + b` from per-coordinate PAM level indices.
fn indices_from_levels(levels: &[usize], side: usize) -> Vec<usize> {
    levels.chunks(2).map(|p| p[0] * side + p[1]).collect()
}
