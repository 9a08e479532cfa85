use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::realification::RealMatrix;

/// Relative tolerance used by [`zero_pattern`] when none is given.
pub const DEFAULT_PATTERN_TOL: f64 = 1e-10;

/// Support of an upper-triangular `R` factor: `true` marks a nonzero entry.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZeroPattern {
    n: usize,
    mask: Vec<bool>,
    tol: f64,
}

impl ZeroPattern {
    pub fn from_mask(n: usize, mask: Vec<bool>, tol: f64) -> Self {
        assert_eq!(mask.len(), n * n);
        ZeroPattern { n, mask, tol }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn tolerance(&self) -> f64 {
        self.tol
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.mask[i * self.n + j]
    }

    pub fn nonzeros(&self) -> usize {
        self.mask.iter().filter(|&&b| b).count()
    }

    /// The `size × size` sub-pattern at `(r0, c0)`.
    pub fn block(&self, r0: usize, c0: usize, size: usize) -> ZeroPattern {
        let mut mask = Vec::with_capacity(size * size);
        for i in 0..size {
            for j in 0..size {
                mask.push(self.get(r0 + i, c0 + j));
            }
        }
        ZeroPattern::from_mask(size, mask, self.tol)
    }

    /// True when every nonzero of `self` is also allowed by `support`.
    pub fn is_subset_of(&self, support: &ZeroPattern) -> bool {
        self.n == support.n && self.mask.iter().zip(&support.mask).all(|(&m, &s)| !m || s)
    }
}

impl fmt::Display for ZeroPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.n {
            let row: Vec<&str> = (0..self.n)
                .map(|j| if self.get(i, j) { "x" } else { "0" })
                .collect();
            writeln!(f, "{}", row.join(" "))?;
        }
        Ok(())
    }
}

/// Entries with `|r_ij| > tol`; `tol` defaults to `1e-10 · max|R|`.
pub fn zero_pattern(r: &RealMatrix, tol: Option<f64>) -> ZeroPattern {
    assert_eq!(r.rows(), r.cols(), "zero_pattern needs a square matrix");
    let tol = tol.unwrap_or(DEFAULT_PATTERN_TOL * r.max_abs());
    let mask = r.as_slice().iter().map(|v| v.abs() > tol).collect();
    ZeroPattern::from_mask(r.rows(), mask, tol)
}

/// Reference R-factor layouts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PatternSpec {
    /// `n` multiplexed single-symbol-decodable layers: `D` blocks of 2×2
    /// upper-triangular pairs on the diagonal, dense above.
    Proposed(usize),
    /// Perfect-code layout: the `D` block couples real parts with real parts
    /// and imaginary with imaginary.
    Perfect,
    /// EAST layout for two layers.
    East,
}

impl fmt::Display for PatternSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PatternSpec::Proposed(n) => write!(f, "PROPOSED({n})"),
            PatternSpec::Perfect => write!(f, "PERFECT"),
            PatternSpec::East => write!(f, "EAST"),
        }
    }
}

fn d_proposed(i: usize, j: usize) -> bool {
    i == j || (i.is_multiple_of(2) && j == i + 1)
}

fn d_perfect(i: usize, j: usize) -> bool {
    j >= i && (j - i).is_multiple_of(2)
}

fn d_east(i: usize, j: usize) -> bool {
    i / 4 == j / 4 && j >= i && (j - i).is_multiple_of(2)
}

impl PatternSpec {
    /// Allowed support for an `n × n` R factor.
    pub fn support(&self, n: usize) -> Result<ZeroPattern> {
        let layers = n / 8;
        let ok = n.is_multiple_of(8)
            && layers >= 1
            && match self {
                PatternSpec::Proposed(l) => *l == layers,
                PatternSpec::Perfect => layers <= 4,
                PatternSpec::East => layers == 2,
            };
        if !ok {
            return Err(Error::SizeMismatch(format!(
                "{self} layout does not apply to a {n}x{n} R matrix"
            )));
        }
        let d: fn(usize, usize) -> bool = match self {
            PatternSpec::Proposed(_) => d_proposed,
            PatternSpec::Perfect => d_perfect,
            PatternSpec::East => d_east,
        };
        let mut mask = vec![false; n * n];
        for i in 0..n {
            for j in i..n {
                let (bi, bj) = (i / 8, j / 8);
                mask[i * n + j] = bi < bj || d(i % 8, j % 8);
            }
        }
        Ok(ZeroPattern::from_mask(n, mask, 0.0))
    }
}

/// True iff the mask is contained in the support of `spec`.
pub fn pattern_matches(pattern: &ZeroPattern, spec: &PatternSpec) -> Result<bool> {
    Ok(pattern.is_subset_of(&spec.support(pattern.size())?))
}

/// First reference layout the pattern fits, trying PROPOSED, then EAST, then PERFECT.
pub fn classify(pattern: &ZeroPattern) -> Option<PatternSpec> {
    let n = pattern.size();
    [
        PatternSpec::Proposed(n / 8),
        PatternSpec::East,
        PatternSpec::Perfect,
    ]
    .into_iter()
    .find(|s| pattern_matches(pattern, s).unwrap_or(false))
}
