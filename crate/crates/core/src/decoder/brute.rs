use super::{metric, DecodeResult};
use crate::error::{Error, Result};
use crate::realification::RealMatrix;
use crate::stbc::Constellation;

/// Largest `M^k` brute force will enumerate.
pub const BRUTE_FORCE_LIMIT: f64 = (1u64 << 24) as f64;

/// Exhaustive ML over all `M^k` symbol vectors in lexicographic index order
/// (last symbol fastest). The first candidate reaching the minimum wins.
/// Works for any alphabet and any `R` with `2k` columns.
pub fn brute_force_ml(
    y: &[f64],
    r: &RealMatrix,
    gain: f64,
    constellation: &Constellation,
    k: usize,
) -> Result<DecodeResult> {
    if r.cols() != 2 * k {
        return Err(Error::SizeMismatch(format!(
            "R has {} columns, expected {}",
            r.cols(),
            2 * k
        )));
    }
    if y.len() != r.rows() {
        return Err(Error::LengthMismatch {
            expected: r.rows(),
            got: y.len(),
        });
    }
    let m = constellation.m();
    let size = (m as f64).powi(k as i32);
    if size > BRUTE_FORCE_LIMIT {
        return Err(Error::SearchSpaceTooLarge {
            size,
            limit: BRUTE_FORCE_LIMIT,
        });
    }
    let points = constellation.points();
    let mut idx = vec![0usize; k];
    let mut x = vec![0.0; 2 * k];
    for (i, slot) in x.chunks_mut(2).enumerate() {
        slot[0] = points[idx[i]].re;
        slot[1] = points[idx[i]].im;
    }
    let mut best_idx = idx.clone();
    let mut best_x = x.clone();
    let mut best = f64::INFINITY;
    let mut count = 0u64;
    loop {
        count += 1;
        let d = metric(y, r, gain, &x);
        if d < best {
            best = d;
            best_idx.copy_from_slice(&idx);
            best_x.copy_from_slice(&x);
        }
        // odometer step
        let mut pos = k;
        loop {
            if pos == 0 {
                return Ok(DecodeResult {
                    indices: best_idx,
                    x_tilde: best_x,
                    metric: best,
                    visited: count,
                    leaves: count,
                    fell_back: false,
                });
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < m {
                break;
            }
            idx[pos] = 0;
        }
        for i in pos..k {
            x[2 * i] = points[idx[i]].re;
            x[2 * i + 1] = points[idx[i]].im;
        }
    }
}
