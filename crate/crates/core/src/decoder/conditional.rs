use super::pattern::{pattern_matches, zero_pattern, PatternSpec};
use super::sphere::{check_gain, sphere_decode};
use super::{check_triangular, indices_from_levels, metric, slice_pam, DecodeResult};
use crate::error::{Error, Result};
use crate::realification::RealMatrix;

/// Largest number of conditioned (outer) candidates enumerated per decode.
pub const CONDITIONAL_OUTER_LIMIT: f64 = (1u64 << 24) as f64;

/// Leaf-candidate bound `4·√M·M^{4(n_min−1)}`.
pub fn conditional_leaf_bound(m: usize, n_min: usize) -> f64 {
    4.0 * (m as f64).sqrt() * (m as f64).powi(4 * (n_min as i32 - 1))
}

/// Relative slack for deciding when an outer candidate needs the exact metric.
const COMPARE_SLACK: f64 = 1e-10;

/// Best `(I, Q)` levels of one decoupled 2×2 block `[[a, c], [0, d]]` with
/// right-hand side `(z0, z1)`. Enumerates Q, slices I.
fn solve_pair(a: f64, c: f64, d: f64, z0: f64, z1: f64, pam: &[f64]) -> (usize, usize, f64) {
    let mut best = (0, 0, f64::INFINITY);
    for (q, &xq) in pam.iter().enumerate() {
        let e1 = z1 - d * xq;
        let t = z0 - c * xq;
        let (i, xi) = slice_pam(t / a, pam);
        let e0 = t - a * xi;
        let m = e0 * e0 + e1 * e1;
        if m < best.2 || (m == best.2 && (i, q) < (best.0, best.1)) {
            best = (i, q, m);
        }
    }
    best
}

/// Conditional ML decoding for `n_min` multiplexed single-symbol-decodable layers.
///
/// Every value of the last `4(n_min−1)` complex symbols is enumerated. For
/// each, the first four symbols decouple into independent 2×2 triangular
/// problems, each solved by enumerating the Q coordinate over `√M` levels and
/// slicing the I coordinate. If `R` does not have the expected zero pattern
/// the call logs a warning and falls back to [`sphere_decode`].
pub fn conditional_decode(
    y: &[f64],
    r: &RealMatrix,
    gain: f64,
    pam: &[f64],
    n_min: usize,
) -> Result<DecodeResult> {
    check_triangular(y, r)?;
    check_gain(gain)?;
    if pam.is_empty() {
        return Err(Error::UnsupportedConstellation);
    }
    let n = r.cols();
    if n_min == 0 || n != 8 * n_min {
        return Err(Error::SizeMismatch(format!(
            "R is {n}x{n}, expected {0}x{0} for n_min = {n_min}",
            8 * n_min
        )));
    }
    let pattern = zero_pattern(r, None);
    if !pattern_matches(&pattern, &PatternSpec::Proposed(n_min))? {
        log::warn!("R does not have the layered single-symbol pattern; using the sphere decoder");
        let mut res = sphere_decode(y, r, gain, pam)?;
        res.fell_back = true;
        return Ok(res);
    }

    let l = pam.len();
    let outer_dims = n - 8;
    let outer_count = (l as f64).powi(outer_dims as i32);
    if outer_count > CONDITIONAL_OUTER_LIMIT {
        return Err(Error::SearchSpaceTooLarge {
            size: outer_count,
            limit: CONDITIONAL_OUTER_LIMIT,
        });
    }
    let rg: Vec<f64> = r.as_slice().iter().map(|v| gain * v).collect();
    let at = |i: usize, j: usize| rg[i * n + j];

    let mut levels = vec![0usize; n];
    let mut x: Vec<f64> = vec![pam[0]; n];
    let mut best_levels = levels.clone();
    let mut best_x = x.clone();
    let mut best = f64::INFINITY;
    let mut visited = 0u64;
    let mut leaves = 0u64;
    let mut z = [0.0; 8];

    loop {
        visited += 1;
        // residual of the outer rows, then the right-hand sides of the first 8 rows
        let mut outer = 0.0;
        for i in 8..n {
            let mut e = y[i];
            for j in i..n {
                e -= at(i, j) * x[j];
            }
            outer += e * e;
        }
        for (i, zi) in z.iter_mut().enumerate() {
            let mut t = y[i];
            for j in 8..n {
                t -= at(i, j) * x[j];
            }
            *zi = t;
        }
        let mut approx = outer;
        for b in 0..4 {
            let (p, q) = (2 * b, 2 * b + 1);
            let (li, lq, m) = solve_pair(at(p, p), at(p, q), at(q, q), z[p], z[q], pam);
            leaves += l as u64;
            levels[p] = li;
            levels[q] = lq;
            x[p] = pam[li];
            x[q] = pam[lq];
            approx += m;
        }
        if approx <= best + COMPARE_SLACK * (1.0 + best) {
            let d = metric(y, r, gain, &x);
            if d < best || (d == best && levels < best_levels) {
                best = d;
                best_levels.copy_from_slice(&levels);
                best_x.copy_from_slice(&x);
            }
        }
        // odometer over the outer coordinates, last fastest
        let mut pos = n;
        loop {
            if pos == 8 {
                return Ok(DecodeResult {
                    indices: indices_from_levels(&best_levels, l),
                    x_tilde: best_x,
                    metric: best,
                    visited: visited + leaves,
                    leaves,
                    fell_back: false,
                });
            }
            pos -= 1;
            levels[pos] += 1;
            if levels[pos] < l {
                x[pos] = pam[levels[pos]];
                break;
            }
            levels[pos] = 0;
            x[pos] = pam[0];
        }
    }
}
