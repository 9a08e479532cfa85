use super::{check_triangular, indices_from_levels, metric, slice_pam, DecodeResult};
use crate::error::{Error, Result};
use crate::realification::RealMatrix;

/// Partial metrics within this relative slack of the incumbent are still
/// expanded, so rounding in the incremental sums cannot prune a tie.
const PRUNE_SLACK: f64 = 1e-10;

pub(super) fn check_gain(gain: f64) -> Result<()> {
    if gain.is_finite() && gain > 0.0 {
        Ok(())
    } else {
        Err(Error::SizeMismatch(format!(
            "gain must be positive, got {gain}"
        )))
    }
}

/// Successive slicing from the last coordinate (zero-forcing with decision
/// feedback). Returns PAM level indices.
pub fn babai_point(y: &[f64], r: &RealMatrix, gain: f64, pam: &[f64]) -> Vec<usize> {
    let n = r.cols();
    let mut levels = vec![0usize; n];
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut t = y[i];
        for j in i + 1..n {
            t -= gain * r[(i, j)] * x[j];
        }
        let (v, val) = slice_pam(t / (gain * r[(i, i)]), pam);
        levels[i] = v;
        x[i] = val;
    }
    levels
}

struct Search<'a> {
    y: &'a [f64],
    r: &'a RealMatrix,
    gain: f64,
    rg: Vec<f64>,
    n: usize,
    pam: &'a [f64],
    levels: Vec<usize>,
    x: Vec<f64>,
    best_levels: Vec<usize>,
    best_x: Vec<f64>,
    best: f64,
    visited: u64,
    leaves: u64,
}

impl Search<'_> {
    fn limit(&self) -> f64 {
        self.best + PRUNE_SLACK * (1.0 + self.best)
    }

    fn leaf(&mut self) {
        self.leaves += 1;
        let d = metric(self.y, self.r, self.gain, &self.x);
        if d < self.best || (d == self.best && self.levels < self.best_levels) {
            self.best = d;
            self.best_levels.copy_from_slice(&self.levels);
            self.best_x.copy_from_slice(&self.x);
        }
    }

    fn descend(&mut self, i: usize, partial: f64) {
        let n = self.n;
        let row = &self.rg[i * n..(i + 1) * n];
        let mut t = self.y[i];
        for j in i + 1..n {
            t -= row[j] * self.x[j];
        }
        let diag = row[i];
        let center = t / diag;
        let pam = self.pam;
        let (first, _) = slice_pam(center, pam);
        // zig-zag outward from the nearest level; ties go to the lower level
        let (mut lo, mut hi) = (first as isize - 1, first + 1);
        let mut next = Some(first);
        while let Some(v) = next {
            let e = t - diag * pam[v];
            let p = partial + e * e;
            self.visited += 1;
            if p > self.limit() {
                break;
            }
            self.levels[i] = v;
            self.x[i] = pam[v];
            if i == 0 {
                self.leaf();
            } else {
                self.descend(i - 1, p);
            }
            next = match (lo >= 0, hi < pam.len()) {
                (true, true) => {
                    let l = lo as usize;
                    if center - pam[l] <= pam[hi] - center {
                        lo -= 1;
                        Some(l)
                    } else {
                        hi += 1;
                        Some(hi - 1)
                    }
                }
                (true, false) => {
                    lo -= 1;
                    Some((lo + 1) as usize)
                }
                (false, true) => {
                    hi += 1;
                    Some(hi - 1)
                }
                (false, false) => None,
            };
        }
    }
}

/// Depth-first Schnorr-Euchner search over per-coordinate PAM levels.
///
/// The radius starts at the metric of the Babai point and shrinks at every
/// improving leaf. Requires square upper-triangular `R` with nonzero diagonal.
pub fn sphere_decode(y: &[f64], r: &RealMatrix, gain: f64, pam: &[f64]) -> Result<DecodeResult> {
    check_triangular(y, r)?;
    check_gain(gain)?;
    if pam.is_empty() {
        return Err(Error::UnsupportedConstellation);
    }
    let n = r.cols();
    let babai = babai_point(y, r, gain, pam);
    let babai_x: Vec<f64> = babai.iter().map(|&v| pam[v]).collect();
    let mut s = Search {
        y,
        r,
        gain,
        rg: r.as_slice().iter().map(|v| gain * v).collect(),
        n,
        pam,
        levels: vec![0; n],
        x: vec![0.0; n],
        best: metric(y, r, gain, &babai_x),
        best_levels: babai,
        best_x: babai_x,
        visited: 0,
        leaves: 0,
    };
    if n > 0 {
        s.descend(n - 1, 0.0);
    }
    Ok(DecodeResult {
        indices: indices_from_levels(&s.best_levels, pam.len()),
        x_tilde: s.best_x,
        metric: s.best,
        visited: s.visited,
        leaves: s.leaves,
        fell_back: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decoder::brute_force_ml;
    use crate::stbc::rotated_qam;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_upper(n: usize, rng: &mut ChaCha8Rng) -> RealMatrix {
        let mut r = RealMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                r[(i, j)] = rng.random_range(-1.0..1.0);
            }
            r[(i, i)] = rng.random_range(0.2..1.5);
        }
        r
    }

    #[test]
    fn agrees_with_brute_force_on_random_lattices() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let qam = rotated_qam(4, 0.0).unwrap();
        let pam = qam.pam().unwrap();
        for _ in 0..100 {
            let r = random_upper(8, &mut rng);
            let y: Vec<f64> = (0..8).map(|_| rng.random_range(-2.0..2.0)).collect();
            let a = sphere_decode(&y, &r, 1.3, pam).unwrap();
            let b = brute_force_ml(&y, &r, 1.3, &qam, 4).unwrap();
            assert_eq!(a.metric, b.metric);
            assert_eq!(a.indices, b.indices);
            assert!(a.leaves <= b.leaves);
        }
    }

    #[test]
    fn noiseless_visits_one_leaf() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let qam = rotated_qam(16, 0.0).unwrap();
        let pam = qam.pam().unwrap();
        let r = random_upper(8, &mut rng);
        let levels: Vec<usize> = (0..8).map(|_| rng.random_range(0..4)).collect();
        let x: Vec<f64> = levels.iter().map(|&v| pam[v]).collect();
        let y: Vec<f64> = r.mul_vec(&x).iter().map(|v| 3.0 * v).collect();
        let res = sphere_decode(&y, &r, 3.0, pam).unwrap();
        assert_eq!(res.x_tilde, x);
        assert_eq!(res.leaves, 1);
        assert_eq!(babai_point(&y, &r, 3.0, pam), levels);
    }

    #[test]
    fn singular_r_rejected() {
        let mut r = RealMatrix::identity(4);
        r[(2, 2)] = 0.0;
        let pam = [-1.0, 1.0];
        assert!(matches!(
            sphere_decode(&[0.0; 4], &r, 1.0, &pam),
            Err(Error::RankDeficient { .. })
        ));
    }

    #[test]
    fn lexicographic_tie_break() {
        // symmetric problem: y = 0, identity R, binary levels; every point ties
        let pam = [-1.0, 1.0];
        let res = sphere_decode(&[0.0; 4], &RealMatrix::identity(4), 1.0, &pam).unwrap();
        assert_eq!(res.x_tilde, vec![-1.0; 4]);
        assert_eq!(res.indices, vec![0, 0]);
    }
}
