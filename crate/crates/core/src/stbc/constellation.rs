use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::realification::RealMatrix;

/// `(1/2)·atan(2)` rad, the rotation that maximizes the CIOD coding gain.
pub const DEFAULT_THETA: f64 = 0.553_574_358_897_045_3;

/// Finite complex alphabet plus a rotation applied on transmission.
///
/// `points` are the unrotated, unit-mean-energy points; the transmitted
/// symbol for point `x` is `e^{jθ}·x`. For square QAM the points are stored
/// in index order `a·L + b` with `x = pam[a] + j·pam[b]`, `L = √M`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constellation {
    points: Vec<Complex64>,
    theta: f64,
    pam: Option<Vec<f64>>,
}

impl Constellation {
    /// Arbitrary alphabet. Only brute-force decoding supports these.
    pub fn from_points(points: Vec<Complex64>, theta: f64) -> Self {
        Constellation {
            points,
            theta,
            pam: None,
        }
    }

    pub fn m(&self) -> usize {
        self.points.len()
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn rotated_points(&self) -> Vec<Complex64> {
        self.points.iter().map(|&p| self.rotate(p)).collect()
    }

    pub fn rotate(&self, x: Complex64) -> Complex64 {
        x * Complex64::from_polar(1.0, self.theta)
    }

    /// Per-real-dimension PAM alphabet (sorted ascending), if square QAM.
    pub fn pam(&self) -> Option<&[f64]> {
        self.pam.as_deref()
    }

    /// `√M` for square QAM.
    pub fn side(&self) -> Option<usize> {
        self.pam.as_ref().map(|p| p.len())
    }

    /// Point index from PAM level indices (square QAM only).
    pub fn index_of_levels(&self, a: usize, b: usize) -> usize {
        let side = self.side().expect("square QAM");
        a * side + b
    }

    /// Mean of `|p|²` over the alphabet.
    pub fn mean_energy(&self) -> f64 {
        self.points.iter().map(|p| p.norm_sqr()).sum::<f64>() / self.points.len() as f64
    }

    /// The 2×2 rotation `J` acting on `(x_I, x_Q)`.
    pub fn rotation(&self) -> RealMatrix {
        rotation_matrix(self.theta)
    }
}

pub fn rotation_matrix(theta: f64) -> RealMatrix {
    let (s, c) = theta.sin_cos();
    RealMatrix::from_rows(&[vec![c, -s], vec![s, c]])
}

/// Unit-energy square `M`-QAM, rotated by `theta` on transmission.
pub fn rotated_qam(m: usize, theta: f64) -> Result<Constellation> {
    let side = (m as f64).sqrt().round() as usize;
    if m < 4 || side * side != m || !side.is_multiple_of(2) {
        return Err(Error::NonSquareConstellation(m));
    }
    // levels ±1, ±3, … scaled to unit mean energy: E|x|² = 2·d²·(M−1)/3
    let d = (3.0 / (2.0 * (m as f64 - 1.0))).sqrt();
    let pam: Vec<f64> = (0..side)
        .map(|a| (2.0 * a as f64 - (side as f64 - 1.0)) * d)
        .collect();
    let mut points = Vec::with_capacity(m);
    for &re in &pam {
        for &im in &pam {
            points.push(Complex64::new(re, im));
        }
    }
    Ok(Constellation {
        points,
        theta,
        pam: Some(pam),
    })
}
