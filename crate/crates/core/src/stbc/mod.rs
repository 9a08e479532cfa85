//! Linear dispersion codes for four transmit antennas.
//!
//! A codeword is `S = Σ_i s_iI·A_{2i−1} + s_iQ·A_{2i}` with the weight
//! matrices `A` multiplied by a common normalization scale. The proposed
//! family is built from the CIOD weights in four layers:
//!
//! | symbols | weights                          |
//! |---------|----------------------------------|
//! | 1–4     | `A_ciod`                         |
//! | 5–8     | `e^{jπ/4} · A_ciod · F4`         |
//! | 9–12    | `j · A_ciod`                     |
//! | 13–16   | `j · e^{jπ/4} · A_ciod · F4`     |
//!
//! The rate-`r` code keeps the first `4r` symbols (puncturing the rest) and
//! rescales so that `𝔼‖S‖² = 16` for unit-energy symbols.

mod constellation;
mod weights;

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use constellation::{rotated_qam, rotation_matrix, Constellation, DEFAULT_THETA};
pub use weights::{load_weights, parse_weights, save_weights, weights_to_text};

use crate::clifford::{generators4, monomial, ExactMatrix4};
use crate::error::{Error, Result};
use crate::realification::{real_rank, tilde, vec, ComplexMatrix, RealMatrix};

/// Antenna count and block length of every code here.
pub const N_T: usize = 4;
pub const T: usize = 4;

/// Which code a [`LinearDispersionCode`] is.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CodeFamilyId {
    CiodRate1,
    Rate2,
    Rate3,
    Rate4,
    /// Loaded from a weight file; carries the name recorded in the file.
    External(String),
}

impl CodeFamilyId {
    pub fn from_rate(n_min: usize) -> Result<Self> {
        match n_min {
            1 => Ok(CodeFamilyId::CiodRate1),
            2 => Ok(CodeFamilyId::Rate2),
            3 => Ok(CodeFamilyId::Rate3),
            4 => Ok(CodeFamilyId::Rate4),
            n => Err(Error::InvalidRate(n)),
        }
    }

    /// Number of multiplexed CIOD layers for the built-in family.
    pub fn n_min(&self) -> Option<usize> {
        match self {
            CodeFamilyId::CiodRate1 => Some(1),
            CodeFamilyId::Rate2 => Some(2),
            CodeFamilyId::Rate3 => Some(3),
            CodeFamilyId::Rate4 => Some(4),
            CodeFamilyId::External(_) => None,
        }
    }

    pub fn label(&self) -> &str {
        match self {
            CodeFamilyId::CiodRate1 => "ciod",
            CodeFamilyId::Rate2 => "rate2",
            CodeFamilyId::Rate3 => "rate3",
            CodeFamilyId::Rate4 => "rate4",
            CodeFamilyId::External(name) => name,
        }
    }
}

impl fmt::Display for CodeFamilyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for CodeFamilyId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ciod" | "rate1" | "ciod_rate1" => Ok(CodeFamilyId::CiodRate1),
            "rate2" => Ok(CodeFamilyId::Rate2),
            "rate3" => Ok(CodeFamilyId::Rate3),
            "rate4" => Ok(CodeFamilyId::Rate4),
            other => Err(Error::Parse {
                line: 0,
                msg: format!("unknown code id '{other}' (expected ciod, rate2, rate3 or rate4)"),
            }),
        }
    }
}

/// `S = scale · Σ s̃_i A_i` over a fixed ordered set of 4×4 weight matrices.
#[derive(Debug, Clone)]
pub struct LinearDispersionCode {
    family: CodeFamilyId,
    weights: Vec<ComplexMatrix>,
    scale: f64,
    scaled: Vec<ComplexMatrix>,
    generator: RealMatrix,
}

impl LinearDispersionCode {
    /// Validates shapes and real linear independence, then caches the
    /// scaled weights and the generator matrix.
    pub fn new(family: CodeFamilyId, weights: Vec<ComplexMatrix>, scale: f64) -> Result<Self> {
        for (index, w) in weights.iter().enumerate() {
            if w.rows() != N_T || w.cols() != T {
                return Err(Error::BadWeightShape {
                    index: index + 1,
                    rows: w.rows(),
                    cols: w.cols(),
                });
            }
        }
        if weights.is_empty() || !weights.len().is_multiple_of(2) {
            return Err(Error::SizeMismatch(format!(
                "need an even, nonzero number of weight matrices, got {}",
                weights.len()
            )));
        }
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::SizeMismatch(format!(
                "scale must be positive, got {scale}"
            )));
        }
        let columns: Vec<_> = weights.iter().map(|w| tilde(&vec(w))).collect();
        let rank = real_rank(&columns);
        if rank != weights.len() {
            return Err(Error::LinearlyDependent {
                rank,
                count: weights.len(),
            });
        }
        let scaled: Vec<_> = weights.iter().map(|w| w.scale_real(scale)).collect();
        let generator =
            RealMatrix::from_columns(&scaled.iter().map(|w| tilde(&vec(w))).collect::<Vec<_>>());
        Ok(LinearDispersionCode {
            family,
            weights,
            scale,
            scaled,
            generator,
        })
    }

    pub fn family(&self) -> &CodeFamilyId {
        &self.family
    }

    /// Number of complex symbols per codeword.
    pub fn k(&self) -> usize {
        self.weights.len() / 2
    }

    pub fn n_t(&self) -> usize {
        N_T
    }

    pub fn t(&self) -> usize {
        T
    }

    /// Code rate in complex symbols per channel use.
    pub fn rate(&self) -> f64 {
        self.k() as f64 / T as f64
    }

    /// Number of 4-symbol layers, when `k` is a multiple of 4.
    pub fn layers(&self) -> Option<usize> {
        self.k().is_multiple_of(4).then_some(self.k() / 4)
    }

    /// Unscaled weights `A_1..A_{2k}`.
    pub fn weights(&self) -> &[ComplexMatrix] {
        &self.weights
    }

    /// Weights with the normalization applied.
    pub fn scaled_weights(&self) -> &[ComplexMatrix] {
        &self.scaled
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Generator matrix `G` (32 × 2k): `tilde(vec(S)) = G · tilde(s)`.
    pub fn generator(&self) -> &RealMatrix {
        &self.generator
    }
}

fn exact_sum(terms: &[(i64, ExactMatrix4)]) -> ExactMatrix4 {
    terms.iter().fold(ExactMatrix4::zero(), |acc, (sign, m)| {
        acc.add(&m.scale(crate::clifford::GaussInt::new(*sign, 0)))
    })
}

/// The eight unscaled CIOD weight matrices, exact, in symbol order
/// `s1I, s1Q, s2I, s2Q, s3I, s3Q, s4I, s4Q`.
pub fn ciod_weights_exact() -> [ExactMatrix4; 8] {
    let set = generators4();
    let id = ExactMatrix4::identity();
    let f1 = monomial(&set, [1, 0, 0, 0]);
    let f2 = monomial(&set, [0, 1, 0, 0]);
    let f3 = monomial(&set, [0, 0, 1, 0]);
    let f12 = monomial(&set, [1, 1, 0, 0]);
    let f13 = monomial(&set, [1, 0, 1, 0]);
    let f23 = monomial(&set, [0, 1, 1, 0]);
    let f123 = monomial(&set, [1, 1, 1, 0]);
    [
        exact_sum(&[(1, id), (-1, f123)]),
        exact_sum(&[(1, f1), (-1, f23)]),
        exact_sum(&[(1, f13), (-1, f2)]),
        exact_sum(&[(1, f3), (-1, f12)]),
        exact_sum(&[(1, id), (1, f123)]),
        exact_sum(&[(1, f1), (1, f23)]),
        exact_sum(&[(-1, f2), (-1, f13)]),
        exact_sum(&[(1, f3), (1, f12)]),
    ]
}

/// Normalization that gives `‖scale·A_i‖² = 16/k` for weights with `‖A_i‖² = 8`.
pub fn family_scale(k: usize) -> f64 {
    (16.0 / (8.0 * k as f64)).sqrt()
}

/// The rate-1 single-symbol-decodable CIOD (k = 4).
pub fn ciod4() -> LinearDispersionCode {
    rate_code(1).expect("rate 1 is valid")
}

/// The nested full-rate family for `n_min ∈ {1,2,3,4}` (k = 4·n_min).
pub fn rate_code(n_min: usize) -> Result<LinearDispersionCode> {
    let family = CodeFamilyId::from_rate(n_min)?;
    let ciod: Vec<ComplexMatrix> = ciod_weights_exact()
        .iter()
        .map(|m| m.to_complex())
        .collect();
    let f4 = monomial(&generators4(), [0, 0, 0, 1]).to_complex();
    let w = Complex64::from_polar(1.0, std::f64::consts::FRAC_PI_4);
    let j = Complex64::new(0.0, 1.0);

    let layer_factors = [
        (Complex64::new(1.0, 0.0), false),
        (w, true),
        (j, false),
        (j * w, true),
    ];
    let mut weights = Vec::with_capacity(8 * n_min);
    for &(factor, post_f4) in layer_factors.iter().take(n_min) {
        for a in &ciod {
            let base = if post_f4 { a * &f4 } else { a.clone() };
            weights.push(base.scale(factor));
        }
    }
    let k = 4 * n_min;
    LinearDispersionCode::new(family, weights, family_scale(k))
}

/// Codeword for complex symbols `s` (already rotated, if a rotation is used).
pub fn encode(code: &LinearDispersionCode, s: &[Complex64]) -> Result<ComplexMatrix> {
    if s.len() != code.k() {
        return Err(Error::LengthMismatch {
            expected: code.k(),
            got: s.len(),
        });
    }
    Ok(encode_real(code, &tilde(s)))
}

/// Codeword for interleaved real coordinates `s̃` (length 2k). Panics on length mismatch.
pub fn encode_real(code: &LinearDispersionCode, s_tilde: &[f64]) -> ComplexMatrix {
    assert_eq!(s_tilde.len(), 2 * code.k(), "symbol vector length");
    let mut out = ComplexMatrix::zeros(N_T, T);
    for (a, &c) in code.scaled_weights().iter().zip(s_tilde) {
        if c == 0.0 {
            continue;
        }
        for i in 0..N_T {
            for jj in 0..T {
                out[(i, jj)] += a[(i, jj)] * c;
            }
        }
    }
    out
}

/// `G = [tilde(vec(scale·A_1)) … tilde(vec(scale·A_2k))]`.
pub fn generator_matrix(code: &LinearDispersionCode) -> RealMatrix {
    code.generator().clone()
}
