//! Quasi-static Rayleigh fading and the real-valued equivalent channel.
//!
//! Transmission is `Y = √(SNR/4)·H·S + N` with `H` (`n_r × 4`) and `N`
//! (`n_r × 4`) i.i.d. CN(0,1). One channel realization covers one codeword.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::realification::{
    check_expand, kron, qr_thin, tilde, vec, ComplexMatrix, RealMatrix, RealVector,
};
use crate::stbc::{Constellation, LinearDispersionCode, N_T, T};

/// Amplitude factor `√(SNR/n_t)` applied to `H·S`.
pub fn signal_gain(snr_linear: f64) -> f64 {
    (snr_linear / N_T as f64).sqrt()
}

/// One draw of an `n_r × 4` channel matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub h: ComplexMatrix,
}

impl ChannelRealization {
    pub fn n_r(&self) -> usize {
        self.h.rows()
    }
}

/// A CN(0,1) sample: real and imaginary parts i.i.d. N(0, 1/2).
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

fn gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(rows, cols);
    for r in 0..rows {
        for c in 0..cols {
            m[(r, c)] = complex_gaussian(rng);
        }
    }
    m
}

pub fn sample_channel<R: Rng + ?Sized>(n_r: usize, rng: &mut R) -> ChannelRealization {
    assert!(n_r >= 1, "need at least one receive antenna");
    ChannelRealization {
        h: gaussian_matrix(n_r, N_T, rng),
    }
}

/// `√(SNR/4)·H·S` with no noise.
pub fn transmit_noiseless(s: &ComplexMatrix, h: &ComplexMatrix, snr_linear: f64) -> ComplexMatrix {
    (h * s).scale_real(signal_gain(snr_linear))
}

/// `√(SNR/4)·H·S + N`, `N` i.i.d. CN(0,1).
pub fn transmit<R: Rng + ?Sized>(
    s: &ComplexMatrix,
    h: &ComplexMatrix,
    snr_linear: f64,
    rng: &mut R,
) -> ComplexMatrix {
    let clean = transmit_noiseless(s, h, snr_linear);
    let noise = gaussian_matrix(clean.rows(), clean.cols(), rng);
    &clean + &noise
}

/// `H_eq = (I_T ⊗ Ȟ)·G`, the rotation `F = I_k ⊗ J`, and the thin QR of `H_eq·F`.
#[derive(Debug, Clone)]
pub struct EquivalentChannel {
    pub h_eq: RealMatrix,
    pub f: RealMatrix,
    pub q: RealMatrix,
    pub r: RealMatrix,
}

/// `(I_T ⊗ Ȟ)·G` alone, without factorization.
pub fn equivalent_matrix(h: &ComplexMatrix, code: &LinearDispersionCode) -> RealMatrix {
    let big = kron(&RealMatrix::identity(T), &check_expand(h));
    &big * code.generator()
}

impl EquivalentChannel {
    /// Fails with [`Error::RankDeficient`] when `H_eq·F` does not have full
    /// column rank, including the structural case `2·n_r·T < 2k`.
    pub fn new(
        h: &ComplexMatrix,
        code: &LinearDispersionCode,
        constellation: &Constellation,
    ) -> Result<Self> {
        if h.cols() != N_T {
            return Err(Error::SizeMismatch(format!(
                "channel must have {N_T} columns, got {}",
                h.cols()
            )));
        }
        let h_eq = equivalent_matrix(h, code);
        let f = kron(&RealMatrix::identity(code.k()), &constellation.rotation());
        let hf = &h_eq * &f;
        if hf.rows() < hf.cols() {
            return Err(Error::RankDeficient { min_pivot: 0.0 });
        }
        let qr = qr_thin(&hf);
        if qr.rank_deficient {
            return Err(Error::RankDeficient {
                min_pivot: qr.min_pivot,
            });
        }
        Ok(EquivalentChannel {
            h_eq,
            f,
            q: qr.q,
            r: qr.r,
        })
    }

    /// `y′ = Qᵀ·tilde(vec(Y))`.
    pub fn project(&self, y: &ComplexMatrix) -> RealVector {
        self.q.tr_mul_vec(&tilde(&vec(y)))
    }
}
