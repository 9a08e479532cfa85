use rayon::prelude::*;
use serde::Serialize;

use crate::channel::{equivalent_matrix, sample_channel, signal_gain};
use crate::realification::{check_expand, ComplexMatrix, RealMatrix};
use crate::rng::{substream, Stream};
use crate::stbc::{LinearDispersionCode, N_T, T};

const CHUNK: u64 = 256;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CapacityEstimate {
    pub snr_db: f64,
    /// Mean bits per channel use.
    pub mean: f64,
    pub stderr: f64,
    pub trials: u64,
}

/// What the capacity is evaluated for.
#[derive(Debug, Clone, Copy)]
pub enum CapacityTarget<'a> {
    Code(&'a LinearDispersionCode),
    /// The unconstrained `n_r × 4` channel.
    Raw,
}

/// Code and raw-channel curves on common channel draws.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CapacityComparison {
    pub code: Vec<CapacityEstimate>,
    pub raw: Vec<CapacityEstimate>,
    /// `max |C_code(H) − C_raw(H)|` over realizations and SNR points.
    pub max_abs_deviation: f64,
    /// `max (C_code(H) − C_raw(H))`; positive values would break the data-processing bound.
    pub max_excess: f64,
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// `log2 det(A)` of a symmetric positive definite matrix by Cholesky.
pub fn log2_det_spd(a: &RealMatrix) -> f64 {
    let n = a.rows();
    let mut l = vec![0.0; n * n];
    let mut acc = 0.0;
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= l[j * n + k] * l[j * n + k];
        }
        assert!(d > 0.0, "matrix is not positive definite");
        let djj = d.sqrt();
        l[j * n + j] = djj;
        acc += djj.log2();
        for i in j + 1..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            l[i * n + j] = s / djj;
        }
    }
    2.0 * acc
}

/// `log2 det(I + ρ·AᵀA)`.
fn log2_det_gram(a: &RealMatrix, rho: f64) -> f64 {
    let mut g = (&a.transpose() * a).scale(rho);
    for i in 0..g.cols() {
        g[(i, i)] += 1.0;
    }
    log2_det_spd(&g)
}

/// `(1/2T)·log2 det(I + (SNR/4)·H_eq·H_eqᵀ)` for one channel.
pub fn code_capacity_integrand(code: &LinearDispersionCode, h: &ComplexMatrix, snr: f64) -> f64 {
    let h_eq = equivalent_matrix(h, code);
    log2_det_gram(&h_eq, signal_gain(snr).powi(2)) / (2 * T) as f64
}

/// `log2 det(I + (SNR/4)·H·Hᴴ)` for one channel.
pub fn raw_capacity_integrand(h: &ComplexMatrix, snr: f64) -> f64 {
    // the real 2n_r-dimensional form doubles the log-determinant
    log2_det_gram(&check_expand(h).transpose(), signal_gain(snr).powi(2)) / 2.0
}

/// Per-chunk sums: `(Σc, Σc²)` per SNR point for each target, plus deviation extremes.
#[derive(Clone)]
struct ChunkSums {
    code: Vec<(f64, f64)>,
    raw: Vec<(f64, f64)>,
    max_abs: f64,
    max_excess: f64,
}

fn run(
    code: Option<&LinearDispersionCode>,
    n_r: usize,
    snr_grid_db: &[f64],
    trials: u64,
    seed: u64,
    with_raw: bool,
) -> Vec<ChunkSums> {
    assert!(trials >= 1, "need at least one trial");
    let snrs: Vec<f64> = snr_grid_db.iter().map(|&d| db_to_linear(d)).collect();
    let chunks = trials.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = substream(seed, Stream::Channel, &[c]);
            let mut sums = ChunkSums {
                code: vec![(0.0, 0.0); snrs.len()],
                raw: vec![(0.0, 0.0); snrs.len()],
                max_abs: 0.0,
                max_excess: f64::NEG_INFINITY,
            };
            for _ in 0..CHUNK.min(trials - c * CHUNK) {
                let h = sample_channel(n_r, &mut rng).h;
                let h_eq = code.map(|code| equivalent_matrix(&h, code));
                let h_check = check_expand(&h).transpose();
                for (p, &snr) in snrs.iter().enumerate() {
                    let rho = signal_gain(snr).powi(2);
                    let vc = h_eq
                        .as_ref()
                        .map(|m| log2_det_gram(m, rho) / (2 * T) as f64);
                    let vr = with_raw.then(|| log2_det_gram(&h_check, rho) / 2.0);
                    if let Some(v) = vc {
                        sums.code[p].0 += v;
                        sums.code[p].1 += v * v;
                    }
                    if let Some(v) = vr {
                        sums.raw[p].0 += v;
                        sums.raw[p].1 += v * v;
                    }
                    if let (Some(a), Some(b)) = (vc, vr) {
                        sums.max_abs = sums.max_abs.max((a - b).abs());
                        sums.max_excess = sums.max_excess.max(a - b);
                    }
                }
            }
            sums
        })
        .collect()
}

fn estimates(chunks: &[ChunkSums], raw: bool, grid: &[f64], trials: u64) -> Vec<CapacityEstimate> {
    let n = trials as f64;
    grid.iter()
        .enumerate()
        .map(|(p, &snr_db)| {
            let (s, s2) = chunks.iter().fold((0.0, 0.0), |acc, c| {
                let v = if raw { c.raw[p] } else { c.code[p] };
                (acc.0 + v.0, acc.1 + v.1)
            });
            let mean = s / n;
            let var = if trials > 1 {
                ((s2 - n * mean * mean) / (n - 1.0)).max(0.0)
            } else {
                0.0
            };
            CapacityEstimate {
                snr_db,
                mean,
                stderr: (var / n).sqrt(),
                trials,
            }
        })
        .collect()
}

/// Monte-Carlo ergodic capacity in bits per channel use. The same channel
/// draws are used at every SNR point and for every target with the same seed.
pub fn ergodic_capacity(
    target: CapacityTarget<'_>,
    n_r: usize,
    snr_grid_db: &[f64],
    trials: u64,
    seed: u64,
) -> Vec<CapacityEstimate> {
    match target {
        CapacityTarget::Code(code) => {
            let chunks = run(Some(code), n_r, snr_grid_db, trials, seed, false);
            estimates(&chunks, false, snr_grid_db, trials)
        }
        CapacityTarget::Raw => {
            let chunks = run(None, n_r, snr_grid_db, trials, seed, true);
            estimates(&chunks, true, snr_grid_db, trials)
        }
    }
}

/// Code and raw capacity on the same draws, with per-realization deviations.
pub fn compare_capacity(
    code: &LinearDispersionCode,
    n_r: usize,
    snr_grid_db: &[f64],
    trials: u64,
    seed: u64,
) -> CapacityComparison {
    let chunks = run(Some(code), n_r, snr_grid_db, trials, seed, true);
    CapacityComparison {
        code: estimates(&chunks, false, snr_grid_db, trials),
        raw: estimates(&chunks, true, snr_grid_db, trials),
        max_abs_deviation: chunks.iter().fold(0.0, |m, c| m.max(c.max_abs)),
        max_excess: chunks
            .iter()
            .fold(f64::NEG_INFINITY, |m, c| m.max(c.max_excess)),
    }
}

/// `max |GᵀG − (16/k)·I|`.
pub fn generator_gram_deviation(code: &LinearDispersionCode) -> f64 {
    let g = code.generator();
    let gram = &g.transpose() * g;
    let target = RealMatrix::identity(gram.rows()).scale((N_T * T) as f64 / code.k() as f64);
    gram.max_abs_diff(&target)
}

/// True when `GᵀG = (16/k)·I` within `1e-10`.
pub fn lossless_check(code: &LinearDispersionCode) -> bool {
    generator_gram_deviation(code) <= 1e-10
}
