//! Seeded Monte-Carlo symbol-error-rate campaigns.
//!
//! Each SNR point is processed in fixed-size chunks of trials. Chunk `c` at
//! point `p` draws its data, channels and noise from substreams tagged
//! `(p, c)`, so a given seed yields the same transmitted symbols, channels
//! and noise whatever decoder is used and however chunks are scheduled.
//! Early stopping inspects chunks in index order, which keeps the result
//! independent of thread count.

use std::path::PathBuf;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::db_to_linear;
use crate::channel::{
    sample_channel, signal_gain, transmit, transmit_noiseless, EquivalentChannel,
};
use crate::decoder::{decode, DecoderKind};
use crate::error::{Error, Result};
use crate::rng::{substream, Stream};
use crate::stbc::{
    encode, load_weights, rate_code, rotated_qam, CodeFamilyId, Constellation,
    LinearDispersionCode, DEFAULT_THETA, T,
};

/// Trials per chunk.
pub const CHUNK_TRIALS: u64 = 1000;

/// Consecutive rank-deficient channel draws tolerated before giving up.
const MAX_RESAMPLES: u64 = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CampaignConfig {
    pub code: CodeFamilyId,
    /// Weight file; takes precedence over `code` when set.
    #[serde(default)]
    pub weights: Option<PathBuf>,
    pub n_r: usize,
    /// Square QAM size.
    pub m: usize,
    #[serde(default = "default_theta")]
    pub theta: f64,
    /// SNR points in dB, ascending; `inf` disables noise.
    pub snr_db: Vec<f64>,
    /// Codewords per SNR point.
    pub trials: u64,
    /// Stop a point once this many symbol errors are seen (checked per chunk).
    #[serde(default)]
    pub max_errors: Option<u64>,
    pub decoder: DecoderKind,
    pub seed: u64,
    /// Keep a per-trial record.
    #[serde(default)]
    pub trace: bool,
}

fn default_theta() -> f64 {
    DEFAULT_THETA
}

impl CampaignConfig {
    /// Defaults: 10⁵ trials per point, stop at 200 errors, sphere decoding.
    pub fn new(code: CodeFamilyId, n_r: usize, m: usize, snr_db: Vec<f64>) -> Self {
        CampaignConfig {
            code,
            weights: None,
            n_r,
            m,
            theta: DEFAULT_THETA,
            snr_db,
            trials: 100_000,
            max_errors: Some(200),
            decoder: DecoderKind::Sphere,
            seed: 1,
            trace: false,
        }
    }

    pub fn build_code(&self) -> Result<LinearDispersionCode> {
        if let Some(path) = &self.weights {
            return load_weights(path);
        }
        match self.code.n_min() {
            Some(n) => rate_code(n),
            None => Err(Error::SizeMismatch(format!(
                "code '{}' needs a weight file",
                self.code
            ))),
        }
    }

    pub fn constellation(&self) -> Result<Constellation> {
        rotated_qam(self.m, self.theta)
    }

    fn validate(&self, code: &LinearDispersionCode) -> Result<()> {
        if self.n_r == 0 {
            return Err(Error::SizeMismatch("n_r must be at least 1".into()));
        }
        if code.k() > 4 * self.n_r {
            return Err(Error::SizeMismatch(format!(
                "k = {} symbols cannot be separated with n_r = {} (need k <= {})",
                code.k(),
                self.n_r,
                4 * self.n_r
            )));
        }
        if self.trials == 0 {
            return Err(Error::SizeMismatch("trials must be positive".into()));
        }
        if self.snr_db.iter().any(|s| s.is_nan()) || self.snr_db.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::SizeMismatch(
                "SNR grid must be sorted ascending".into(),
            ));
        }
        if self.decoder == DecoderKind::Conditional && code.layers().is_none() {
            return Err(Error::SizeMismatch(
                "the conditional decoder needs k to be a multiple of 4".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SERPoint {
    pub snr_db: f64,
    /// Complex-symbol errors.
    pub errors: u64,
    /// Codewords transmitted.
    pub trials: u64,
    /// `errors / (trials · k)`.
    pub ser: f64,
    /// Binomial standard error over the `trials · k` symbol decisions.
    pub stderr: f64,
    pub mean_nodes: f64,
    /// Channel draws rejected as rank deficient and redrawn.
    pub resampled: u64,
    /// Decodes where the conditional decoder deferred to the sphere decoder.
    pub fallbacks: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRecord {
    pub snr_db: f64,
    pub trial: u64,
    pub errors: u32,
    pub visited: u64,
    pub leaves: u64,
    pub metric: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SerRun {
    pub points: Vec<SERPoint>,
    pub trace: Vec<TraceRecord>,
}

/// Bits per channel use: `(k / T)·log2 M`.
pub fn bpcu(code: &LinearDispersionCode, m: usize) -> f64 {
    code.rate() * (m as f64).log2()
}

/// Rate equals `min(4, n_r)` symbols per channel use.
pub fn is_full_rate(code: &LinearDispersionCode, n_r: usize) -> bool {
    code.k() == T * n_r.min(4)
}

#[derive(Default)]
struct ChunkOut {
    trials: u64,
    errors: u64,
    visited: u64,
    resampled: u64,
    fallbacks: u64,
    trace: Vec<TraceRecord>,
}

struct Ctx<'a> {
    cfg: &'a CampaignConfig,
    code: &'a LinearDispersionCode,
    qam: &'a Constellation,
    n_min: usize,
}

fn run_chunk(ctx: &Ctx<'_>, point: usize, chunk: u64) -> Result<ChunkOut> {
    let cfg = ctx.cfg;
    let snr_db = cfg.snr_db[point];
    let tags = [point as u64, chunk];
    let mut data = substream(cfg.seed, Stream::Data, &tags);
    let mut chan = substream(cfg.seed, Stream::Channel, &tags);
    let mut noise = substream(cfg.seed, Stream::Noise, &tags);
    let noiseless = snr_db == f64::INFINITY;
    let (snr, gain) = if noiseless {
        (4.0, 1.0)
    } else {
        let s = db_to_linear(snr_db);
        (s, signal_gain(s))
    };
    let k = ctx.code.k();
    let m = ctx.qam.m();
    let points = ctx.qam.points();
    let count = CHUNK_TRIALS.min(cfg.trials - chunk * CHUNK_TRIALS);
    let mut out = ChunkOut::default();
    let mut idx = vec![0usize; k];
    let mut sym = Vec::with_capacity(k);
    for i in 0..count {
        sym.clear();
        for slot in idx.iter_mut() {
            *slot = data.random_range(0..m);
            sym.push(ctx.qam.rotate(points[*slot]));
        }
        let s = encode(ctx.code, &sym)?;
        let mut tries = 0;
        let (h, eq) = loop {
            let h = sample_channel(cfg.n_r, &mut chan).h;
            match EquivalentChannel::new(&h, ctx.code, ctx.qam) {
                Ok(eq) => break (h, eq),
                Err(Error::RankDeficient { .. }) if tries < MAX_RESAMPLES => {
                    log::warn!("rank-deficient channel at {snr_db} dB; redrawing");
                    tries += 1;
                }
                Err(e) => return Err(e),
            }
        };
        out.resampled += tries;
        let y = if noiseless {
            transmit_noiseless(&s, &h, snr)
        } else {
            transmit(&s, &h, snr, &mut noise)
        };
        let yp = eq.project(&y);
        let res = decode(cfg.decoder, &yp, &eq.r, gain, ctx.qam, ctx.n_min)?;
        let errs = res.indices.iter().zip(&idx).filter(|(a, b)| a != b).count();
        out.trials += 1;
        out.errors += errs as u64;
        out.visited += res.visited;
        out.fallbacks += res.fell_back as u64;
        if cfg.trace {
            out.trace.push(TraceRecord {
                snr_db,
                trial: chunk * CHUNK_TRIALS + i,
                errors: errs as u32,
                visited: res.visited,
                leaves: res.leaves,
                metric: res.metric,
            });
        }
    }
    Ok(out)
}

/// Runs the campaign with the code named in the config.
pub fn run_ser(cfg: &CampaignConfig) -> Result<SerRun> {
    let code = cfg.build_code()?;
    run_ser_with_code(cfg, &code)
}

/// Runs the campaign with an already constructed code.
pub fn run_ser_with_code(cfg: &CampaignConfig, code: &LinearDispersionCode) -> Result<SerRun> {
    cfg.validate(code)?;
    let qam = cfg.constellation()?;
    let ctx = Ctx {
        cfg,
        code,
        qam: &qam,
        n_min: code.layers().unwrap_or(0),
    };
    let chunks = cfg.trials.div_ceil(CHUNK_TRIALS);
    let wave = (rayon::current_num_threads() as u64 * 2).max(1);
    let mut run = SerRun {
        points: Vec::with_capacity(cfg.snr_db.len()),
        trace: Vec::new(),
    };
    for p in 0..cfg.snr_db.len() {
        let mut acc = ChunkOut::default();
        let mut next = 0;
        'point: while next < chunks {
            let end = (next + wave).min(chunks);
            let outs: Vec<Result<ChunkOut>> = (next..end)
                .into_par_iter()
                .map(|c| run_chunk(&ctx, p, c))
                .collect();
            for out in outs {
                let out = out?;
                acc.trials += out.trials;
                acc.errors += out.errors;
                acc.visited += out.visited;
                acc.resampled += out.resampled;
                acc.fallbacks += out.fallbacks;
                acc.trace.extend(out.trace);
                if cfg.max_errors.is_some_and(|e| acc.errors >= e) {
                    break 'point;
                }
            }
            next = end;
        }
        let symbols = (acc.trials * code.k() as u64) as f64;
        let ser = acc.errors as f64 / symbols;
        run.points.push(SERPoint {
            snr_db: cfg.snr_db[p],
            errors: acc.errors,
            trials: acc.trials,
            ser,
            stderr: (ser * (1.0 - ser) / symbols).sqrt(),
            mean_nodes: acc.visited as f64 / acc.trials as f64,
            resampled: acc.resampled,
            fallbacks: acc.fallbacks,
        });
        run.trace.append(&mut acc.trace);
    }
    Ok(run)
}

/// CSV with header `code,n_r,mod,snr_db,trials,errors,ser,stderr,mean_nodes`.
pub fn ser_csv(code_label: &str, n_r: usize, m: usize, points: &[SERPoint]) -> String {
    let mut out = String::from("code,n_r,mod,snr_db,trials,errors,ser,stderr,mean_nodes\n");
    for p in points {
        out.push_str(&format!(
            "{code_label},{n_r},{m},{},{},{},{},{},{}\n",
            p.snr_db, p.trials, p.errors, p.ser, p.stderr, p.mean_nodes
        ));
    }
    out
}

/// Per-trial CSV: `snr_db,trial,errors,visited,leaves,metric`.
pub fn trace_csv(trace: &[TraceRecord]) -> String {
    let mut out = String::from("snr_db,trial,errors,visited,leaves,metric\n");
    for t in trace {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            t.snr_db, t.trial, t.errors, t.visited, t.leaves, t.metric
        ));
    }
    out
}
