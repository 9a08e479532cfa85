use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("size mismatch: {0}")]
    SizeMismatch(String),

    #[error("invalid rate n_min = {0} (expected 1..=4)")]
    InvalidRate(usize),

    #[error("constellation size {0} is not a square QAM")]
    NonSquareConstellation(usize),

    #[error("decoder needs a square-QAM constellation")]
    UnsupportedConstellation,

    #[error("matrix is rank deficient (smallest pivot {min_pivot:e})")]
    RankDeficient { min_pivot: f64 },

    #[error("search space of {size} candidates exceeds the limit of {limit}")]
    SearchSpaceTooLarge { size: f64, limit: f64 },

    #[error("weight matrices are linearly dependent over R (rank {rank} of {count})")]
    LinearlyDependent { rank: usize, count: usize },

    #[error("weight matrix {index} is {rows}x{cols}, expected 4x4")]
    BadWeightShape {
        index: usize,
        rows: usize,
        cols: usize,
    },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
