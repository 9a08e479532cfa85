//! Full-rate space-time block codes for four transmit antennas built from a
//! Clifford-algebra matrix basis, with exact ML decoders and the analyses
//! used to evaluate them (minimum determinant, R-matrix structure, ergodic
//! capacity, Monte-Carlo symbol error rate).
//!
//! Module map:
//!
//! - [`realification`]: dense matrices and the complex/real bridging operators.
//! - [`clifford`]: the four anticommuting generators and the 32-element real basis.
//! - [`stbc`]: linear dispersion codes (CIOD and the nested rate-1..4 family),
//!   rotated square QAM, weight-file I/O.
//! - [`channel`]: Rayleigh block fading, noisy transmission, equivalent channel.
//! - [`decoder`]: brute-force, sphere and conditional ML decoders; R-matrix patterns.
//! - [`analysis`]: minimum determinant, diversity search, capacity.
//! - [`simkit`]: seeded SER campaigns.

#![allow(clippy::needless_range_loop)]

pub mod analysis;
pub mod channel;
pub mod clifford;
pub mod decoder;
mod error;
pub mod realification;
pub mod rng;
pub mod simkit;
pub mod stbc;

pub use error::{Error, Result};
pub use num_complex::Complex64;
