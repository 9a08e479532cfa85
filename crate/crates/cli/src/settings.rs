//! Run settings: command-line flags layered over an optional JSON config
//! file, layered over per-command defaults.
//!
//! A manifest written by an earlier run is also a valid config file; its
//! `config` object is used and the remaining keys are ignored.

use std::fs;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use stbc_lab::decoder::DecoderKind;

use crate::failure::Failure;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Check {
    /// Real rank of the 32 Clifford products.
    Basis,
    /// Exact anticommutation and unitarity of F1..F4.
    Anticommute,
    /// Orthogonality of the generator matrix.
    Lossless,
    /// Zero pattern of the R factor.
    Rpattern,
}

/// Every setting a subcommand can take. Unset fields are `None` and are
/// left out of the echoed config.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub code: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weights: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nr: Option<usize>,
    #[serde(rename = "mod", skip_serializing_if = "Option::is_none")]
    pub modulation: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub snr: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub decoder: Option<DecoderKind>,
    /// `0` disables early stopping.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_errors: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exhaustive: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub budget: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub check: Option<Vec<Check>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

macro_rules! layer {
    ($top:expr, $bottom:expr, $($field:ident),*) => {
        Settings { $($field: $top.$field.or($bottom.$field)),* }
    };
}

impl Settings {
    /// Fields of `self` win; gaps are filled from `below`.
    pub fn over(self, below: Settings) -> Settings {
        layer!(
            self, below, code, weights, nr, modulation, theta, snr, trials, seed, decoder,
            max_errors, exhaustive, samples, budget, check, trace, out
        )
    }

    /// Keeps only the named fields.
    pub fn restrict(self, keep: &[&str]) -> Settings {
        let k = |name: &str| keep.contains(&name);
        Settings {
            code: self.code.filter(|_| k("code")),
            weights: self.weights.filter(|_| k("weights")),
            nr: self.nr.filter(|_| k("nr")),
            modulation: self.modulation.filter(|_| k("mod")),
            theta: self.theta.filter(|_| k("theta")),
            snr: self.snr.filter(|_| k("snr")),
            trials: self.trials.filter(|_| k("trials")),
            seed: self.seed.filter(|_| k("seed")),
            decoder: self.decoder.filter(|_| k("decoder")),
            max_errors: self.max_errors.filter(|_| k("max_errors")),
            exhaustive: self.exhaustive.filter(|_| k("exhaustive")),
            samples: self.samples.filter(|_| k("samples")),
            budget: self.budget.filter(|_| k("budget")),
            check: self.check.filter(|_| k("check")),
            trace: self.trace.filter(|_| k("trace")),
            out: self.out.filter(|_| k("out")),
        }
    }
}

#[derive(Deserialize)]
struct ManifestShape {
    command: String,
    config: Settings,
}

/// Reads a config file. Returns the command recorded in it, if it is a manifest.
pub fn load_config(path: &Path) -> Result<(Option<String>, Settings), Failure> {
    let text =
        fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    let bad = |e: serde_json::Error| Failure::Usage(format!("{}: {e}", path.display()));
    if value.get("config").is_some() {
        let m: ManifestShape = serde_json::from_value(value).map_err(bad)?;
        Ok((Some(m.command), m.config))
    } else {
        Ok((None, serde_json::from_value(value).map_err(bad)?))
    }
}

/// Parses an SNR grid in dB: `start:step:stop`, a comma list, or a single
/// value. `inf` denotes a noiseless point.
pub fn parse_snr_grid(spec: &str) -> Result<Vec<f64>, String> {
    let num = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|_| format!("bad SNR value '{}'", s.trim()))
            .and_then(|v| {
                if v.is_nan() {
                    Err("SNR cannot be NaN".to_string())
                } else {
                    Ok(v)
                }
            })
    };
    let parts: Vec<&str> = spec.split(':').collect();
    let grid = match parts.as_slice() {
        [start, step, stop] => {
            let (start, step, stop) = (num(start)?, num(step)?, num(stop)?);
            if !(start.is_finite() && step.is_finite() && stop.is_finite()) {
                return Err("range endpoints and step must be finite".into());
            }
            if step <= 0.0 || stop < start {
                return Err(format!("empty SNR range '{spec}'"));
            }
            let n = ((stop - start) / step + 1e-9).floor() as usize + 1;
            (0..n).map(|i| start + i as f64 * step).collect()
        }
        [list] => list.split(',').map(num).collect::<Result<Vec<_>, _>>()?,
        _ => return Err(format!("bad SNR grid '{spec}'")),
    };
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err("SNR grid must be strictly increasing".into());
    }
    Ok(grid)
}

/// Canonical comma-list form of a grid; parses back to the same values.
pub fn format_snr_grid(grid: &[f64]) -> String {
    grid.iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_forms() {
        assert_eq!(
            parse_snr_grid("4:4:20").unwrap(),
            vec![4.0, 8.0, 12.0, 16.0, 20.0]
        );
        assert_eq!(parse_snr_grid("0:5:20").unwrap().len(), 5);
        assert_eq!(parse_snr_grid("0:0.1:0.3").unwrap().len(), 4);
        assert_eq!(
            parse_snr_grid("3, 7,inf").unwrap(),
            vec![3.0, 7.0, f64::INFINITY]
        );
        assert_eq!(parse_snr_grid("10").unwrap(), vec![10.0]);
        assert!(parse_snr_grid("5:0:10").is_err());
        assert!(parse_snr_grid("10,5").is_err());
        assert!(parse_snr_grid("a:b").is_err());
        assert!(parse_snr_grid("nan").is_err());
        assert!(parse_snr_grid("0:1:inf").is_err());
    }

    #[test]
    fn canonical_grid_round_trips() {
        let g = parse_snr_grid("0:0.1:1").unwrap();
        assert_eq!(parse_snr_grid(&format_snr_grid(&g)).unwrap(), g);
        assert_eq!(format_snr_grid(&[4.0, f64::INFINITY]), "4,inf");
    }

    #[test]
    fn flags_override_file() {
        let flags = Settings {
            seed: Some(9),
            ..Default::default()
        };
        let file = Settings {
            seed: Some(3),
            trials: Some(10),
            ..Default::default()
        };
        let merged = flags.over(file);
        assert_eq!(merged.seed, Some(9));
        assert_eq!(merged.trials, Some(10));
    }

    #[test]
    fn unknown_config_keys_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.json");
        fs::write(&p, r#"{"seed": 1, "sedd": 2}"#).unwrap();
        assert!(matches!(load_config(&p), Err(Failure::Usage(_))));
        fs::write(&p, r#"{"mod": 16, "snr": "0:5:10"}"#).unwrap();
        let (cmd, s) = load_config(&p).unwrap();
        assert_eq!(cmd, None);
        assert_eq!(s.modulation, Some(16));
    }

    #[test]
    fn restrict_drops_other_fields() {
        let s = Settings {
            seed: Some(1),
            trials: Some(5),
            ..Default::default()
        };
        let r = s.restrict(&["seed"]);
        assert_eq!(r.trials, None);
        assert_eq!(r.seed, Some(1));
    }
}
