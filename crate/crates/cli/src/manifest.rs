//! Run manifests: the resolved settings plus content hashes of the codes used
//! and of every output written. Feeding a manifest back through `--config`
//! reproduces the run.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};
use stbc_lab::stbc::{weights_to_text, LinearDispersionCode};

use crate::failure::Failure;
use crate::settings::Settings;

/// SHA-256 over `"blob <len>\0"` followed by the content, as git does for blobs.
pub fn blob_sha256(content: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", content.len()).as_bytes());
    h.update(content);
    hex::encode(h.finalize())
}

pub fn sha256(content: &[u8]) -> String {
    hex::encode(Sha256::digest(content))
}

#[derive(Debug, Clone, Serialize)]
pub struct CodeRecord {
    pub label: String,
    pub k: usize,
    pub scale: f64,
    /// Blob hash of the canonical weight-file text.
    pub weights_blob_sha256: String,
}

impl CodeRecord {
    pub fn of(code: &LinearDispersionCode) -> Self {
        CodeRecord {
            label: code.family().label().to_string(),
            k: code.k(),
            scale: code.scale(),
            weights_blob_sha256: blob_sha256(weights_to_text(code).as_bytes()),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct OutputRecord {
    /// `None` for standard output.
    pub path: Option<PathBuf>,
    pub bytes: usize,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub config: Settings,
    pub codes: Vec<CodeRecord>,
    pub outputs: Vec<OutputRecord>,
    pub exit_code: u8,
}

impl Manifest {
    pub fn new(command: &str, config: Settings) -> Self {
        Manifest {
            tool: "stbc-lab",
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            seed: config.seed,
            config,
            codes: Vec::new(),
            outputs: Vec::new(),
            exit_code: 0,
        }
    }

    pub fn record_code(&mut self, code: &LinearDispersionCode) {
        self.codes.push(CodeRecord::of(code));
    }

    /// Writes `content` to `path`, or to standard output, and records it.
    pub fn emit(&mut self, path: Option<&Path>, content: &[u8]) -> Result<(), Failure> {
        match path {
            Some(p) => {
                fs::write(p, content).map_err(|e| Failure::Io(format!("{}: {e}", p.display())))?
            }
            None => {
                let mut out = std::io::stdout().lock();
                out.write_all(content)
                    .and_then(|_| out.flush())
                    .map_err(|e| Failure::Io(format!("stdout: {e}")))?;
            }
        }
        self.outputs.push(OutputRecord {
            path: path.map(Path::to_path_buf),
            bytes: content.len(),
            sha256: sha256(content),
        });
        Ok(())
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }
}

/// Default manifest location next to an output file.
pub fn manifest_path_for(out: &Path) -> PathBuf {
    let mut name = out.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    out.with_file_name(name)
}
