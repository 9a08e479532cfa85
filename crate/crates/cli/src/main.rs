//! `stbc-lab`: build, verify, analyse and simulate the multiplexed-CIOD
//! space-time block codes.
//!
//! Exit codes: 0 success, 1 check failure, 2 usage error, 3 I/O error.

mod commands;
mod failure;
mod manifest;
mod settings;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use stbc_lab::decoder::DecoderKind;

use crate::failure::Failure;
use crate::manifest::{manifest_path_for, Manifest};
use crate::settings::{load_config, Check, Settings};

#[derive(Parser)]
#[command(
    name = "stbc-lab",
    version,
    about = "Full-rate four-antenna STBC toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Worker threads (default: machine parallelism)
    #[arg(long, global = true, env = "STBC_LAB_THREADS")]
    threads: Option<usize>,

    /// JSON config file, or a manifest from an earlier run. Flags override it.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Where to write the run manifest (default: <out>.manifest.json, else stderr)
    #[arg(long, global = true, value_name = "PATH")]
    manifest: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the invariant suite and report each named check
    Verify(VerifyArgs),
    /// Write the weight matrices of a built-in code
    Gen(GenArgs),
    /// Print the R-factor zero pattern for one random channel
    Rmatrix(RmatrixArgs),
    /// Minimum determinant over codeword differences (JSON)
    Mindet(MindetArgs),
    /// Ergodic capacity curve (CSV)
    Capacity(CapacityArgs),
    /// Monte-Carlo symbol error rate (CSV)
    Ser(SerArgs),
}

#[derive(Args)]
struct CodeArgs {
    /// Code family: ciod, rate2, rate3 or rate4
    #[arg(long)]
    code: Option<String>,
    /// Weight file; takes precedence over --code
    #[arg(long, value_name = "PATH")]
    weights: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    code: CodeArgs,
    /// Checks to run (default: all)
    #[arg(long, value_enum, value_delimiter = ',')]
    check: Option<Vec<Check>>,
    /// Receive antennas for the R-pattern check (default: matched to the code)
    #[arg(long)]
    nr: Option<usize>,
    /// Random channels for the R-pattern check [default: 50]
    #[arg(long)]
    trials: Option<u64>,
    /// [default: 1]
    #[arg(long)]
    seed: Option<u64>,
    /// Also write the report as JSON
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GenArgs {
    /// Code family: ciod, rate2, rate3 or rate4
    #[arg(long)]
    code: Option<String>,
    /// Output weight file (default: stdout)
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RmatrixArgs {
    #[command(flatten)]
    code: CodeArgs,
    /// Receive antennas (default: matched to the code)
    #[arg(long)]
    nr: Option<usize>,
    /// Constellation rotation in radians [default: atan(2)/2]
    #[arg(long)]
    theta: Option<f64>,
    /// [default: 1]
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct MindetArgs {
    #[command(flatten)]
    code: CodeArgs,
    /// Square QAM size [default: 4]
    #[arg(long = "mod")]
    modulation: Option<usize>,
    /// Constellation rotation in radians [default: atan(2)/2]
    #[arg(long)]
    theta: Option<f64>,
    /// Enumerate every nonzero difference (default when the space is small enough)
    #[arg(long, conflicts_with = "samples")]
    exhaustive: bool,
    /// Evaluate this many random differences instead
    #[arg(long)]
    samples: Option<u64>,
    /// Also run a rank-deficiency witness search with this evaluation budget
    #[arg(long)]
    budget: Option<u64>,
    /// [default: 1]
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CapacityArgs {
    #[command(flatten)]
    code: CodeArgs,
    /// Receive antennas (default: matched to the code)
    #[arg(long)]
    nr: Option<usize>,
    /// SNR grid in dB: start:step:stop or a comma list [default: 0:5:20]
    #[arg(long)]
    snr: Option<String>,
    /// Channel realizations [default: 10000]
    #[arg(long)]
    trials: Option<u64>,
    /// [default: 1]
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SerArgs {
    #[command(flatten)]
    code: CodeArgs,
    /// Receive antennas (default: matched to the code)
    #[arg(long)]
    nr: Option<usize>,
    /// Square QAM size [default: 4]
    #[arg(long = "mod")]
    modulation: Option<usize>,
    /// Constellation rotation in radians [default: atan(2)/2]
    #[arg(long)]
    theta: Option<f64>,
    /// SNR grid in dB: start:step:stop or a comma list, `inf` allowed [default: 0:4:20]
    #[arg(long)]
    snr: Option<String>,
    /// Codewords per SNR point [default: 100000]
    #[arg(long)]
    trials: Option<u64>,
    /// Stop a point after this many symbol errors, 0 never stops [default: 200]
    #[arg(long)]
    max_errors: Option<u64>,
    /// brute, sphere or conditional [default: sphere]
    #[arg(long, value_parser = parse_decoder)]
    decoder: Option<DecoderKind>,
    /// [default: 1]
    #[arg(long)]
    seed: Option<u64>,
    /// Per-trial CSV of errors, visited nodes and metrics
    #[arg(long, value_name = "PATH")]
    trace: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

fn parse_decoder(s: &str) -> Result<DecoderKind, String> {
    s.parse()
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Verify(_) => "verify",
            Command::Gen(_) => "gen",
            Command::Rmatrix(_) => "rmatrix",
            Command::Mindet(_) => "mindet",
            Command::Capacity(_) => "capacity",
            Command::Ser(_) => "ser",
        }
    }

    fn flags(self) -> Settings {
        match self {
            Command::Verify(a) => Settings {
                code: a.code.code,
                weights: a.code.weights,
                check: a.check,
                nr: a.nr,
                trials: a.trials,
                seed: a.seed,
                out: a.out,
                ..Default::default()
            },
            Command::Gen(a) => Settings {
                code: a.code,
                out: a.out,
                ..Default::default()
            },
            Command::Rmatrix(a) => Settings {
                code: a.code.code,
                weights: a.code.weights,
                nr: a.nr,
                theta: a.theta,
                seed: a.seed,
                out: a.out,
                ..Default::default()
            },
            Command::Mindet(a) => Settings {
                code: a.code.code,
                weights: a.code.weights,
                modulation: a.modulation,
                theta: a.theta,
                exhaustive: a.exhaustive.then_some(true),
                samples: a.samples,
                budget: a.budget,
                seed: a.seed,
                out: a.out,
                ..Default::default()
            },
            Command::Capacity(a) => Settings {
                code: a.code.code,
                weights: a.code.weights,
                nr: a.nr,
                snr: a.snr,
                trials: a.trials,
                seed: a.seed,
                out: a.out,
                ..Default::default()
            },
            Command::Ser(a) => Settings {
                code: a.code.code,
                weights: a.code.weights,
                nr: a.nr,
                modulation: a.modulation,
                theta: a.theta,
                snr: a.snr,
                trials: a.trials,
                max_errors: a.max_errors,
                decoder: a.decoder,
                seed: a.seed,
                trace: a.trace,
                out: a.out,
                ..Default::default()
            },
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Failure::Usage("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Usage(e.to_string()))?;
    }
    let name = cli.command.name();
    let file = match &cli.config {
        Some(path) => {
            let (recorded, s) = load_config(path)?;
            if let Some(cmd) = recorded.filter(|c| c != name) {
                return Err(Failure::Usage(format!(
                    "{} is a manifest for '{cmd}', not '{name}'",
                    path.display()
                )));
            }
            s
        }
        None => Settings::default(),
    };
    let settings = cli.command.flags().over(file);
    let resolved = commands::resolve(name, settings)?;
    let mut manifest = Manifest::new(name, resolved);
    let result = commands::execute(&mut manifest);
    manifest.exit_code = result.as_ref().map_or_else(Failure::exit_code, |_| 0);
    let json = manifest.to_json();
    let target = cli
        .manifest
        .or_else(|| manifest.config.out.as_deref().map(manifest_path_for));
    match target {
        Some(path) => std::fs::write(&path, json)
            .map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?,
        None => eprint!("{json}"),
    }
    result
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("stbc-lab: {f}");
            ExitCode::from(f.exit_code())
        }
    }
}
