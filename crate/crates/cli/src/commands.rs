use serde::Serialize;
use stbc_lab::analysis::{
    compare_capacity, diversity_search, generator_gram_deviation, min_determinant, DiversityReport,
    MinDetReport, SearchMode, EXHAUSTIVE_LIMIT,
};
use stbc_lab::channel::{sample_channel, EquivalentChannel};
use stbc_lab::clifford::{generators4, product_basis, verify_anticommuting};
use stbc_lab::decoder::{classify, pattern_matches, zero_pattern, DecoderKind, PatternSpec};
use stbc_lab::rng::{substream, Stream};
use stbc_lab::simkit::{run_ser_with_code, ser_csv, trace_csv, CampaignConfig};
use stbc_lab::stbc::{
    load_weights, rate_code, rotated_qam, weights_to_text, CodeFamilyId, LinearDispersionCode,
    DEFAULT_THETA, N_T, T,
};
use stbc_lab::Error;

use crate::failure::Failure;
use crate::manifest::Manifest;
use crate::settings::{format_snr_grid, parse_snr_grid, Check, Settings};

const DEFAULT_SAMPLES: u64 = 1_000_000;
const LOSSLESS_TOL: f64 = 1e-12;

fn keys(command: &str) -> &'static [&'static str] {
    match command {
        "verify" => &["code", "weights", "check", "nr", "trials", "seed", "out"],
        "gen" => &["code", "out"],
        "rmatrix" => &["code", "weights", "nr", "theta", "seed", "out"],
        "mindet" => &[
            "code",
            "weights",
            "mod",
            "theta",
            "exhaustive",
            "samples",
            "budget",
            "seed",
            "out",
        ],
        "capacity" => &["code", "weights", "nr", "snr", "trials", "seed", "out"],
        "ser" => &[
            "code",
            "weights",
            "nr",
            "mod",
            "theta",
            "snr",
            "trials",
            "max_errors",
            "decoder",
            "seed",
            "trace",
            "out",
        ],
        _ => &[],
    }
}

fn parse_code(id: &str) -> Result<LinearDispersionCode, Failure> {
    let family: CodeFamilyId = id
        .parse()
        .map_err(|e: Error| Failure::Usage(e.to_string()))?;
    Ok(rate_code(family.n_min().expect("built-in family"))?)
}

fn build_code(s: &Settings) -> Result<LinearDispersionCode, Failure> {
    match (&s.weights, &s.code) {
        (Some(path), _) => Ok(load_weights(path)?),
        (None, Some(id)) => parse_code(id),
        (None, None) => Err(Failure::Usage("--code or --weights is required".into())),
    }
}

/// Receive antennas that make the code full rate.
fn matched_nr(code: &LinearDispersionCode) -> usize {
    code.layers().unwrap_or_else(|| code.k().div_ceil(T)).max(1)
}

fn canonical_grid(spec: &str) -> Result<String, Failure> {
    parse_snr_grid(spec)
        .map(|g| format_snr_grid(&g))
        .map_err(Failure::Usage)
}

/// Fills defaults for `command`, validates, and drops settings it does not use.
pub fn resolve(command: &str, s: Settings) -> Result<Settings, Failure> {
    let mut s = s.restrict(keys(command));
    if s.weights.is_some() {
        s.code = None;
    }
    match command {
        "verify" => {
            if let Some(id) = &s.code {
                parse_code(id)?;
            }
            let mut checks = s.check.take().unwrap_or_else(|| {
                vec![
                    Check::Basis,
                    Check::Anticommute,
                    Check::Lossless,
                    Check::Rpattern,
                ]
            });
            checks.sort();
            checks.dedup();
            s.check = Some(checks);
            s.trials.get_or_insert(50);
            s.seed.get_or_insert(1);
        }
        "gen" => {
            let id = s
                .code
                .as_deref()
                .ok_or_else(|| Failure::Usage("gen needs --code".into()))?;
            parse_code(id)?;
        }
        _ => {
            if s.code.is_none() && s.weights.is_none() {
                s.code = Some("rate2".into());
            }
            let code = build_code(&s)?;
            s.seed.get_or_insert(1);
            if command != "mindet" {
                s.nr.get_or_insert(matched_nr(&code));
            }
            if command != "capacity" {
                s.theta.get_or_insert(DEFAULT_THETA);
            }
            if command == "mindet" || command == "ser" {
                s.modulation.get_or_insert(4);
            }
            match command {
                "mindet" => {
                    if s.exhaustive == Some(false) {
                        s.exhaustive = None;
                    }
                    if s.exhaustive.is_some() && s.samples.is_some() {
                        return Err(Failure::Usage("--exhaustive and --samples conflict".into()));
                    }
                    if s.exhaustive.is_none() && s.samples.is_none() {
                        let qam = rotated_qam(s.modulation.unwrap(), s.theta.unwrap())?;
                        let side = qam.side().unwrap_or(0) as f64;
                        let size = (2.0 * side - 1.0).powi(2 * code.k() as i32);
                        if size <= EXHAUSTIVE_LIMIT {
                            s.exhaustive = Some(true);
                        } else {
                            s.samples = Some(DEFAULT_SAMPLES);
                        }
                    }
                }
                "capacity" => {
                    s.snr = Some(canonical_grid(s.snr.as_deref().unwrap_or("0:5:20"))?);
                    s.trials.get_or_insert(10_000);
                }
                "ser" => {
                    s.snr = Some(canonical_grid(s.snr.as_deref().unwrap_or("0:4:20"))?);
                    s.trials.get_or_insert(100_000);
                    s.max_errors.get_or_insert(200);
                    s.decoder.get_or_insert(DecoderKind::Sphere);
                }
                _ => {}
            }
        }
    }
    if s.trials == Some(0) {
        return Err(Failure::Usage("--trials must be positive".into()));
    }
    if s.nr == Some(0) {
        return Err(Failure::Usage("--nr must be at least 1".into()));
    }
    Ok(s)
}

pub fn execute(m: &mut Manifest) -> Result<(), Failure> {
    match m.command.as_str() {
        "verify" => verify(m),
        "gen" => gen(m),
        "rmatrix" => rmatrix(m),
        "mindet" => mindet(m),
        "capacity" => capacity(m),
        "ser" => ser(m),
        other => Err(Failure::Usage(format!("unknown command '{other}'"))),
    }
}

#[derive(Debug, Serialize)]
struct CheckLine {
    check: &'static str,
    subject: String,
    passed: bool,
    detail: String,
}

fn verify(m: &mut Manifest) -> Result<(), Failure> {
    let s = m.config.clone();
    let checks = s.check.clone().unwrap_or_default();
    let mut lines = Vec::new();
    let set = generators4();
    if checks.contains(&Check::Basis) {
        let basis = product_basis(&set);
        let rank = basis.real_rank();
        lines.push(CheckLine {
            check: "basis",
            subject: "F1..F4".into(),
            passed: rank == 32 && basis.len() == 32,
            detail: format!("real rank {rank}/{}", basis.len()),
        });
    }
    if checks.contains(&Check::Anticommute) {
        let report = verify_anticommuting(&set);
        let detail = if report.ok {
            "pairwise anticommuting and unitary (exact)".to_string()
        } else {
            report
                .violations
                .iter()
                .map(|v| v.to_string())
                .collect::<Vec<_>>()
                .join("; ")
        };
        lines.push(CheckLine {
            check: "anticommute",
            subject: "F1..F4".into(),
            passed: report.ok,
            detail,
        });
    }

    let mut codes = Vec::new();
    match (&s.weights, &s.code) {
        (Some(path), _) => match load_weights(path) {
            Ok(code) => codes.push(code),
            Err(e @ Error::Io { .. }) => return Err(e.into()),
            Err(e) => lines.push(CheckLine {
                check: "weights",
                subject: path.display().to_string(),
                passed: false,
                detail: e.to_string(),
            }),
        },
        (None, Some(id)) => codes.push(parse_code(id)?),
        (None, None) => {
            for n in 1..=4 {
                codes.push(rate_code(n)?);
            }
        }
    }

    for code in &codes {
        m.record_code(code);
        let label = code.family().label().to_string();
        if checks.contains(&Check::Lossless) {
            let dev = generator_gram_deviation(code);
            lines.push(CheckLine {
                check: "lossless",
                subject: label.clone(),
                passed: dev < LOSSLESS_TOL,
                detail: format!("max |G^T G - ({}/{}) I| = {dev:.3e}", N_T * T, code.k()),
            });
        }
        if checks.contains(&Check::Rpattern) {
            lines.push(rpattern_check(code, &s)?);
        }
    }

    let mut text = String::new();
    for l in &lines {
        text.push_str(&format!(
            "{} {:<11} {:<8} {}\n",
            if l.passed { "PASS" } else { "FAIL" },
            l.check,
            l.subject,
            l.detail
        ));
    }
    let failed: Vec<String> = lines
        .iter()
        .filter(|l| !l.passed)
        .map(|l| format!("{} ({}): {}", l.check, l.subject, l.detail))
        .collect();
    text.push_str(&format!(
        "{} checks, {} failed\n",
        lines.len(),
        failed.len()
    ));
    m.emit(None, text.as_bytes())?;
    if let Some(out) = s.out.as_deref() {
        let json = serde_json::to_string_pretty(&lines).expect("report serializes") + "\n";
        m.emit(Some(out), json.as_bytes())?;
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Check(failed.join("; ")))
    }
}

fn rpattern_check(code: &LinearDispersionCode, s: &Settings) -> Result<CheckLine, Failure> {
    let nr = s.nr.unwrap_or_else(|| matched_nr(code));
    let trials = s.trials.unwrap_or(50);
    let seed = s.seed.unwrap_or(1);
    let qam = rotated_qam(4, DEFAULT_THETA)?;
    let label = code.family().label().to_string();
    let expected = code.layers().map(PatternSpec::Proposed);
    let mut violations = 0u64;
    let mut deficient = 0u64;
    let mut seen: Option<Option<PatternSpec>> = None;
    let mut consistent = true;
    for t in 0..trials {
        let h = sample_channel(nr, &mut substream(seed, Stream::Channel, &[t])).h;
        let eq = match EquivalentChannel::new(&h, code, &qam) {
            Ok(eq) => eq,
            Err(Error::RankDeficient { .. }) => {
                deficient += 1;
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        let p = zero_pattern(&eq.r, None);
        match expected {
            Some(spec) => {
                if !pattern_matches(&p, &spec).unwrap_or(false) {
                    violations += 1;
                }
            }
            None => {
                let c = classify(&p);
                consistent &= seen.is_none_or(|prev| prev == c);
                seen = Some(c);
            }
        }
    }
    let line = match expected {
        Some(spec) => CheckLine {
            check: "rpattern",
            subject: label,
            passed: violations == 0 && deficient == 0,
            detail: format!(
                "{spec} on {}/{trials} channels (n_r = {nr}, {deficient} rank deficient)",
                trials - violations - deficient
            ),
        },
        None => CheckLine {
            check: "rpattern",
            subject: label,
            passed: true,
            detail: match seen.flatten() {
                Some(spec) if consistent && deficient == 0 => {
                    format!("{spec} on all {trials} channels (n_r = {nr})")
                }
                _ => format!("no known pattern (n_r = {nr}, {deficient} rank deficient)"),
            },
        },
    };
    Ok(line)
}

fn gen(m: &mut Manifest) -> Result<(), Failure> {
    let s = m.config.clone();
    let code = parse_code(s.code.as_deref().unwrap_or_default())?;
    m.record_code(&code);
    let text = weights_to_text(&code);
    m.emit(s.out.as_deref(), text.as_bytes())?;
    eprintln!(
        "{}: {} weight matrices",
        code.family(),
        code.weights().len()
    );
    Ok(())
}

fn rmatrix(m: &mut Manifest) -> Result<(), Failure> {
    let s = m.config.clone();
    let code = build_code(&s)?;
    m.record_code(&code);
    let nr = s.nr.unwrap();
    let seed = s.seed.unwrap();
    let qam = rotated_qam(4, s.theta.unwrap())?;
    let h = sample_channel(nr, &mut substream(seed, Stream::Channel, &[0])).h;
    let eq = EquivalentChannel::new(&h, &code, &qam)?;
    let p = zero_pattern(&eq.r, None);
    let n = p.size();
    let mut text = format!(
        "code {}, n_r {nr}, seed {seed}, R {n}x{n}, {} nonzeros\n{p}",
        code.family(),
        p.nonzeros()
    );
    if !text.ends_with('\n') {
        text.push('\n');
    }
    for spec in [
        PatternSpec::Proposed((n / 8).max(1)),
        PatternSpec::Perfect,
        PatternSpec::East,
    ] {
        let verdict = match pattern_matches(&p, &spec) {
            Ok(true) => "match",
            Ok(false) => "no match",
            Err(_) => "n/a",
        };
        text.push_str(&format!("{spec}: {verdict}\n"));
    }
    match classify(&p) {
        Some(spec) => text.push_str(&format!("pattern: {spec}\n")),
        None => text.push_str("no known pattern\n"),
    }
    m.emit(s.out.as_deref(), text.as_bytes())
}

#[derive(Serialize)]
struct MindetOutput {
    min_determinant: MinDetReport,
    diversity: Option<DiversityReport>,
}

fn mindet(m: &mut Manifest) -> Result<(), Failure> {
    let s = m.config.clone();
    let code = build_code(&s)?;
    m.record_code(&code);
    let qam = rotated_qam(s.modulation.unwrap(), s.theta.unwrap())?;
    let seed = s.seed.unwrap();
    let mode = match s.samples {
        Some(n) => SearchMode::Sampled { n, seed },
        None => SearchMode::Exhaustive,
    };
    let report = min_determinant(&code, &qam, mode)?;
    let diversity = s
        .budget
        .map(|b| diversity_search(&code, &qam, b, seed))
        .transpose()?;
    eprintln!(
        "{}, {}-QAM: {} differences, min |det| = {}, min |det|^2 = {}, {} rank deficient",
        code.family(),
        qam.m(),
        report.evaluated,
        report.min_abs_det,
        report.min_abs_det_sq,
        report.rank_deficient
    );
    if let Some(d) = &diversity {
        match &d.witness {
            Some(w) => eprintln!(
                "witness after {} evaluations: |det| = {:e}",
                d.evaluated, w.abs_det
            ),
            None => eprintln!("no singular difference in {} evaluations", d.evaluated),
        }
    }
    let out = MindetOutput {
        min_determinant: report,
        diversity,
    };
    let json = serde_json::to_string_pretty(&out).expect("report serializes") + "\n";
    m.emit(s.out.as_deref(), json.as_bytes())
}

fn capacity(m: &mut Manifest) -> Result<(), Failure> {
    let s = m.config.clone();
    let code = build_code(&s)?;
    m.record_code(&code);
    let grid = parse_snr_grid(s.snr.as_deref().unwrap()).map_err(Failure::Usage)?;
    if grid.iter().any(|v| !v.is_finite()) {
        return Err(Failure::Usage("capacity needs finite SNR values".into()));
    }
    let cmp = compare_capacity(
        &code,
        s.nr.unwrap(),
        &grid,
        s.trials.unwrap(),
        s.seed.unwrap(),
    );
    let mut csv = String::from("snr_db,capacity_bits,stderr\n");
    for e in &cmp.code {
        csv.push_str(&format!("{},{},{}\n", e.snr_db, e.mean, e.stderr));
    }
    eprintln!(
        "max per-realization |C_code - C_raw| = {:.3e}",
        cmp.max_abs_deviation
    );
    m.emit(s.out.as_deref(), csv.as_bytes())
}

fn ser(m: &mut Manifest) -> Result<(), Failure> {
    let s = m.config.clone();
    let code = build_code(&s)?;
    m.record_code(&code);
    let cfg = CampaignConfig {
        code: code.family().clone(),
        weights: s.weights.clone(),
        n_r: s.nr.unwrap(),
        m: s.modulation.unwrap(),
        theta: s.theta.unwrap(),
        snr_db: parse_snr_grid(s.snr.as_deref().unwrap()).map_err(Failure::Usage)?,
        trials: s.trials.unwrap(),
        max_errors: s.max_errors.filter(|&e| e > 0),
        decoder: s.decoder.unwrap(),
        seed: s.seed.unwrap(),
        trace: s.trace.is_some(),
    };
    let run = run_ser_with_code(&cfg, &code)?;
    let csv = ser_csv(code.family().label(), cfg.n_r, cfg.m, &run.points);
    m.emit(s.out.as_deref(), csv.as_bytes())?;
    if let Some(path) = s.trace.as_deref() {
        m.emit(Some(path), trace_csv(&run.trace).as_bytes())?;
    }
    Ok(())
}
