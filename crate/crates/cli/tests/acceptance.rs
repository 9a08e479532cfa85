//! Acceptance suite. Each test prints one `criterion N PASS|FAIL` line to stderr and
//! then asserts the criterion at its stated tolerance and runtime budget.
//!
//! Run with `cargo test -p stbc-lab-cli --test acceptance -- --test-threads=1`.

use std::io::Write;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::Rng;
use stbc_lab::analysis::{
    code_capacity_integrand, db_to_linear, diversity_search, min_determinant,
    raw_capacity_integrand, SearchMode, SearchPhase, SINGULAR_TOL,
};
use stbc_lab::channel::{sample_channel, signal_gain, transmit, EquivalentChannel};
use stbc_lab::clifford::{generators4, product_basis, verify_anticommuting};
use stbc_lab::decoder::{
    brute_force_ml, conditional_decode, pattern_matches, sphere_decode, zero_pattern, DecoderKind,
    PatternSpec,
};
use stbc_lab::realification::{tilde, vec};
use stbc_lab::rng::{substream, Stream};
use stbc_lab::simkit::{run_ser, CampaignConfig};
use stbc_lab::stbc::{
    encode, encode_real, rate_code, rotated_qam, CodeFamilyId, Constellation, LinearDispersionCode,
    DEFAULT_THETA,
};
use stbc_lab::Complex64;

/// Writes straight to the stderr handle so the line survives output capture.
fn report(n: u32, name: &str, passed: bool, elapsed: Duration, detail: &str) {
    let _ = writeln!(
        std::io::stderr(),
        "criterion {n:>2} {} {name}: {detail} ({:.2} s)",
        if passed { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64()
    );
}

fn random_symbols(
    code: &LinearDispersionCode,
    qam: &Constellation,
    rng: &mut impl Rng,
) -> (Vec<usize>, Vec<Complex64>) {
    let idx: Vec<usize> = (0..code.k())
        .map(|_| rng.random_range(0..qam.m()))
        .collect();
    let sym = idx.iter().map(|&i| qam.rotate(qam.points()[i])).collect();
    (idx, sym)
}

#[test]
fn criterion_01_clifford_exactness() {
    let t = Instant::now();
    let set = generators4();
    let ac = verify_anticommuting(&set);
    let basis = product_basis(&set);
    let rank = basis.real_rank();
    let el = t.elapsed();
    let ok = ac.ok && ac.violations.is_empty() && basis.len() == 32 && rank == 32;
    let pass = ok && el < Duration::from_secs(1);
    report(
        1,
        "Clifford exactness",
        pass,
        el,
        &format!(
            "{} violations, real rank {rank}/{}",
            ac.violations.len(),
            basis.len()
        ),
    );
    assert!(pass);
}

/// `GᵀG` from columns built by encoding unit coordinate vectors.
fn gram_by_encoding(code: &LinearDispersionCode) -> Vec<Vec<f64>> {
    let n = 2 * code.k();
    let cols: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut e = vec![0.0; n];
            e[i] = 1.0;
            tilde(&vec(&encode_real(code, &e)))
        })
        .collect();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| cols[i].iter().zip(&cols[j]).map(|(a, b)| a * b).sum())
                .collect()
        })
        .collect()
}

#[test]
fn criterion_02_generator_orthogonality() {
    let t = Instant::now();
    let mut worst = Vec::new();
    for (rate, target) in [(4, 1.0), (2, 2.0)] {
        let code = rate_code(rate).unwrap();
        let gram = gram_by_encoding(&code);
        let dev = gram
            .iter()
            .enumerate()
            .flat_map(|(i, row)| {
                row.iter()
                    .enumerate()
                    .map(move |(j, &v)| (v - if i == j { target } else { 0.0 }).abs())
            })
            .fold(0.0, f64::max);
        worst.push((rate, dev));
    }
    let el = t.elapsed();
    let pass = worst.iter().all(|&(_, d)| d <= 1e-12) && el < Duration::from_secs(1);
    report(
        2,
        "generator orthogonality",
        pass,
        el,
        &format!(
            "max deviation rate4 {:.2e}, rate2 {:.2e}",
            worst[0].1, worst[1].1
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_03_minimum_determinant() {
    let t = Instant::now();
    let code = rate_code(2).unwrap();
    let qam = rotated_qam(4, DEFAULT_THETA).unwrap();
    let rep = min_determinant(&code, &qam, SearchMode::Exhaustive).unwrap();
    let el = t.elapsed();
    let matched = rep.conventions_matching(10.24, 1e-6);
    let pass = rep.evaluated == 9u64.pow(8) - 1
        && matched.len() == 1
        && el <= Duration::from_secs(15 * 60);
    report(
        3,
        "minimum determinant",
        pass,
        el,
        &format!(
            "{} differences, min |det| = {}, min |det|^2 = {}, {} singular, matched convention {:?}",
            rep.evaluated, rep.min_abs_det, rep.min_abs_det_sq, rep.rank_deficient, matched
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_04_rank_deficiency_witnesses() {
    let t = Instant::now();
    let qam = rotated_qam(4, DEFAULT_THETA).unwrap();
    let mut details = Vec::new();
    let mut ok = true;
    for rate in [3, 4] {
        let rep = diversity_search(&rate_code(rate).unwrap(), &qam, 1_000_000, 7).unwrap();
        let found = rep
            .witness
            .as_ref()
            .is_some_and(|w| w.abs_det < SINGULAR_TOL && w.level_steps.iter().any(|&s| s != 0));
        ok &= found && rep.evaluated <= 1_000_000;
        details.push(format!(
            "rate{rate}: {} after {}",
            if found { "witness" } else { "none" },
            rep.evaluated
        ));
    }
    let full = 9u64.pow(8);
    let rep = diversity_search(&rate_code(2).unwrap(), &qam, full, 7).unwrap();
    let exhaustive = rep.phases == vec![SearchPhase::Exhaustive] && rep.evaluated == full - 1;
    let none = rep.witness.is_none();
    ok &= exhaustive && none;
    details.push(match &rep.witness {
        None => format!("rate2: none in {} (exhaustive)", rep.evaluated),
        Some(w) => format!(
            "rate2: singular difference {:?} |det| = {:e}",
            w.level_steps, w.abs_det
        ),
    });
    let el = t.elapsed();
    let pass = ok && el <= Duration::from_secs(5 * 60);
    report(
        4,
        "rank-deficiency witnesses",
        pass,
        el,
        &details.join("; "),
    );
    assert!(pass);
}

#[test]
fn criterion_05_r_matrix_structure() {
    let t = Instant::now();
    let qam = rotated_qam(4, DEFAULT_THETA).unwrap();
    let d = PatternSpec::Proposed(1).support(8).unwrap();
    let mut violations = 0;
    for n in 1..=4usize {
        let code = rate_code(n).unwrap();
        let mut rng = substream(5, Stream::Channel, &[n as u64]);
        for _ in 0..200 {
            let h = sample_channel(n, &mut rng).h;
            let eq = EquivalentChannel::new(&h, &code, &qam).unwrap();
            let p = zero_pattern(&eq.r, None);
            let mut good = pattern_matches(&p, &PatternSpec::Proposed(n)).unwrap();
            for b in 0..n {
                let blk = p.block(8 * b, 8 * b, 8);
                good &= blk.is_subset_of(&d) && d.is_subset_of(&blk);
            }
            violations += usize::from(!good);
        }
    }
    let el = t.elapsed();
    let pass = violations == 0 && el < Duration::from_secs(10);
    report(
        5,
        "R-matrix structure",
        pass,
        el,
        &format!("{violations} violations over 800 channels"),
    );
    assert!(pass);
}

#[test]
fn criterion_06_decoder_oracle_equivalence() {
    let t = Instant::now();
    let code = rate_code(2).unwrap();
    let qam = rotated_qam(4, DEFAULT_THETA).unwrap();
    let pam = qam.pam().unwrap();
    let snr = db_to_linear(10.0);
    let g = signal_gain(snr);
    let (mut worst, mut ties, mut mismatches) = (0.0f64, 0, 0);
    for i in 0..100u64 {
        let mut data = substream(6, Stream::Data, &[i]);
        let mut chan = substream(6, Stream::Channel, &[i]);
        let mut noise = substream(6, Stream::Noise, &[i]);
        let (_, sym) = random_symbols(&code, &qam, &mut data);
        let s = encode(&code, &sym).unwrap();
        let h = sample_channel(2, &mut chan).h;
        let eq = EquivalentChannel::new(&h, &code, &qam).unwrap();
        let y = eq.project(&transmit(&s, &h, snr, &mut noise));
        let bf = brute_force_ml(&y, &eq.r, g, &qam, 8).unwrap();
        for other in [
            sphere_decode(&y, &eq.r, g, pam).unwrap(),
            conditional_decode(&y, &eq.r, g, pam, 2).unwrap(),
        ] {
            let diff = (other.metric - bf.metric).abs();
            worst = worst.max(diff);
            if other.indices != bf.indices {
                if other.metric == bf.metric {
                    println!(
                        "instance {i}: exact tie between {:?} and {:?}",
                        bf.indices, other.indices
                    );
                    ties += 1;
                } else {
                    mismatches += 1;
                }
            }
        }
    }
    let el = t.elapsed();
    let pass = worst <= 1e-9 && mismatches == 0 && el < Duration::from_secs(60);
    report(
        6,
        "decoder oracle equivalence",
        pass,
        el,
        &format!("max metric gap {worst:.2e}, {mismatches} decision mismatches, {ties} exact ties"),
    );
    assert!(pass);
}

#[test]
fn criterion_07_complexity_structure() {
    let t = Instant::now();
    let mut details = Vec::new();
    let mut ok = true;
    for (n_min, m) in [(1usize, 4usize), (1, 16), (2, 4)] {
        let code = rate_code(n_min).unwrap();
        let qam = rotated_qam(m, DEFAULT_THETA).unwrap();
        let pam = qam.pam().unwrap();
        let bound = 4.0 * (m as f64).sqrt() * (m as f64).powi(4 * (n_min as i32 - 1));
        let snr = db_to_linear(10.0);
        let mut max_leaves = 0u64;
        for i in 0..1000u64 {
            let tag = [n_min as u64, m as u64, i];
            let (_, sym) = random_symbols(&code, &qam, &mut substream(7, Stream::Data, &tag));
            let s = encode(&code, &sym).unwrap();
            let h = sample_channel(n_min, &mut substream(7, Stream::Channel, &tag)).h;
            let eq = EquivalentChannel::new(&h, &code, &qam).unwrap();
            let y = eq.project(&transmit(
                &s,
                &h,
                snr,
                &mut substream(7, Stream::Noise, &tag),
            ));
            let res = conditional_decode(&y, &eq.r, signal_gain(snr), pam, n_min).unwrap();
            ok &= !res.fell_back;
            max_leaves = max_leaves.max(res.leaves);
        }
        ok &= max_leaves as f64 <= bound;
        details.push(format!(
            "n_min {n_min}, M {m}: max leaves {max_leaves} <= {bound}"
        ));
    }
    let el = t.elapsed();
    let pass = ok && el < Duration::from_secs(60);
    report(7, "complexity structure", pass, el, &details.join("; "));
    assert!(pass);
}

#[test]
fn criterion_08_information_losslessness() {
    let t = Instant::now();
    let code = rate_code(4).unwrap();
    let mut rng = substream(8, Stream::Channel, &[]);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let h = sample_channel(4, &mut rng).h;
        for db in [0.0, 10.0, 20.0] {
            let snr = db_to_linear(db);
            let gap =
                (code_capacity_integrand(&code, &h, snr) - raw_capacity_integrand(&h, snr)).abs();
            worst = worst.max(gap);
        }
    }
    let el = t.elapsed();
    let pass = worst <= 1e-9 && el < Duration::from_secs(10);
    report(
        8,
        "information losslessness",
        pass,
        el,
        &format!("max per-realization gap {worst:.2e} bits over 300 evaluations"),
    );
    assert!(pass);
}

#[test]
fn criterion_09_ser_behavior() {
    let t = Instant::now();
    let grid = vec![4.0, 8.0, 12.0, 16.0, 20.0];
    let mut cfg = CampaignConfig::new(CodeFamilyId::Rate2, 2, 4, grid);
    cfg.trials = 100_000;
    cfg.max_errors = None;
    cfg.seed = 9;
    cfg.decoder = DecoderKind::Sphere;
    let sphere = run_ser(&cfg).unwrap();
    cfg.decoder = DecoderKind::Conditional;
    let cond = run_ser(&cfg).unwrap();
    let el = t.elapsed();
    let mut ok = true;
    for w in sphere.points.windows(2) {
        let gap = w[0].ser - w[1].ser;
        let sigma = (w[0].stderr.powi(2) + w[1].stderr.powi(2)).sqrt();
        ok &= gap > 0.0 && gap > 3.0 * sigma;
    }
    let paired = sphere
        .points
        .iter()
        .zip(&cond.points)
        .all(|(a, b)| a.errors == b.errors && a.trials == b.trials);
    let pass = ok && paired && el <= Duration::from_secs(10 * 60);
    let sers: Vec<String> = sphere
        .points
        .iter()
        .map(|p| format!("{} dB {:.3e}±{:.1e}", p.snr_db, p.ser, p.stderr))
        .collect();
    report(
        9,
        "SER behavior",
        pass,
        el,
        &format!("{}; paired decoders identical: {paired}", sers.join(", ")),
    );
    assert!(pass);
}

fn cli(dir: &Path, args: &[&str]) -> i32 {
    Command::new(env!("CARGO_BIN_EXE_stbc-lab"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
        .status
        .code()
        .unwrap_or(-1)
}

#[test]
fn criterion_10_reproducibility() {
    let t = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let runs: [(&str, &[&str], &str); 6] = [
        ("verify", &["--trials", "10"], "json"),
        ("gen", &["--code", "rate3"], "txt"),
        (
            "rmatrix",
            &["--code", "rate3", "--nr", "3", "--seed", "4"],
            "txt",
        ),
        (
            "mindet",
            &[
                "--code",
                "ciod",
                "--mod",
                "16",
                "--samples",
                "20000",
                "--seed",
                "3",
            ],
            "json",
        ),
        (
            "capacity",
            &[
                "--code", "rate4", "--nr", "4", "--snr", "0:10:20", "--trials", "300",
            ],
            "csv",
        ),
        (
            "ser",
            &[
                "--code", "rate2", "--nr", "2", "--snr", "6,12", "--trials", "2000", "--seed", "5",
            ],
            "csv",
        ),
    ];
    let mut failures = Vec::new();
    for (cmd, args, ext) in runs {
        let first = format!("{cmd}_a.{ext}");
        let second = format!("{cmd}_b.{ext}");
        let mut a: Vec<&str> = vec![cmd];
        a.extend_from_slice(args);
        a.extend(["--out", first.as_str()]);
        let manifest = format!("{first}.manifest.json");
        let code_a = cli(d, &a);
        let code_b = cli(d, &[cmd, "--config", &manifest, "--out", &second]);
        let same = std::fs::read(d.join(&first)).ok() == std::fs::read(d.join(&second)).ok()
            && d.join(&first).exists();
        if code_a != 0 || code_b != 0 || !same {
            failures.push(format!("{cmd} (exit {code_a}/{code_b}, identical {same})"));
        }
    }
    let el = t.elapsed();
    let pass = failures.is_empty();
    report(
        10,
        "reproducibility",
        pass,
        el,
        &if pass {
            "6 subcommands reproduced byte for byte from their manifests".to_string()
        } else {
            failures.join("; ")
        },
    );
    assert!(pass);
}
