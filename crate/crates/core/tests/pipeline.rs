//! End-to-end properties across code construction, channel and decoders.

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stbc_lab::channel::{sample_channel, signal_gain, transmit, EquivalentChannel};
use stbc_lab::decoder::{
    brute_force_ml, conditional_decode, conditional_leaf_bound, pattern_matches, sphere_decode,
    zero_pattern, PatternSpec,
};
use stbc_lab::realification::{tilde, vec};
use stbc_lab::stbc::{
    encode, load_weights, rate_code, rotated_qam, save_weights, Constellation,
    LinearDispersionCode, DEFAULT_THETA,
};
use stbc_lab::Complex64;

fn random_codeword(
    code: &LinearDispersionCode,
    qam: &Constellation,
    rng: &mut ChaCha8Rng,
) -> (Vec<usize>, Vec<Complex64>) {
    let idx: Vec<usize> = (0..code.k())
        .map(|_| rng.random_range(0..qam.m()))
        .collect();
    let sym = idx.iter().map(|&i| qam.rotate(qam.points()[i])).collect();
    (idx, sym)
}

#[test]
fn energy_normalization_by_monte_carlo() {
    let mut rng = ChaCha8Rng::seed_from_u64(100);
    for m in [4, 16] {
        let qam = rotated_qam(m, DEFAULT_THETA).unwrap();
        for r in 1..=4 {
            let code = rate_code(r).unwrap();
            let n = 20_000;
            let mut acc = 0.0;
            for _ in 0..n {
                let (_, sym) = random_codeword(&code, &qam, &mut rng);
                acc += encode(&code, &sym).unwrap().norm_sqr();
            }
            let mean = acc / n as f64;
            assert!((mean / 16.0 - 1.0).abs() < 0.01, "rate {r}, M={m}: {mean}");
        }
    }
}

#[test]
fn r_pattern_for_matched_and_larger_arrays() {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let qam = rotated_qam(4, DEFAULT_THETA).unwrap();
    let d = PatternSpec::Proposed(1).support(8).unwrap();
    for n_min in 1..=4 {
        let code = rate_code(n_min).unwrap();
        for n_r in n_min..=5 {
            for _ in 0..25 {
                let h = sample_channel(n_r, &mut rng).h;
                let eq = EquivalentChannel::new(&h, &code, &qam).unwrap();
                let p = zero_pattern(&eq.r, None);
                assert!(pattern_matches(&p, &PatternSpec::Proposed(n_min)).unwrap());
                // every diagonal block has exactly the D support
                for b in 0..n_min {
                    let blk = p.block(8 * b, 8 * b, 8);
                    assert!(
                        blk.is_subset_of(&d) && d.is_subset_of(&blk),
                        "n_min {n_min}, n_r {n_r}"
                    );
                }
            }
        }
    }
}

#[test]
fn sphere_complexity_falls_with_snr() {
    let mut rng = ChaCha8Rng::seed_from_u64(102);
    let code = rate_code(2).unwrap();
    let qam = rotated_qam(4, DEFAULT_THETA).unwrap();
    let pam = qam.pam().unwrap();
    let mut mean_nodes = Vec::new();
    for db in [0.0, 10.0, 20.0] {
        let snr = 10f64.powf(db / 10.0);
        let mut total = 0u64;
        for _ in 0..1000 {
            let (_, sym) = random_codeword(&code, &qam, &mut rng);
            let s = encode(&code, &sym).unwrap();
            let h = sample_channel(2, &mut rng).h;
            let eq = EquivalentChannel::new(&h, &code, &qam).unwrap();
            let y = eq.project(&transmit(&s, &h, snr, &mut rng));
            total += sphere_decode(&y, &eq.r, signal_gain(snr), pam)
                .unwrap()
                .visited;
        }
        mean_nodes.push(total as f64 / 1000.0);
    }
    assert!(
        mean_nodes[0] > mean_nodes[1] && mean_nodes[1] > mean_nodes[2],
        "{mean_nodes:?}"
    );
    assert!(mean_nodes[2] * 3.0 < mean_nodes[0]);
}

#[test]
fn conditional_counter_respects_bound_for_16qam() {
    let mut rng = ChaCha8Rng::seed_from_u64(103);
    let code = rate_code(1).unwrap();
    let qam = rotated_qam(16, DEFAULT_THETA).unwrap();
    let pam = qam.pam().unwrap();
    for _ in 0..200 {
        let (_, sym) = random_codeword(&code, &qam, &mut rng);
        let s = encode(&code, &sym).unwrap();
        let h = sample_channel(1, &mut rng).h;
        let eq = EquivalentChannel::new(&h, &code, &qam).unwrap();
        let y = eq.project(&transmit(&s, &h, 100.0, &mut rng));
        let res = conditional_decode(&y, &eq.r, signal_gain(100.0), pam, 1).unwrap();
        assert!(res.leaves as f64 <= conditional_leaf_bound(16, 1));
        let sd = sphere_decode(&y, &eq.r, signal_gain(100.0), pam).unwrap();
        assert_eq!(res.metric, sd.metric);
    }
}

#[test]
fn weight_file_round_trip_on_disk() {
    let dir = tempfile::tempdir().unwrap();
    for r in 1..=4 {
        let code = rate_code(r).unwrap();
        let path = dir.path().join(format!("rate{r}.txt"));
        save_weights(&code, &path).unwrap();
        let back = load_weights(&path).unwrap();
        assert_eq!(back.weights(), code.weights());
        assert_eq!(back.scale(), code.scale());
        assert_eq!(back.generator(), code.generator());
    }
    assert!(matches!(
        load_weights(&dir.path().join("missing.txt")),
        Err(stbc_lab::Error::Io { .. })
    ));
}

fn complex_strategy(n: usize) -> impl Strategy<Value = Vec<Complex64>> {
    prop::collection::vec((-2.0f64..2.0, -2.0f64..2.0), n)
        .prop_map(|v| v.into_iter().map(|(a, b)| Complex64::new(a, b)).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn encoding_is_real_linear(a in complex_strategy(16), b in complex_strategy(16), c in -3.0f64..3.0) {
        let code = rate_code(4).unwrap();
        let sum: Vec<Complex64> = a.iter().zip(&b).map(|(x, y)| x * c + y).collect();
        let lhs = encode(&code, &sum).unwrap();
        let rhs = &encode(&code, &a).unwrap().scale_real(c) + &encode(&code, &b).unwrap();
        prop_assert!(lhs.max_abs_diff(&rhs) < 1e-12);
    }

    #[test]
    fn generator_reproduces_codeword(s in complex_strategy(12)) {
        let code = rate_code(3).unwrap();
        let lhs = tilde(&vec(&encode(&code, &s).unwrap()));
        let rhs = code.generator().mul_vec(&tilde(&s));
        let err = lhs.iter().zip(&rhs).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        prop_assert!(err < 1e-12);
    }

    #[test]
    fn nested_codes_agree_on_shared_symbols(s in complex_strategy(8)) {
        // rate-4 with the last 8 symbols zeroed is rate-2 up to the normalization ratio
        let r2 = rate_code(2).unwrap();
        let r4 = rate_code(4).unwrap();
        let mut padded = s.clone();
        padded.resize(16, Complex64::new(0.0, 0.0));
        let a = encode(&r2, &s).unwrap();
        let b = encode(&r4, &padded).unwrap().scale_real(r2.scale() / r4.scale());
        prop_assert!(a.max_abs_diff(&b) < 1e-12);
    }

    #[test]
    fn decoders_agree_on_random_instances(seed in any::<u64>(), db in 0.0f64..20.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let code = rate_code(2).unwrap();
        let qam = rotated_qam(4, DEFAULT_THETA).unwrap();
        let pam = qam.pam().unwrap();
        let snr = 10f64.powf(db / 10.0);
        let (idx, sym) = random_codeword(&code, &qam, &mut rng);
        let s = encode(&code, &sym).unwrap();
        let h = sample_channel(2, &mut rng).h;
        let eq = EquivalentChannel::new(&h, &code, &qam).unwrap();
        let y = eq.project(&transmit(&s, &h, snr, &mut rng));
        let g = signal_gain(snr);
        let bf = brute_force_ml(&y, &eq.r, g, &qam, 8).unwrap();
        let sd = sphere_decode(&y, &eq.r, g, pam).unwrap();
        let cd = conditional_decode(&y, &eq.r, g, pam, 2).unwrap();
        prop_assert_eq!(bf.metric, sd.metric);
        prop_assert_eq!(bf.metric, cd.metric);
        prop_assert_eq!(&bf.indices, &sd.indices);
        prop_assert_eq!(&bf.indices, &cd.indices);
        prop_assert!(cd.leaves as f64 <= conditional_leaf_bound(4, 2));
        // the true codeword is never better than the ML decision
        let x_true = tilde(&idx.iter().map(|&i| qam.points()[i]).collect::<Vec<_>>());
        prop_assert!(stbc_lab::decoder::metric(&y, &eq.r, g, &x_true) >= bf.metric);
    }

    #[test]
    fn slicing_is_nearest(v in -5.0f64..5.0) {
        let qam = rotated_qam(64, 0.0).unwrap();
        let pam = qam.pam().unwrap();
        let (i, p) = stbc_lab::decoder::slice_pam(v, pam);
        prop_assert_eq!(pam[i], p);
        for &q in pam {
            prop_assert!((v - p).abs() <= (v - q).abs());
        }
    }
}
