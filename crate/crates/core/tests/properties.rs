//! Property-based checks of module invariants.

use std::sync::OnceLock;

use noisepulse::bench::config::ExperimentConfig;
use noisepulse::bench::report::{canonical_json, PowerLedger};
use noisepulse::ecg::{generate_dataset, synth_segment, BeatClass, MorphologyParams};
use noisepulse::features::{detect_r_peaks, dwt, idwt, REFRACTORY_S};
use noisepulse::forest::{
    split_dataset, train_forest, FeatureMatrix, ForestModel, Hyperparams, MetricsReport, TrainingSet,
};
use noisepulse::noise::{add_noise, NoiseSpec};
use noisepulse::puf::{fractional_hamming, hamming_distance};
use noisepulse::seal::{BchCode, BCH_T};
use noisepulse::RngSeed;
use proptest::prelude::*;

fn signal(len: std::ops::Range<usize>) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-5.0f64..5.0, len)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dwt_is_linear(x in signal(64..300), seed in any::<u64>(), a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let y: Vec<f64> = x.iter().enumerate().map(|(i, v)| (v * 1.7 + (i as f64 + seed as f64 % 7.0)).sin()).collect();
        let mix: Vec<f64> = x.iter().zip(&y).map(|(p, q)| a * p + b * q).collect();
        let (dx, dy, dm) = (dwt(&x, 5).unwrap(), dwt(&y, 5).unwrap(), dwt(&mix, 5).unwrap());
        for ((bx, by), bm) in dx.bands().zip(dy.bands()).zip(dm.bands()) {
            for ((cx, cy), cm) in bx.iter().zip(by).zip(bm) {
                prop_assert!((a * cx + b * cy - cm).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn dwt_reconstructs(x in signal(64..400)) {
        let back = idwt(&dwt(&x, 5).unwrap());
        let err: f64 = x.iter().zip(&back).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt();
        let norm: f64 = x.iter().map(|p| p * p).sum::<f64>().sqrt().max(1e-300);
        prop_assert_eq!(back.len(), x.len());
        prop_assert!(err / norm < 1e-9);
    }

    #[test]
    fn hamming_is_a_metric(a in prop::collection::vec(any::<bool>(), 127),
                           b in prop::collection::vec(any::<bool>(), 127),
                           c in prop::collection::vec(any::<bool>(), 127)) {
        prop_assert_eq!(fractional_hamming(&a, &b).unwrap(), fractional_hamming(&b, &a).unwrap());
        prop_assert_eq!(hamming_distance(&a, &a).unwrap(), 0);
        let (ab, bc, ac) = (hamming_distance(&a, &b).unwrap(), hamming_distance(&b, &c).unwrap(), hamming_distance(&a, &c).unwrap());
        prop_assert!(ac <= ab + bc);
    }

    #[test]
    fn bch_corrects_within_radius(msg in any::<u64>(), positions in prop::collection::btree_set(0usize..127, 0..=BCH_T)) {
        let code = BchCode::get();
        let word = code.encode(msg);
        prop_assert_eq!((word >> 63) as u64, msg);
        let error = positions.iter().fold(0u128, |e, &p| e | 1u128 << p);
        let (decoded, corrected) = code.decode(word ^ error).unwrap();
        prop_assert_eq!(decoded, msg);
        prop_assert_eq!(corrected, positions.len());
    }

    #[test]
    fn bch_is_linear(a in any::<u64>(), b in any::<u64>()) {
        let code = BchCode::get();
        prop_assert_eq!(code.encode(a) ^ code.encode(b), code.encode(a ^ b));
    }

    #[test]
    fn split_partitions_and_stratifies(labels in prop::collection::vec(0u8..3, 3..400), seed in any::<u64>()) {
        prop_assume!((0..3u8).all(|c| labels.contains(&c)));
        let s = split_dataset(&labels, (0.7, 0.15, 0.15), RngSeed(seed)).unwrap();
        let mut all: Vec<usize> = s.train.iter().chain(&s.validation).chain(&s.test).copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..labels.len()).collect::<Vec<_>>());
        if !s.degenerate {
            for c in 0..3u8 {
                let n = labels.iter().filter(|&&l| l == c).count() as f64;
                let train = s.train.iter().filter(|&&i| labels[i] == c).count() as f64;
                prop_assert!((train - (n * 0.7).round()).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn confusion_entries_sum_to_rows(pairs in prop::collection::vec((0u8..3, 0u8..3), 1..300)) {
        let (truth, pred): (Vec<u8>, Vec<u8>) = pairs.into_iter().unzip();
        let m = MetricsReport::from_labels(&truth, &pred);
        prop_assert_eq!(m.confusion.iter().flatten().sum::<u64>() as usize, truth.len());
        prop_assert_eq!(m.total as usize, truth.len());
        let diag: u64 = (0..3).map(|i| m.confusion[i][i]).sum();
        prop_assert!((m.accuracy - diag as f64 / truth.len() as f64).abs() < 1e-15);
    }

    #[test]
    fn forest_votes_sum_to_one(row in prop::collection::vec(-10.0f64..10.0, 15)) {
        let p = small_forest().predict_row(&row).unwrap();
        prop_assert!((p.votes.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(p.votes.iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn config_text_round_trips(n in 3usize..100_000, frac in 0.0f64..1.0, seed in any::<u64>(),
                               snr in prop::option::of(0.0f64..60.0), trees in prop::collection::vec(1usize..500, 1..4),
                               devices in 2usize..5000, sigma in 1e-6f64..1e-2) {
        let mut cfg = ExperimentConfig::default();
        cfg.dataset.n_segments = n;
        cfg.dataset.anomaly_fraction = frac;
        cfg.dataset.seed = seed;
        if let Some(db) = snr {
            cfg.noise = noisepulse::bench::NoiseLevel::TargetSnrDb(db);
        }
        cfg.ml.grid.n_trees = trees;
        cfg.puf.n_devices = devices;
        cfg.puf.params.sigma_meas = sigma;
        let back = ExperimentConfig::parse(&cfg.to_text()).unwrap();
        prop_assert_eq!(back, cfg);
    }

    #[test]
    fn ledger_totals_are_sums(p in prop::collection::btree_map("[a-z]{1,8}", 0.0f64..1000.0, 1..6),
                              l in prop::collection::btree_map("[a-z]{1,8}", 0.0f64..100.0, 1..6)) {
        let ledger = PowerLedger::new(p.clone(), l.clone());
        prop_assert!((ledger.total_power_uw - p.values().sum::<f64>()).abs() < 1e-9);
        prop_assert!((ledger.total_latency_ms - l.values().sum::<f64>()).abs() < 1e-9);
        prop_assert_eq!(canonical_json(&ledger).unwrap(), canonical_json(&ledger.clone()).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn noise_preserves_everything_but_samples(seed in any::<u64>(), std in 0.0f64..1.0, class in 0usize..3) {
        let clean = synth_segment(&MorphologyParams::default(), BeatClass::ALL[class], 4.0, RngSeed(seed)).unwrap();
        let noisy = add_noise(&clean, &NoiseSpec::new(std, RngSeed(seed ^ 1))).unwrap();
        prop_assert_eq!(noisy.len(), clean.len());
        prop_assert_eq!(noisy.sample_rate, clean.sample_rate);
        prop_assert_eq!(&noisy.r_peaks, &clean.r_peaks);
        prop_assert_eq!(&noisy.beat_labels, &clean.beat_labels);
        prop_assert_eq!(noisy.segment_label, clean.segment_label);
    }

    #[test]
    fn detector_respects_refractory_period(seed in any::<u64>(), std in 0.0f64..0.6, class in 0usize..3) {
        let clean = synth_segment(&MorphologyParams::default(), BeatClass::ALL[class], 10.0, RngSeed(seed)).unwrap();
        let noisy = add_noise(&clean, &NoiseSpec::new(std, RngSeed(seed.wrapping_add(1)))).unwrap();
        if let Ok(peaks) = detect_r_peaks(&noisy) {
            let min_gap = (REFRACTORY_S * noisy.sample_rate) as usize;
            prop_assert!(peaks.windows(2).all(|w| w[1] - w[0] >= min_gap));
        }
    }

    #[test]
    fn generator_is_deterministic_and_counts_follow_rounding(n in 1usize..60, frac in 0.0f64..1.0, seed in any::<u64>()) {
        let a = generate_dataset(n, frac, RngSeed(seed)).unwrap();
        prop_assert_eq!(&a, &generate_dataset(n, frac, RngSeed(seed)).unwrap());
        let anomalies = (n as f64 * frac).round() as usize;
        let pvc = anomalies.div_ceil(2);
        let count = |c| a.iter().filter(|s| s.segment_label == c).count();
        prop_assert_eq!(count(BeatClass::Pvc), pvc);
        prop_assert_eq!(count(BeatClass::Af), anomalies - pvc);
        prop_assert_eq!(count(BeatClass::Normal), n - anomalies);
    }
}

fn small_forest() -> &'static ForestModel {
    static MODEL: OnceLock<ForestModel> = OnceLock::new();
    MODEL.get_or_init(|| {
        let rows: Vec<f64> = (0..90 * 15).map(|i| ((i * 37 % 101) as f64 / 10.0) - 5.0).collect();
        let labels: Vec<u8> = (0..90).map(|i| (i % 3) as u8).collect();
        let x = FeatureMatrix::new(15, rows).unwrap();
        let hp = Hyperparams { n_trees: 25, max_depth: 6, ..Hyperparams::default() };
        train_forest(&TrainingSet::new(&x, &labels), &hp, RngSeed(9)).unwrap()
    })
}
