use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, NoiseLevel};
use crate::ecg::{generate_dataset_with, BeatClass, EcgSignal, PopulationBounds};
use crate::error::{Error, Result};
use crate::features::{extract_features, FeatureVector};
use crate::forest::{
    class_indices, evaluate, grid_search, split_dataset, train_forest, DatasetSplit, FeatureMatrix, ForestModel,
    Hyperparams, MetricsReport, TrainingSet,
};
use crate::noise::{add_noise, baseline_filter, calibrate_noise_for_snr, NoiseSpec};
use crate::rng::{RngSeed, Stream};

/// Noisy and filtered versions of one generated dataset.
#[derive(Debug, Clone)]
pub struct PreparedData {
    pub clean: Vec<EcgSignal>,
    pub noisy: Vec<EcgSignal>,
    pub labels: Vec<BeatClass>,
    /// Features of the noisy signals (arm A).
    pub noisy_features: Vec<FeatureVector>,
    /// Features of the noisy signals after the conventional filter (arm B).
    pub filtered_features: Vec<FeatureVector>,
    /// Segment indices whose features could not be extracted in either arm.
    pub dropped: Vec<usize>,
    /// Segments kept, aligned with the feature and label vectors.
    pub kept: Vec<usize>,
    pub noise_std_mean: f64,
}

/// Seed of repetition `rep` of an experiment rooted at `root`.
pub fn repetition_seed(root: u64, rep: usize) -> RngSeed {
    RngSeed(root).derive(Stream::Experiment, rep as u64)
}

fn noise_spec(signal: &EcgSignal, level: NoiseLevel, seed: RngSeed) -> Result<NoiseSpec> {
    match level {
        NoiseLevel::StdMv(std) => Ok(NoiseSpec::new(std, seed)),
        NoiseLevel::TargetSnrDb(db) => calibrate_noise_for_snr(signal, db, seed).map(|c| c.spec),
    }
}

/// Generates, corrupts, filters and featurizes one dataset.
pub fn prepare_data(cfg: &ExperimentConfig, seed: RngSeed) -> Result<PreparedData> {
    let d = &cfg.dataset;
    let clean =
        generate_dataset_with(d.n_segments, d.anomaly_fraction, d.duration_s, &PopulationBounds::default(), seed)?;
    let gt = cfg.ml.use_ground_truth_peaks;
    let per_segment: Vec<(EcgSignal, f64, Option<(FeatureVector, FeatureVector)>)> = clean
        .par_iter()
        .enumerate()
        .map(|(i, s)| {
            let spec = noise_spec(s, cfg.noise, seed.derive(Stream::Noise, i as u64))?;
            let noisy = add_noise(s, &spec)?;
            let filtered = baseline_filter(&noisy)?;
            let features = match (extract_features(&noisy, gt), extract_features(&filtered, gt)) {
                (Ok(a), Ok(b)) => Some((a, b)),
                _ => None,
            };
            Ok((noisy, spec.std, features))
        })
        .collect::<Result<_>>()?;

    let mut out = PreparedData {
        labels: Vec::new(),
        noisy: Vec::with_capacity(clean.len()),
        noisy_features: Vec::new(),
        filtered_features: Vec::new(),
        dropped: Vec::new(),
        kept: Vec::new(),
        noise_std_mean: per_segment.iter().map(|p| p.1).sum::<f64>() / per_segment.len() as f64,
        clean,
    };
    for (i, (noisy, _, features)) in per_segment.into_iter().enumerate() {
        match features {
            Some((a, b)) => {
                out.labels.push(out.clean[i].segment_label);
                out.noisy_features.push(a);
                out.filtered_features.push(b);
                out.kept.push(i);
            }
            None => out.dropped.push(i),
        }
        out.noisy.push(noisy);
    }
    Ok(out)
}

/// Outcome of one training arm on one repetition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmResult {
    pub hyperparams: Hyperparams,
    pub validation_macro_f1: f64,
    /// Scored on the shared noisy test rows.
    pub test: MetricsReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedResult {
    pub repetition: usize,
    pub seed: RngSeed,
    pub noise_std_mean_mv: f64,
    pub dropped_segments: usize,
    pub split_sizes: (usize, usize, usize),
    pub noise_augmented: ArmResult,
    pub filtered: ArmResult,
    /// Filtered-arm model scored on filtered test features (its own
    /// preprocessing applied at test time too).
    pub filtered_matched_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmSummary {
    pub accuracy_mean: f64,
    pub accuracy_std: f64,
    pub macro_f1_mean: f64,
    pub recall_mean: [f64; 3],
    pub sensitivity_mean: f64,
    pub specificity_mean: f64,
}

impl ArmSummary {
    fn from_reports(reports: &[&MetricsReport]) -> Self {
        let n = reports.len() as f64;
        let mean = |f: &dyn Fn(&MetricsReport) -> f64| reports.iter().map(|r| f(r)).sum::<f64>() / n;
        let accuracy_mean = mean(&|r| r.accuracy);
        let var = reports.iter().map(|r| (r.accuracy - accuracy_mean).powi(2)).sum::<f64>() / n;
        ArmSummary {
            accuracy_mean,
            accuracy_std: var.sqrt(),
            macro_f1_mean: mean(&|r| r.macro_f1),
            recall_mean: [mean(&|r| r.recall[0]), mean(&|r| r.recall[1]), mean(&|r| r.recall[2])],
            sensitivity_mean: mean(&|r| r.sensitivity),
            specificity_mean: mean(&|r| r.specificity),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlResults {
    pub per_seed: Vec<SeedResult>,
    pub noise_augmented: ArmSummary,
    pub filtered: ArmSummary,
    /// Mean accuracy of the noise-augmented arm minus the filtered arm.
    pub accuracy_gap: f64,
}

fn matrix(features: &[FeatureVector], idx: &[usize]) -> FeatureMatrix {
    FeatureMatrix::from_vectors(&idx.iter().map(|&i| features[i]).collect::<Vec<_>>())
}

fn train_arm(
    cfg: &ExperimentConfig,
    features: &[FeatureVector],
    y: &[u8],
    ids: &[u64],
    split: &DatasetSplit,
    test_x: &FeatureMatrix,
    test_y: &[BeatClass],
    seed: RngSeed,
) -> Result<(ArmResult, ForestModel)> {
    let pick = |idx: &[usize]| -> (FeatureMatrix, Vec<u8>, Vec<u64>) {
        (matrix(features, idx), idx.iter().map(|&i| y[i]).collect(), idx.iter().map(|&i| ids[i]).collect())
    };
    let (tx, ty, tid) = pick(&split.train);
    let (vx, vy, _) = pick(&split.validation);
    let train = TrainingSet { x: &tx, labels: &ty, ids: Some(&tid) };
    let search = grid_search(&train, (&vx, &vy), &cfg.ml.grid, cfg.ml.features_per_split, seed)?;
    let model = train_forest(&train, &search.best, seed)?;
    let test = evaluate(&model, test_x, test_y)?;
    Ok((ArmResult { hyperparams: search.best, validation_macro_f1: search.best_score, test }, model))
}

/// The stratified split shared by both arms of a repetition.
pub fn repetition_split(cfg: &ExperimentConfig, data: &PreparedData, seed: RngSeed) -> Result<DatasetSplit> {
    let split = split_dataset(&class_indices(&data.labels), cfg.ml.split, seed)?;
    if split.degenerate {
        return Err(Error::InsufficientData("dataset too small for a train/validation/test split".into()));
    }
    Ok(split)
}

/// Noisy features and labels of the test rows.
pub fn noisy_test_set(data: &PreparedData, split: &DatasetSplit) -> (FeatureMatrix, Vec<BeatClass>) {
    (matrix(&data.noisy_features, &split.test), split.test.iter().map(|&i| data.labels[i]).collect())
}

/// One repetition of the two-arm comparison on prepared data. Returns the
/// noise-augmented model alongside the scores.
pub fn run_repetition(
    cfg: &ExperimentConfig,
    data: &PreparedData,
    repetition: usize,
    seed: RngSeed,
) -> Result<(SeedResult, ForestModel)> {
    let y = class_indices(&data.labels);
    let ids: Vec<u64> = data.kept.iter().map(|&i| i as u64).collect();
    let split = repetition_split(cfg, data, seed)?;
    let (test_x, test_y) = noisy_test_set(data, &split);

    let (arm_a, model_a) = train_arm(cfg, &data.noisy_features, &y, &ids, &split, &test_x, &test_y, seed)?;
    let (arm_b, model_b) = train_arm(cfg, &data.filtered_features, &y, &ids, &split, &test_x, &test_y, seed)?;
    let matched = evaluate(&model_b, &matrix(&data.filtered_features, &split.test), &test_y)?;

    Ok((
        SeedResult {
            repetition,
            seed,
            noise_std_mean_mv: data.noise_std_mean,
            dropped_segments: data.dropped.len(),
            split_sizes: (split.train.len(), split.validation.len(), split.test.len()),
            noise_augmented: arm_a,
            filtered: arm_b,
            filtered_matched_accuracy: matched.accuracy,
        },
        model_a,
    ))
}

impl MlResults {
    pub fn from_seeds(per_seed: Vec<SeedResult>) -> Self {
        let a: Vec<&MetricsReport> = per_seed.iter().map(|s| &s.noise_augmented.test).collect();
        let b: Vec<&MetricsReport> = per_seed.iter().map(|s| &s.filtered.test).collect();
        let noise_augmented = ArmSummary::from_reports(&a);
        let filtered = ArmSummary::from_reports(&b);
        let accuracy_gap = noise_augmented.accuracy_mean - filtered.accuracy_mean;
        MlResults { per_seed, noise_augmented, filtered, accuracy_gap }
    }
}

/// The full comparison: `cfg.ml.n_seeds` independent repetitions, each
/// with its own dataset, noise, split and forests.
pub fn run_ml_experiment(cfg: &ExperimentConfig) -> Result<MlResults> {
    cfg.validate()?;
    let per_seed = (0..cfg.ml.n_seeds)
        .map(|rep| {
            let seed = repetition_seed(cfg.dataset.seed, rep);
            let data = prepare_data(cfg, seed)?;
            run_repetition(cfg, &data, rep, seed).map(|(r, _)| r)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MlResults::from_seeds(per_seed))
}
