//! Pipeline stages and the files they write.

use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::ml::{
    noisy_test_set, prepare_data, repetition_seed, repetition_split, run_repetition, MlResults, PreparedData,
    SeedResult,
};
use super::plot::{emit_plots, PlotManifest};
use super::puf::{puf_seed, run_puf_experiment, PufResults};
use super::report::{canonical_json, RunReport, Timings, TIMINGS_FILE};
use crate::ecg::{generate_dataset_with, write_dataset_csv, EcgSignal, PopulationBounds};
use crate::error::{Error, Result};
use crate::features::write_feature_csv;
use crate::forest::{evaluate, ForestModel, MetricsReport};
use crate::noise::{welch_psd, PsdEstimate, DEFAULT_OVERLAP, DEFAULT_WINDOW};
use crate::puf::{sample_device, EnvCondition};
use crate::seal::keygen_latency_probe;

pub const DATASET_META: &str = "dataset_meta.csv";
pub const DATASET_SAMPLES: &str = "dataset_samples.csv";
pub const FEATURES: &str = "features.csv";
pub const PSD: &str = "psd.csv";
pub const MODEL: &str = "model.json";
pub const ML_RESULTS: &str = "ml_results.json";
pub const TRAIN_RESULT: &str = "train_result.json";
pub const EVAL_METRICS: &str = "eval_metrics.json";
pub const PUF_STATS: &str = "puf_stats.json";
pub const PUF_DEVICES: &str = "puf_devices.csv";
pub const RUN_REPORT: &str = "run_report.json";
pub const MANIFEST: &str = "manifest.json";
pub const PLOTS_DIR: &str = "plots";

/// Segments averaged into the exported PSD pair.
pub const PSD_SEGMENTS: usize = 64;

/// Progress lines on stderr unless quiet.
#[derive(Debug, Clone, Copy, Default)]
pub struct Progress {
    pub quiet: bool,
}

impl Progress {
    pub fn say(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            eprintln!("{}", msg.as_ref());
        }
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    std::fs::write(path, canonical_json(value)?)?;
    Ok(())
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

/// Clean and noisy Welch PSDs averaged over the first segments.
pub fn psd_pair(clean: &[EcgSignal], noisy: &[EcgSignal], segments: usize) -> Result<(PsdEstimate, PsdEstimate)> {
    let avg = |signals: &[EcgSignal]| -> Result<PsdEstimate> {
        let used = &signals[..segments.min(signals.len())];
        let first = used.first().ok_or_else(|| Error::InsufficientData("no segments for a PSD".into()))?;
        let window = DEFAULT_WINDOW.min(first.len());
        let mut acc = welch_psd(first, window, DEFAULT_OVERLAP)?;
        for s in &used[1..] {
            let p = welch_psd(s, window, DEFAULT_OVERLAP)?;
            acc.power.iter_mut().zip(&p.power).for_each(|(a, b)| *a += b);
            acc.segments += p.segments;
        }
        acc.power.iter_mut().for_each(|a| *a /= used.len() as f64);
        Ok(acc)
    };
    Ok((avg(clean)?, avg(noisy)?))
}

pub fn write_psd_pair(path: &Path, clean: &PsdEstimate, noisy: &PsdEstimate) -> Result<()> {
    let mut f = BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "frequency_hz,clean_power,noisy_power")?;
    for ((fr, c), n) in clean.frequencies.iter().zip(&clean.power).zip(&noisy.power) {
        writeln!(f, "{fr:.6},{c:.9e},{n:.9e}")?;
    }
    f.flush()?;
    Ok(())
}

/// Reads a file written by [`write_psd_pair`].
pub fn read_psd_pair(path: &Path, sample_rate: f64) -> Result<(PsdEstimate, PsdEstimate)> {
    let mut freqs = Vec::new();
    let (mut clean, mut noisy) = (Vec::new(), Vec::new());
    for (i, line) in BufReader::new(std::fs::File::open(path)?).lines().enumerate().skip(1) {
        let line = line?;
        let cells: Vec<f64> = line
            .split(',')
            .map(|c| c.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Parse(format!("{} line {}: {e}", path.display(), i + 1)))?;
        if cells.len() != 3 {
            return Err(Error::Parse(format!("{} line {}: expected 3 columns", path.display(), i + 1)));
        }
        freqs.push(cells[0]);
        clean.push(cells[1]);
        noisy.push(cells[2]);
    }
    let window_length = 2 * freqs.len().saturating_sub(1);
    let make = |power| PsdEstimate {
        frequencies: freqs.clone(),
        power,
        window_length,
        overlap: DEFAULT_OVERLAP,
        sample_rate,
        segments: 0,
    };
    Ok((make(clean), make(noisy)))
}

/// Writes the clean dataset of repetition 0. `n` overrides the configured
/// segment count.
pub fn synth_stage(cfg: &ExperimentConfig, n: Option<usize>, out: &Path) -> Result<Vec<PathBuf>> {
    cfg.validate()?;
    let d = &cfg.dataset;
    let n = n.unwrap_or(d.n_segments);
    if n == 0 {
        return Err(Error::param("segment count must be positive"));
    }
    let seed = repetition_seed(d.seed, 0);
    let signals = generate_dataset_with(n, d.anomaly_fraction, d.duration_s, &PopulationBounds::default(), seed)?;
    let (meta, samples) = (out.join(DATASET_META), out.join(DATASET_SAMPLES));
    write_dataset_csv(&meta, &samples, &signals, seed)?;
    Ok(vec![meta, samples])
}

fn write_repetition_artifacts(
    data: &PreparedData,
    model: &ForestModel,
    seed: crate::rng::RngSeed,
    out: &Path,
) -> Result<()> {
    write_dataset_csv(&out.join(DATASET_META), &out.join(DATASET_SAMPLES), &data.clean, seed)?;
    write_feature_csv(&out.join(FEATURES), &data.noisy_features, &data.labels)?;
    let (c, n) = psd_pair(&data.clean, &data.noisy, PSD_SEGMENTS)?;
    write_psd_pair(&out.join(PSD), &c, &n)?;
    model.save(&out.join(MODEL))
}

/// Runs every repetition of the ML comparison. Repetition 0 also leaves
/// its dataset, features, PSD pair and noise-augmented model in `out`.
pub fn ml_stage(cfg: &ExperimentConfig, out: &Path, progress: Progress) -> Result<MlResults> {
    cfg.validate()?;
    let mut per_seed = Vec::with_capacity(cfg.ml.n_seeds);
    for rep in 0..cfg.ml.n_seeds {
        let seed = repetition_seed(cfg.dataset.seed, rep);
        let data = prepare_data(cfg, seed)?;
        let (result, model) = run_repetition(cfg, &data, rep, seed)?;
        progress.say(format!(
            "repetition {rep}: augmented {:.4}, filtered {:.4}",
            result.noise_augmented.test.accuracy, result.filtered.test.accuracy
        ));
        if rep == 0 {
            write_repetition_artifacts(&data, &model, seed, out)?;
        }
        per_seed.push(result);
    }
    let results = MlResults::from_seeds(per_seed);
    write_json(&out.join(ML_RESULTS), &results)?;
    Ok(results)
}

/// Trains repetition 0 and saves its noise-augmented model.
pub fn train_stage(cfg: &ExperimentConfig, out: &Path, progress: Progress) -> Result<SeedResult> {
    cfg.validate()?;
    let seed = repetition_seed(cfg.dataset.seed, 0);
    let data = prepare_data(cfg, seed)?;
    let (result, model) = run_repetition(cfg, &data, 0, seed)?;
    progress.say(format!("trained {:?}", result.noise_augmented.hyperparams));
    model.save(&out.join(MODEL))?;
    write_feature_csv(&out.join(FEATURES), &data.noisy_features, &data.labels)?;
    write_json(&out.join(TRAIN_RESULT), &result)?;
    Ok(result)
}

/// Scores a saved model on the noisy test rows of repetition 0.
pub fn eval_stage(cfg: &ExperimentConfig, model_path: &Path, out: &Path) -> Result<MetricsReport> {
    cfg.validate()?;
    let model = ForestModel::load(model_path)?;
    let seed = repetition_seed(cfg.dataset.seed, 0);
    let data = prepare_data(cfg, seed)?;
    let split = repetition_split(cfg, &data, seed)?;
    let (x, y) = noisy_test_set(&data, &split);
    let report = evaluate(&model, &x, &y)?;
    write_json(&out.join(EVAL_METRICS), &report)?;
    Ok(report)
}

/// Population statistics plus a per-device table.
pub fn puf_stage(cfg: &ExperimentConfig, out: &Path, timings: &mut Timings) -> Result<PufResults> {
    let results = run_puf_experiment(cfg)?;
    write_json(&out.join(PUF_STATS), &results)?;
    let mut f = BufWriter::new(std::fs::File::create(out.join(PUF_DEVICES))?);
    writeln!(f, "device_id,reference_hex,helper_hex,intra_ber,bit_stability,key_failures,max_raw_errors")?;
    for d in &results.devices {
        writeln!(
            f,
            "{},{},{},{:.6},{:.6},{},{}",
            d.device_id,
            d.reference_hex,
            d.helper.to_hex(),
            d.reliability.intra_ber,
            d.reliability.bit_stability,
            d.key_failures,
            d.max_raw_errors
        )?;
    }
    f.flush()?;

    if let Some(first) = results.devices.first() {
        let seed = puf_seed(cfg.dataset.seed);
        let device = sample_device(&cfg.puf.params, first.device_id, seed)?;
        let mut rng = seed.rng();
        let (elapsed, _) = keygen_latency_probe(&device, &first.helper, &EnvCondition::NOMINAL, &mut rng);
        timings.record("keygen_probe", elapsed);
    }
    Ok(results)
}

/// Index of the files a report run produced.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub files: Vec<String>,
    pub notes: Vec<String>,
}

/// Builds `run_report.json`, the plots and the manifest from whatever
/// stage outputs exist in `out`.
pub fn report_stage(cfg: &ExperimentConfig, out: &Path) -> Result<(RunReport, Manifest)> {
    let existing = |name: &str| Some(out.join(name)).filter(|p| p.exists());
    let ml: Option<MlResults> = existing(ML_RESULTS).map(|p| read_json(&p)).transpose()?;
    let puf: Option<PufResults> = existing(PUF_STATS).map(|p| read_json(&p)).transpose()?;
    if ml.is_none() && puf.is_none() {
        return Err(Error::InsufficientData(format!(
            "nothing to report in {}: run `train`/`all` or `puf` first",
            out.display()
        )));
    }
    let psd = existing(PSD).map(|p| read_psd_pair(&p, crate::ecg::SAMPLE_RATE_HZ)).transpose()?;
    let report = RunReport::new(cfg.clone(), ml, puf);
    report.write(&out.join(RUN_REPORT))?;
    let plots: PlotManifest = emit_plots(&report, psd.as_ref().map(|(c, n)| (c, n)), &out.join(PLOTS_DIR))?;

    let mut manifest = Manifest::default();
    for name in [RUN_REPORT, ML_RESULTS, PUF_STATS, PUF_DEVICES, MODEL, FEATURES, PSD, DATASET_META, DATASET_SAMPLES] {
        if out.join(name).exists() {
            manifest.files.push(name.to_string());
        }
    }
    manifest.files.extend(plots.files);
    manifest.notes = plots.notes;
    manifest.notes.push(format!("wall-clock timings, when recorded, are in {TIMINGS_FILE}"));
    write_json(&out.join(MANIFEST), &manifest)?;
    Ok((report, manifest))
}

/// The whole pipeline: ML comparison, PUF Monte Carlo, report and plots.
pub fn all_stage(cfg: &ExperimentConfig, out: &Path, progress: Progress) -> Result<RunReport> {
    cfg.validate()?;
    let mut timings = Timings::default();
    let t = Instant::now();
    progress.say("ML comparison");
    ml_stage(cfg, out, progress)?;
    timings.record("ml", t.elapsed());

    let t = Instant::now();
    progress.say("PUF Monte Carlo");
    puf_stage(cfg, out, &mut timings)?;
    timings.record("puf", t.elapsed());

    let t = Instant::now();
    let (report, _) = report_stage(cfg, out)?;
    timings.record("report", t.elapsed());
    std::fs::write(out.join(TIMINGS_FILE), serde_json::to_string_pretty(&timings)? + "\n")?;
    Ok(report)
}
