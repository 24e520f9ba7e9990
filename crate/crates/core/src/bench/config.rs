use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forest::Grid;
use crate::puf::PopulationParams;

/// How much noise the experiment injects.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseLevel {
    /// Fixed standard deviation in mV.
    StdMv(f64),
    /// Per-segment std fitted to this SNR, clamped to 0.1-1.0 mV.
    TargetSnrDb(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetConfig {
    pub n_segments: usize,
    pub anomaly_fraction: f64,
    pub duration_s: f64,
    /// Root of every random stream in the run.
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlConfig {
    pub grid: Grid,
    pub split: (f64, f64, f64),
    pub n_seeds: usize,
    pub features_per_split: usize,
    pub use_ground_truth_peaks: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PufConfig {
    pub n_devices: usize,
    pub n_trials: usize,
    /// Pairs drawn for the sampled uniqueness estimate.
    pub uniqueness_pairs: usize,
    pub params: PopulationParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub dataset: DatasetConfig,
    pub noise: NoiseLevel,
    pub ml: MlConfig,
    pub puf: PufConfig,
    /// Not serialized, so reports do not depend on where they are written.
    #[serde(skip)]
    pub output_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            dataset: DatasetConfig { n_segments: 10_000, anomaly_fraction: 0.10, duration_s: 10.0, seed: 42 },
            noise: NoiseLevel::TargetSnrDb(20.0),
            ml: MlConfig {
                grid: Grid::default(),
                split: (0.70, 0.15, 0.15),
                n_seeds: 5,
                features_per_split: 4,
                use_ground_truth_peaks: false,
            },
            puf: PufConfig {
                n_devices: 1000,
                n_trials: 50,
                uniqueness_pairs: 10_000,
                params: PopulationParams::default(),
            },
            output_dir: PathBuf::from("out"),
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> std::result::Result<T, String> {
    value.parse().map_err(|_| format!("{key}: cannot parse {value:?}"))
}

fn parse_list<T: std::str::FromStr>(key: &str, value: &str) -> std::result::Result<Vec<T>, String> {
    value.split(',').map(|v| parse_num(key, v.trim())).collect()
}

fn parse_bool(key: &str, value: &str) -> std::result::Result<bool, String> {
    match value {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(format!("{key}: expected true or false, got {value:?}")),
    }
}

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

impl ExperimentConfig {
    /// Reads a flat `section.key = value` file on top of the defaults.
    /// `#` starts a comment.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config { path: path.to_path_buf(), msg: e.to_string() })?;
        Self::parse(&text).map_err(|msg| Error::Config { path: path.to_path_buf(), msg })
    }

    pub fn parse(text: &str) -> std::result::Result<Self, String> {
        let mut cfg = ExperimentConfig::default();
        let mut seen = BTreeSet::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) =
                line.split_once('=').ok_or_else(|| format!("line {}: expected key = value", lineno + 1))?;
            let (key, value) = (key.trim(), value.trim());
            if !seen.insert(key.to_string()) {
                return Err(format!("line {}: duplicate key {key}", lineno + 1));
            }
            cfg.set(key, value).map_err(|e| format!("line {}: {e}", lineno + 1))?;
        }
        Ok(cfg)
    }

    fn set(&mut self, key: &str, v: &str) -> std::result::Result<(), String> {
        let p = &mut self.puf.params;
        match key {
            "dataset.n_segments" => self.dataset.n_segments = parse_num(key, v)?,
            "dataset.anomaly_fraction" => self.dataset.anomaly_fraction = parse_num(key, v)?,
            "dataset.duration_s" => self.dataset.duration_s = parse_num(key, v)?,
            "dataset.seed" => self.dataset.seed = parse_num(key, v)?,
            "noise.std_mv" => self.noise = NoiseLevel::StdMv(parse_num(key, v)?),
            "noise.target_snr_db" => self.noise = NoiseLevel::TargetSnrDb(parse_num(key, v)?),
            "ml.grid.max_depth" => self.ml.grid.max_depth = parse_list(key, v)?,
            "ml.grid.n_trees" => self.ml.grid.n_trees = parse_list(key, v)?,
            "ml.grid.min_samples_split" => self.ml.grid.min_samples_split = parse_list(key, v)?,
            "ml.split" => {
                let r: Vec<f64> = parse_list(key, v)?;
                if r.len() != 3 {
                    return Err(format!("{key}: expected three ratios"));
                }
                self.ml.split = (r[0], r[1], r[2]);
            }
            "ml.n_seeds" => self.ml.n_seeds = parse_num(key, v)?,
            "ml.features_per_split" => self.ml.features_per_split = parse_num(key, v)?,
            "ml.use_ground_truth_peaks" => self.ml.use_ground_truth_peaks = parse_bool(key, v)?,
            "puf.n_devices" => self.puf.n_devices = parse_num(key, v)?,
            "puf.n_trials" => self.puf.n_trials = parse_num(key, v)?,
            "puf.uniqueness_pairs" => self.puf.uniqueness_pairs = parse_num(key, v)?,
            "puf.f0_hz" => p.f0_hz = parse_num(key, v)?,
            "puf.sigma_process" => p.sigma_process = parse_num(key, v)?,
            "puf.sigma_meas" => p.sigma_meas = parse_num(key, v)?,
            "puf.temp_coeff" => p.temp_coeff = parse_num(key, v)?,
            "puf.temp_spread" => p.temp_spread = parse_num(key, v)?,
            "puf.volt_coeff" => p.volt_coeff = parse_num(key, v)?,
            "puf.volt_spread" => p.volt_spread = parse_num(key, v)?,
            "output.dir" => self.output_dir = PathBuf::from(v),
            _ => return Err(format!("unknown key {key}")),
        }
        Ok(())
    }

    /// Inverse of [`parse`](Self::parse).
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let d = &self.dataset;
        let p = &self.puf.params;
        let _ = writeln!(s, "dataset.n_segments = {}", d.n_segments);
        let _ = writeln!(s, "dataset.anomaly_fraction = {}", d.anomaly_fraction);
        let _ = writeln!(s, "dataset.duration_s = {}", d.duration_s);
        let _ = writeln!(s, "dataset.seed = {}", d.seed);
        match self.noise {
            NoiseLevel::StdMv(v) => writeln!(s, "noise.std_mv = {v}"),
            NoiseLevel::TargetSnrDb(v) => writeln!(s, "noise.target_snr_db = {v}"),
        }
        .unwrap();
        let _ = writeln!(s, "ml.grid.max_depth = {}", join(&self.ml.grid.max_depth));
        let _ = writeln!(s, "ml.grid.n_trees = {}", join(&self.ml.grid.n_trees));
        let _ = writeln!(s, "ml.grid.min_samples_split = {}", join(&self.ml.grid.min_samples_split));
        let (a, b, c) = self.ml.split;
        let _ = writeln!(s, "ml.split = {a},{b},{c}");
        let _ = writeln!(s, "ml.n_seeds = {}", self.ml.n_seeds);
        let _ = writeln!(s, "ml.features_per_split = {}", self.ml.features_per_split);
        let _ = writeln!(s, "ml.use_ground_truth_peaks = {}", self.ml.use_ground_truth_peaks);
        let _ = writeln!(s, "puf.n_devices = {}", self.puf.n_devices);
        let _ = writeln!(s, "puf.n_trials = {}", self.puf.n_trials);
        let _ = writeln!(s, "puf.uniqueness_pairs = {}", self.puf.uniqueness_pairs);
        let _ = writeln!(s, "puf.f0_hz = {}", p.f0_hz);
        let _ = writeln!(s, "puf.sigma_process = {}", p.sigma_process);
        let _ = writeln!(s, "puf.sigma_meas = {}", p.sigma_meas);
        let _ = writeln!(s, "puf.temp_coeff = {}", p.temp_coeff);
        let _ = writeln!(s, "puf.temp_spread = {}", p.temp_spread);
        let _ = writeln!(s, "puf.volt_coeff = {}", p.volt_coeff);
        let _ = writeln!(s, "puf.volt_spread = {}", p.volt_spread);
        let _ = writeln!(s, "output.dir = {}", self.output_dir.display());
        s
    }

    /// Checks every module precondition the run will hit.
    pub fn validate(&self) -> Result<()> {
        let d = &self.dataset;
        if d.n_segments < 3 {
            return Err(Error::param("dataset.n_segments must be >= 3"));
        }
        if !(0.0..=1.0).contains(&d.anomaly_fraction) {
            return Err(Error::param("dataset.anomaly_fraction must be in [0, 1]"));
        }
        if !(d.duration_s.is_finite() && d.duration_s >= 2.0) {
            return Err(Error::param("dataset.duration_s must be >= 2"));
        }
        match self.noise {
            NoiseLevel::StdMv(s) if !(s.is_finite() && s >= 0.0) => {
                return Err(Error::param("noise.std_mv must be >= 0"));
            }
            NoiseLevel::TargetSnrDb(db) if !(0.0..=60.0).contains(&db) => {
                return Err(Error::param("noise.target_snr_db must be in [0, 60]"));
            }
            _ => {}
        }
        let (a, b, c) = self.ml.split;
        if [a, b, c].iter().any(|r| !(0.0..=1.0).contains(r)) || (a + b + c - 1.0).abs() > 1e-9 {
            return Err(Error::param("ml.split ratios must be in [0, 1] and sum to 1"));
        }
        if b == 0.0 || c == 0.0 {
            return Err(Error::param("ml.split needs nonzero validation and test shares"));
        }
        if self.ml.grid.is_empty() || self.ml.grid.n_trees.contains(&0) {
            return Err(Error::param("ml.grid must be non-empty with n_trees > 0"));
        }
        if self.ml.n_seeds == 0 || self.ml.features_per_split == 0 {
            return Err(Error::param("ml.n_seeds and ml.features_per_split must be > 0"));
        }
        if self.puf.n_devices < 2 || self.puf.n_trials < 2 || self.puf.uniqueness_pairs == 0 {
            return Err(Error::param("puf.n_devices and puf.n_trials must be >= 2, puf.uniqueness_pairs > 0"));
        }
        self.puf.params.validate()
    }
}
