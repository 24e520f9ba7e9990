//! The fixed 15-value feature vector computed from each ECG segment:
//! three RR-interval statistics, two QRS-width statistics and twelve
//! wavelet-subband summaries.

mod detect;
pub mod dwt;

pub use self::detect::{detect_r_peaks, REFRACTORY_S};
pub use self::dwt::{dwt, dwt_with, idwt, Boundary, SubbandSet};

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::ecg::{BeatClass, EcgSignal};
use crate::error::{Error, Result};

pub const N_FEATURES: usize = 15;

/// Bumped whenever the meaning or order of a feature changes.
pub const FEATURE_SCHEMA_VERSION: u32 = 1;

pub const FEATURE_NAMES: [&str; N_FEATURES] = [
    "rr_mean_s",
    "rr_std_s",
    "rr_rmssd_s",
    "qrs_width_mean_s",
    "qrs_width_max_s",
    "d1_log_energy",
    "d1_norm_variance",
    "d2_log_energy",
    "d2_norm_variance",
    "d3_log_energy",
    "d3_norm_variance",
    "d4_log_energy",
    "d4_norm_variance",
    "d5_log_energy",
    "d5_norm_variance",
];

/// Wavelet values that make it into the feature vector: the d1..d5 pairs.
/// The a5 pair is computed by [`wavelet_features`] and enters the vector
/// only through the energy normalisation of the other bands.
pub const WAVELET_VALUES_USED: usize = N_FEATURES - 5;

/// Half-width of the QRS search window around each R peak.
pub const QRS_WINDOW_S: f64 = 0.120;
/// QRS boundaries are where the signal drops below this fraction of R.
pub const QRS_LEVEL: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FeatureVector(pub [f64; N_FEATURES]);

impl FeatureVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn rr_mean(&self) -> f64 {
        self.0[0]
    }

    pub fn rr_std(&self) -> f64 {
        self.0[1]
    }

    pub fn qrs_width_mean(&self) -> f64 {
        self.0[3]
    }

    pub fn qrs_width_max(&self) -> f64 {
        self.0[4]
    }

    pub fn wavelet(&self) -> &[f64] {
        &self.0[5..]
    }

    pub fn validate(&self) -> Result<()> {
        if self.0.iter().any(|v| !v.is_finite()) {
            return Err(Error::param("feature vector has non-finite entries"));
        }
        if self.rr_mean() <= 0.0 {
            return Err(Error::param("rr_mean must be > 0"));
        }
        if self.qrs_width_max() < self.qrs_width_mean() {
            return Err(Error::param("qrs_width_max < qrs_width_mean"));
        }
        Ok(())
    }
}

impl TryFrom<&[f64]> for FeatureVector {
    type Error = Error;

    fn try_from(v: &[f64]) -> Result<Self> {
        let arr: [f64; N_FEATURES] =
            v.try_into().map_err(|_| Error::Dimension { expected: N_FEATURES, actual: v.len() })?;
        Ok(FeatureVector(arr))
    }
}

/// Column names of the feature table, in order.
pub fn feature_names() -> Vec<&'static str> {
    FEATURE_NAMES.to_vec()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RrFeatures {
    pub mean: f64,
    pub std: f64,
    pub rmssd: f64,
}

/// RR statistics in seconds. `std` is the population standard deviation and
/// `rmssd` the root mean square of successive differences.
pub fn rr_features(peaks: &[usize], sample_rate: f64) -> Result<RrFeatures> {
    if peaks.len() < 3 {
        return Err(Error::InsufficientData(format!("need >= 3 peaks, got {}", peaks.len())));
    }
    let rr: Vec<f64> = peaks.windows(2).map(|w| (w[1] as f64 - w[0] as f64) / sample_rate).collect();
    let n = rr.len() as f64;
    let mean = rr.iter().sum::<f64>() / n;
    let std = (rr.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
    let diffs: Vec<f64> = rr.windows(2).map(|w| w[1] - w[0]).collect();
    let rmssd = (diffs.iter().map(|d| d * d).sum::<f64>() / diffs.len() as f64).sqrt();
    Ok(RrFeatures { mean, std, rmssd })
}

/// Width of one QRS complex at [`QRS_LEVEL`] of its R amplitude, with
/// linear interpolation between samples. `None` when a crossing is not found
/// inside the search window.
fn qrs_width_at(x: &[f64], peak: usize, window: usize) -> Option<f64> {
    let r = x[peak];
    if r == 0.0 {
        return None;
    }
    let sign = r.signum();
    let level = QRS_LEVEL * r.abs();
    let v = |i: usize| sign * x[i];

    let left_limit = peak.checked_sub(window)?;
    let mut l = peak;
    while v(l) >= level {
        if l == left_limit {
            return None;
        }
        l -= 1;
    }
    // Crossing lies between l (below) and l + 1 (at or above).
    let left = l as f64 + (level - v(l)) / (v(l + 1) - v(l));

    let right_limit = peak + window;
    if right_limit >= x.len() {
        return None;
    }
    let mut rr = peak;
    while v(rr) >= level {
        if rr == right_limit {
            return None;
        }
        rr += 1;
    }
    let right = (rr - 1) as f64 + (v(rr - 1) - level) / (v(rr - 1) - v(rr));
    Some(right - left)
}

/// Mean and maximum QRS width in seconds over the beats whose window fits.
pub fn qrs_widths(signal: &EcgSignal, peaks: &[usize]) -> Result<(f64, f64)> {
    let window = (QRS_WINDOW_S * signal.sample_rate).round() as usize;
    let widths: Vec<f64> = peaks
        .iter()
        .filter(|&&p| p < signal.len())
        .filter_map(|&p| qrs_width_at(&signal.samples, p, window))
        .map(|w| w / signal.sample_rate)
        .collect();
    if widths.is_empty() {
        return Err(Error::InsufficientData("no beat had a measurable QRS width".into()));
    }
    let mean = widths.iter().sum::<f64>() / widths.len() as f64;
    let max = widths.iter().cloned().fold(f64::MIN, f64::max);
    Ok((mean, max.max(mean)))
}

/// Two summaries per subband, ordered `[d1_E, d1_V, ..., d5_E, d5_V, a5_E, a5_V]`:
/// `ln(1 + sum c^2)` and the band variance divided by the total energy of all bands.
pub fn wavelet_features(set: &SubbandSet) -> Vec<f64> {
    let total = set.energy();
    set.bands()
        .flat_map(|band| {
            let energy: f64 = band.iter().map(|c| c * c).sum();
            let variance = if band.is_empty() {
                0.0
            } else {
                let m = band.iter().sum::<f64>() / band.len() as f64;
                band.iter().map(|c| (c - m).powi(2)).sum::<f64>() / band.len() as f64
            };
            let normalized = if total > 0.0 { variance / total } else { 0.0 };
            [energy.ln_1p(), normalized]
        })
        .collect()
}

/// Full feature vector of one segment. With `use_ground_truth_peaks` the
/// stored annotations replace the detector.
pub fn extract_features(signal: &EcgSignal, use_ground_truth_peaks: bool) -> Result<FeatureVector> {
    if signal.duration() < 2.0 {
        return Err(Error::param(format!("need >= 2 s of signal, got {:.3} s", signal.duration())));
    }
    let detected;
    let peaks: &[usize] = if use_ground_truth_peaks {
        if !signal.has_annotations() {
            return Err(Error::InsufficientData("signal carries no R-peak annotations".into()));
        }
        &signal.r_peaks
    } else {
        detected = detect_r_peaks(signal)?;
        &detected
    };
    let rr = rr_features(peaks, signal.sample_rate)?;
    let (qrs_mean, qrs_max) = qrs_widths(signal, peaks)?;
    let wavelet = wavelet_features(&dwt(&signal.samples, dwt::DEFAULT_LEVELS)?);

    let mut out = [0.0; N_FEATURES];
    out[..5].copy_from_slice(&[rr.mean, rr.std, rr.rmssd, qrs_mean, qrs_max]);
    out[5..].copy_from_slice(&wavelet[..WAVELET_VALUES_USED]);
    Ok(FeatureVector(out))
}

pub fn write_feature_csv(path: &Path, rows: &[FeatureVector], labels: &[BeatClass]) -> Result<()> {
    if rows.len() != labels.len() {
        return Err(Error::Dimension { expected: rows.len(), actual: labels.len() });
    }
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "{},label", feature_names().join(","))?;
    for (row, label) in rows.iter().zip(labels) {
        let cells: Vec<String> = row.0.iter().map(|v| format!("{v:.9}")).collect();
        writeln!(f, "{},{label}", cells.join(","))?;
    }
    f.flush()?;
    Ok(())
}
