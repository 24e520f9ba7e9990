//! Synthetic ECG generation.
//!
//! Beats are modelled as sums of Gaussian bumps (P wave, a biphasic QRS
//! complex, T wave) whose widths and offsets come from [`MorphologyParams`].
//! Because every wave is analytic, the generator knows exactly where each R
//! peak sits, and those indices are stored on the signal as ground truth.

mod csv;
mod synth;

pub use self::csv::{read_dataset_csv, read_signal_csv, write_dataset_csv, write_signal_csv};
pub use self::synth::{
    generate_dataset, generate_dataset_with, segment_seed, synth_beat, synth_segment, Beat, PopulationBounds,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sample rate of every experiment in the workbench, in Hz.
pub const SAMPLE_RATE_HZ: f64 = 250.0;

/// Default segment duration in seconds (2500 samples at 250 Hz).
pub const SEGMENT_SECONDS: f64 = 10.0;

/// Rhythm class of a beat or a whole segment. Discriminants are the class
/// indices used by the classifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BeatClass {
    Normal = 0,
    Pvc = 1,
    Af = 2,
}

impl BeatClass {
    pub const ALL: [BeatClass; 3] = [BeatClass::Normal, BeatClass::Pvc, BeatClass::Af];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<BeatClass> {
        Self::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            BeatClass::Normal => "Normal",
            BeatClass::Pvc => "PVC",
            BeatClass::Af => "AF",
        }
    }

    pub fn is_anomaly(self) -> bool {
        self != BeatClass::Normal
    }
}

impl std::str::FromStr for BeatClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "NORMAL" | "N" => Ok(BeatClass::Normal),
            "PVC" | "V" => Ok(BeatClass::Pvc),
            "AF" | "A" => Ok(BeatClass::Af),
            other => Err(Error::Parse(format!("unknown beat class {other:?}"))),
        }
    }
}

impl std::fmt::Display for BeatClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Beat morphology. Amplitudes in mV, durations in seconds.
///
/// Wave widths are full widths at 10% of the wave's peak amplitude, which is
/// also the level at which QRS width is measured by the feature extractor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MorphologyParams {
    pub p_amplitude: f64,
    pub p_width: f64,
    pub qrs_amplitude: f64,
    pub qrs_width: f64,
    pub t_amplitude: f64,
    pub t_width: f64,
    /// P onset to QRS onset.
    pub pq_interval: f64,
    /// QRS onset to T end.
    pub qt_interval: f64,
    /// Beats per minute.
    pub baseline_heart_rate: f64,
    /// Standard deviation of beat-to-beat RR jitter for sinus rhythm.
    pub rr_jitter_sigma: f64,
}

impl Default for MorphologyParams {
    fn default() -> Self {
        MorphologyParams {
            p_amplitude: 0.15,
            p_width: 0.09,
            qrs_amplitude: 1.0,
            qrs_width: 0.09,
            t_amplitude: 0.3,
            t_width: 0.16,
            pq_interval: 0.16,
            qt_interval: 0.40,
            baseline_heart_rate: 75.0,
            rr_jitter_sigma: 0.02,
        }
    }
}

impl MorphologyParams {
    pub fn validate(&self) -> Result<()> {
        let durations = [
            ("p_width", self.p_width),
            ("qrs_width", self.qrs_width),
            ("t_width", self.t_width),
            ("pq_interval", self.pq_interval),
            ("qt_interval", self.qt_interval),
        ];
        for (name, v) in durations {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::param(format!("{name} must be > 0, got {v}")));
            }
        }
        let amplitudes = [
            ("p_amplitude", self.p_amplitude),
            ("qrs_amplitude", self.qrs_amplitude),
            ("t_amplitude", self.t_amplitude),
        ];
        for (name, v) in amplitudes {
            if !v.is_finite() {
                return Err(Error::param(format!("{name} must be finite, got {v}")));
            }
        }
        let hr = self.baseline_heart_rate;
        if !(hr > 0.0 && hr < 300.0) {
            return Err(Error::param(format!("baseline_heart_rate must be in (0, 300), got {hr}")));
        }
        if !(self.rr_jitter_sigma.is_finite() && self.rr_jitter_sigma >= 0.0) {
            return Err(Error::param("rr_jitter_sigma must be >= 0"));
        }
        Ok(())
    }

    /// Mean RR interval in seconds.
    pub fn base_rr(&self) -> f64 {
        60.0 / self.baseline_heart_rate
    }
}

/// A single-lead millivolt waveform with optional generator annotations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EcgSignal {
    pub samples: Vec<f64>,
    pub sample_rate: f64,
    /// Ground-truth R peak sample indices, strictly increasing.
    pub r_peaks: Vec<usize>,
    /// One label per entry of `r_peaks`.
    pub beat_labels: Vec<BeatClass>,
    pub segment_label: BeatClass,
}

impl EcgSignal {
    /// Wraps raw samples that carry no beat annotations.
    pub fn unannotated(samples: Vec<f64>, sample_rate: f64, label: BeatClass) -> Self {
        EcgSignal { samples, sample_rate, r_peaks: Vec::new(), beat_labels: Vec::new(), segment_label: label }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate
    }

    pub fn has_annotations(&self) -> bool {
        !self.r_peaks.is_empty()
    }

    /// Same annotations, different samples.
    pub fn with_samples(&self, samples: Vec<f64>) -> EcgSignal {
        EcgSignal {
            samples,
            sample_rate: self.sample_rate,
            r_peaks: self.r_peaks.clone(),
            beat_labels: self.beat_labels.clone(),
            segment_label: self.segment_label,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sample_rate.is_finite() && self.sample_rate > 0.0) {
            return Err(Error::param(format!("sample rate must be > 0, got {}", self.sample_rate)));
        }
        if let Some(i) = self.samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::param(format!("non-finite sample at index {i}")));
        }
        if self.r_peaks.len() != self.beat_labels.len() {
            return Err(Error::param("r_peaks and beat_labels differ in length"));
        }
        if self.r_peaks.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::param("r_peaks must be strictly increasing"));
        }
        if self.r_peaks.last().is_some_and(|&p| p >= self.samples.len()) {
            return Err(Error::param("r_peak index out of range"));
        }
        Ok(())
    }

    /// RR intervals of the stored annotations, in seconds.
    pub fn rr_intervals(&self) -> Vec<f64> {
        self.r_peaks.windows(2).map(|w| (w[1] - w[0]) as f64 / self.sample_rate).collect()
    }
}
