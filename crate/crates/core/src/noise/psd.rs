use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::ecg::EcgSignal;
use crate::error::{Error, Result};

pub const DEFAULT_WINDOW: usize = 512;
pub const DEFAULT_OVERLAP: f64 = 0.5;

/// One-sided power spectral density in mV²/Hz.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsdEstimate {
    pub frequencies: Vec<f64>,
    pub power: Vec<f64>,
    pub window_length: usize,
    pub overlap: f64,
    pub sample_rate: f64,
    /// Number of averaged periodograms.
    pub segments: usize,
}

impl PsdEstimate {
    pub fn resolution(&self) -> f64 {
        self.sample_rate / self.window_length as f64
    }

    /// `sum(power) * df`, the total power the estimate accounts for.
    pub fn total_power(&self) -> f64 {
        self.power.iter().sum::<f64>() * self.resolution()
    }

    pub fn peak_frequency(&self) -> f64 {
        let i = (0..self.power.len()).max_by(|&a, &b| self.power[a].total_cmp(&self.power[b])).unwrap_or(0);
        self.frequencies[i]
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(f, "frequency_hz,power")?;
        for (fr, p) in self.frequencies.iter().zip(&self.power) {
            writeln!(f, "{fr:.6},{p:.9e}")?;
        }
        f.flush()?;
        Ok(())
    }
}

/// Periodic Hann window.
pub fn hann(len: usize) -> Vec<f64> {
    (0..len).map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / len as f64).cos()).collect()
}

/// Welch's averaged modified periodogram over Hann-windowed segments.
///
/// Scaling is one-sided density: bins other than DC and Nyquist are doubled,
/// so `sum(power) * df` approximates the mean square of the input.
pub fn welch(samples: &[f64], sample_rate: f64, window_length: usize, overlap: f64) -> Result<PsdEstimate> {
    if window_length < 2 {
        return Err(Error::param("window_length must be >= 2"));
    }
    if !(0.0..1.0).contains(&overlap) {
        return Err(Error::param(format!("overlap must be in [0, 1), got {overlap}")));
    }
    if samples.len() < window_length {
        return Err(Error::InsufficientData(format!(
            "signal of {} samples is shorter than one {window_length}-sample window",
            samples.len()
        )));
    }
    let step = (window_length - (overlap * window_length as f64).floor() as usize).max(1);
    let window = hann(window_length);
    let window_power: f64 = window.iter().map(|w| w * w).sum();
    let fft = FftPlanner::<f64>::new().plan_fft_forward(window_length);
    let bins = window_length / 2 + 1;
    let mut acc = vec![0.0; bins];
    let mut buf = vec![Complex::new(0.0, 0.0); window_length];
    let mut segments = 0usize;
    let mut start = 0;
    while start + window_length <= samples.len() {
        for ((b, &x), &w) in buf.iter_mut().zip(&samples[start..start + window_length]).zip(&window) {
            *b = Complex::new(x * w, 0.0);
        }
        fft.process(&mut buf);
        for (a, c) in acc.iter_mut().zip(&buf) {
            *a += c.norm_sqr();
        }
        segments += 1;
        start += step;
    }
    let scale = 1.0 / (sample_rate * window_power * segments as f64);
    let nyquist_bin = if window_length % 2 == 0 { Some(bins - 1) } else { None };
    let power = acc
        .iter()
        .enumerate()
        .map(|(k, &p)| if k == 0 || Some(k) == nyquist_bin { p * scale } else { 2.0 * p * scale })
        .collect();
    let frequencies = (0..bins).map(|k| k as f64 * sample_rate / window_length as f64).collect();
    Ok(PsdEstimate { frequencies, power, window_length, overlap, sample_rate, segments })
}

pub fn welch_psd(signal: &EcgSignal, window_length: usize, overlap: f64) -> Result<PsdEstimate> {
    welch(&signal.samples, signal.sample_rate, window_length, overlap)
}
