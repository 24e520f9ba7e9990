//! Additive white Gaussian noise, SNR bookkeeping, spectral estimation and
//! the conventional band-pass filtering used as the comparison baseline.

mod filter;
mod psd;
pub mod stats;

pub use self::filter::{Biquad, SosFilter};
pub use self::psd::{hann, welch, welch_psd, PsdEstimate, DEFAULT_OVERLAP, DEFAULT_WINDOW};

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::ecg::EcgSignal;
use crate::error::{Error, Result};
use crate::rng::RngSeed;

/// Noise standard deviation range (mV) of the experiments.
pub const STD_BAND_MV: (f64, f64) = (0.1, 1.0);

/// Pass band of the conventional ECG filter, in Hz.
pub const BASELINE_BAND_HZ: (f64, f64) = (0.5, 40.0);
pub const BASELINE_ORDER: usize = 4;

/// Zero-mean white Gaussian noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub mean: f64,
    /// Standard deviation in mV.
    pub std: f64,
    pub seed: RngSeed,
}

impl NoiseSpec {
    pub fn new(std: f64, seed: RngSeed) -> Self {
        NoiseSpec { mean: 0.0, std, seed }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.std.is_finite() && self.std >= 0.0) {
            return Err(Error::param(format!("noise std must be >= 0, got {}", self.std)));
        }
        if !self.mean.is_finite() {
            return Err(Error::param("noise mean must be finite"));
        }
        Ok(())
    }

    pub fn in_band(&self) -> bool {
        (STD_BAND_MV.0..=STD_BAND_MV.1).contains(&self.std)
    }

    /// The noise sequence this spec adds to a signal of length `n`.
    pub fn sequence(&self, n: usize) -> Vec<f64> {
        let mut rng = self.seed.rng();
        (0..n)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                self.mean + self.std * z
            })
            .collect()
    }
}

/// Returns `signal` plus i.i.d. Gaussian noise. Annotations are copied.
pub fn add_noise(signal: &EcgSignal, spec: &NoiseSpec) -> Result<EcgSignal> {
    spec.validate()?;
    if spec.std == 0.0 && spec.mean == 0.0 {
        return Ok(signal.clone());
    }
    let noise = spec.sequence(signal.len());
    Ok(signal.with_samples(signal.samples.iter().zip(noise).map(|(x, n)| x + n).collect()))
}

fn mean_square(x: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = x.fold((0.0, 0usize), |(s, n), v| (s + v * v, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// Ratio of clean-signal power to residual power, in dB.
pub fn snr_db(clean: &EcgSignal, noisy: &EcgSignal) -> Result<f64> {
    if clean.len() != noisy.len() {
        return Err(Error::Dimension { expected: clean.len(), actual: noisy.len() });
    }
    if clean.sample_rate != noisy.sample_rate {
        return Err(Error::param("sample rates differ"));
    }
    let signal = mean_square(clean.samples.iter().copied());
    let residual = mean_square(clean.samples.iter().zip(&noisy.samples).map(|(c, n)| n - c));
    if residual == 0.0 {
        return Err(Error::SnrUndefined);
    }
    if signal == 0.0 {
        return Err(Error::ZeroSignalPower);
    }
    Ok(10.0 * (signal / residual).log10())
}

/// Result of fitting a noise level to a target SNR.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseCalibration {
    /// Spec to apply; its std is clamped to [`STD_BAND_MV`].
    pub spec: NoiseSpec,
    /// Std that would hit the target exactly.
    pub exact_std: f64,
    /// Set when `exact_std` fell outside the band and was clamped.
    pub clamped: bool,
}

/// Picks the noise std that gives `target_db` SNR on `signal`, clamped to the
/// 0.1-1.0 mV band.
pub fn calibrate_noise_for_snr(signal: &EcgSignal, target_db: f64, seed: RngSeed) -> Result<NoiseCalibration> {
    if !(0.0..=60.0).contains(&target_db) {
        return Err(Error::param(format!("target SNR must be in [0, 60] dB, got {target_db}")));
    }
    let power = mean_square(signal.samples.iter().copied());
    if power == 0.0 {
        return Err(Error::ZeroSignalPower);
    }
    let exact_std = (power / 10f64.powf(target_db / 10.0)).sqrt();
    let std = exact_std.clamp(STD_BAND_MV.0, STD_BAND_MV.1);
    Ok(NoiseCalibration { spec: NoiseSpec::new(std, seed), exact_std, clamped: std != exact_std })
}

/// Conventional monitoring-band filter: zero-phase 0.5-40 Hz Butterworth.
pub fn baseline_filter(signal: &EcgSignal) -> Result<EcgSignal> {
    let min_len = 3 * BASELINE_ORDER;
    if signal.len() < min_len {
        return Err(Error::InsufficientData(format!(
            "baseline filter needs at least {min_len} samples, got {}",
            signal.len()
        )));
    }
    let filter = SosFilter::bandpass(BASELINE_ORDER, BASELINE_BAND_HZ.0, BASELINE_BAND_HZ.1, signal.sample_rate)?;
    Ok(signal.with_samples(filter.filtfilt(&signal.samples)?))
}
