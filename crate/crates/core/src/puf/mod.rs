//! Monte Carlo model of a ring-oscillator PUF population.
//!
//! A device is 128 oscillators around a common nominal frequency. Each one
//! carries a Gaussian process offset plus its own temperature and supply
//! sensitivities. A response compares adjacent oscillators, giving 127 bits.

mod stats;

pub use self::stats::{
    fractional_hamming, hamming_distance, ideality_score, reliability, uniqueness, uniqueness_sampled, PufStats,
    Reliability,
};

use std::io::Write;
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{RngSeed, Stream};

pub const N_OSCILLATORS: usize = 128;
pub const RESPONSE_BITS: usize = N_OSCILLATORS - 1;
pub const RESPONSE_MASK: u128 = (1u128 << RESPONSE_BITS) - 1;

/// Operating envelope: ±10 °C and ±5 % supply.
pub const TEMP_RANGE_C: f64 = 10.0;
pub const VOLT_RANGE: f64 = 0.05;

/// Distribution of oscillator parameters across a population. Every
/// magnitude is a fraction of `f0_hz`; coefficient spreads are relative to
/// the coefficient mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PopulationParams {
    pub f0_hz: f64,
    pub sigma_process: f64,
    pub sigma_meas: f64,
    /// Mean frequency change per °C.
    pub temp_coeff: f64,
    pub temp_spread: f64,
    /// Mean frequency change per unit supply fraction.
    pub volt_coeff: f64,
    pub volt_spread: f64,
}

impl Default for PopulationParams {
    /// Tuned population: 1 % process spread, 0.002 % read noise and 2 %
    /// spread on the drift coefficients.
    fn default() -> Self {
        PopulationParams {
            f0_hz: 100e6,
            sigma_process: 0.01,
            sigma_meas: 0.00002,
            temp_coeff: -0.0002,
            temp_spread: 0.02,
            volt_coeff: 0.005,
            volt_spread: 0.02,
        }
    }
}

impl PopulationParams {
    /// Untuned magnitudes: 0.02 % read noise and 20 % coefficient spread.
    /// Raw bit stability of this population is well below 99 %.
    pub fn untuned() -> Self {
        PopulationParams { sigma_meas: 0.0002, temp_spread: 0.2, volt_spread: 0.2, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.f0_hz.is_finite() && self.f0_hz > 0.0) {
            return Err(Error::param("f0 must be positive"));
        }
        if !(self.sigma_process.is_finite() && self.sigma_process >= 0.0) {
            return Err(Error::param("sigma_process must be >= 0"));
        }
        for (name, v) in
            [("sigma_meas", self.sigma_meas), ("temp_spread", self.temp_spread), ("volt_spread", self.volt_spread)]
        {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::param(format!("{name} must be >= 0")));
            }
        }
        if !(self.temp_coeff.is_finite() && self.volt_coeff.is_finite()) {
            return Err(Error::param("drift coefficients must be finite"));
        }
        Ok(())
    }
}

/// One simulated chip. Frequencies are in Hz.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoDevice {
    pub device_id: u64,
    pub nominal_freqs: Vec<f64>,
    pub process_offsets: Vec<f64>,
    /// Hz per °C.
    pub temp_coeffs: Vec<f64>,
    /// Hz per unit supply fraction.
    pub volt_coeffs: Vec<f64>,
    /// Standard deviation of the per-read frequency noise, Hz.
    pub meas_sigma_hz: f64,
}

/// Draws device `index` of the population rooted at `seed`.
pub fn sample_device(params: &PopulationParams, index: u64, seed: RngSeed) -> Result<RoDevice> {
    params.validate()?;
    let mut rng = seed.derive(Stream::Device, index).rng();
    let f0 = params.f0_hz;
    let gauss = |rng: &mut rand_chacha::ChaCha8Rng, mean: f64, sd: f64| -> f64 {
        let z: f64 = StandardNormal.sample(rng);
        mean + sd * z
    };
    let mut process_offsets = Vec::with_capacity(N_OSCILLATORS);
    let mut temp_coeffs = Vec::with_capacity(N_OSCILLATORS);
    let mut volt_coeffs = Vec::with_capacity(N_OSCILLATORS);
    let tc = params.temp_coeff * f0;
    let vc = params.volt_coeff * f0;
    for _ in 0..N_OSCILLATORS {
        process_offsets.push(gauss(&mut rng, 0.0, params.sigma_process * f0));
        temp_coeffs.push(gauss(&mut rng, tc, params.temp_spread * tc.abs()));
        volt_coeffs.push(gauss(&mut rng, vc, params.volt_spread * vc.abs()));
    }
    Ok(RoDevice {
        device_id: index,
        nominal_freqs: vec![f0; N_OSCILLATORS],
        process_offsets,
        temp_coeffs,
        volt_coeffs,
        meas_sigma_hz: params.sigma_meas * f0,
    })
}

/// Deviation from nominal operating conditions.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EnvCondition {
    /// °C
    pub temp_delta: f64,
    /// Supply deviation as a fraction of nominal.
    pub volt_delta: f64,
}

impl EnvCondition {
    pub const NOMINAL: EnvCondition = EnvCondition { temp_delta: 0.0, volt_delta: 0.0 };

    pub fn new(temp_delta: f64, volt_delta: f64) -> Result<Self> {
        let env = EnvCondition { temp_delta, volt_delta };
        env.validate()?;
        Ok(env)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.temp_delta.abs() <= TEMP_RANGE_C && self.volt_delta.abs() <= VOLT_RANGE) {
            return Err(Error::param(format!(
                "environment ({} C, {}) outside ±{TEMP_RANGE_C} C / ±{VOLT_RANGE}",
                self.temp_delta, self.volt_delta
            )));
        }
        Ok(())
    }
}

/// Uniform sampler over a sub-box of the operating envelope.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvEnvelope {
    pub temp_max: f64,
    pub volt_max: f64,
}

impl Default for EnvEnvelope {
    fn default() -> Self {
        EnvEnvelope { temp_max: TEMP_RANGE_C, volt_max: VOLT_RANGE }
    }
}

impl EnvEnvelope {
    pub const NOMINAL: EnvEnvelope = EnvEnvelope { temp_max: 0.0, volt_max: 0.0 };

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=TEMP_RANGE_C).contains(&self.temp_max) || !(0.0..=VOLT_RANGE).contains(&self.volt_max) {
            return Err(Error::param("envelope exceeds the operating range"));
        }
        Ok(())
    }

    /// The same two uniform draws are scaled by the envelope, so nested
    /// envelopes sampled from equal streams give proportional conditions.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> EnvCondition {
        let u: f64 = rng.random_range(-1.0..=1.0);
        let v: f64 = rng.random_range(-1.0..=1.0);
        EnvCondition { temp_delta: u * self.temp_max, volt_delta: v * self.volt_max }
    }
}

/// Adjacent-pair comparator output: bit `i` is set when oscillator `i`
/// runs faster than oscillator `i + 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RawResponse {
    pub bits: u128,
    pub device_id: u64,
    pub env: EnvCondition,
}

impl RawResponse {
    pub fn bit(&self, i: usize) -> bool {
        (self.bits >> i) & 1 == 1
    }

    pub fn to_bools(&self) -> Vec<bool> {
        (0..RESPONSE_BITS).map(|i| self.bit(i)).collect()
    }

    pub fn distance(&self, other: &RawResponse) -> u32 {
        (self.bits ^ other.bits).count_ones()
    }

    /// 32 hex digits, 127 bits zero-padded to 128.
    pub fn to_hex(&self) -> String {
        format!("{:032x}", self.bits)
    }

    pub fn from_hex(hex: &str) -> Result<u128> {
        if hex.len() != 32 {
            return Err(Error::Parse(format!("expected 32 hex digits, got {}", hex.len())));
        }
        let v = u128::from_str_radix(hex, 16).map_err(|e| Error::Parse(format!("bad hex {hex:?}: {e}")))?;
        if v & !RESPONSE_MASK != 0 {
            return Err(Error::Parse("padding bit set".into()));
        }
        Ok(v)
    }
}

impl RoDevice {
    /// Oscillator frequencies under `env`, before read noise.
    pub fn frequencies(&self, env: &EnvCondition) -> Vec<f64> {
        (0..N_OSCILLATORS)
            .map(|i| {
                self.nominal_freqs[i]
                    + self.process_offsets[i]
                    + self.temp_coeffs[i] * env.temp_delta
                    + self.volt_coeffs[i] * env.volt_delta
            })
            .collect()
    }

    /// Noiseless response at nominal conditions.
    pub fn reference_response(&self) -> Result<RawResponse> {
        self.respond(&EnvCondition::NOMINAL, None::<&mut rand_chacha::ChaCha8Rng>)
    }

    fn respond<R: Rng>(&self, env: &EnvCondition, rng: Option<&mut R>) -> Result<RawResponse> {
        env.validate()?;
        let mut f = self.frequencies(env);
        if let Some(rng) = rng {
            if self.meas_sigma_hz > 0.0 {
                let noise = Normal::new(0.0, self.meas_sigma_hz).map_err(|e| Error::param(e.to_string()))?;
                for v in &mut f {
                    *v += noise.sample(rng);
                }
            }
        }
        if let Some(index) = f.iter().position(|&v| !(v > 0.0)) {
            return Err(Error::NonPositiveFrequency { index, freq_hz: f[index] });
        }
        let bits = (0..RESPONSE_BITS).fold(0u128, |acc, i| acc | (u128::from(f[i] > f[i + 1]) << i));
        Ok(RawResponse { bits, device_id: self.device_id, env: *env })
    }
}

/// One read of `device` under `env`, with read noise drawn from `rng`.
pub fn measure_response<R: Rng>(device: &RoDevice, env: &EnvCondition, rng: &mut R) -> Result<RawResponse> {
    device.respond(env, Some(rng))
}

/// Population `0..n` rooted at `seed`.
pub fn sample_population(params: &PopulationParams, n: usize, seed: RngSeed) -> Result<Vec<RoDevice>> {
    use rayon::prelude::*;
    (0..n as u64).into_par_iter().map(|i| sample_device(params, i, seed)).collect()
}

/// Writes `device_id,response_hex` rows.
pub fn write_responses_csv(path: &Path, responses: &[RawResponse]) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "device_id,response_hex")?;
    for r in responses {
        writeln!(out, "{},{}", r.device_id, r.to_hex())?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn device_is_deterministic_per_index() {
        let p = PopulationParams::default();
        let a = sample_device(&p, 7, RngSeed(3)).unwrap();
        assert_eq!(a, sample_device(&p, 7, RngSeed(3)).unwrap());
        assert_ne!(a, sample_device(&p, 8, RngSeed(3)).unwrap());
        assert_eq!(a.nominal_freqs.len(), N_OSCILLATORS);
        assert_eq!(a.process_offsets.len(), N_OSCILLATORS);
    }

    #[test]
    fn noiseless_nominal_read_is_fixed_point() {
        let p = PopulationParams { sigma_meas: 0.0, ..Default::default() };
        let d = sample_device(&p, 0, RngSeed(1)).unwrap();
        let mut rng = RngSeed(2).rng();
        let first = measure_response(&d, &EnvCondition::NOMINAL, &mut rng).unwrap();
        for _ in 0..20 {
            assert_eq!(measure_response(&d, &EnvCondition::NOMINAL, &mut rng).unwrap().bits, first.bits);
        }
        assert_eq!(first.bits, d.reference_response().unwrap().bits);
        assert_eq!(first.bits & !RESPONSE_MASK, 0);
    }

    #[test]
    fn comparator_bits_follow_frequencies() {
        let d = sample_device(&PopulationParams::default(), 4, RngSeed(4)).unwrap();
        let f = d.frequencies(&EnvCondition::NOMINAL);
        let r = d.reference_response().unwrap();
        for i in 0..RESPONSE_BITS {
            assert_eq!(r.bit(i), f[i] > f[i + 1]);
        }
    }

    #[test]
    fn no_process_variation_means_identical_devices() {
        let p = PopulationParams { sigma_process: 0.0, temp_spread: 0.0, volt_spread: 0.0, ..Default::default() };
        let a = sample_device(&p, 0, RngSeed(1)).unwrap().reference_response().unwrap();
        let b = sample_device(&p, 1, RngSeed(1)).unwrap().reference_response().unwrap();
        assert_eq!(a.bits, b.bits);
    }

    #[test]
    fn nonpositive_frequency_is_an_error() {
        let p = PopulationParams { temp_coeff: 0.2, temp_spread: 0.0, ..Default::default() };
        let d = sample_device(&p, 0, RngSeed(0)).unwrap();
        let env = EnvCondition::new(-10.0, 0.0).unwrap();
        assert!(matches!(measure_response(&d, &env, &mut RngSeed(0).rng()), Err(Error::NonPositiveFrequency { .. })));
    }

    #[test]
    fn env_outside_envelope_rejected() {
        assert!(EnvCondition::new(10.5, 0.0).is_err());
        assert!(EnvCondition::new(0.0, -0.06).is_err());
        assert!(EnvCondition::new(-10.0, 0.05).is_ok());
        let mut rng = RngSeed(5).rng();
        for _ in 0..1000 {
            EnvEnvelope::default().sample(&mut rng).validate().unwrap();
        }
    }

    #[test]
    fn hex_roundtrip() {
        let d = sample_device(&PopulationParams::default(), 2, RngSeed(9)).unwrap();
        let r = d.reference_response().unwrap();
        let hex = r.to_hex();
        assert_eq!(hex.len(), 32);
        assert_eq!(RawResponse::from_hex(&hex).unwrap(), r.bits);
        assert!(RawResponse::from_hex(&"f".repeat(32)).is_err());
    }
}
