use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{measure_response, EnvEnvelope, RawResponse, RoDevice, RESPONSE_BITS};
use crate::error::{Error, Result};
use crate::rng::{RngSeed, Stream};

pub fn hamming_distance(a: &[bool], b: &[bool]) -> Result<usize> {
    if a.len() != b.len() {
        return Err(Error::Dimension { expected: a.len(), actual: b.len() });
    }
    Ok(a.iter().zip(b).filter(|(x, y)| x != y).count())
}

/// popcount(a xor b) / len.
pub fn fractional_hamming(a: &[bool], b: &[bool]) -> Result<f64> {
    if a.is_empty() {
        return Err(Error::param("empty bit vectors"));
    }
    Ok(hamming_distance(a, b)? as f64 / a.len() as f64)
}

/// `1 - |hd - 0.5| / 0.5`: 1 at the ideal 0.5 mean distance, 0 at 0 or 1.
pub fn ideality_score(mean_fractional_hd: f64) -> f64 {
    1.0 - (mean_fractional_hd - 0.5).abs() / 0.5
}

fn references(devices: &[RoDevice]) -> Result<Vec<u128>> {
    devices.par_iter().map(|d| d.reference_response().map(|r| r.bits)).collect()
}

/// Mean fractional Hamming distance over all pairs of noiseless nominal
/// responses.
pub fn uniqueness(devices: &[RoDevice]) -> Result<f64> {
    if devices.len() < 2 {
        return Err(Error::InsufficientData("uniqueness needs at least 2 devices".into()));
    }
    let bits = references(devices)?;
    let total: u64 = (0..bits.len())
        .into_par_iter()
        .map(|i| bits[i + 1..].iter().map(|&b| u64::from((bits[i] ^ b).count_ones())).sum::<u64>())
        .sum();
    let pairs = (bits.len() * (bits.len() - 1) / 2) as f64;
    Ok(total as f64 / (pairs * RESPONSE_BITS as f64))
}

/// Estimate of [`uniqueness`] from `n_pairs` distinct-device pairs drawn
/// uniformly with replacement.
pub fn uniqueness_sampled(devices: &[RoDevice], n_pairs: usize, seed: RngSeed) -> Result<f64> {
    if devices.len() < 2 {
        return Err(Error::InsufficientData("uniqueness needs at least 2 devices".into()));
    }
    if n_pairs == 0 {
        return Err(Error::param("n_pairs must be > 0"));
    }
    let bits = references(devices)?;
    let mut rng = seed.derive(Stream::Pairs, 0).rng();
    let n = bits.len();
    let mut total = 0u64;
    for _ in 0..n_pairs {
        let i = rng.random_range(0..n);
        let mut j = rng.random_range(0..n - 1);
        if j >= i {
            j += 1;
        }
        total += u64::from((bits[i] ^ bits[j]).count_ones());
    }
    Ok(total as f64 / (n_pairs * RESPONSE_BITS) as f64)
}

/// Re-measurement statistics of one device against its noiseless nominal
/// reference.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Reliability {
    /// Mean fractional distance of each trial from the reference.
    pub intra_ber: f64,
    /// Fraction of bit positions that matched the reference in every trial.
    pub bit_stability: f64,
}

impl Reliability {
    pub fn from_trials(reference: u128, trials: &[u128]) -> Result<Self> {
        if trials.is_empty() {
            return Err(Error::param("no trials"));
        }
        let mut unstable = 0u128;
        let mut errors = 0u64;
        for &t in trials {
            let diff = t ^ reference;
            unstable |= diff;
            errors += u64::from(diff.count_ones());
        }
        Ok(Reliability {
            intra_ber: errors as f64 / (trials.len() * RESPONSE_BITS) as f64,
            bit_stability: 1.0 - f64::from(unstable.count_ones()) / RESPONSE_BITS as f64,
        })
    }
}

/// Re-measures `device` `n_trials` times under conditions drawn from
/// `envelope`, with read noise.
pub fn reliability<R: Rng>(
    device: &RoDevice,
    n_trials: usize,
    envelope: &EnvEnvelope,
    rng: &mut R,
) -> Result<Reliability> {
    if n_trials < 2 {
        return Err(Error::param("reliability needs at least 2 trials"));
    }
    envelope.validate()?;
    let reference = device.reference_response()?.bits;
    let trials = (0..n_trials)
        .map(|_| {
            let env = envelope.sample(rng);
            measure_response(device, &env, rng).map(|r: RawResponse| r.bits)
        })
        .collect::<Result<Vec<_>>>()?;
    Reliability::from_trials(reference, &trials)
}

/// Population-level PUF figures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PufStats {
    pub n_devices: usize,
    pub n_trials: usize,
    pub uniqueness_mean_fractional_hd: f64,
    /// `1 - |hd - 0.5| / 0.5`, reported next to the conventional figure.
    pub uniqueness_ideality: f64,
    pub intra_device_ber: f64,
    /// Mean over devices of the per-device stable-bit fraction.
    pub bit_stability: f64,
    /// Share of (device, trial) key reproductions that failed.
    pub key_failure_rate: Option<f64>,
    pub mean_corrected_bits: Option<f64>,
}

impl PufStats {
    pub fn validate(&self) -> Result<()> {
        let rates = [
            self.uniqueness_mean_fractional_hd,
            self.uniqueness_ideality,
            self.intra_device_ber,
            self.bit_stability,
            self.key_failure_rate.unwrap_or(0.0),
        ];
        if rates.iter().any(|r| !(0.0..=1.0).contains(r)) {
            return Err(Error::param("PUF rate outside [0, 1]"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::super::{sample_device, sample_population, PopulationParams};
    use super::*;

    fn bits(s: &str) -> Vec<bool> {
        s.chars().map(|c| c == '1').collect()
    }

    #[test]
    fn hand_counted_distance() {
        assert_eq!(fractional_hamming(&bits("1011000"), &bits("1001001")).unwrap(), 2.0 / 7.0);
        let a = bits("0110");
        let not_a: Vec<bool> = a.iter().map(|b| !b).collect();
        assert_eq!(fractional_hamming(&a, &a).unwrap(), 0.0);
        assert_eq!(fractional_hamming(&a, &not_a).unwrap(), 1.0);
        assert!(fractional_hamming(&a, &bits("011")).is_err());
    }

    #[test]
    fn complementary_responses_are_fully_distant() {
        let d = sample_device(&PopulationParams::default(), 0, RngSeed(0)).unwrap();
        let r = d.reference_response().unwrap();
        let c = RawResponse { bits: !r.bits & super::super::RESPONSE_MASK, ..r };
        assert_eq!(fractional_hamming(&r.to_bools(), &c.to_bools()).unwrap(), 1.0);
    }

    #[test]
    fn ideality_score_shape() {
        assert_eq!(ideality_score(0.5), 1.0);
        assert_eq!(ideality_score(0.0), 0.0);
        assert!((ideality_score(0.49) - 0.98).abs() < 1e-12);
    }

    #[test]
    fn identical_devices_have_zero_uniqueness() {
        let d = sample_device(&PopulationParams::default(), 3, RngSeed(1)).unwrap();
        assert_eq!(uniqueness(&[d.clone(), d]).unwrap(), 0.0);
        assert!(uniqueness(&[]).is_err());
    }

    #[test]
    fn independent_pair_near_half() {
        let p = PopulationParams::default();
        for i in 0..20 {
            let a = sample_device(&p, 2 * i, RngSeed(11)).unwrap().reference_response().unwrap();
            let b = sample_device(&p, 2 * i + 1, RngSeed(11)).unwrap().reference_response().unwrap();
            let hd = a.distance(&b) as f64 / RESPONSE_BITS as f64;
            assert!((0.3..=0.7).contains(&hd), "pair {i}: {hd}");
        }
    }

    #[test]
    fn sampled_uniqueness_tracks_exhaustive() {
        let devices = sample_population(&PopulationParams::default(), 200, RngSeed(4)).unwrap();
        let full = uniqueness(&devices).unwrap();
        let est = uniqueness_sampled(&devices, 10_000, RngSeed(4)).unwrap();
        assert!((full - est).abs() < 0.005, "{full} vs {est}");
        assert!((0.45..=0.55).contains(&full));
    }

    #[test]
    fn noiseless_nominal_reliability_is_perfect() {
        let p = PopulationParams { sigma_meas: 0.0, ..Default::default() };
        let d = sample_device(&p, 0, RngSeed(2)).unwrap();
        let r = reliability(&d, 10, &EnvEnvelope::NOMINAL, &mut RngSeed(0).rng()).unwrap();
        assert_eq!(r, Reliability { intra_ber: 0.0, bit_stability: 1.0 });
    }

    #[test]
    fn stability_counts_any_flip() {
        let r = Reliability::from_trials(0, &[0b1, 0b10, 0]).unwrap();
        assert_eq!(r.bit_stability, 1.0 - 2.0 / 127.0);
        assert!((r.intra_ber - 2.0 / (3.0 * 127.0)).abs() < 1e-15);
    }
}
