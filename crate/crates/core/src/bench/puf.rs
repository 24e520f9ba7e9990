use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use crate::error::Result;
use crate::puf::{
    ideality_score, measure_response, sample_population, uniqueness, uniqueness_sampled, EnvEnvelope, PufStats,
    Reliability, RoDevice,
};
use crate::rng::{RngSeed, Stream};
use crate::seal::{enroll, reproduce_from_response, HelperData};

/// Index of the PUF population stream under the experiment root.
const PUF_EXPERIMENT: u64 = 1 << 32;

pub fn puf_seed(root: u64) -> RngSeed {
    RngSeed(root).derive(Stream::Experiment, PUF_EXPERIMENT)
}

/// Per-device outcome of the enrollment and trial sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceOutcome {
    pub device_id: u64,
    pub reference_hex: String,
    pub helper: HelperData,
    pub reliability: Reliability,
    pub key_failures: usize,
    pub corrected_bits: usize,
    pub max_raw_errors: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PufResults {
    pub stats: PufStats,
    /// Estimate of the mean fractional distance from random device pairs.
    pub uniqueness_sampled: f64,
    pub uniqueness_pairs: usize,
    pub reproductions: usize,
    pub key_failures: usize,
    pub max_raw_errors: u32,
    #[serde(skip)]
    pub devices: Vec<DeviceOutcome>,
}

/// Enrolls `device` and re-keys it `n_trials` times under sampled
/// conditions. A trial fails when decoding fails or yields another key.
pub fn sweep_device(
    device: &RoDevice,
    n_trials: usize,
    envelope: &EnvEnvelope,
    seed: RngSeed,
) -> Result<DeviceOutcome> {
    let reference = device.reference_response()?;
    let (helper, key) = enroll(device, seed)?;
    let mut rng = seed.derive(Stream::Trial, device.device_id).rng();
    let mut trials = Vec::with_capacity(n_trials);
    let (mut key_failures, mut corrected_bits, mut max_raw_errors) = (0, 0, 0);
    for _ in 0..n_trials {
        let env = envelope.sample(&mut rng);
        let bits = measure_response(device, &env, &mut rng)?.bits;
        max_raw_errors = max_raw_errors.max((bits ^ reference.bits).count_ones());
        match reproduce_from_response(bits, &helper) {
            Ok((k, n)) if k == key => corrected_bits += n,
            _ => key_failures += 1,
        }
        trials.push(bits);
    }
    Ok(DeviceOutcome {
        device_id: device.device_id,
        reference_hex: reference.to_hex(),
        helper,
        reliability: Reliability::from_trials(reference.bits, &trials)?,
        key_failures,
        corrected_bits,
        max_raw_errors,
    })
}

/// Uniqueness, reliability and key-reproduction statistics of a sampled
/// population.
pub fn run_puf_experiment(cfg: &ExperimentConfig) -> Result<PufResults> {
    cfg.validate()?;
    let seed = puf_seed(cfg.dataset.seed);
    let pc = &cfg.puf;
    let devices = sample_population(&pc.params, pc.n_devices, seed)?;
    puf_results(&devices, pc.n_trials, pc.uniqueness_pairs, seed)
}

/// Statistics of an explicit device list.
pub fn puf_results(
    devices: &[RoDevice],
    n_trials: usize,
    uniqueness_pairs: usize,
    seed: RngSeed,
) -> Result<PufResults> {
    let envelope = EnvEnvelope::default();
    let hd = uniqueness(devices)?;
    let sampled = uniqueness_sampled(devices, uniqueness_pairs, seed)?;
    let outcomes =
        devices.par_iter().map(|d| sweep_device(d, n_trials, &envelope, seed)).collect::<Result<Vec<_>>>()?;

    let n = outcomes.len() as f64;
    let reproductions = outcomes.len() * n_trials;
    let key_failures: usize = outcomes.iter().map(|o| o.key_failures).sum();
    let corrected: usize = outcomes.iter().map(|o| o.corrected_bits).sum();
    let successes = reproductions - key_failures;
    let stats = PufStats {
        n_devices: outcomes.len(),
        n_trials,
        uniqueness_mean_fractional_hd: hd,
        uniqueness_ideality: ideality_score(hd),
        intra_device_ber: outcomes.iter().map(|o| o.reliability.intra_ber).sum::<f64>() / n,
        bit_stability: outcomes.iter().map(|o| o.reliability.bit_stability).sum::<f64>() / n,
        key_failure_rate: Some(key_failures as f64 / reproductions as f64),
        mean_corrected_bits: Some(if successes == 0 { 0.0 } else { corrected as f64 / successes as f64 }),
    };
    stats.validate()?;
    Ok(PufResults {
        stats,
        uniqueness_sampled: sampled,
        uniqueness_pairs,
        reproductions,
        key_failures,
        max_raw_errors: outcomes.iter().map(|o| o.max_raw_errors).max().unwrap_or(0),
        devices: outcomes,
    })
}
