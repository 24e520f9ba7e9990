//! Code-offset fuzzy extractor turning a noisy PUF response into a stable
//! 256-bit device key.
//!
//! Enrollment draws a 64-bit secret `s`, publishes `offset = R xor encode(s)`
//! for the noiseless reference response `R`, and keys the device with
//! `SHA-256(s)` over the 8-byte big-endian encoding of `s`. Reproduction
//! decodes `R' xor offset` back to `s` as long as `R'` is within 10 bits of
//! `R`.
//!
//! Keys are printable as hex for fixtures and reports only.

mod bch;
mod gf;
mod sha256;

pub use self::bch::{BchCode, K as BCH_K, N as BCH_N, PARITY_BITS, T as BCH_T};
pub use self::sha256::{sha256, to_hex};

use std::time::{Duration, Instant};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::puf::{measure_response, EnvCondition, RawResponse, RoDevice};
use crate::rng::{RngSeed, Stream};

/// Public enrollment record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HelperData {
    pub device_id: u64,
    #[serde(with = "hex128")]
    pub offset: u128,
}

mod hex128 {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &u128, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format!("{v:032x}"))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<u128, D::Error> {
        let text = String::deserialize(d)?;
        crate::puf::RawResponse::from_hex(&text).map_err(serde::de::Error::custom)
    }
}

impl HelperData {
    pub fn to_hex(&self) -> String {
        format!("{:032x}", self.offset)
    }
}

/// A derived key. The secret it came from stays in memory only.
#[derive(Clone, PartialEq, Eq, Serialize)]
pub struct DeviceKey {
    pub key: [u8; 32],
    #[serde(skip)]
    secret: u64,
}

impl std::fmt::Debug for DeviceKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "DeviceKey({})", self.to_hex())
    }
}

impl DeviceKey {
    pub fn from_secret(secret: u64) -> Self {
        DeviceKey { key: sha256(&secret.to_be_bytes()), secret }
    }

    pub fn secret(&self) -> u64 {
        self.secret
    }

    pub fn to_hex(&self) -> String {
        to_hex(&self.key)
    }
}

/// Enrollment with an explicit secret.
pub fn enroll_with_secret(reference: &RawResponse, secret: u64) -> (HelperData, DeviceKey) {
    let offset = reference.bits ^ BchCode::get().encode(secret);
    (HelperData { device_id: reference.device_id, offset }, DeviceKey::from_secret(secret))
}

/// Enrolls `device`, drawing its secret from `seed`'s per-device stream.
pub fn enroll(device: &RoDevice, seed: RngSeed) -> Result<(HelperData, DeviceKey)> {
    let reference = device.reference_response()?;
    let secret: u64 = seed.derive(Stream::Secret, device.device_id).rng().random();
    Ok(enroll_with_secret(&reference, secret))
}

/// Recovers the key from an already measured response. Also returns the
/// number of bits the decoder corrected.
pub fn reproduce_from_response(response: u128, helper: &HelperData) -> Result<(DeviceKey, usize)> {
    match BchCode::get().decode(response ^ helper.offset) {
        Ok((secret, corrected)) => Ok((DeviceKey::from_secret(secret), corrected)),
        Err(Error::DecodeFailure { .. }) => Err(Error::KeyFailure),
        Err(e) => Err(e),
    }
}

/// Measures `device` under `env` and recovers its key.
pub fn reproduce<R: Rng>(device: &RoDevice, helper: &HelperData, env: &EnvCondition, rng: &mut R) -> Result<DeviceKey> {
    let response = measure_response(device, env, rng)?;
    reproduce_from_response(response.bits, helper).map(|(k, _)| k)
}

/// Wall-clock time of one measure + decode + hash.
pub fn keygen_latency_probe<R: Rng>(
    device: &RoDevice,
    helper: &HelperData,
    env: &EnvCondition,
    rng: &mut R,
) -> (Duration, Result<DeviceKey>) {
    let start = Instant::now();
    let key = reproduce(device, helper, env, rng);
    (start.elapsed(), key)
}
