//! Seed plumbing.
//!
//! Every stochastic operation takes an explicit 64-bit seed and draws from a
//! ChaCha8 stream, so results are reproducible across platforms and
//! independent of how work is scheduled across threads. Child seeds are
//! derived with the splitmix64 finalizer so that segment `i` of a dataset or
//! tree `i` of a forest gets the same stream no matter which order they run.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Root seed of a reproducible computation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RngSeed(pub u64);

impl RngSeed {
    /// Derives an independent child seed for item `index` of stream `tag`.
    ///
    /// The child is `splitmix64(seed ^ index)` after the seed has been
    /// domain-separated by `tag`, so different subsystems sharing a root
    /// seed never reuse a stream.
    pub fn derive(self, tag: Stream, index: u64) -> RngSeed {
        let domain = splitmix64(self.0 ^ (tag as u64).wrapping_mul(0xD6E8_FEB8_6659_FD93));
        RngSeed(splitmix64(domain ^ index))
    }

    pub fn rng(self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.0)
    }
}

impl From<u64> for RngSeed {
    fn from(v: u64) -> Self {
        RngSeed(v)
    }
}

/// Named sub-streams hanging off a root seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Segment = 1,
    SegmentParams = 2,
    LabelShuffle = 3,
    Noise = 4,
    Split = 5,
    Tree = 6,
    Device = 7,
    Trial = 8,
    Secret = 9,
    Experiment = 10,
    Pairs = 11,
}

/// splitmix64 output function (Steele, Lea, Flood 2014).
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn splitmix_reference_values() {
        // First outputs of the reference splitmix64 generator seeded with 0.
        assert_eq!(splitmix64(0), 0xE220_A839_7B1D_CDAF);
        assert_eq!(splitmix64(0x9E37_79B9_7F4A_7C15), 0x6E78_9E6A_A1B9_65F4);
    }

    #[test]
    fn derived_streams_are_distinct_and_stable() {
        let root = RngSeed(42);
        let a = root.derive(Stream::Segment, 0);
        let b = root.derive(Stream::Segment, 1);
        let c = root.derive(Stream::Noise, 0);
        assert_ne!(a, b);
        assert_ne!(a, c);
        assert_eq!(a, RngSeed(42).derive(Stream::Segment, 0));
        let x: u64 = a.rng().random();
        let y: u64 = a.rng().random();
        assert_eq!(x, y);
    }
}
