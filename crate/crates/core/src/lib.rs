pub mod bench;
pub mod ecg;
pub mod error;
pub mod features;
pub mod forest;
pub mod noise;
pub mod puf;
pub mod rng;
pub mod seal;

pub use error::{Error, Result};
pub use rng::RngSeed;
