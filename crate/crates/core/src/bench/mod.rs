//! Experiment orchestration: configuration, the two-arm ML comparison, the
//! PUF Monte Carlo, reports, plots and the command line.

pub mod cli;
pub mod config;
pub mod ml;
pub mod plot;
pub mod puf;
pub mod report;
pub mod run;

pub use self::config::{ExperimentConfig, NoiseLevel};
pub use self::ml::{run_ml_experiment, MlResults};
pub use self::puf::{run_puf_experiment, PufResults};
pub use self::report::{PowerLedger, RunReport};
