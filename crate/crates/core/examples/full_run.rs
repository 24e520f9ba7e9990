// Run the whole pipeline on a reduced configuration and print the report
// headline numbers. The CLI equivalent is `noisepulse all --config <file>`.
//
//     cargo run --release --example full_run

use noisepulse::bench::run::{all_stage, Progress};
use noisepulse::bench::{ExperimentConfig, RunReport};

pub fn small_config() -> ExperimentConfig {
    let text = "\
        dataset.n_segments = 300
        ml.n_seeds = 2
        ml.grid.n_trees = 10,30
        ml.grid.max_depth = 6,12
        ml.grid.min_samples_split = 2
        puf.n_devices = 60
        puf.n_trials = 10
        puf.uniqueness_pairs = 500
    ";
    ExperimentConfig::parse(text).expect("valid example config")
}

pub fn run_example() -> noisepulse::Result<RunReport> {
    let mut cfg = small_config();
    cfg.output_dir = std::env::temp_dir().join("noisepulse-example-full-run");
    std::fs::create_dir_all(&cfg.output_dir)?;
    all_stage(&cfg, &cfg.output_dir, Progress { quiet: true })
}

fn main() -> noisepulse::Result<()> {
    let r = run_example()?;
    if let Some(ml) = &r.ml {
        println!(
            "accuracy: noise-augmented {:.4}, filtered {:.4} (reference {:.2} / {:.2})",
            ml.noise_augmented.accuracy_mean,
            ml.filtered.accuracy_mean,
            r.reference.accuracy_noise_augmented,
            r.reference.accuracy_filtered
        );
    }
    if let Some(p) = &r.puf {
        println!(
            "PUF: inter-device HD {:.4}, stability {:.4}, key failures {}/{}",
            p.stats.uniqueness_mean_fractional_hd, p.stats.bit_stability, p.key_failures, p.reproductions
        );
    }
    println!(
        "modeled power {} uW, latency {} ms ({})",
        r.power.total_power_uw, r.power.total_latency_ms, r.power.provenance
    );
    Ok(())
}
