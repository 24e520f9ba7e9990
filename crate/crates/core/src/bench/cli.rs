//! Command-line front end. The binary is a thin wrapper around [`run`].

use std::ffi::OsString;
use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use super::config::ExperimentConfig;
use super::report::Timings;
use super::run::{all_stage, eval_stage, puf_stage, report_stage, synth_stage, train_stage, Progress, MODEL};
use crate::error::{Error, Result};

pub const OUT_ENV: &str = "NOISEPULSE_OUT";

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "noisepulse", version, about = "Noisy ECG anomaly detection and ring-oscillator PUF workbench")]
pub struct Cli {
    /// Flat `section.key = value` config file.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Root seed, overriding `dataset.seed`.
    #[arg(long, global = true, value_name = "U64")]
    pub seed: Option<u64>,
    /// Output directory. NOISEPULSE_OUT takes precedence.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Suppress progress and summaries.
    #[arg(long, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a clean synthetic dataset to CSV.
    Synth {
        /// Number of segments instead of `dataset.n_segments`.
        #[arg(long)]
        n: Option<usize>,
    },
    /// Train one repetition and save the noise-augmented model.
    Train,
    /// Score a saved model on the noisy test split.
    Eval {
        /// Model file; defaults to model.json in the output directory.
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Run the PUF Monte Carlo.
    Puf,
    /// Build the report and plots from existing stage outputs.
    Report,
    /// ML comparison, PUF Monte Carlo, report and plots.
    All,
}

impl Cli {
    /// Config file (or defaults) with command-line and environment
    /// overrides applied.
    pub fn resolve_config(&self, env_out: Option<OsString>) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(seed) = self.seed {
            cfg.dataset.seed = seed;
        }
        if let Some(out) = env_out.filter(|v| !v.is_empty()).map(PathBuf::from).or_else(|| self.out.clone()) {
            cfg.output_dir = out;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Executes a parsed command line.
pub fn execute(cli: &Cli, env_out: Option<OsString>) -> Result<()> {
    let cfg = cli.resolve_config(env_out)?;
    let out = cfg.output_dir.clone();
    std::fs::create_dir_all(&out)?;
    let progress = Progress { quiet: cli.quiet };
    let say = |msg: String| {
        if !cli.quiet {
            println!("{msg}");
        }
    };
    match &cli.command {
        Command::Synth { n } => {
            let files = synth_stage(&cfg, *n, &out)?;
            say(format!("wrote {} and {}", files[0].display(), files[1].display()));
        }
        Command::Train => {
            let r = train_stage(&cfg, &out, progress)?;
            say(format!(
                "validation macro-F1 {:.4}, test accuracy {:.4}",
                r.noise_augmented.validation_macro_f1, r.noise_augmented.test.accuracy
            ));
        }
        Command::Eval { model } => {
            let path = model.clone().unwrap_or_else(|| out.join(MODEL));
            let m = eval_stage(&cfg, &path, &out)?;
            say(format!("accuracy {:.4}, macro-F1 {:.4}", m.accuracy, m.macro_f1));
        }
        Command::Puf => {
            let r = puf_stage(&cfg, &out, &mut Timings::default())?;
            say(format!(
                "uniqueness {:.4}, stability {:.4}, key failures {}/{}",
                r.stats.uniqueness_mean_fractional_hd, r.stats.bit_stability, r.key_failures, r.reproductions
            ));
        }
        Command::Report => {
            let (_, manifest) = report_stage(&cfg, &out)?;
            say(format!("wrote {} files", manifest.files.len()));
        }
        Command::All => {
            let r = all_stage(&cfg, &out, progress)?;
            if let Some(ml) = &r.ml {
                say(format!(
                    "accuracy: augmented {:.4}, filtered {:.4}",
                    ml.noise_augmented.accuracy_mean, ml.filtered.accuracy_mean
                ));
            }
            if let Some(p) = &r.puf {
                say(format!("PUF key failure rate {:.5}", p.stats.key_failure_rate.unwrap_or(0.0)));
            }
        }
    }
    Ok(())
}

pub fn exit_code(e: &Error) -> i32 {
    if e.is_validation() {
        EXIT_VALIDATION
    } else {
        EXIT_RUNTIME
    }
}

/// Parses `args` (program name first), runs, and returns the exit code.
pub fn run<I, T>(args: I, env_out: Option<OsString>) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_VALIDATION,
            };
        }
    };
    match execute(&cli, env_out) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_flag_is_a_validation_error() {
        assert_eq!(run(["noisepulse", "all", "--bogus"], None), EXIT_VALIDATION);
        assert_eq!(run(["noisepulse"], None), EXIT_VALIDATION);
    }

    #[test]
    fn help_exits_cleanly() {
        assert_eq!(run(["noisepulse", "--help"], None), EXIT_OK);
    }

    #[test]
    fn missing_config_names_the_path() {
        let cli = Cli::try_parse_from(["noisepulse", "--config", "/nonexistent/x.cfg", "puf"]).unwrap();
        let e = cli.resolve_config(None).unwrap_err();
        assert!(e.to_string().contains("/nonexistent/x.cfg"));
        assert_eq!(exit_code(&e), EXIT_VALIDATION);
    }

    #[test]
    fn env_out_beats_flag() {
        let cli = Cli::try_parse_from(["noisepulse", "--out", "a", "--seed", "7", "synth"]).unwrap();
        assert_eq!(cli.resolve_config(None).unwrap().output_dir, PathBuf::from("a"));
        let cfg = cli.resolve_config(Some("b".into())).unwrap();
        assert_eq!(cfg.output_dir, PathBuf::from("b"));
        assert_eq!(cfg.dataset.seed, 7);
    }

    #[test]
    fn flags_after_the_subcommand() {
        let cli = Cli::try_parse_from(["noisepulse", "puf", "--quiet", "--seed", "3"]).unwrap();
        assert!(cli.quiet);
        assert_eq!(cli.seed, Some(3));
    }
}
