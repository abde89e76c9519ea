//! Config-driven experiment runner for Cannings genealogies.

pub mod command;
pub mod config;
pub mod error;
pub mod manifest;
pub mod run;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::Parser;

pub use command::Command;
pub use config::{load_config, ExperimentConfig, ProfileSpec};
pub use error::{ConfigError, RunError, EXIT_CHECK_FAILED, EXIT_CONFIG, EXIT_RUNTIME};
pub use manifest::Manifest;
pub use run::{run_experiment, Outcome};

#[derive(Debug, Parser)]
#[command(name = "cannings-lab", version, about)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// JSON experiment config; defaults apply to every missing field
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// overrides the config seed
    #[arg(long, global = true, value_name = "U64")]
    pub seed: Option<u64>,
    /// worker threads; overrides the config value
    #[arg(long, global = true, value_name = "N", env = config::WORKERS_ENV)]
    pub workers: Option<usize>,
    /// output directory; overrides the config value
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// exit with status 3 when a check fails (default)
    #[arg(long, global = true, overrides_with = "no_check")]
    pub check: bool,
    /// report check results but always exit 0 after a successful run
    #[arg(long, global = true, overrides_with = "check")]
    pub no_check: bool,
}

impl Cli {
    /// The config with command-line overrides applied.
    pub fn resolve_config(&self) -> Result<ExperimentConfig, ConfigError> {
        let mut cfg = match &self.config {
            Some(path) => load_config(path)?,
            None => ExperimentConfig::from_json("{}")?,
        };
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(workers) = self.workers {
            if workers == 0 {
                return Err(ConfigError::Validation {
                    field: "workers".into(),
                    reason: "must be at least 1".into(),
                });
            }
            cfg.workers = workers;
        }
        if let Some(out) = &self.out {
            cfg.out = out.clone();
        }
        Ok(cfg)
    }
}

/// Parses arguments, runs the command and returns the process exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let cfg = match cli.resolve_config() {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    match run_experiment(&cfg, cli.command) {
        Ok(outcome) => {
            print!("{}", outcome.summary);
            if let Some(check) = &outcome.manifest.check {
                println!(
                    "check {}: {}",
                    if check.pass { "passed" } else { "FAILED" },
                    check.detail
                );
            }
            if !cli.no_check && !outcome.passed() {
                EXIT_CHECK_FAILED
            } else {
                0
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
