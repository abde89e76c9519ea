//! Experiment configuration: parsing, defaults and validation.

use std::fs;
use std::path::{Path, PathBuf};

use cannings_core::profile::ContinuousProfile;
use cannings_core::verify::{Population, Thresholds};
use cannings_core::{Error as CoreError, OffspringLaw, ProfilePair};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::command::Command;
use crate::error::ConfigError;

pub const DEFAULT_REPS: usize = 1000;
pub const DEFAULT_K: usize = 2;
pub const DEFAULT_OUT: &str = "out";
pub const WORKERS_ENV: &str = "CANNINGS_LAB_WORKERS";

/// Profile pair as written in a config file; `sigma` defaults to 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileSpec {
    pub ell: ContinuousProfile,
    #[serde(default)]
    pub sigma: Option<ContinuousProfile>,
    #[serde(default)]
    pub ratio_at_zero: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    profile: Option<Value>,
    law: Option<Value>,
    n: Option<u64>,
    n_grid: Option<Vec<u64>>,
    k: Option<usize>,
    reps: Option<usize>,
    seed: Option<Value>,
    thresholds: Option<Value>,
    out: Option<PathBuf>,
    workers: Option<usize>,
    h_star: Option<usize>,
    q_const: Option<u64>,
    quantile: Option<f64>,
    rate_multiplier: Option<f64>,
    population: Option<Value>,
}

/// A fully validated configuration. `out` and `workers` affect where and how
/// fast a run happens, never what it produces, so they are not serialized.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub profile: ProfileSpec,
    #[serde(skip)]
    pub pair: ProfilePair,
    pub law: OffspringLaw,
    pub n: Option<u64>,
    pub n_grid: Option<Vec<u64>>,
    pub k: usize,
    pub reps: usize,
    pub seed: u64,
    pub thresholds: Thresholds,
    pub h_star: Option<usize>,
    pub q_const: Option<u64>,
    pub quantile: Option<f64>,
    pub rate_multiplier: f64,
    pub population: Option<Population>,
    #[serde(skip)]
    pub out: PathBuf,
    #[serde(skip)]
    pub workers: usize,
}

fn invalid(field: &str, reason: impl ToString) -> ConfigError {
    ConfigError::Validation {
        field: field.into(),
        reason: reason.to_string(),
    }
}

fn typed<T: DeserializeOwned>(field: &str, value: Value) -> Result<T, ConfigError> {
    serde_json::from_value(value).map_err(|e| invalid(field, e))
}

fn parse_seed(value: Value) -> Result<u64, ConfigError> {
    match &value {
        Value::Number(n) if n.as_u64().is_some() => Ok(n.as_u64().unwrap()),
        Value::Number(n) if n.as_i64().is_some_and(|x| x < 0) => {
            Err(invalid("seed", "must be nonnegative"))
        }
        _ => Err(invalid("seed", "must be an integer in [0, 2^64)")),
    }
}

fn available_cores() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

impl ExperimentConfig {
    /// Parses a config document and fills defaults; command-specific checks
    /// happen in [`ExperimentConfig::validate_for`].
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let raw: RawConfig =
            serde_json::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        let profile: ProfileSpec = match raw.profile {
            Some(v) => typed("profile", v)?,
            None => ProfileSpec {
                ell: ContinuousProfile::constant(1.0, 1.0).expect("unit profile"),
                sigma: None,
                ratio_at_zero: None,
            },
        };
        let sigma = match &profile.sigma {
            Some(s) => s.clone(),
            None => ContinuousProfile::constant(1.0, profile.ell.extinction_height())
                .map_err(|e| invalid("profile", e))?,
        };
        let pair = ProfilePair::new(profile.ell.clone(), sigma.clone(), profile.ratio_at_zero)
            .map_err(|e| invalid("profile", e))?;
        let profile = ProfileSpec {
            sigma: Some(sigma),
            ratio_at_zero: Some(pair.ratio_at_zero),
            ..profile
        };
        let law: OffspringLaw = match raw.law {
            Some(v) => typed("law", v)?,
            None => OffspringLaw::WrightFisher,
        };
        law.validate().map_err(|e| invalid("law", e))?;
        let thresholds: Thresholds = match raw.thresholds {
            Some(v) => typed("thresholds", v)?,
            None => Thresholds::default(),
        };
        let population = raw.population.map(|v| typed("population", v)).transpose()?;
        let seed = raw.seed.map(parse_seed).transpose()?.unwrap_or(0);
        if let Some(n) = raw.n {
            if n < 2 {
                return Err(invalid("n", "must be at least 2"));
            }
        }
        if let Some(grid) = &raw.n_grid {
            if grid.is_empty() {
                return Err(invalid("n_grid", "must not be empty"));
            }
            if grid.iter().any(|&n| n < 2) {
                return Err(invalid("n_grid", "every n must be at least 2"));
            }
        }
        let k = raw.k.unwrap_or(DEFAULT_K);
        if k == 0 {
            return Err(invalid("k", "must be at least 1"));
        }
        let reps = raw.reps.unwrap_or(DEFAULT_REPS);
        if reps == 0 {
            return Err(invalid("reps", "must be at least 1"));
        }
        if raw.workers == Some(0) {
            return Err(invalid("workers", "must be at least 1"));
        }
        let rate_multiplier = raw.rate_multiplier.unwrap_or(1.0);
        if !(rate_multiplier.is_finite() && rate_multiplier > 0.0) {
            return Err(invalid("rate_multiplier", "must be positive"));
        }
        if let Some(q) = raw.quantile {
            if !(q > 0.0 && q < 1.0) {
                return Err(invalid("quantile", "must lie in (0, 1)"));
            }
        }
        for (name, value) in [
            ("thresholds.p_min", thresholds.p_min),
            ("thresholds.ks_max", thresholds.ks_max),
            ("thresholds.chi2_p_min", thresholds.chi2_p_min),
        ] {
            if !(0.0..=1.0).contains(&value) {
                return Err(invalid(name, "must lie in [0, 1]"));
            }
        }
        if thresholds.se_mult.is_nan() || thresholds.se_mult <= 0.0 {
            return Err(invalid("thresholds.se_mult", "must be positive"));
        }
        Ok(Self {
            profile,
            pair,
            law,
            n: raw.n,
            n_grid: raw.n_grid,
            k,
            reps,
            seed,
            thresholds,
            h_star: raw.h_star,
            q_const: raw.q_const,
            quantile: raw.quantile,
            rate_multiplier,
            population,
            out: raw.out.unwrap_or_else(|| PathBuf::from(DEFAULT_OUT)),
            workers: raw.workers.unwrap_or_else(available_cores),
        })
    }

    pub fn population(&self) -> Population {
        self.population
            .clone()
            .unwrap_or_else(|| Population::Discretized(self.profile.ell.clone()))
    }

    pub fn single_n(&self) -> Result<u64, ConfigError> {
        match (self.n, &self.n_grid) {
            (Some(n), _) => Ok(n),
            (None, Some(grid)) if grid.len() == 1 => Ok(grid[0]),
            _ => Err(invalid("n", "this command needs a single n")),
        }
    }

    /// `n_grid`, or `[n]`, sorted ascending without duplicates.
    pub fn grid(&self) -> Result<Vec<u64>, ConfigError> {
        let mut grid = match (&self.n_grid, self.n) {
            (Some(g), _) => g.clone(),
            (None, Some(n)) => vec![n],
            (None, None) => return Err(invalid("n_grid", "this command needs n or n_grid")),
        };
        grid.sort_unstable();
        grid.dedup();
        Ok(grid)
    }

    fn check_law_at(&self, population: &Population, n: u64) -> Result<(), ConfigError> {
        let profile = population.at_scale(n).map_err(|e| invalid("profile", e))?;
        self.law.check_profile(&profile).map_err(|e| match e {
            CoreError::LawProfileMismatch(reason) => invalid("law", reason),
            other => invalid("law", other),
        })
    }

    fn require_reps(&self, min: usize) -> Result<(), ConfigError> {
        if self.reps < min {
            return Err(invalid("reps", format!("{} needs at least {min}", self.reps)));
        }
        Ok(())
    }

    /// Everything `command` needs, checked before any sampling.
    pub fn validate_for(&self, command: Command) -> Result<(), ConfigError> {
        let population = self.population();
        match command {
            Command::SimulateTree | Command::Trace | Command::CompareFdd => {
                let n = self.single_n()?;
                self.check_law_at(&Population::Discretized(self.profile.ell.clone()), n)?;
                let profile = cannings_core::profile::discretize(&self.profile.ell, n)
                    .map_err(|e| invalid("profile", e))?;
                if command == Command::Trace {
                    let top = profile.extinction() - 1;
                    let h_star = self.h_star.unwrap_or(top);
                    if h_star == 0 || h_star > top {
                        return Err(invalid("h_star", format!("must lie in 1..={top}")));
                    }
                    if self.k as u64 > profile.q(h_star) {
                        return Err(invalid("k", "exceeds the generation size at h_star"));
                    }
                }
                if command == Command::CompareFdd {
                    self.require_reps(10)?;
                }
            }
            Command::SampleLimit => {}
            Command::Moments => {
                self.require_reps(100)?;
                for n in self.grid()? {
                    self.check_law_at(&population, n)?;
                }
            }
            Command::TransitionCheck => {
                let q = self.q_const.unwrap_or(8);
                if !(1..=16).contains(&q) {
                    return Err(invalid("q_const", "must lie in 1..=16"));
                }
                if self.h_star.unwrap_or(5) == 0 {
                    return Err(invalid("h_star", "must be at least 1"));
                }
                if self.k as u64 > q {
                    return Err(invalid("k", "exceeds q_const"));
                }
                self.require_reps(10_000)?;
                self.law
                    .check_profile(
                        &cannings_core::DiscreteProfile::constant(q, self.h_star.unwrap_or(5))
                            .map_err(|e| invalid("q_const", e))?,
                    )
                    .map_err(|e| invalid("law", e))?;
            }
            Command::Cdfi | Command::Counterexample => {
                self.require_reps(100)?;
                for n in self.grid()? {
                    self.check_law_at(&population, n)?;
                }
            }
            Command::AppendixA => {
                let n = self.single_n()?;
                if n < 4 {
                    return Err(invalid("n", "must be at least 4"));
                }
                self.require_reps(10)?;
                self.law
                    .check_profile(
                        &cannings_core::DiscreteProfile::constant(n, n as usize)
                            .map_err(|e| invalid("n", e))?,
                    )
                    .map_err(|e| invalid("law", e))?;
            }
            Command::Discrepancy => {
                for n in self.grid()? {
                    self.check_law_at(&population, n)?;
                }
            }
        }
        Ok(())
    }

    /// Canonical JSON of every field that influences results.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }
}

/// Reads and parses a config file.
pub fn load_config(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let text = fs::read_to_string(path)
        .map_err(|e| ConfigError::Parse(format!("{}: {e}", path.display())))?;
    ExperimentConfig::from_json(&text)
}
