use std::fmt;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use gfvi_core::gfvi::InitialLaw;
use gfvi_core::{DistinguishedPartition, Factor, MeasureSpec, MomentFunctional};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    SimulateCoalescent,
    SimulateGfvi,
    DualityCheck,
    MarginalCheck,
    CdiReport,
    RatesTable,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::SimulateCoalescent => "simulate-coalescent",
            ExperimentKind::SimulateGfvi => "simulate-gfvi",
            ExperimentKind::DualityCheck => "duality-check",
            ExperimentKind::MarginalCheck => "marginal-check",
            ExperimentKind::CdiReport => "cdi-report",
            ExperimentKind::RatesTable => "rates-table",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A test function and the start partition it is paired with in duality
/// checks. `start` lists blocks of `{0,...,p}`; empty means singletons.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FunctionalSpec {
    pub factors: Vec<Factor>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub start: Vec<Vec<usize>>,
}

impl FunctionalSpec {
    pub fn functional(&self) -> Result<MomentFunctional, CliError> {
        MomentFunctional::new(self.factors.clone()).map_err(CliError::from_core)
    }

    pub fn start_partition(&self) -> Result<DistinguishedPartition, CliError> {
        let p = self.factors.len();
        if self.start.is_empty() {
            return Ok(DistinguishedPartition::singletons(p));
        }
        let pi = DistinguishedPartition::from_blocks(&self.start).map_err(CliError::from_core)?;
        if pi.n() != p {
            return Err(CliError::Config(format!(
                "start partition {pi} does not match a functional of arity {p}"
            )));
        }
        Ok(pi)
    }
}

fn default_replicates() -> usize {
    gfvi_core::harness::DEFAULT_REPLICATES
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// May be left out when the subcommand names the experiment.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub experiment: Option<ExperimentKind>,
    /// Mandatory; there is no wall-clock seeding.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    /// Resolution: particles for GFVI runs, `n` for coalescent runs and
    /// rate tables, the simulation resolution for marginal checks.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    /// Restriction level of marginal checks.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub times: Vec<f64>,
    /// Resolutions of the fixation-time check in `cdi-report`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub resolutions: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub series_terms: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    pub measure: MeasureSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_law: Option<InitialLaw>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub functionals: Vec<FunctionalSpec>,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> Result<String, CliError> {
        toml::to_string(self).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Checks everything that can be checked without running: the measure,
    /// the seed, and the fields the experiment needs.
    pub fn validate(&self) -> Result<(), CliError> {
        let diag = self.measure.validate();
        if !diag.is_valid() {
            return Err(CliError::InvalidMeasure(
                diag.violations.iter().map(|v| v.to_string()).collect(),
            ));
        }
        if self.seed.is_none() {
            return Err(CliError::Config("a seed is required (config `seed` or --seed)".into()));
        }
        let kind = self
            .experiment
            .ok_or_else(|| CliError::Config("no experiment kind given".into()))?;
        if self.replicates == 0 {
            return Err(CliError::Config("replicates must be positive".into()));
        }
        if let Some(t) = self.times.iter().find(|t| !t.is_finite() || **t < 0.0) {
            return Err(CliError::Config(format!("time {t} must be finite and >= 0")));
        }
        let need = |ok: bool, what: &str| {
            if ok {
                Ok(())
            } else {
                Err(CliError::Config(format!("{kind} needs {what}")))
            }
        };
        match kind {
            ExperimentKind::SimulateCoalescent => {
                need(self.n.is_some_and(|n| n >= 1), "n >= 1")?;
                need(!self.times.is_empty(), "a time grid")?;
            }
            ExperimentKind::SimulateGfvi => {
                need(self.n.is_some_and(|n| n >= 1), "n >= 1")?;
                need(!self.times.is_empty(), "a time grid")?;
                need(self.initial_law.is_some(), "an initial law")?;
            }
            ExperimentKind::DualityCheck => {
                need(!self.times.is_empty(), "a time grid")?;
                need(!self.functionals.is_empty(), "at least one functional")?;
                need(
                    matches!(self.initial_law, Some(InitialLaw::Discrete { .. })),
                    "a discrete initial law",
                )?;
            }
            ExperimentKind::MarginalCheck => {
                need(self.p.is_some_and(|p| p >= 1), "p >= 1")?;
                need(!self.times.is_empty(), "a time grid")?;
            }
            ExperimentKind::CdiReport => {}
            ExperimentKind::RatesTable => need(self.n.is_some(), "n")?,
        }
        if let Some(law) = &self.initial_law {
            law.as_atomic().map_err(CliError::from_core)?;
        }
        for f in &self.functionals {
            f.functional()?;
            f.start_partition()?;
        }
        Ok(())
    }
}
