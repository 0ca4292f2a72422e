//! Run configuration files.

use crate::error::{Error, Result};
use crate::gateset::Sequence;
use crate::protocols::ramsey::RamseyTruth;
use crate::protocols::ExperimentDesign;
use crate::smc::{PriorSpec, SmcSettings};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// The only configuration format version understood so far.
pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Simulate,
    Infer,
    Rb,
    Dynamics,
    Statetomo,
    Report,
}

impl Mode {
    /// Modes that run Bayesian updates and therefore need a particle cloud.
    pub fn infers(self) -> bool {
        matches!(self, Mode::Infer | Mode::Rb | Mode::Statetomo)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Builtin {
    Ramsey,
    Rb,
    Statetomo,
    Lsgst,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum PriorSource {
    Builtin(Builtin),
    Inline(PriorSpec),
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DesignSource {
    Ramsey {
        train: [usize; 2],
        test: [usize; 2],
        shots: u64,
    },
    Lsgst {
        shots: u64,
    },
    Rb {
        #[serde(default = "rb_training")]
        training: usize,
        #[serde(default = "rb_training_lengths")]
        training_lengths: [usize; 2],
        #[serde(default = "rb_testing_count")]
        testing_count: usize,
        #[serde(default = "rb_testing_lengths")]
        testing_lengths: [usize; 2],
        #[serde(default = "rb_per_length")]
        per_length: usize,
        shots: u64,
    },
    Statetomo {
        train: [usize; 2],
        test: [usize; 2],
        count: usize,
        shots: u64,
    },
    Inline(ExperimentDesign),
    File(PathBuf),
}

fn rb_training() -> usize {
    100
}
fn rb_training_lengths() -> [usize; 2] {
    [40, 60]
}
fn rb_testing_count() -> usize {
    87
}
fn rb_testing_lengths() -> [usize; 2] {
    [10, 252]
}
fn rb_per_length() -> usize {
    100
}
fn one() -> usize {
    1
}

/// Where the simulated box comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum TruthSource {
    Ramsey(RamseyTruth),
    /// Draw from the configured prior on the `truth` stream at this index.
    PriorSample(u64),
    /// A gate-set JSON file.
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DynamicsParams {
    /// Fiducial channels, as button sequences on the true gate set.
    pub fiducials: Vec<Sequence>,
    pub alpha: Vec<f64>,
    #[serde(default = "unit")]
    pub t_end: f64,
    #[serde(default = "default_steps")]
    pub steps: usize,
    /// Step size and tolerance for the Taylor truncation order report.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub taylor: Option<TaylorParams>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaylorParams {
    pub delta: f64,
    pub eps: f64,
}

fn unit() -> f64 {
    1.0
}
fn default_steps() -> usize {
    100
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StatetomoParams {
    /// Independent rebits, each with its own prior-sampled truth.
    #[serde(default = "one")]
    pub rebits: usize,
}

impl Default for StatetomoParams {
    fn default() -> Self {
        Self { rebits: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub version: u32,
    pub seed: u64,
    pub mode: Mode,
    #[serde(default = "default_particles")]
    pub particles: usize,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prior: Option<PriorSource>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub design: Option<DesignSource>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truth: Option<TruthSource>,
    /// Observed data; simulated from `truth` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data: Option<PathBuf>,
    /// Posterior checkpoint read by `report`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checkpoint: Option<PathBuf>,
    #[serde(default)]
    pub smc: SmcSettings,
    #[serde(default = "default_level")]
    pub credible_level: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dynamics: Option<DynamicsParams>,
    #[serde(default)]
    pub statetomo: StatetomoParams,
}

fn default_particles() -> usize {
    1000
}
fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}
fn default_level() -> f64 {
    0.95
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.version != CONFIG_VERSION {
            return Err(Error::Config(format!(
                "version: unsupported value {} (expected {CONFIG_VERSION})",
                self.version
            )));
        }
        if self.mode.infers() && self.particles < 2 {
            return Err(Error::Config(format!(
                "particles: {} mode needs at least 2 particles, got {}",
                self.mode.name(),
                self.particles
            )));
        }
        self.smc.validate().map_err(|e| Error::Config(format!("smc: {e}")))?;
        if !(self.credible_level > 0.0 && self.credible_level < 1.0) {
            return Err(Error::Config(format!(
                "credible_level: {} outside (0, 1)",
                self.credible_level
            )));
        }
        let need = |present: bool, field: &str| {
            if present {
                Ok(())
            } else {
                Err(Error::Config(format!("{field}: required in {} mode", self.mode.name())))
            }
        };
        match self.mode {
            Mode::Simulate => {
                need(self.design.is_some(), "design")?;
                need(self.truth.is_some(), "truth")?;
            }
            Mode::Infer | Mode::Rb | Mode::Statetomo => {
                need(self.design.is_some(), "design")?;
                need(self.data.is_some() || self.truth.is_some(), "truth")?;
            }
            Mode::Dynamics => {
                need(self.truth.is_some(), "truth")?;
                need(self.dynamics.is_some(), "dynamics")?;
            }
            Mode::Report => {
                need(self.checkpoint.is_some(), "checkpoint")?;
                need(self.data.is_some(), "data")?;
            }
        }
        let builtin_prior = matches!(self.mode, Mode::Rb | Mode::Statetomo);
        if matches!(self.truth, Some(TruthSource::PriorSample(_))) && !builtin_prior {
            need(self.prior.is_some(), "prior")?;
        }
        if let Some(d) = &self.dynamics {
            if d.steps == 0 || !(d.t_end > 0.0) {
                return Err(Error::Config("dynamics: need steps >= 1 and t_end > 0".into()));
            }
            if d.alpha.len() != d.fiducials.len() {
                return Err(Error::Config(format!(
                    "dynamics.alpha: {} coefficients for {} fiducials",
                    d.alpha.len(),
                    d.fiducials.len()
                )));
            }
        }
        if self.statetomo.rebits == 0 {
            return Err(Error::Config("statetomo.rebits: must be at least 1".into()));
        }
        Ok(())
    }
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Simulate => "simulate",
            Mode::Infer => "infer",
            Mode::Rb => "rb",
            Mode::Dynamics => "dynamics",
            Mode::Statetomo => "statetomo",
            Mode::Report => "report",
        }
    }
}

/// Parses and validates configuration text. `origin` names the source in errors.
pub fn parse_config_str(text: &str, origin: &str) -> Result<RunConfig> {
    let config: RunConfig = serde_json::from_str(text).map_err(|e| Error::Parse {
        path: origin.to_string(),
        line: e.line(),
        message: e.to_string(),
    })?;
    config.validate()?;
    Ok(config)
}

/// Reads a configuration file. Relative paths inside it are resolved
/// against the file's directory, except `output_dir`.
pub fn parse_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)?;
    let mut config = parse_config_str(&text, &path.display().to_string())?;
    if let Some(base) = path.parent() {
        config.resolve_paths(base);
    }
    Ok(config)
}

impl RunConfig {
    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(PriorSource::File(p)) = &mut self.prior {
            fix(p);
        }
        if let Some(DesignSource::File(p)) = &mut self.design {
            fix(p);
        }
        if let Some(TruthSource::File(p)) = &mut self.truth {
            fix(p);
        }
        if let Some(p) = &mut self.data {
            fix(p);
        }
        if let Some(p) = &mut self.checkpoint {
            fix(p);
        }
    }
}
