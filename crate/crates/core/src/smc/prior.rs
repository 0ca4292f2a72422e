//! Gauge-dependent priors and the operational prior they induce.

use crate::channels::prior::{sample_gate, sample_ket, validate_stages, Target};
use crate::channels::ChannelPrior;
use crate::error::{Error, Result};
use crate::gateset::{
    informational_completeness, minimal_parameterization_split, rep_on_layout, GateSet, Layout,
    Sequence,
};
use crate::rng::{Rng, SeedTree};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::sync::Arc;

use super::ParticleCloud;

/// Consecutive rank-deficient draws tolerated before giving up.
pub const MAX_REJECTIONS: usize = 1000;

fn default_dim() -> usize {
    2
}

/// Per-button priors plus the fiducials that fix the operational frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriorSpec {
    #[serde(default = "default_dim")]
    pub dim: usize,
    pub state: Vec<ChannelPrior>,
    pub effect: Vec<ChannelPrior>,
    pub gates: BTreeMap<String, Vec<ChannelPrior>>,
    pub fiducials: Vec<Sequence>,
    /// Separate measurement fiducials; the preparation list is reused when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meas_fiducials: Option<Vec<Sequence>>,
}

impl PriorSpec {
    pub fn validate(&self) -> Result<()> {
        validate_stages(&self.state, Target::State).map_err(|e| context("state", e))?;
        validate_stages(&self.effect, Target::Effect).map_err(|e| context("effect", e))?;
        if self.gates.is_empty() {
            return Err(Error::Config("prior declares no gate buttons".into()));
        }
        for (label, stages) in &self.gates {
            validate_stages(stages, Target::Gate).map_err(|e| context(label, e))?;
        }
        self.layout()?;
        Ok(())
    }

    pub fn labels(&self) -> Vec<String> {
        self.gates.keys().cloned().collect()
    }

    pub fn meas(&self) -> &[Sequence] {
        self.meas_fiducials.as_deref().unwrap_or(&self.fiducials)
    }

    pub fn layout(&self) -> Result<Layout> {
        minimal_parameterization_split(&self.labels(), &self.fiducials, self.meas())
    }

    /// One gauge-dependent gate set from the prior.
    pub fn sample_gate_set(&self, rng: &mut Rng) -> Result<GateSet> {
        let rho = sample_ket(&self.state, self.dim, rng)?;
        let effect = sample_ket(&self.effect, self.dim, rng)?.as_bra();
        let mut gates = BTreeMap::new();
        for (label, stages) in &self.gates {
            gates.insert(label.clone(), sample_gate(stages, self.dim, rng)?);
        }
        GateSet::new(rho, effect, gates)
    }
}

fn context(what: &str, e: Error) -> Error {
    match e {
        Error::Config(m) => Error::Config(format!("prior for `{what}`: {m}")),
        other => other,
    }
}

/// Samples `n` particles by drawing gate sets and measuring their slots.
///
/// Draws whose `F~` has rank below `d^2` are rejected. Particle `i` uses
/// its own substream, so the cloud does not depend on the thread count.
pub fn induce_operational_prior(spec: &PriorSpec, n: usize, seeds: &SeedTree) -> Result<ParticleCloud> {
    if n == 0 {
        return Err(Error::Config("particle count must be at least 1".into()));
    }
    spec.validate()?;
    let layout = Arc::new(spec.layout()?);
    let particles = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = seeds.stream("prior", i as u64);
            let mut rejected = 0;
            loop {
                let gs = spec.sample_gate_set(&mut rng)?;
                let rep = rep_on_layout(&gs, layout.clone())?;
                if informational_completeness(&rep, spec.dim).complete {
                    return Ok(rep.minimal);
                }
                rejected += 1;
                if rejected > MAX_REJECTIONS {
                    return Err(Error::IncompleteFiducials(rejected));
                }
            }
        })
        .collect::<Result<Vec<_>>>()?;
    ParticleCloud::uniform(layout, particles)
}
