//! Experiment designs: which sequences to run and how often.

use crate::error::{Error, Result};
use crate::gateset::Sequence;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Experiment {
    pub sequence: Sequence,
    pub shots: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentDesign {
    /// Gate buttons the design may reference.
    pub buttons: Vec<String>,
    pub fiducials: Vec<Sequence>,
    pub training: Vec<Experiment>,
    pub testing: Vec<Experiment>,
}

impl ExperimentDesign {
    pub fn validate(&self) -> Result<()> {
        let declared: BTreeSet<&str> = self.buttons.iter().map(String::as_str).collect();
        let all = self
            .fiducials
            .iter()
            .chain(self.training.iter().map(|e| &e.sequence))
            .chain(self.testing.iter().map(|e| &e.sequence));
        for s in all {
            if let Some(l) = s.labels().iter().find(|l| !declared.contains(l.as_str())) {
                return Err(Error::UnknownButton(l.clone()));
            }
        }
        if let Some(e) = self.training.iter().chain(&self.testing).find(|e| e.shots == 0) {
            return Err(Error::Config(format!("sequence {} has zero shots", e.sequence)));
        }
        Ok(())
    }

    pub fn with_shots(sequences: impl IntoIterator<Item = Sequence>, shots: u64) -> Vec<Experiment> {
        sequences
            .into_iter()
            .map(|sequence| Experiment { sequence, shots })
            .collect()
    }
}
