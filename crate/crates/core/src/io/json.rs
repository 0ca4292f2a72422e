//! JSON forms of gate sets and operational representations.
//!
//! Matrices are stored row-major as nested arrays in the normalized Pauli
//! basis, tagged `"basis": "pauli-normalized"`.

use crate::channels::{SuperBra, SuperKet, SuperOperator};
use crate::error::{Error, Result};
use crate::gateset::{minimal_parameterization_split, GateSet, Layout, OperationalRep};
use nalgebra::{DMatrix, DVector};
use serde::{de::DeserializeOwned, Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

pub const BASIS_TAG: &str = "pauli-normalized";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GateSetFile {
    pub basis: String,
    pub dim: usize,
    pub rho: Vec<f64>,
    pub effect: Vec<f64>,
    pub gates: BTreeMap<String, Vec<Vec<f64>>>,
}

fn check_basis(tag: &str) -> Result<()> {
    if tag == BASIS_TAG {
        Ok(())
    } else {
        Err(Error::Config(format!("basis `{tag}` is not supported (expected `{BASIS_TAG}`)")))
    }
}

impl From<&GateSet> for GateSetFile {
    fn from(gs: &GateSet) -> Self {
        Self {
            basis: BASIS_TAG.into(),
            dim: gs.dim(),
            rho: gs.rho.coeffs.iter().copied().collect(),
            effect: gs.effect.coeffs.iter().copied().collect(),
            gates: gs
                .gates
                .iter()
                .map(|(k, g)| (k.clone(), g.mat.row_iter().map(|r| r.iter().copied().collect()).collect()))
                .collect(),
        }
    }
}

impl GateSetFile {
    pub fn to_gate_set(&self) -> Result<GateSet> {
        check_basis(&self.basis)?;
        let n = self.dim * self.dim;
        let mut gates = BTreeMap::new();
        for (label, rows) in &self.gates {
            if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                return Err(Error::Config(format!("gate `{label}` is not {n} x {n}")));
            }
            let mat = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
            gates.insert(label.clone(), SuperOperator::new(mat, self.dim)?);
        }
        GateSet::new(
            SuperKet::new(DVector::from_vec(self.rho.clone()), self.dim)?,
            SuperBra::new(DVector::from_vec(self.effect.clone()), self.dim)?,
            gates,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperationalRepFile {
    pub basis: String,
    pub layout: Layout,
    pub minimal: Vec<f64>,
}

impl From<&OperationalRep> for OperationalRepFile {
    fn from(rep: &OperationalRep) -> Self {
        Self {
            basis: BASIS_TAG.into(),
            layout: (*rep.layout).clone(),
            minimal: rep.minimal.iter().copied().collect(),
        }
    }
}

impl OperationalRepFile {
    /// Rebuilds the layout from its fiducials and checks it matches the stored one.
    pub fn to_rep(&self) -> Result<OperationalRep> {
        check_basis(&self.basis)?;
        let layout = minimal_parameterization_split(
            self.layout.gate_labels(),
            &self.layout.prep_fiducials,
            &self.layout.meas_fiducials,
        )?;
        if layout != self.layout {
            return Err(Error::Config("stored layout is inconsistent with its fiducials".into()));
        }
        OperationalRep::from_minimal(Arc::new(layout), DVector::from_vec(self.minimal.clone()))
    }
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    std::fs::write(path, to_json(value)?)?;
    Ok(())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.display().to_string(),
        line: e.line(),
        message: e.to_string(),
    })
}

pub fn write_gate_set(path: &Path, gs: &GateSet) -> Result<()> {
    write_json(path, &GateSetFile::from(gs))
}

pub fn read_gate_set(path: &Path) -> Result<GateSet> {
    read_json::<GateSetFile>(path)?.to_gate_set()
}
