//! Gauge-dependent prior descriptions for individual buttons.
//!
//! A button prior is a pipeline of stages. The first stage fixes a base
//! object (an ideal state or gate, an over-rotation, or a Ginibre state);
//! later stages add noise (depolarization, Ginibre or BCSZ mixing).

use super::{
    ptm_rx, ptm_ry, ptm_rz, random, to_superket, unitary_superop, ConvexMix, Depolarize,
    SuperKet, SuperOperator,
};
use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_1_SQRT_2;

/// A scalar distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum Dist {
    Fixed(f64),
    Normal { mean: f64, variance: f64 },
    Uniform { low: f64, high: f64 },
}

impl Default for Dist {
    fn default() -> Self {
        Dist::Fixed(0.0)
    }
}

impl Dist {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Dist::Fixed(v) if !v.is_finite() => Err(Error::Config(format!("non-finite value {v}"))),
            Dist::Normal { mean, variance } if !mean.is_finite() || !(variance >= 0.0) => Err(
                Error::Config(format!("normal distribution needs finite mean and variance >= 0, got ({mean}, {variance})")),
            ),
            Dist::Uniform { low, high } if !(low <= high) || !low.is_finite() || !high.is_finite() => Err(
                Error::Config(format!("uniform distribution needs low <= high, got [{low}, {high}]")),
            ),
            _ => Ok(()),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Dist::Fixed(v) => v,
            Dist::Normal { mean, variance } => {
                let z: f64 = rng.sample(StandardNormal);
                mean + variance.sqrt() * z
            }
            Dist::Uniform { low, high } => {
                if low == high {
                    low
                } else {
                    rng.random_range(low..high)
                }
            }
        }
    }

    /// Smallest and largest values the distribution can produce.
    fn support(&self) -> (f64, f64) {
        match *self {
            Dist::Fixed(v) => (v, v),
            Dist::Normal { .. } => (f64::NEG_INFINITY, f64::INFINITY),
            Dist::Uniform { low, high } => (low, high),
        }
    }
}

/// An ideal state, effect or gate, by name or explicit Pauli coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Ideal {
    Named(String),
    Vector(Vec<f64>),
    Matrix(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Axis {
    X,
    Y,
    Z,
    /// Rotation by `pi/2 + angle` about the Hadamard axis; angle 0 is the Hadamard.
    Hadamard,
}

/// One stage of a button prior.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ChannelPrior {
    Exact {
        ideal: Ideal,
    },
    /// Single-qubit rotation by `angle + offset`.
    OverRotation {
        axis: Axis,
        #[serde(default)]
        angle: f64,
        #[serde(default)]
        offset: Dist,
    },
    Depolarizing {
        strength: Dist,
    },
    /// `(1 - weight) x + weight sigma` with `sigma` a Ginibre state.
    GinibreMix {
        weight: f64,
        #[serde(default)]
        real_only: bool,
    },
    /// `(1 - weight) G + weight Lambda` with `Lambda` a BCSZ channel.
    BcszMix {
        weight: f64,
    },
    /// Ginibre-distributed base state.
    Ginibre {
        #[serde(default)]
        real_only: bool,
    },
}

impl ChannelPrior {
    fn is_base(&self) -> bool {
        matches!(
            self,
            ChannelPrior::Exact { .. } | ChannelPrior::OverRotation { .. } | ChannelPrior::Ginibre { .. }
        )
    }

    fn validate_parameters(&self) -> Result<()> {
        let unit = |name: &str, w: f64| {
            if (0.0..=1.0).contains(&w) {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} {w} outside [0, 1]")))
            }
        };
        match self {
            ChannelPrior::OverRotation { angle, offset, .. } => {
                if !angle.is_finite() {
                    return Err(Error::Config(format!("non-finite rotation angle {angle}")));
                }
                offset.validate()
            }
            ChannelPrior::Depolarizing { strength } => {
                strength.validate()?;
                let (lo, hi) = strength.support();
                if lo < 0.0 || hi > 1.0 {
                    return Err(Error::Config(format!(
                        "depolarization strength must lie in [0, 1], distribution spans [{lo}, {hi}]"
                    )));
                }
                Ok(())
            }
            ChannelPrior::GinibreMix { weight, .. } | ChannelPrior::BcszMix { weight } => {
                unit("mixing weight", *weight)
            }
            _ => Ok(()),
        }
    }
}

/// Which kind of object a stage list produces.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    State,
    Effect,
    Gate,
}

/// Checks stage ordering and parameter ranges.
pub fn validate_stages(stages: &[ChannelPrior], target: Target) -> Result<()> {
    let (first, rest) = stages
        .split_first()
        .ok_or_else(|| Error::Config("button prior has no stages".into()))?;
    if !first.is_base() {
        return Err(Error::Config(format!(
            "first stage must be exact, over-rotation or ginibre, got {first:?}"
        )));
    }
    for s in rest {
        if s.is_base() {
            return Err(Error::Config(format!("base stage {s:?} after the first position")));
        }
    }
    for s in stages {
        s.validate_parameters()?;
        let ok = match (s, target) {
            (ChannelPrior::OverRotation { .. } | ChannelPrior::BcszMix { .. }, Target::Gate) => true,
            (ChannelPrior::OverRotation { .. } | ChannelPrior::BcszMix { .. }, _) => false,
            (ChannelPrior::Ginibre { .. } | ChannelPrior::GinibreMix { .. }, Target::Gate) => false,
            _ => true,
        };
        if !ok {
            return Err(Error::Config(format!("stage {s:?} does not apply to a {target:?}")));
        }
    }
    Ok(())
}

fn ideal_ket(ideal: &Ideal, dim: usize) -> Result<SuperKet> {
    match ideal {
        Ideal::Named(name) => {
            let h = FRAC_1_SQRT_2;
            let qubit = |v: [f64; 4]| SuperKet::new(DVector::from_row_slice(&v), 2);
            match (name.as_str(), dim) {
                ("zero", _) => SuperKet::ground(dim),
                ("mixed", _) => SuperKet::maximally_mixed(dim),
                ("one", 2) => qubit([h, 0.0, 0.0, -h]),
                ("plus", 2) => qubit([h, h, 0.0, 0.0]),
                ("minus", 2) => qubit([h, -h, 0.0, 0.0]),
                ("plus-i", 2) => qubit([h, 0.0, h, 0.0]),
                ("minus-i", 2) => qubit([h, 0.0, -h, 0.0]),
                _ => Err(Error::Config(format!("unknown ideal state `{name}` for dimension {dim}"))),
            }
        }
        Ideal::Vector(v) => SuperKet::new(DVector::from_row_slice(v), dim),
        Ideal::Matrix(_) => Err(Error::Config("a state needs a coefficient vector, not a matrix".into())),
    }
}

fn ideal_gate(ideal: &Ideal, dim: usize) -> Result<SuperOperator> {
    use std::f64::consts::{FRAC_PI_2, PI};
    match ideal {
        Ideal::Named(name) => match (name.as_str(), dim) {
            ("identity", _) => SuperOperator::identity(dim),
            ("hadamard", 2) => unitary_superop(&super::hadamard()),
            ("s", 2) => Ok(ptm_rz(FRAC_PI_2)),
            ("rx90", 2) => Ok(ptm_rx(FRAC_PI_2)),
            ("ry90", 2) => Ok(ptm_ry(FRAC_PI_2)),
            ("rz90", 2) => Ok(ptm_rz(FRAC_PI_2)),
            ("x", 2) => Ok(ptm_rx(PI)),
            ("y", 2) => Ok(ptm_ry(PI)),
            ("z", 2) => Ok(ptm_rz(PI)),
            _ => Err(Error::Config(format!("unknown ideal gate `{name}` for dimension {dim}"))),
        },
        Ideal::Matrix(rows) => {
            let n = rows.len();
            if rows.iter().any(|r| r.len() != n) {
                return Err(Error::Config("gate matrix must be square".into()));
            }
            let flat: Vec<f64> = rows.iter().flatten().copied().collect();
            SuperOperator::new(DMatrix::from_row_slice(n, n, &flat), dim)
        }
        Ideal::Vector(_) => Err(Error::Config("a gate needs a matrix, not a vector".into())),
    }
}

fn rotation(axis: Axis, theta: f64) -> Result<SuperOperator> {
    Ok(match axis {
        Axis::X => ptm_rx(theta),
        Axis::Y => ptm_ry(theta),
        Axis::Z => ptm_rz(theta),
        Axis::Hadamard => super::overrotated_hadamard(theta),
    })
}

fn ginibre_ket<R: Rng + ?Sized>(dim: usize, real_only: bool, rng: &mut R) -> Result<SuperKet> {
    to_superket(&random::sample_ginibre_density(dim, real_only, rng)?)
}

/// Draws a state (or an effect, represented as a ket) from a stage list.
pub fn sample_ket<R: Rng + ?Sized>(stages: &[ChannelPrior], dim: usize, rng: &mut R) -> Result<SuperKet> {
    let mut ket = match stages.first() {
        Some(ChannelPrior::Exact { ideal }) => ideal_ket(ideal, dim)?,
        Some(ChannelPrior::Ginibre { real_only }) => ginibre_ket(dim, *real_only, rng)?,
        other => return Err(Error::Config(format!("invalid base stage for a state: {other:?}"))),
    };
    for stage in &stages[1..] {
        ket = match stage {
            ChannelPrior::Depolarizing { strength } => ket.depolarize(strength.sample(rng))?,
            ChannelPrior::GinibreMix { weight, real_only } => {
                ket.mix(&ginibre_ket(dim, *real_only, rng)?, *weight)?
            }
            other => return Err(Error::Config(format!("stage {other:?} does not apply to a state"))),
        };
    }
    Ok(ket)
}

/// Draws a gate from a stage list.
pub fn sample_gate<R: Rng + ?Sized>(
    stages: &[ChannelPrior],
    dim: usize,
    rng: &mut R,
) -> Result<SuperOperator> {
    let mut gate = match stages.first() {
        Some(ChannelPrior::Exact { ideal }) => ideal_gate(ideal, dim)?,
        Some(ChannelPrior::OverRotation { axis, angle, offset }) => {
            if dim != 2 {
                return Err(Error::UnsupportedDimension(dim));
            }
            rotation(*axis, angle + offset.sample(rng))?
        }
        other => return Err(Error::Config(format!("invalid base stage for a gate: {other:?}"))),
    };
    for stage in &stages[1..] {
        gate = match stage {
            ChannelPrior::Depolarizing { strength } => gate.depolarize(strength.sample(rng))?,
            ChannelPrior::BcszMix { weight } => gate.mix(&random::sample_bcsz(dim, rng)?, *weight)?,
            other => return Err(Error::Config(format!("stage {other:?} does not apply to a gate"))),
        };
    }
    Ok(gate)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeedTree;
    use std::f64::consts::FRAC_PI_2;

    fn parse(json: &str) -> Vec<ChannelPrior> {
        serde_json::from_str(json).unwrap()
    }

    #[test]
    fn parses_table_style_priors() {
        let rx = parse(r#"[{"kind":"over-rotation","axis":"x","angle":1.5707963267948966,
                           "offset":{"mean":0.0,"variance":0.001}}]"#);
        validate_stages(&rx, Target::Gate).unwrap();
        let rho = parse(r#"[{"kind":"exact","ideal":"zero"},
                            {"kind":"depolarizing","strength":{"low":0.0,"high":0.1}}]"#);
        validate_stages(&rho, Target::State).unwrap();
        let h = parse(r#"[{"kind":"over-rotation","axis":"hadamard","offset":{"mean":0,"variance":0.0015}},
                          {"kind":"bcsz-mix","weight":0.001}]"#);
        validate_stages(&h, Target::Gate).unwrap();
        assert!(serde_json::from_str::<Vec<ChannelPrior>>(r#"[{"kind":"exact","ideal":"zero","extra":1}]"#).is_err());
    }

    #[test]
    fn rejects_bad_stage_lists() {
        let neg = parse(r#"[{"kind":"exact","ideal":"zero"},{"kind":"depolarizing","strength":{"low":-0.1,"high":0.1}}]"#);
        assert!(validate_stages(&neg, Target::State).is_err());
        let big = parse(r#"[{"kind":"exact","ideal":"identity"},{"kind":"bcsz-mix","weight":1.5}]"#);
        assert!(validate_stages(&big, Target::Gate).is_err());
        let order = parse(r#"[{"kind":"depolarizing","strength":0.1},{"kind":"exact","ideal":"zero"}]"#);
        assert!(validate_stages(&order, Target::State).is_err());
        let wrong = parse(r#"[{"kind":"exact","ideal":"zero"},{"kind":"bcsz-mix","weight":0.1}]"#);
        assert!(validate_stages(&wrong, Target::Effect).is_err());
        let var = parse(r#"[{"kind":"over-rotation","axis":"x","offset":{"mean":0,"variance":-1}}]"#);
        assert!(validate_stages(&var, Target::Gate).is_err());
        assert!(validate_stages(&[], Target::Gate).is_err());
    }

    #[test]
    fn exact_priors_are_deterministic() {
        let mut rng = SeedTree::new(9).stream("prior", 0);
        let stages = parse(r#"[{"kind":"over-rotation","axis":"x","angle":1.5707963267948966}]"#);
        let a = sample_gate(&stages, 2, &mut rng).unwrap();
        let b = sample_gate(&stages, 2, &mut rng).unwrap();
        assert_eq!(a, b);
        assert!(crate::linalg::max_abs_diff(&a.mat, &ptm_rx(FRAC_PI_2).mat) < 1e-15);
    }

    #[test]
    fn depolarized_ground_state_prior() {
        let mut rng = SeedTree::new(10).stream("prior", 0);
        let stages = parse(r#"[{"kind":"exact","ideal":"zero"},{"kind":"depolarizing","strength":{"low":0,"high":0.1}}]"#);
        for _ in 0..100 {
            let k = sample_ket(&stages, 2, &mut rng).unwrap();
            let z = k.coeffs[3] / FRAC_1_SQRT_2;
            assert!((0.9..=1.0).contains(&z));
            assert!(k.is_density(1e-12));
        }
    }

    #[test]
    fn noisy_gate_priors_are_cptp() {
        let mut rng = SeedTree::new(11).stream("prior", 0);
        let stages = parse(
            r#"[{"kind":"over-rotation","axis":"hadamard","offset":{"mean":0,"variance":0.0015}},
                {"kind":"bcsz-mix","weight":0.001},
                {"kind":"depolarizing","strength":{"low":0,"high":0.1}}]"#,
        );
        for _ in 0..50 {
            let g = sample_gate(&stages, 2, &mut rng).unwrap();
            assert!(g.is_trace_preserving(1e-12));
            assert!(g.is_completely_positive(1e-10));
        }
    }

    #[test]
    fn mixing_stays_close_to_ideal() {
        let mut rng = SeedTree::new(12).stream("prior", 0);
        let eps = 1e-4;
        let ideal = ptm_rx(FRAC_PI_2);
        for _ in 0..50 {
            let lambda = random::sample_bcsz(2, &mut rng).unwrap();
            let mixed = ideal.mix(&lambda, eps).unwrap();
            let bound = eps * (lambda.mat.norm() + ideal.mat.norm());
            assert!(mixed.frobenius_distance(&ideal) <= bound + 1e-15);
            assert!(mixed.is_trace_preserving(1e-15));
        }
    }
}
