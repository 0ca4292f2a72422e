//! Gate sets, sequences and the gauge-free operational representation.

mod oprep;
mod plan;
mod sequence;

pub use oprep::{
    build_operational_rep, canonical_gauge, informational_completeness, lgst_reconstruct,
    minimal_parameterization, minimal_parameterization_split, oprep_sequence_probability,
    rep_on_layout, true_gauge,
    CompiledRep, Completeness, Layout, OperationalRep,
};
pub use plan::{ButtonIndex, Plan, Transfer};
pub use sequence::{valid_label, Button, ButtonKind, Sequence};

use crate::channels::{self, SuperBra, SuperKet, SuperOperator};
use crate::error::{Error, Result};
use crate::linalg;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Largest gauge condition number accepted.
pub const MAX_GAUGE_CONDITION: f64 = 1e12;
/// Slack on `[0, 1]` when checking operational positivity.
pub const POSITIVITY_TOL: f64 = 1e-9;

/// Clamps a raw probability into `[0, 1]`; NaN maps to 1/2.
pub fn clip_probability(p: f64) -> f64 {
    if p.is_nan() {
        0.5
    } else {
        p.clamp(0.0, 1.0)
    }
}

/// A gauge-dependent gate set `{rho, E, G_k}` in the Pauli basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateSet {
    pub rho: SuperKet,
    pub effect: SuperBra,
    pub gates: BTreeMap<String, SuperOperator>,
}

impl GateSet {
    pub fn new(rho: SuperKet, effect: SuperBra, gates: BTreeMap<String, SuperOperator>) -> Result<Self> {
        let dim = rho.dim;
        let mismatch = |found| Error::DimensionMismatch { expected: dim, found };
        if effect.dim != dim {
            return Err(mismatch(effect.dim));
        }
        for (label, g) in &gates {
            if !valid_label(label) {
                return Err(Error::Config(format!("invalid button label `{label}`")));
            }
            if g.dim != dim {
                return Err(mismatch(g.dim));
            }
        }
        Ok(Self { rho, effect, gates })
    }

    /// Random physical gate set: Ginibre state and effect, BCSZ gates.
    pub fn random<R: Rng + ?Sized>(labels: &[&str], dim: usize, rng: &mut R) -> Result<Self> {
        let rho = channels::to_superket(&channels::sample_ginibre_density(dim, false, rng)?)?;
        let effect = SuperBra::from_effect(&channels::sample_ginibre_density(dim, false, rng)?)?;
        let mut gates = BTreeMap::new();
        for l in labels {
            gates.insert(l.to_string(), channels::sample_bcsz(dim, rng)?);
        }
        Self::new(rho, effect, gates)
    }

    pub fn dim(&self) -> usize {
        self.rho.dim
    }

    pub fn labels(&self) -> Vec<String> {
        self.gates.keys().cloned().collect()
    }

    pub fn button_index(&self) -> ButtonIndex {
        ButtonIndex::new(self.labels()).expect("map keys are unique")
    }

    pub fn compile(&self) -> CompiledGateSet {
        CompiledGateSet {
            index: self.button_index(),
            left: self.effect.coeffs.clone(),
            right: self.rho.coeffs.clone(),
            mats: self.gates.values().map(|g| g.mat.clone()).collect(),
        }
    }

    /// Product `G_{s_{m-1}} ... G_{s_0}` of a sequence's gates.
    pub fn sequence_superop(&self, s: &Sequence) -> Result<SuperOperator> {
        let n = self.dim() * self.dim();
        let mut acc = DMatrix::identity(n, n);
        for label in s.labels() {
            let g = self
                .gates
                .get(label)
                .ok_or_else(|| Error::UnknownButton(label.clone()))?;
            acc = &g.mat * acc;
        }
        SuperOperator::new(acc, self.dim())
    }

    pub fn probability(&self, s: &Sequence) -> Result<f64> {
        sequence_probability(self, s)
    }
}

/// Born-rule probability `<<E| G_{s_{m-1}} ... G_{s_0} |rho>>`, unclipped.
pub fn sequence_probability(gs: &GateSet, s: &Sequence) -> Result<f64> {
    let mut v = gs.rho.coeffs.clone();
    for label in s.labels() {
        let g = gs
            .gates
            .get(label)
            .ok_or_else(|| Error::UnknownButton(label.clone()))?;
        v = &g.mat * v;
    }
    Ok(gs.effect.coeffs.dot(&v))
}

/// A gate set flattened to matrices indexed by button position.
#[derive(Debug, Clone)]
pub struct CompiledGateSet {
    pub index: ButtonIndex,
    left: DVector<f64>,
    right: DVector<f64>,
    mats: Vec<DMatrix<f64>>,
}

impl CompiledGateSet {
    pub fn probability(&self, s: &Sequence) -> Result<f64> {
        Ok(self.evaluate(&self.index.plan(s)?))
    }
}

impl Transfer for CompiledGateSet {
    fn left(&self) -> &DVector<f64> {
        &self.left
    }

    fn right(&self) -> &DVector<f64> {
        &self.right
    }

    fn matrices(&self) -> &[DMatrix<f64>] {
        &self.mats
    }
}

/// `{B|rho>>, <<E|B^-1, B G B^-1}`.
pub fn gauge_transform(gs: &GateSet, b: &SuperOperator) -> Result<GateSet> {
    let spec = linalg::spectrum(&b.mat);
    if b.mat.nrows() != b.mat.ncols() || spec.condition > MAX_GAUGE_CONDITION || !spec.condition.is_finite() {
        return Err(Error::SingularGauge(spec.condition));
    }
    let b_inv = b
        .mat
        .clone()
        .try_inverse()
        .ok_or(Error::SingularGauge(f64::INFINITY))?;
    let dim = gs.dim();
    let rho = SuperKet::new(&b.mat * &gs.rho.coeffs, dim)?;
    let effect = SuperBra::new(b_inv.tr_mul(&gs.effect.coeffs), dim)?;
    let gates = gs
        .gates
        .iter()
        .map(|(k, g)| Ok((k.clone(), SuperOperator::new(&b.mat * &g.mat * &b_inv, dim)?)))
        .collect::<Result<BTreeMap<_, _>>>()?;
    GateSet::new(rho, effect, gates)
}

/// Anything that assigns raw probabilities to sequences.
pub trait SequenceModel {
    fn raw_probability(&self, s: &Sequence) -> Result<f64>;
}

impl SequenceModel for GateSet {
    fn raw_probability(&self, s: &Sequence) -> Result<f64> {
        sequence_probability(self, s)
    }
}

impl SequenceModel for OperationalRep {
    fn raw_probability(&self, s: &Sequence) -> Result<f64> {
        oprep_sequence_probability(self, s, false)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Positivity {
    pub positive: bool,
    pub violations: Vec<(Sequence, f64)>,
}

/// Checks that every test sequence has a raw probability in `[-tol, 1 + tol]`.
pub fn operational_positivity<M: SequenceModel>(model: &M, test_set: &[Sequence]) -> Result<Positivity> {
    let mut violations = Vec::new();
    for s in test_set {
        let p = model.raw_probability(s)?;
        if !(p >= -POSITIVITY_TOL && p <= 1.0 + POSITIVITY_TOL) {
            violations.push((s.clone(), p));
        }
    }
    Ok(Positivity {
        positive: violations.is_empty(),
        violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{ptm_rx, ptm_rz};
    use crate::rng::SeedTree;
    use std::f64::consts::FRAC_PI_2;

    pub(crate) fn ramsey(omega: f64) -> GateSet {
        let mut gates = BTreeMap::new();
        gates.insert("Rx".to_string(), ptm_rx(FRAC_PI_2));
        gates.insert("dt".to_string(), ptm_rz(omega));
        GateSet::new(
            SuperKet::ground(2).unwrap(),
            SuperKet::ground(2).unwrap().as_bra(),
            gates,
        )
        .unwrap()
    }

    #[test]
    fn born_rule_examples() {
        let gs = ramsey(0.3);
        assert!((gs.probability(&Sequence::empty()).unwrap() - 1.0).abs() < 1e-15);
        let flip = Sequence::new(["Rx", "Rx"]);
        assert!(gs.probability(&flip).unwrap().abs() < 1e-15);
        for n in [0, 1, 5, 17] {
            let s = Sequence::new(["Rx"]).concat(&Sequence::new(["dt"]).power(n)).concat(&Sequence::new(["Rx"]));
            // The two pulses compose to a flip, so the bright fringe is sin^2.
            let expect = (0.3 * n as f64 / 2.0).sin().powi(2);
            assert!((gs.probability(&s).unwrap() - expect).abs() < 1e-12);
            assert!((gs.compile().probability(&s).unwrap() - expect).abs() < 1e-12);
        }
        assert!(matches!(
            gs.probability(&Sequence::new(["Ry"])),
            Err(Error::UnknownButton(_))
        ));
    }

    #[test]
    fn gauge_transform_examples() {
        let mut rng = SeedTree::new(21).stream("gauge", 0);
        let gs = GateSet::random(&["a", "b"], 2, &mut rng).unwrap();
        let id = SuperOperator::identity(2).unwrap();
        assert_eq!(gauge_transform(&gs, &id).unwrap(), gs);

        let b = SuperOperator::new(DMatrix::from_fn(4, 4, |i, j| if i == j { 1.0 } else { 0.0 } + 0.3 * ((i * 4 + j) as f64).sin()), 2).unwrap();
        let binv = SuperOperator::new(b.mat.clone().try_inverse().unwrap(), 2).unwrap();
        let moved = gauge_transform(&gs, &b).unwrap();
        let back = gauge_transform(&moved, &binv).unwrap();
        assert!(linalg::max_abs_diff(&back.gates["a"].mat, &gs.gates["a"].mat) < 1e-9);
        for _ in 0..100 {
            let len = rng.random_range(0..=10);
            let s = Sequence::new((0..len).map(|_| if rng.random::<bool>() { "a" } else { "b" }));
            let d = gs.probability(&s).unwrap() - moved.probability(&s).unwrap();
            assert!(d.abs() < 1e-9);
        }
        let singular = SuperOperator::new(DMatrix::zeros(4, 4), 2).unwrap();
        assert!(matches!(gauge_transform(&gs, &singular), Err(Error::SingularGauge(_))));
    }

    #[test]
    fn positivity_examples() {
        let gs = ramsey(0.4);
        let tests: Vec<Sequence> = (0..20).map(|n| Sequence::new(["Rx"]).concat(&Sequence::new(["dt"]).power(n))).collect();
        assert!(operational_positivity(&gs, &tests).unwrap().positive);
        let mut bad = gs.clone();
        bad.effect.coeffs *= 1.5;
        let report = operational_positivity(&bad, &[Sequence::empty()]).unwrap();
        assert!(!report.positive);
        assert_eq!(report.violations[0].0, Sequence::empty());
    }

    #[test]
    fn clipping() {
        assert_eq!(clip_probability(-0.03), 0.0);
        assert_eq!(clip_probability(1.2), 1.0);
        assert_eq!(clip_probability(f64::NAN), 0.5);
        assert_eq!(clip_probability(f64::INFINITY), 1.0);
        assert_eq!(clip_probability(f64::NEG_INFINITY), 0.0);
    }
}
