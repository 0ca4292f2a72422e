//! Randomized benchmarking sequences and survival curves.

use super::clifford::{CliffordTable, Generator};
use super::design::{Experiment, ExperimentDesign};
use super::fit::DecayPoint;
use crate::error::{Error, Result};
use crate::gateset::{ButtonIndex, Sequence, Transfer};
use crate::smc::{ParticleCloud, PriorSpec};
use nalgebra::{DMatrix, Matrix4, Vector4};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// `m` random Cliffords followed by the inverse of their product.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RbSequence {
    pub cliffords: Vec<usize>,
}

impl RbSequence {
    /// Number of random Cliffords, excluding the inverse.
    pub fn m(&self) -> usize {
        self.cliffords.len() - 1
    }

    pub fn to_sequence(&self, table: &CliffordTable) -> Sequence {
        table.expand(&self.cliffords)
    }
}

pub fn rb_sequence<R: Rng + ?Sized>(m: usize, table: &CliffordTable, rng: &mut R) -> Result<RbSequence> {
    if m == 0 {
        return Err(Error::OutOfRange {
            name: "m",
            value: 0.0,
            range: ">= 1",
        });
    }
    let mut cliffords: Vec<usize> = (0..m).map(|_| rng.random_range(0..table.len())).collect();
    cliffords.push(table.inverses[table.compose(&cliffords)]);
    Ok(RbSequence { cliffords })
}

/// Sequences sharing one length.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RbGroup {
    pub m: usize,
    pub sequences: Vec<RbSequence>,
}

/// `count` log-spaced lengths over `[lo, hi]`, rounded; repeats are kept.
pub fn rb_test_lengths(count: usize, lo: usize, hi: usize) -> Vec<usize> {
    if count == 1 {
        return vec![lo];
    }
    let (a, b) = ((lo as f64).ln(), (hi as f64).ln());
    (0..count)
        .map(|k| (a + (b - a) * k as f64 / (count - 1) as f64).exp().round() as usize)
        .collect()
}

/// `count` sequences cycling through `lengths` so each length gets an
/// equal share.
pub fn rb_training<R: Rng + ?Sized>(
    table: &CliffordTable,
    count: usize,
    lengths: &[usize],
    rng: &mut R,
) -> Result<Vec<RbSequence>> {
    (0..count)
        .map(|i| rb_sequence(lengths[i % lengths.len()], table, rng))
        .collect()
}

pub fn rb_testing<R: Rng + ?Sized>(
    table: &CliffordTable,
    lengths: &[usize],
    per_length: usize,
    rng: &mut R,
) -> Result<Vec<RbGroup>> {
    lengths
        .iter()
        .map(|&m| {
            Ok(RbGroup {
                m,
                sequences: (0..per_length)
                    .map(|_| rb_sequence(m, table, rng))
                    .collect::<Result<_>>()?,
            })
        })
        .collect()
}

/// Fiducials `{(), (H), (H, S, H), (S, H, S)}`.
pub fn rb_fiducials() -> Vec<Sequence> {
    vec![
        Sequence::empty(),
        Sequence::new(["H"]),
        Sequence::new(["H", "S", "H"]),
        Sequence::new(["S", "H", "S"]),
    ]
}

/// Perfect `|0>` SPAM; `H` and `S` over-rotated by `N(0, 0.0015)` and
/// mixed with BCSZ noise of weight `1e-3`.
pub fn rb_prior() -> PriorSpec {
    serde_json::from_str(
        r#"{
  "state": [{"kind": "exact", "ideal": "zero"}],
  "effect": [{"kind": "exact", "ideal": "zero"}],
  "gates": {
    "H": [
      {"kind": "over-rotation", "axis": "hadamard", "offset": {"mean": 0.0, "variance": 0.0015}},
      {"kind": "bcsz-mix", "weight": 0.001}
    ],
    "S": [
      {"kind": "over-rotation", "axis": "z", "angle": 1.5707963267948966, "offset": {"mean": 0.0, "variance": 0.0015}},
      {"kind": "bcsz-mix", "weight": 0.001}
    ]
  },
  "fiducials": [[], ["H"], ["H", "S", "H"], ["S", "H", "S"]]
}"#,
    )
    .expect("built-in prior parses")
}

pub fn rb_design(table: &CliffordTable, training: &[RbSequence], testing: &[RbGroup], shots: u64) -> ExperimentDesign {
    let expand = |s: &RbSequence| Experiment {
        sequence: s.to_sequence(table),
        shots,
    };
    ExperimentDesign {
        buttons: Generator::ALL.iter().map(|g| g.label().to_string()).collect(),
        fiducials: rb_fiducials(),
        training: training.iter().map(expand).collect(),
        testing: testing.iter().flat_map(|g| g.sequences.iter().map(expand)).collect(),
    }
}

enum Words {
    Fixed(Vec<Matrix4<f64>>, Vector4<f64>, Vector4<f64>),
    Dynamic(Vec<DMatrix<f64>>),
}

/// Per-length mean survival of one model; `variance` is that of the mean.
pub fn survival_curve<T: Transfer>(
    model: &T,
    buttons: &ButtonIndex,
    table: &CliffordTable,
    groups: &[RbGroup],
) -> Result<Vec<DecayPoint>> {
    let gens = [
        buttons.position(Generator::H.label())?,
        buttons.position(Generator::S.label())?,
    ];
    let mats: Vec<DMatrix<f64>> = table
        .decomposition
        .iter()
        .map(|w| model.word(&w.iter().map(|g| gens[*g as usize]).collect::<Vec<_>>()))
        .collect();
    let words = if model.right().len() == 4 {
        Words::Fixed(
            mats.iter().map(|m| Matrix4::from_fn(|r, c| m[(r, c)])).collect(),
            Vector4::from_fn(|r, _| model.left()[r]),
            Vector4::from_fn(|r, _| model.right()[r]),
        )
    } else {
        Words::Dynamic(mats)
    };
    let survival = |s: &RbSequence| match &words {
        Words::Fixed(w, left, right) => {
            let mut v = *right;
            for &c in &s.cliffords {
                v = w[c] * v;
            }
            left.dot(&v)
        }
        Words::Dynamic(w) => model.evaluate_words(w, &s.cliffords),
    };
    Ok(groups
        .iter()
        .map(|g| {
            let vals: Vec<f64> = g.sequences.iter().map(survival).collect();
            let n = vals.len() as f64;
            let mean = vals.iter().sum::<f64>() / n;
            let variance = if vals.len() > 1 {
                vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0) / n
            } else {
                0.0
            };
            DecayPoint {
                m: g.m,
                mean,
                variance,
            }
        })
        .collect())
}

/// Survival curves of every particle plus the cloud-weighted curve.
#[derive(Debug, Clone)]
pub struct RbSurvival {
    /// `None` for particles without a usable representation.
    pub per_particle: Vec<Option<Vec<DecayPoint>>>,
    /// Weighted mean over particles; `variance` is the spread across them.
    pub cloud: Vec<DecayPoint>,
}

pub fn rb_survival(cloud: &ParticleCloud, table: &CliffordTable, groups: &[RbGroup]) -> Result<RbSurvival> {
    let buttons = &cloud.layout().buttons;
    for g in Generator::ALL {
        buttons.position(g.label())?;
    }
    let per_particle: Vec<Option<Vec<DecayPoint>>> = (0..cloud.len())
        .into_par_iter()
        .map(|i| {
            cloud
                .compiled(i)
                .map(|c| survival_curve(c, buttons, table, groups).expect("buttons checked"))
        })
        .collect();
    let w = cloud.weights();
    let total: f64 = per_particle
        .iter()
        .zip(w)
        .filter(|(c, _)| c.is_some())
        .map(|(_, w)| w)
        .sum();
    if !(total > 0.0) {
        return Err(Error::Degenerate("no particle has a usable representation".into()));
    }
    let cloud_curve = groups
        .iter()
        .enumerate()
        .map(|(k, g)| {
            let (mut mean, mut second) = (0.0, 0.0);
            for (c, wi) in per_particle.iter().zip(w) {
                if let Some(c) = c {
                    mean += wi / total * c[k].mean;
                    second += wi / total * c[k].mean * c[k].mean;
                }
            }
            DecayPoint {
                m: g.m,
                mean,
                variance: (second - mean * mean).max(0.0),
            }
        })
        .collect();
    Ok(RbSurvival {
        per_particle,
        cloud: cloud_curve,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prior_induces_complete_particles() {
        let spec = rb_prior();
        let cloud = crate::smc::induce_operational_prior(&spec, 20, &SeedTree::new(5)).unwrap();
        assert_eq!(cloud.len(), 20);
    }
    use crate::channels::{depolarize, SuperBra, SuperKet};
    use crate::gateset::GateSet;
    use crate::protocols::clifford::build_clifford_table;
    use crate::rng::SeedTree;
    use std::collections::BTreeMap;

    fn ideal(noise: f64) -> GateSet {
        let mut gates = BTreeMap::new();
        for g in Generator::ALL {
            gates.insert(g.label().to_string(), depolarize(&g.ptm(), noise).unwrap());
        }
        let rho = SuperKet::ground(2).unwrap();
        GateSet::new(rho.clone(), rho.as_bra(), gates).unwrap()
    }

    #[test]
    fn inverse_restores_identity() {
        let t = build_clifford_table().unwrap();
        let gs = ideal(0.0);
        let mut rng = SeedTree::new(1).stream("rb", 0);
        for m in [1, 2, 7, 40] {
            let s = rb_sequence(m, &t, &mut rng).unwrap();
            assert_eq!(s.m(), m);
            assert_eq!(t.compose(&s.cliffords), t.identity);
            let u = gs.sequence_superop(&s.to_sequence(&t)).unwrap();
            assert!((u.mat - DMatrix::identity(4, 4)).amax() < 1e-9);
        }
        let one = rb_sequence(1, &t, &mut rng).unwrap();
        assert_eq!(one.cliffords[1], t.inverses[one.cliffords[0]]);
        assert!(rb_sequence(0, &t, &mut rng).is_err());
    }

    #[test]
    fn test_lengths_span_the_range() {
        let l = rb_test_lengths(87, 10, 252);
        assert_eq!(l.len(), 87);
        assert_eq!((l[0], l[86]), (10, 252));
        assert!(l.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn survival_of_perfect_and_depolarized_gates() {
        let t = build_clifford_table().unwrap();
        let mut rng = SeedTree::new(2).stream("rb", 0);
        let groups = rb_testing(&t, &[1, 5, 20], 10, &mut rng).unwrap();
        let gs = ideal(0.0);
        let compiled = gs.compile();
        for q in survival_curve(&compiled, &gs.button_index(), &t, &groups).unwrap() {
            assert!((q.mean - 1.0).abs() < 1e-12);
        }
        let dead = ideal(1.0);
        for q in survival_curve(&dead.compile(), &dead.button_index(), &t, &groups).unwrap() {
            assert!((q.mean - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn curve_matches_direct_simulation() {
        let t = build_clifford_table().unwrap();
        let seeds = SeedTree::new(3);
        let mut rng = seeds.stream("truth", 0);
        let mut gs = GateSet::random(&["H", "S"], 2, &mut rng).unwrap();
        for g in Generator::ALL {
            let noisy = crate::channels::convex_mix(&g.ptm(), &gs.gates[g.label()], 0.02).unwrap();
            gs.gates.insert(g.label().to_string(), noisy);
        }
        gs.effect = SuperBra::from_effect(&SuperKet::ground(2).unwrap().to_matrix()).unwrap();
        let groups = rb_testing(&t, &[3, 30], 5, &mut seeds.stream("rb", 0)).unwrap();
        let curve = survival_curve(&gs.compile(), &gs.button_index(), &t, &groups).unwrap();
        for (g, q) in groups.iter().zip(&curve) {
            let direct: f64 = g
                .sequences
                .iter()
                .map(|s| gs.probability(&s.to_sequence(&t)).unwrap())
                .sum::<f64>()
                / g.sequences.len() as f64;
            assert!((q.mean - direct).abs() < 1e-12);
        }
    }
}
