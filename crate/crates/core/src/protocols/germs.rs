//! Long-sequence designs built from germ powers.

use super::design::{Experiment, ExperimentDesign};
use crate::gateset::Sequence;
use crate::smc::PriorSpec;
use std::collections::BTreeSet;
use std::ops::RangeInclusive;

/// Fiducials `{(), Gx, Gy, (Gx, Gx)}`.
pub fn lsgst_fiducials() -> Vec<Sequence> {
    vec![
        Sequence::empty(),
        Sequence::new(["Gx"]),
        Sequence::new(["Gy"]),
        Sequence::new(["Gx", "Gx"]),
    ]
}

/// The ten germs of the reference `{Gi, Gx, Gy}` design.
///
/// The design is often described as having eleven germs; only these ten are
/// listed, and they are used verbatim.
pub fn lsgst_germs() -> Vec<Sequence> {
    [
        &["Gx"][..],
        &["Gy"],
        &["Gi", "Gx", "Gy"],
        &["Gx", "Gy", "Gi"],
        &["Gx", "Gi", "Gy"],
        &["Gx", "Gi", "Gi"],
        &["Gy", "Gi", "Gi"],
        &["Gx", "Gx", "Gi", "Gy"],
        &["Gx", "Gy", "Gy", "Gi"],
        &["Gx", "Gx", "Gy", "Gx", "Gy", "Gy"],
    ]
    .iter()
    .map(|g| Sequence::new(g.iter().copied()))
    .collect()
}

/// Ideal `|0>`, `Gx`, `Gy`, `Gi` mixed with `1e-4` Ginibre or BCSZ noise.
pub fn lsgst_prior() -> PriorSpec {
    serde_json::from_str(
        r#"{
  "state": [{"kind": "exact", "ideal": "zero"}, {"kind": "ginibre-mix", "weight": 0.0001}],
  "effect": [{"kind": "exact", "ideal": "zero"}, {"kind": "ginibre-mix", "weight": 0.0001}],
  "gates": {
    "Gi": [{"kind": "exact", "ideal": "identity"}, {"kind": "bcsz-mix", "weight": 0.0001}],
    "Gx": [{"kind": "exact", "ideal": "rx90"}, {"kind": "bcsz-mix", "weight": 0.0001}],
    "Gy": [{"kind": "exact", "ideal": "ry90"}, {"kind": "bcsz-mix", "weight": 0.0001}]
  },
  "fiducials": [[], ["Gx"], ["Gy"], ["Gx", "Gx"]]
}"#,
    )
    .expect("built-in prior parses")
}

/// Germ repetition count `floor(2^m / |g|)`.
pub fn germ_power(germ_len: usize, m: u32) -> usize {
    (1usize << m) / germ_len
}

/// `(label)^n` for `n = 1, 2, 4, ..., 2^max_exp` and each label.
pub fn power_tests(labels: &[&str], max_exp: u32) -> Vec<Sequence> {
    labels
        .iter()
        .flat_map(|l| (0..=max_exp).map(move |e| Sequence::new([*l]).power(1 << e)))
        .collect()
}

/// Training sequences `(f_i, g^L, f_j)` for every fiducial pair, germ and
/// `m`, deduplicated and with the testing sequences removed.
pub fn germ_design(
    buttons: &[&str],
    germs: &[Sequence],
    fiducials: &[Sequence],
    max_power: RangeInclusive<u32>,
    testing: Vec<Sequence>,
    shots: u64,
) -> ExperimentDesign {
    let held_out: BTreeSet<&Sequence> = testing.iter().collect();
    let mut seen = BTreeSet::new();
    let mut training = Vec::new();
    for g in germs {
        for m in max_power.clone() {
            let body = g.power(germ_power(g.len(), m));
            for fi in fiducials {
                for fj in fiducials {
                    let s = fi.concat(&body).concat(fj);
                    if !held_out.contains(&s) && seen.insert(s.clone()) {
                        training.push(Experiment { sequence: s, shots });
                    }
                }
            }
        }
    }
    ExperimentDesign {
        buttons: buttons.iter().map(|s| s.to_string()).collect(),
        fiducials: fiducials.to_vec(),
        training,
        testing: ExperimentDesign::with_shots(testing, shots),
    }
}

/// The reference design: ten germs, `m = 1..=13`, 42 power tests.
pub fn lsgst_design(shots: u64) -> ExperimentDesign {
    germ_design(
        &["Gi", "Gx", "Gy"],
        &lsgst_germs(),
        &lsgst_fiducials(),
        1..=13,
        power_tests(&["Gx", "Gy", "Gi"], 13),
        shots,
    )
}
