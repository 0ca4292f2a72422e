//! Rebit state tomography and pseudo-Bloch coordinates.

use super::design::ExperimentDesign;
use crate::channels::SuperKet;
use crate::error::{Error, Result};
use crate::gateset::{OperationalRep, Sequence};
use crate::smc::{Datum, PriorSpec};
use rand::Rng;
use std::ops::RangeInclusive;

pub const RX: &str = "Rx";
/// The button taking `+x` to `+z`, so that its fiducial reads out `x`.
/// In the `exp(-i theta Y / 2)` convention this is `Ry(-pi/2)`.
pub const RY: &str = "Ry";

/// Fiducials `{(), (Rx), (Ry), (Rx, Rx)}`.
pub fn statetomo_fiducials() -> Vec<Sequence> {
    vec![
        Sequence::empty(),
        Sequence::new([RX]),
        Sequence::new([RY]),
        Sequence::new([RX, RX]),
    ]
}

/// Ginibre rebits and `|0>` readout, each depolarized by `U(0, 0.1)`, and
/// rotation buttons over-rotated by `N(0, 1e-3)` then depolarized.
pub fn statetomo_prior() -> PriorSpec {
    serde_json::from_str(
        r#"{
  "state": [{"kind": "ginibre", "real_only": true}, {"kind": "depolarizing", "strength": {"low": 0.0, "high": 0.1}}],
  "effect": [{"kind": "exact", "ideal": "zero"}, {"kind": "depolarizing", "strength": {"low": 0.0, "high": 0.1}}],
  "gates": {
    "Rx": [
      {"kind": "over-rotation", "axis": "x", "angle": 1.5707963267948966, "offset": {"mean": 0.0, "variance": 0.001}},
      {"kind": "depolarizing", "strength": {"low": 0.0, "high": 0.1}}
    ],
    "Ry": [
      {"kind": "over-rotation", "axis": "y", "angle": -1.5707963267948966, "offset": {"mean": 0.0, "variance": 0.001}},
      {"kind": "depolarizing", "strength": {"low": 0.0, "high": 0.1}}
    ]
  },
  "fiducials": [[], ["Rx"], ["Ry"], ["Rx", "Rx"]]
}"#,
    )
    .expect("built-in prior parses")
}

/// Products of `n` uniformly chosen fiducials, with `n` stepping linearly
/// across `lengths` so each value gets an equal share of `count`.
pub fn fiducial_products<R: Rng + ?Sized>(lengths: RangeInclusive<usize>, count: usize, rng: &mut R) -> Vec<Sequence> {
    let fids = statetomo_fiducials();
    let (lo, hi) = (*lengths.start(), *lengths.end());
    let span = hi - lo + 1;
    (0..count)
        .map(|i| {
            let n = lo + i * span / count;
            let mut s = Sequence::empty();
            for _ in 0..n {
                s = s.concat(&fids[rng.random_range(0..fids.len())]);
            }
            s
        })
        .collect()
}

pub fn statetomo_design<R: Rng + ?Sized>(
    n_train: RangeInclusive<usize>,
    n_test: RangeInclusive<usize>,
    count: usize,
    shots: u64,
    rng: &mut R,
) -> ExperimentDesign {
    let training = ExperimentDesign::with_shots(fiducial_products(n_train, count, rng), shots);
    let testing = ExperimentDesign::with_shots(fiducial_products(n_test, count, rng), shots);
    ExperimentDesign {
        buttons: vec![RX.into(), RY.into()],
        fiducials: statetomo_fiducials(),
        training,
        testing,
    }
}

/// `(2 p_x - 1, 2 p_y - 1, 2 p_z - 1)`.
pub fn bloch_from_probabilities(p_x: f64, p_y: f64, p_z: f64) -> [f64; 3] {
    [2.0 * p_x - 1.0, 2.0 * p_y - 1.0, 2.0 * p_z - 1.0]
}

/// Reads `a_x, a_y, a_z` off the `F~` entries of `(Ry)`, `(Rx)` and `()`.
pub fn pseudo_bloch(rep: &OperationalRep) -> Result<[f64; 3]> {
    let layout = &rep.layout;
    let find = |list: &[Sequence], s: Sequence| {
        list.iter()
            .position(|f| *f == s)
            .ok_or_else(|| Error::MissingFiducial(s.to_string()))
    };
    let row = find(&layout.meas_fiducials, Sequence::empty())?;
    let col = |s| find(&layout.prep_fiducials, s);
    let (cz, cx, cy) = (col(Sequence::empty())?, col(Sequence::new([RY]))?, col(Sequence::new([RX]))?);
    let f = rep.f_tilde();
    Ok(bloch_from_probabilities(f[(row, cx)], f[(row, cy)], f[(row, cz)]))
}

/// Pseudo-Bloch vector from observed frequencies of `()`, `(Rx)` and `(Ry)`.
pub fn naive_pseudo_bloch(data: &[Datum]) -> Result<[f64; 3]> {
    let freq = |s: Sequence| {
        data.iter()
            .find(|d| d.sequence == s)
            .map(Datum::frequency)
            .ok_or_else(|| Error::MissingFiducial(s.to_string()))
    };
    Ok(bloch_from_probabilities(
        freq(Sequence::new([RY]))?,
        freq(Sequence::new([RX]))?,
        freq(Sequence::empty())?,
    ))
}

/// True Bloch vector of a qubit state.
pub fn bloch_vector(rho: &SuperKet) -> Result<[f64; 3]> {
    if rho.dim != 2 {
        return Err(Error::UnsupportedDimension(rho.dim));
    }
    let s = std::f64::consts::SQRT_2;
    Ok([s * rho.coeffs[1], s * rho.coeffs[2], s * rho.coeffs[3]])
}

pub fn distance(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{ptm_rx, ptm_ry, sample_ginibre_density, to_superket};
    use crate::gateset::{build_operational_rep, GateSet};
    use crate::rng::SeedTree;
    use std::collections::BTreeMap;
    use std::f64::consts::FRAC_PI_2;

    fn perfect(rho: SuperKet) -> GateSet {
        let mut gates = BTreeMap::new();
        gates.insert(RX.to_string(), ptm_rx(FRAC_PI_2));
        gates.insert(RY.to_string(), ptm_ry(-FRAC_PI_2));
        let effect = SuperKet::ground(2).unwrap().as_bra();
        GateSet::new(rho, effect, gates).unwrap()
    }

    #[test]
    fn perfect_gates_read_out_the_bloch_vector() {
        let rep = build_operational_rep(&perfect(SuperKet::ground(2).unwrap()), &statetomo_fiducials()).unwrap();
        let a = pseudo_bloch(&rep).unwrap();
        assert!(distance(&a, &[0.0, 0.0, 1.0]) < 1e-12);

        let mut rng = SeedTree::new(8).stream("rebit", 0);
        for _ in 0..50 {
            let rho = to_superket(&sample_ginibre_density(2, true, &mut rng).unwrap()).unwrap();
            let truth = bloch_vector(&rho).unwrap();
            assert!(truth[1].abs() < 1e-15);
            let rep = build_operational_rep(&perfect(rho), &statetomo_fiducials()).unwrap();
            let a = pseudo_bloch(&rep).unwrap();
            assert!(distance(&a, &truth) < 1e-10, "{a:?} vs {truth:?}");
            assert!(a.iter().map(|x| x * x).sum::<f64>() <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn noisy_priors_tilt_out_of_the_plane() {
        let spec = statetomo_prior();
        let seeds = SeedTree::new(9);
        let mut max_y = 0.0f64;
        for i in 0..300 {
            let gs = spec.sample_gate_set(&mut seeds.stream("truth", i)).unwrap();
            let rep = build_operational_rep(&gs, &statetomo_fiducials()).unwrap();
            let a = pseudo_bloch(&rep).unwrap();
            max_y = max_y.max(a[1].abs());
        }
        assert!(max_y > 1e-3);
    }

    #[test]
    fn missing_fiducials_are_reported() {
        let fids = vec![Sequence::empty(), Sequence::new([RX]), Sequence::new([RX, RX]), Sequence::new([RX, RY])];
        let rep = build_operational_rep(&perfect(SuperKet::ground(2).unwrap()), &fids).unwrap();
        assert!(matches!(pseudo_bloch(&rep), Err(Error::MissingFiducial(_))));
        assert!(naive_pseudo_bloch(&[]).is_err());
    }

    #[test]
    fn designs_grow_linearly() {
        let mut rng = SeedTree::new(1).stream("design", 0);
        let d = statetomo_design(1..=10, 5..=15, 50, 100, &mut rng);
        assert_eq!(d.training.len(), 50);
        d.validate().unwrap();
        let lens: Vec<usize> = fiducial_products(1..=10, 50, &mut rng)
            .iter()
            .map(Sequence::len)
            .collect();
        assert!(lens.iter().all(|&n| n <= 20));
    }
}
