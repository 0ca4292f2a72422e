//! Ramsey interferometry: `(Rx, (dt)^n, Rx)` and fringe fitting.

use super::design::{Experiment, ExperimentDesign};
use crate::error::{Error, Result};
use crate::channels::{depolarize, ptm_rx, ptm_rz, SuperKet};
use crate::gateset::{GateSet, Sequence};
use crate::smc::PriorSpec;
use std::collections::BTreeMap;
use serde::{Deserialize, Serialize};
use std::ops::RangeInclusive;

pub const RX: &str = "Rx";
pub const DT: &str = "dt";

/// `(Rx, (dt)^n, Rx)`.
pub fn ramsey_sequence(n: usize) -> Sequence {
    let mut s = Sequence::new([RX]);
    s.0.extend(std::iter::repeat_n(DT.to_string(), n));
    s.push(RX);
    s
}

pub fn ramsey_fiducials() -> Vec<Sequence> {
    vec![
        Sequence::empty(),
        Sequence::new([RX]),
        Sequence::new([RX, RX]),
        Sequence::new([RX, DT, RX]),
    ]
}

pub fn ramsey_design(n_train: RangeInclusive<usize>, n_test: RangeInclusive<usize>, shots: u64) -> ExperimentDesign {
    ExperimentDesign {
        buttons: vec![RX.into(), DT.into()],
        fiducials: ramsey_fiducials(),
        training: n_train
            .map(|n| Experiment {
                sequence: ramsey_sequence(n),
                shots,
            })
            .collect(),
        testing: n_test
            .map(|n| Experiment {
                sequence: ramsey_sequence(n),
                shots,
            })
            .collect(),
    }
}

/// Depolarized `|0>` preparation and readout, `Rx(pi/2 + eps)` with
/// `eps ~ N(0, 1e-3)`, and `dt = Rz(omega)` with `omega ~ U(0, 1)`.
pub fn ramsey_prior() -> PriorSpec {
    serde_json::from_str(
        r#"{
  "state": [{"kind": "exact", "ideal": "zero"}, {"kind": "depolarizing", "strength": {"low": 0.0, "high": 0.1}}],
  "effect": [{"kind": "exact", "ideal": "zero"}, {"kind": "depolarizing", "strength": {"low": 0.0, "high": 0.1}}],
  "gates": {
    "Rx": [{"kind": "over-rotation", "axis": "x", "angle": 1.5707963267948966, "offset": {"mean": 0.0, "variance": 0.001}}],
    "dt": [{"kind": "over-rotation", "axis": "z", "offset": {"low": 0.0, "high": 1.0}}]
  },
  "fiducials": [[], ["Rx"], ["Rx", "Rx"], ["Rx", "dt", "Rx"]]
}"#,
    )
    .expect("built-in prior parses")
}

/// Parameters of a concrete Ramsey box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RamseyTruth {
    pub omega: f64,
    pub epsilon: f64,
    pub state_depolarization: f64,
    pub effect_depolarization: f64,
}

impl Default for RamseyTruth {
    fn default() -> Self {
        Self {
            omega: 0.346754,
            epsilon: -0.003824,
            state_depolarization: 0.038311,
            effect_depolarization: 0.023933,
        }
    }
}

impl RamseyTruth {
    pub fn gate_set(&self) -> Result<GateSet> {
        let zero = SuperKet::ground(2)?;
        let mut gates = BTreeMap::new();
        gates.insert(RX.to_string(), ptm_rx(std::f64::consts::FRAC_PI_2 + self.epsilon));
        gates.insert(DT.to_string(), ptm_rz(self.omega));
        GateSet::new(
            depolarize(&zero, self.state_depolarization)?,
            depolarize(&zero.as_bra(), self.effect_depolarization)?,
            gates,
        )
    }
}

/// Which fringe the data follows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Fringe {
    /// `cos^2(w t / 2)`
    Cos,
    /// `sin^2(w t / 2)`, the bright fringe of two `pi/2` pulses.
    Sin,
}

impl Fringe {
    pub fn eval(self, omega: f64, t: f64) -> f64 {
        match self {
            Fringe::Cos => (omega * t / 2.0).cos().powi(2),
            Fringe::Sin => (omega * t / 2.0).sin().powi(2),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RamseyFit {
    pub omega: f64,
    pub fringe: Fringe,
    /// Root-mean-square residual of the best fit.
    pub rms_residual: f64,
}

const GRID: usize = 20_000;

fn sse(points: &[(usize, f64)], dt: f64, fringe: Fringe, omega: f64) -> f64 {
    points
        .iter()
        .map(|&(n, p)| (fringe.eval(omega, n as f64 * dt) - p).powi(2))
        .sum()
}

/// Least-squares frequency from `(n, probability)` points over `omega in [0, pi/dt]`.
///
/// Both fringe shapes are fitted and the one with the lower residual is
/// kept. A dense grid locates the basin; golden-section search refines it.
pub fn fit_ramsey_frequency(points: &[(usize, f64)], dt: f64) -> Result<RamseyFit> {
    if points.len() < 3 {
        return Err(Error::FitFailure(format!("need at least 3 points, got {}", points.len())));
    }
    if !(dt > 0.0) {
        return Err(Error::Config(format!("time step must be positive, got {dt}")));
    }
    let first = points[0].1;
    if points.iter().all(|&(_, p)| (p - first).abs() < 1e-12) {
        return Err(Error::Degenerate("constant Ramsey data carry no frequency".into()));
    }
    let hi = std::f64::consts::PI / dt;
    let step = hi / GRID as f64;
    let mut best: Option<(f64, f64, Fringe)> = None;
    for fringe in [Fringe::Cos, Fringe::Sin] {
        let (mut w0, mut e0) = (0.0, f64::INFINITY);
        for k in 0..=GRID {
            let w = k as f64 * step;
            let e = sse(points, dt, fringe, w);
            if e < e0 {
                (w0, e0) = (w, e);
            }
        }
        let w = golden(|w| sse(points, dt, fringe, w), (w0 - step).max(0.0), (w0 + step).min(hi));
        let e = sse(points, dt, fringe, w);
        if best.is_none_or(|(_, be, _)| e < be) {
            best = Some((w, e, fringe));
        }
    }
    let (omega, e, fringe) = best.expect("two candidates");
    Ok(RamseyFit {
        omega,
        fringe,
        rms_residual: (e / points.len() as f64).sqrt(),
    })
}

/// Golden-section minimization on `[a, b]`.
pub(crate) fn golden(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a).abs() <= 1e-15 * (1.0 + a.abs() + b.abs()) {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    (a + b) / 2.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn example_box_fits_the_prior_layout() {
        let spec = ramsey_prior();
        spec.validate().unwrap();
        let layout = spec.layout().unwrap();
        assert_eq!((layout.raw_entries(), layout.n_params()), (52, 27));
        let gs = RamseyTruth::default().gate_set().unwrap();
        let p = gs.probability(&ramsey_sequence(0)).unwrap();
        assert!(p < 0.1);
    }

    #[test]
    fn design_shape() {
        let d = ramsey_design(2..=49, 50..=100, 500);
        assert_eq!(d.training.len(), 48);
        assert_eq!(d.testing.len(), 51);
        assert_eq!(d.fiducials.len(), 4);
        assert_eq!(ramsey_sequence(2).len(), 4);
        d.validate().unwrap();
    }

    #[test]
    fn noiseless_fits() {
        let omega = 0.346754;
        for fringe in [Fringe::Cos, Fringe::Sin] {
            let pts: Vec<(usize, f64)> = (2..=49).map(|n| (n, fringe.eval(omega, n as f64))).collect();
            let fit = fit_ramsey_frequency(&pts, 1.0).unwrap();
            assert!((fit.omega - omega).abs() < 1e-9, "{fringe:?} {}", fit.omega);
            assert_eq!(fit.fringe, fringe);
            assert!(fit.rms_residual < 1e-9);
        }
    }

    #[test]
    fn degenerate_inputs() {
        let flat: Vec<(usize, f64)> = (2..20).map(|n| (n, 0.5)).collect();
        assert!(matches!(fit_ramsey_frequency(&flat, 1.0), Err(Error::Degenerate(_))));
        assert!(fit_ramsey_frequency(&[(1, 0.2), (2, 0.3)], 1.0).is_err());
    }
}
