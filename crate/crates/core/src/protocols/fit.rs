//! Weighted fits of `P(m) = (A - B) p^m + B` and credible intervals.

use crate::error::{Error, Result};
use crate::linalg::pinv;
use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use serde::{Deserialize, Serialize};

pub const VARIANCE_FLOOR: f64 = 1e-12;
pub const MAX_ITERATIONS: usize = 500;
pub const REL_TOL: f64 = 1e-10;
pub const P_MIN: f64 = -0.5;

const GRID: usize = 1501;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayPoint {
    pub m: usize,
    pub mean: f64,
    /// Variance of `mean`, used as the fit weight.
    pub variance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub a: f64,
    pub b: f64,
    pub p: f64,
    pub covariance: [[f64; 3]; 3],
    pub fidelity: f64,
}

impl DecayFit {
    pub fn eval(&self, m: usize) -> f64 {
        decay(self.a, self.b, self.p, m)
    }
}

/// Average gate fidelity of a qubit depolarizing parameter.
pub fn fidelity_from_p(p: f64) -> f64 {
    (1.0 + p) / 2.0
}

fn decay(a: f64, b: f64, p: f64, m: usize) -> f64 {
    (a - b) * powm(p, m) + b
}

fn powm(p: f64, m: usize) -> f64 {
    p.powi(m as i32)
}

struct Data {
    m: Vec<usize>,
    y: Vec<f64>,
    w: Vec<f64>,
}

impl Data {
    fn chi2(&self, t: &Vector3<f64>) -> f64 {
        (0..self.m.len())
            .map(|i| self.w[i] * (self.y[i] - decay(t[0], t[1], t[2], self.m[i])).powi(2))
            .sum()
    }

    fn jacobian(&self, t: &Vector3<f64>) -> (Matrix3<f64>, Vector3<f64>) {
        let mut n = Matrix3::zeros();
        let mut g = Vector3::zeros();
        for i in 0..self.m.len() {
            let m = self.m[i];
            let pm = powm(t[2], m);
            let dp = if m == 0 { 0.0 } else { (t[0] - t[1]) * m as f64 * powm(t[2], m - 1) };
            let j = Vector3::new(pm, 1.0 - pm, dp);
            let r = self.y[i] - decay(t[0], t[1], t[2], m);
            n += self.w[i] * j * j.transpose();
            g += self.w[i] * r * j;
        }
        (n, g)
    }

    /// Best `(A, B)` in the unit box for fixed `p`, and its chi^2.
    fn project(&self, p: f64) -> (f64, f64, f64) {
        // Model A u + B v with u = p^m, v = 1 - p^m.
        let (mut suu, mut suv, mut svv, mut suy, mut svy) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for i in 0..self.m.len() {
            let u = powm(p, self.m[i]);
            let v = 1.0 - u;
            let w = self.w[i];
            suu += w * u * u;
            suv += w * u * v;
            svv += w * v * v;
            suy += w * u * self.y[i];
            svy += w * v * self.y[i];
        }
        let mut cands = Vec::with_capacity(5);
        let det = suu * svv - suv * suv;
        if det > 1e-12 * suu.max(svv).powi(2) {
            let a = (svv * suy - suv * svy) / det;
            let b = (suu * svy - suv * suy) / det;
            if (0.0..=1.0).contains(&a) && (0.0..=1.0).contains(&b) {
                cands.push((a, b));
            }
        }
        let solve = |num: f64, den: f64| if den > 0.0 { (num / den).clamp(0.0, 1.0) } else { 0.5 };
        for edge in [0.0, 1.0] {
            cands.push((edge, solve(svy - edge * suv, svv)));
            cands.push((solve(suy - edge * suv, suu), edge));
        }
        cands
            .into_iter()
            .map(|(a, b)| (a, b, self.chi2(&Vector3::new(a, b, p))))
            .min_by(|x, y| x.2.total_cmp(&y.2))
            .expect("nonempty candidates")
    }
}

const LOWER: [f64; 3] = [0.0, 0.0, P_MIN];
const UPPER: [f64; 3] = [1.0, 1.0, 1.0];

fn clamp(t: Vector3<f64>) -> Vector3<f64> {
    Vector3::from_fn(|i, _| t[i].clamp(LOWER[i], UPPER[i]))
}

/// Variance-weighted least squares of `(A - B) p^m + B` with `A, B` in
/// `[0, 1]` and `p` in `[-0.5, 1]`.
///
/// Starts from a variable-projection grid over `p`, then runs a projected
/// Levenberg-Marquardt iteration. Data that is constant at one returns
/// `A = 1, B = 1/2, p = 1`; other constant data is degenerate.
pub fn fit_decay(points: &[DecayPoint]) -> Result<DecayFit> {
    if points.len() < 4 {
        return Err(Error::FitFailure(format!("need at least 4 points, got {}", points.len())));
    }
    if let Some(bad) = points.iter().find(|q| !q.mean.is_finite() || !(q.variance >= 0.0)) {
        return Err(Error::FitFailure(format!("invalid point at m = {}", bad.m)));
    }
    let lo = points.iter().map(|q| q.mean).fold(f64::INFINITY, f64::min);
    let hi = points.iter().map(|q| q.mean).fold(f64::NEG_INFINITY, f64::max);
    if hi - lo <= 1e-12 {
        if (hi - 1.0).abs() <= 1e-9 {
            return Ok(DecayFit {
                a: 1.0,
                b: 0.5,
                p: 1.0,
                covariance: [[0.0; 3]; 3],
                fidelity: 1.0,
            });
        }
        return Err(Error::Degenerate(format!("all survival means equal {lo}")));
    }
    let data = Data {
        m: points.iter().map(|q| q.m).collect(),
        y: points.iter().map(|q| q.mean).collect(),
        w: points.iter().map(|q| 1.0 / q.variance.max(VARIANCE_FLOOR)).collect(),
    };

    let mut best = (0.0, 0.0, 0.0, f64::INFINITY);
    for k in 0..GRID {
        let p = P_MIN + (1.0 - P_MIN) * k as f64 / (GRID - 1) as f64;
        let (a, b, c) = data.project(p);
        if c < best.3 {
            best = (a, b, p, c);
        }
    }
    let mut t = Vector3::new(best.0, best.1, best.2);
    let mut chi = best.3;
    let mut lambda = 1e-3;
    let mut converged = false;
    for _ in 0..MAX_ITERATIONS {
        let (n, g) = data.jacobian(&t);
        // Parameters pinned at a bound with descent pointing outward stay put.
        let free: Vec<usize> = (0..3)
            .filter(|&i| !((t[i] <= LOWER[i] && g[i] < 0.0) || (t[i] >= UPPER[i] && g[i] > 0.0)))
            .collect();
        if free.is_empty() {
            converged = true;
            break;
        }
        let k = free.len();
        let scale = n.diagonal().amax().max(f64::MIN_POSITIVE);
        let mut improved = false;
        while lambda < 1e16 {
            let sys = DMatrix::from_fn(k, k, |r, c| {
                let v = n[(free[r], free[c])];
                if r == c {
                    v * (1.0 + lambda) + 1e-15 * scale
                } else {
                    v
                }
            });
            let rhs = DVector::from_fn(k, |r, _| g[free[r]]);
            let Some(step) = sys.lu().solve(&rhs) else {
                lambda *= 10.0;
                continue;
            };
            let mut trial = t;
            for (r, &i) in free.iter().enumerate() {
                trial[i] += step[r];
            }
            let trial = clamp(trial);
            let c = data.chi2(&trial);
            if c < chi {
                let gain = chi - c;
                t = trial;
                chi = c;
                lambda = (lambda / 10.0).max(1e-12);
                improved = true;
                if gain <= REL_TOL * chi || chi == 0.0 {
                    converged = true;
                }
                break;
            }
            lambda *= 10.0;
        }
        if !improved || converged {
            converged = true;
            break;
        }
    }
    if !converged || !chi.is_finite() {
        return Err(Error::FitFailure(format!(
            "no convergence after {MAX_ITERATIONS} iterations"
        )));
    }
    let (n, _) = data.jacobian(&t);
    let (cov, _) = pinv(&DMatrix::from_fn(3, 3, |r, c| n[(r, c)]));
    Ok(DecayFit {
        a: t[0],
        b: t[1],
        p: t[2],
        covariance: std::array::from_fn(|r| std::array::from_fn(|c| cov[(r, c)])),
        fidelity: fidelity_from_p(t[2]),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lower: f64,
    pub upper: f64,
}

impl Interval {
    pub fn contains(&self, x: f64) -> bool {
        self.lower <= x && x <= self.upper
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CredibleIntervals {
    pub level: f64,
    pub a: Interval,
    pub b: Interval,
    pub p: Interval,
    pub fidelity: Interval,
}

/// Smallest value whose cumulative normalized weight reaches `q`.
pub fn weighted_quantile(values: &[f64], weights: &[f64], q: f64) -> f64 {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let total: f64 = weights.iter().sum();
    let mut acc = 0.0;
    for &i in &idx {
        acc += weights[i] / total;
        if acc >= q {
            return values[i];
        }
    }
    values[*idx.last().expect("nonempty values")]
}

/// Bonferroni-corrected intervals: each of `A`, `B`, `p` gets level
/// `1 - (1 - level) / 3`, so the three hold jointly with at least `level`.
pub fn rb_credible_interval(fits: &[DecayFit], weights: &[f64], level: f64) -> Result<CredibleIntervals> {
    if fits.len() < 2 {
        return Err(Error::FitFailure(format!("need at least 2 fits, got {}", fits.len())));
    }
    if fits.len() != weights.len() {
        return Err(Error::DimensionMismatch {
            expected: fits.len(),
            found: weights.len(),
        });
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::OutOfRange {
            name: "level",
            value: level,
            range: "(0, 1)",
        });
    }
    if weights.iter().any(|w| !(*w >= 0.0)) || !(weights.iter().sum::<f64>() > 0.0) {
        return Err(Error::InvalidDatum("credible weights must be nonnegative with positive sum".into()));
    }
    let tail = (1.0 - level) / 3.0 / 2.0;
    let interval = |f: fn(&DecayFit) -> f64| {
        let v: Vec<f64> = fits.iter().map(f).collect();
        Interval {
            lower: weighted_quantile(&v, weights, tail),
            upper: weighted_quantile(&v, weights, 1.0 - tail),
        }
    };
    let p = interval(|f| f.p);
    Ok(CredibleIntervals {
        level,
        a: interval(|f| f.a),
        b: interval(|f| f.b),
        fidelity: Interval {
            lower: fidelity_from_p(p.lower),
            upper: fidelity_from_p(p.upper),
        },
        p,
    })
}
