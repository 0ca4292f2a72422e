//! Truncated Taylor steps over the open hierarchy of extended tensors.

use crate::channels::SuperOperator;
use crate::error::{Error, Result};
use crate::gateset::GateSet;
use nalgebra::{DMatrix, DVector};

const W_ITERATIONS: usize = 50;
const W_TOL: f64 = 1e-14;

/// Principal branch of `w e^w = z` for `z >= -1/e`, by Newton iteration.
pub fn lambert_w(z: f64) -> Result<f64> {
    let branch = -(-1.0f64).exp();
    if !(z >= branch) {
        return Err(Error::OutOfRange {
            name: "z",
            value: z,
            range: ">= -1/e",
        });
    }
    if z == 0.0 {
        return Ok(0.0);
    }
    let mut w = if z > 1.0 { z.ln() - z.ln().ln().max(0.0) } else { z / (1.0 + z) };
    for _ in 0..W_ITERATIONS {
        let ew = w.exp();
        let f = w * ew - z;
        let df = ew * (w + 1.0);
        if df == 0.0 {
            break;
        }
        let step = f / df;
        w -= step;
        if step.abs() <= W_TOL * w.abs().max(1.0) {
            break;
        }
    }
    Ok(w)
}

/// `K = floor(ln(1/eps) / W(ln(1/eps) / (sum|alpha| delta)))`, the smallest
/// order with `(sum|alpha| delta / (K + 1))^(K + 1) <= eps`.
///
/// The step must satisfy `delta <= sum|alpha|`.
pub fn taylor_truncation_order(alpha: &[f64], delta: f64, eps: f64) -> Result<usize> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::OutOfRange {
            name: "eps",
            value: eps,
            range: "(0, 1)",
        });
    }
    if !(delta >= 0.0) {
        return Err(Error::OutOfRange {
            name: "delta",
            value: delta,
            range: ">= 0",
        });
    }
    let alpha_sum: f64 = alpha.iter().map(|a| a.abs()).sum();
    let x = alpha_sum * delta;
    if x == 0.0 {
        return Ok(0);
    }
    if delta > alpha_sum {
        return Err(Error::StepTooLarge { delta, alpha_sum });
    }
    let l = (1.0 / eps).ln();
    Ok((l / lambert_w(l / x)?).floor() as usize)
}

/// `(x / (K + 1))^(K + 1)`.
pub fn stirling_bound(x: f64, k: usize) -> f64 {
    (x / (k + 1) as f64).powi(k as i32 + 1)
}

/// `x^(K + 1) / (K + 1)!`, the Taylor remainder for unit-bounded derivatives.
pub fn taylor_remainder(x: f64, k: usize) -> f64 {
    (1..=k + 1).fold(1.0, |acc, j| acc * x / j as f64)
}

/// `<<E| F_{i_1} ... F_{i_p} |rho>>` for `p <= depth`, and per gate
/// `<<E| F_i G_k F_{j_1} ... F_{j_p} |rho>>`, as flattened row-major tensors
/// with the last index fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtendedTensors {
    pub n_fiducials: usize,
    pub depth: usize,
    pub gate_labels: Vec<String>,
    /// `e[p]` has rank `p`.
    pub e: Vec<Vec<f64>>,
    /// `g[k][p]` has rank `1 + p`.
    pub g: Vec<Vec<Vec<f64>>>,
}

fn expand(prefixes: Vec<DVector<f64>>, fid_t: &[DMatrix<f64>], rho: &DVector<f64>, depth: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(depth + 1);
    let mut level = prefixes;
    out.push(level.iter().map(|b| b.dot(rho)).collect());
    for _ in 0..depth {
        level = level
            .iter()
            .flat_map(|b| fid_t.iter().map(move |f| f * b))
            .collect();
        out.push(level.iter().map(|b| b.dot(rho)).collect());
    }
    out
}

impl ExtendedTensors {
    /// Simulates every tensor up to `depth` from a known gate set.
    pub fn from_gate_set(gs: &GateSet, fiducials: &[SuperOperator], depth: usize) -> Result<Self> {
        if fiducials.is_empty() {
            return Err(Error::Config("no fiducials".into()));
        }
        let fid_t: Vec<DMatrix<f64>> = fiducials.iter().map(|f| f.mat.transpose()).collect();
        let e = expand(vec![gs.effect.coeffs.clone()], &fid_t, &gs.rho.coeffs, depth);
        let g = gs
            .gates
            .values()
            .map(|gate| {
                let prefixes = fid_t.iter().map(|ft| gate.mat.transpose() * (ft * &gs.effect.coeffs)).collect();
                expand(prefixes, &fid_t, &gs.rho.coeffs, depth)
            })
            .collect();
        Ok(Self {
            n_fiducials: fiducials.len(),
            depth,
            gate_labels: gs.labels(),
            e,
            g,
        })
    }

    /// `(E~, F~, G~(k))`; needs depth at least 2.
    pub fn tensors(&self) -> Result<(DVector<f64>, DMatrix<f64>, Vec<DMatrix<f64>>)> {
        if self.depth < 2 {
            return Err(Error::InsufficientDepth {
                available: self.depth,
                required: 2,
            });
        }
        let n = self.n_fiducials;
        Ok((
            DVector::from_vec(self.e[1].clone()),
            DMatrix::from_row_slice(n, n, &self.e[2]),
            self.g.iter().map(|g| DMatrix::from_row_slice(n, n, &g[1])).collect(),
        ))
    }
}

/// Sums the last index against `alpha`.
fn contract(t: &[f64], alpha: &[f64]) -> Vec<f64> {
    t.chunks(alpha.len())
        .map(|c| c.iter().zip(alpha).map(|(x, a)| x * a).sum())
        .collect()
}

fn taylor(ranks: &[Vec<f64>], r: usize, alpha: &[f64], delta: f64, k: usize) -> Vec<f64> {
    let mut acc = ranks[r].clone();
    let mut coef = 1.0;
    for j in 1..=k {
        coef *= delta / j as f64;
        let mut t = ranks[r + j].clone();
        for _ in 0..j {
            t = contract(&t, alpha);
        }
        for (a, x) in acc.iter_mut().zip(&t) {
            *a += coef * x;
        }
    }
    acc
}

/// One Taylor step of order `k`; the result keeps `depth - k` ranks.
pub fn evolve_truncated(ext: &ExtendedTensors, alpha: &[f64], delta: f64, k: usize) -> Result<ExtendedTensors> {
    if alpha.len() != ext.n_fiducials {
        return Err(Error::DimensionMismatch {
            expected: ext.n_fiducials,
            found: alpha.len(),
        });
    }
    if ext.depth < k {
        return Err(Error::InsufficientDepth {
            available: ext.depth,
            required: k,
        });
    }
    let depth = ext.depth - k;
    Ok(ExtendedTensors {
        n_fiducials: ext.n_fiducials,
        depth,
        gate_labels: ext.gate_labels.clone(),
        e: (0..=depth).map(|r| taylor(&ext.e, r, alpha, delta, k)).collect(),
        g: ext
            .g
            .iter()
            .map(|g| (0..=depth).map(|r| taylor(g, r, alpha, delta, k)).collect())
            .collect(),
    })
}
