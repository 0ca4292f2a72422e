//! Direct fits of a linear generator `d psi / dt = K psi` from snapshots.

use crate::error::{Error, Result};
use crate::linalg::pinv;
use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorFit {
    pub k: DMatrix<f64>,
    /// Numerical rank of the snapshot matrix.
    pub rank: usize,
    /// Frobenius norm of the finite-difference residual.
    pub residual: f64,
}

/// Least-squares `K` from consecutive pairs, pairing each difference
/// `(psi(t + d) - psi(t)) / d` with the midpoint `(psi(t) + psi(t + d)) / 2`.
///
/// Snapshots must be evenly spaced. A rank-deficient snapshot matrix gives
/// the minimum-norm fit and a warning.
pub fn learn_generator(trajectory: &[(f64, DVector<f64>)]) -> Result<GeneratorFit> {
    let Some((_, first)) = trajectory.first() else {
        return Err(Error::Config("empty trajectory".into()));
    };
    let n = first.len();
    if trajectory.len() < n + 1 {
        return Err(Error::InsufficientDepth {
            available: trajectory.len(),
            required: n + 1,
        });
    }
    if let Some((_, v)) = trajectory.iter().find(|(_, v)| v.len() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: v.len(),
        });
    }
    let dt = trajectory[1].0 - trajectory[0].0;
    if !(dt > 0.0) {
        return Err(Error::Config("snapshot times must increase".into()));
    }
    for w in trajectory.windows(2) {
        if ((w[1].0 - w[0].0) - dt).abs() > 1e-9 * dt.abs().max(1.0) {
            return Err(Error::Config(format!("snapshots are not evenly spaced at t = {}", w[0].0)));
        }
    }
    let pairs = trajectory.len() - 1;
    let x = DMatrix::from_fn(n, pairs, |r, c| 0.5 * (trajectory[c].1[r] + trajectory[c + 1].1[r]));
    let y = DMatrix::from_fn(n, pairs, |r, c| (trajectory[c + 1].1[r] - trajectory[c].1[r]) / dt);
    let (xp, rank) = pinv(&x);
    if rank < n {
        log::warn!("snapshot matrix has rank {rank} < {n}; returning the minimum-norm generator");
    }
    let k = &y * xp;
    let residual = (&k * &x - &y).norm();
    Ok(GeneratorFit { k, rank, residual })
}

/// `exp(K t) psi0`.
pub fn apply_generator(k: &DMatrix<f64>, psi0: &DVector<f64>, t: f64) -> Result<DVector<f64>> {
    if k.nrows() != k.ncols() || k.ncols() != psi0.len() {
        return Err(Error::DimensionMismatch {
            expected: k.ncols(),
            found: psi0.len(),
        });
    }
    Ok((k * t).exp() * psi0)
}
