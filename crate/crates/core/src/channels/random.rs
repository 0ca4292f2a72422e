//! Random states and channels used to build priors.

use super::SuperOperator;
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

fn check_dim(dim: usize) -> Result<()> {
    if dim < 2 {
        return Err(Error::UnsupportedDimension(dim));
    }
    Ok(())
}

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

fn complex_ginibre<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| Complex64::new(gaussian(rng), gaussian(rng)))
}

/// `XX^dagger / Tr(XX^dagger)` with `X` standard normal.
///
/// Complex samples use a `d x d` matrix; `real_only` samples use a real
/// `d x (d+1)` matrix, which gives the uniform (Hilbert-Schmidt) measure on
/// real density matrices.
pub fn sample_ginibre_density<R: Rng + ?Sized>(
    dim: usize,
    real_only: bool,
    rng: &mut R,
) -> Result<CMatrix> {
    check_dim(dim)?;
    let x = if real_only {
        CMatrix::from_fn(dim, dim + 1, |_, _| Complex64::new(gaussian(rng), 0.0))
    } else {
        complex_ginibre(dim, dim, rng)
    };
    let w = &x * x.adjoint();
    let tr: f64 = (0..dim).map(|i| w[(i, i)].re).sum();
    let mut rho = w.unscale(tr);
    // Exact hermiticity; rounding can leave 1e-17 asymmetries.
    rho = (&rho + rho.adjoint()).scale(0.5);
    Ok(rho)
}

/// A CPTP channel drawn from the BCSZ distribution with full Kraus rank.
pub fn sample_bcsz<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Result<SuperOperator> {
    check_dim(dim)?;
    let n = dim * dim;
    loop {
        let g = complex_ginibre(n, n, rng);
        let w = &g * g.adjoint();
        // Partial trace over the output factor (first tensor index).
        let mut d = CMatrix::zeros(dim, dim);
        for a in 0..dim {
            for b in 0..dim {
                for o in 0..dim {
                    d[(a, b)] += w[(o * dim + a, o * dim + b)];
                }
            }
        }
        let Some(m) = linalg::hermitian_inv_sqrt(&d) else {
            continue;
        };
        let sandwich = CMatrix::identity(dim, dim).kronecker(&m);
        let j = &sandwich * w * &sandwich;
        let j = (&j + j.adjoint()).scale(0.5);
        let mut ptm = SuperOperator::from_choi(&j, dim)?;
        // Trace preservation holds to rounding; pin the first row exactly.
        ptm.mat[(0, 0)] = 1.0;
        for c in 1..n {
            ptm.mat[(0, c)] = 0.0;
        }
        return Ok(ptm);
    }
}
