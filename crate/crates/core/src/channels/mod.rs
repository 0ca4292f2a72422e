//! Super-operator algebra in the normalized Pauli basis.
//!
//! States, effects and channels on `d = 2^n` dimensional Hilbert spaces are
//! stored as real coefficient vectors and real Pauli transfer matrices
//! against the orthonormal basis `{P_i / sqrt(d)}`, with single-qubit
//! ordering `I, X, Y, Z` and tensor products in lexicographic order.

pub mod prior;
mod random;

pub use prior::{Axis, ChannelPrior, Dist, Ideal};
pub use random::{sample_bcsz, sample_ginibre_density};

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

const HERMITIAN_TOL: f64 = 1e-10;
const UNITARY_TOL: f64 = 1e-10;
/// Eigenvalue floor for positivity checks on Choi matrices and states.
pub const PSD_TOL: f64 = 1e-10;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Number of qubits for a power-of-two dimension.
fn qubits(dim: usize) -> Result<usize> {
    if dim < 2 || !dim.is_power_of_two() {
        return Err(Error::UnsupportedDimension(dim));
    }
    Ok(dim.trailing_zeros() as usize)
}

/// Single-qubit Pauli matrices in `I, X, Y, Z` order.
pub fn paulis() -> [CMatrix; 4] {
    let z = c(0.0, 0.0);
    let o = c(1.0, 0.0);
    let i = c(0.0, 1.0);
    [
        CMatrix::from_row_slice(2, 2, &[o, z, z, o]),
        CMatrix::from_row_slice(2, 2, &[z, o, o, z]),
        CMatrix::from_row_slice(2, 2, &[z, -i, i, z]),
        CMatrix::from_row_slice(2, 2, &[o, z, z, -o]),
    ]
}

/// Orthonormal Pauli basis `{P_i / sqrt(d)}` for `d = 2^n`.
pub fn pauli_basis(dim: usize) -> Result<Vec<CMatrix>> {
    let n = qubits(dim)?;
    let single = paulis();
    let mut basis = vec![CMatrix::identity(1, 1)];
    for _ in 0..n {
        let mut next = Vec::with_capacity(basis.len() * 4);
        for b in &basis {
            for p in &single {
                next.push(b.kronecker(p));
            }
        }
        basis = next;
    }
    let norm = 1.0 / (dim as f64).sqrt();
    Ok(basis.into_iter().map(|m| m.scale(norm)).collect())
}

fn trace_product(a: &CMatrix, b: &CMatrix) -> Complex64 {
    // Tr(A B) without forming the product.
    let n = a.nrows();
    let mut acc = c(0.0, 0.0);
    for i in 0..n {
        for k in 0..n {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

fn check_square(m: &CMatrix) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch {
            expected: m.nrows(),
            found: m.ncols(),
        });
    }
    Ok(m.nrows())
}

fn hermiticity_defect(m: &CMatrix) -> f64 {
    linalg::max_abs_diff_c(m, &m.adjoint())
}

/// Column vector of a state (or any Hermitian operator) in the Pauli basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuperKet {
    pub coeffs: DVector<f64>,
    pub dim: usize,
}

/// Row vector of an effect in the Pauli basis; `<<E|rho>> = Tr(E rho)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuperBra {
    pub coeffs: DVector<f64>,
    pub dim: usize,
}

/// Pauli transfer matrix of a linear map on operators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuperOperator {
    pub mat: DMatrix<f64>,
    pub dim: usize,
}

fn check_len(len: usize, dim: usize) -> Result<()> {
    qubits(dim)?;
    if len != dim * dim {
        return Err(Error::DimensionMismatch {
            expected: dim * dim,
            found: len,
        });
    }
    Ok(())
}

fn coefficients(m: &CMatrix) -> Result<DVector<f64>> {
    let dim = check_square(m)?;
    let defect = hermiticity_defect(m);
    if defect > HERMITIAN_TOL {
        return Err(Error::NotHermitian(defect));
    }
    let basis = pauli_basis(dim)?;
    Ok(DVector::from_iterator(
        basis.len(),
        basis.iter().map(|b| trace_product(b, m).re),
    ))
}

fn reconstruct(coeffs: &DVector<f64>, dim: usize) -> CMatrix {
    let basis = pauli_basis(dim).expect("dimension validated at construction");
    let mut out = CMatrix::zeros(dim, dim);
    for (b, &x) in basis.iter().zip(coeffs.iter()) {
        out += b.scale(x);
    }
    out
}

/// Pauli-basis coefficients `Tr(P_i rho)/sqrt(d)` of a Hermitian matrix.
pub fn to_superket(rho: &CMatrix) -> Result<SuperKet> {
    Ok(SuperKet {
        coeffs: coefficients(rho)?,
        dim: rho.nrows(),
    })
}

impl SuperKet {
    pub fn new(coeffs: DVector<f64>, dim: usize) -> Result<Self> {
        check_len(coeffs.len(), dim)?;
        Ok(Self { coeffs, dim })
    }

    pub fn from_density(rho: &CMatrix) -> Result<Self> {
        to_superket(rho)
    }

    /// `|0><0|` on `dim` levels.
    pub fn ground(dim: usize) -> Result<Self> {
        let mut rho = CMatrix::zeros(dim, dim);
        rho[(0, 0)] = c(1.0, 0.0);
        to_superket(&rho)
    }

    pub fn maximally_mixed(dim: usize) -> Result<Self> {
        to_superket(&CMatrix::identity(dim, dim).scale(1.0 / dim as f64))
    }

    pub fn to_matrix(&self) -> CMatrix {
        reconstruct(&self.coeffs, self.dim)
    }

    /// Coefficient on the identity, `Tr(rho)/sqrt(d)`.
    pub fn identity_coefficient(&self) -> f64 {
        self.coeffs[0]
    }

    pub fn as_bra(&self) -> SuperBra {
        SuperBra {
            coeffs: self.coeffs.clone(),
            dim: self.dim,
        }
    }

    /// Smallest eigenvalue and trace of the reconstructed matrix.
    pub fn is_density(&self, tol: f64) -> bool {
        let m = self.to_matrix();
        let tr: f64 = (0..self.dim).map(|i| m[(i, i)].re).sum();
        let min = linalg::hermitian_eigenvalues(&m)[0];
        (tr - 1.0).abs() <= tol && min >= -tol
    }
}

impl SuperBra {
    pub fn new(coeffs: DVector<f64>, dim: usize) -> Result<Self> {
        check_len(coeffs.len(), dim)?;
        Ok(Self { coeffs, dim })
    }

    pub fn from_effect(e: &CMatrix) -> Result<Self> {
        Ok(Self {
            coeffs: coefficients(e)?,
            dim: e.nrows(),
        })
    }

    pub fn as_ket(&self) -> SuperKet {
        SuperKet {
            coeffs: self.coeffs.clone(),
            dim: self.dim,
        }
    }

    pub fn to_matrix(&self) -> CMatrix {
        reconstruct(&self.coeffs, self.dim)
    }

    /// `<<E|rho>>`.
    pub fn apply(&self, ket: &SuperKet) -> f64 {
        self.coeffs.dot(&ket.coeffs)
    }
}

impl SuperOperator {
    pub fn new(mat: DMatrix<f64>, dim: usize) -> Result<Self> {
        check_len(mat.nrows(), dim)?;
        check_len(mat.ncols(), dim)?;
        Ok(Self { mat, dim })
    }

    pub fn identity(dim: usize) -> Result<Self> {
        Self::new(DMatrix::identity(dim * dim, dim * dim), dim)
    }

    pub fn apply(&self, ket: &SuperKet) -> SuperKet {
        SuperKet {
            coeffs: &self.mat * &ket.coeffs,
            dim: self.dim,
        }
    }

    /// `self * other`: apply `other` first.
    pub fn compose(&self, other: &SuperOperator) -> SuperOperator {
        SuperOperator {
            mat: &self.mat * &other.mat,
            dim: self.dim,
        }
    }

    /// Trace preservation: first row is `(1, 0, ..., 0)`.
    pub fn is_trace_preserving(&self, tol: f64) -> bool {
        (0..self.mat.ncols()).all(|j| {
            let target = if j == 0 { 1.0 } else { 0.0 };
            (self.mat[(0, j)] - target).abs() <= tol
        })
    }

    /// Unitality: first column is `(1, 0, ..., 0)^T`.
    pub fn is_unital(&self, tol: f64) -> bool {
        (0..self.mat.nrows()).all(|i| {
            let target = if i == 0 { 1.0 } else { 0.0 };
            (self.mat[(i, 0)] - target).abs() <= tol
        })
    }

    /// Action on an arbitrary (possibly non-Hermitian) operator.
    pub fn act(&self, x: &CMatrix) -> CMatrix {
        let basis = pauli_basis(self.dim).expect("validated dimension");
        let coeffs: Vec<Complex64> = basis.iter().map(|b| trace_product(b, x)).collect();
        let mut out = CMatrix::zeros(self.dim, self.dim);
        for (i, b) in basis.iter().enumerate() {
            let mut yi = c(0.0, 0.0);
            for (j, xj) in coeffs.iter().enumerate() {
                yi += xj * self.mat[(i, j)];
            }
            out += b * yi;
        }
        out
    }

    /// Choi matrix `J = sum_ab Lambda(|a><b|) (x) |a><b|`, output factor first.
    pub fn choi(&self) -> CMatrix {
        let d = self.dim;
        let mut j = CMatrix::zeros(d * d, d * d);
        for a in 0..d {
            for b in 0..d {
                let mut unit = CMatrix::zeros(d, d);
                unit[(a, b)] = c(1.0, 0.0);
                let img = self.act(&unit);
                for o in 0..d {
                    for o2 in 0..d {
                        j[(o * d + a, o2 * d + b)] = img[(o, o2)];
                    }
                }
            }
        }
        j
    }

    /// Inverse of [`SuperOperator::choi`].
    pub fn from_choi(j: &CMatrix, dim: usize) -> Result<Self> {
        let d = dim;
        if j.nrows() != d * d || j.ncols() != d * d {
            return Err(Error::DimensionMismatch {
                expected: d * d,
                found: j.nrows(),
            });
        }
        let basis = pauli_basis(d)?;
        let n = basis.len();
        let mut mat = DMatrix::zeros(n, n);
        for (col, bj) in basis.iter().enumerate() {
            let mut img = CMatrix::zeros(d, d);
            for o in 0..d {
                for o2 in 0..d {
                    let mut acc = c(0.0, 0.0);
                    for a in 0..d {
                        for b in 0..d {
                            acc += bj[(a, b)] * j[(o * d + a, o2 * d + b)];
                        }
                    }
                    img[(o, o2)] = acc;
                }
            }
            for (row, bi) in basis.iter().enumerate() {
                mat[(row, col)] = trace_product(bi, &img).re;
            }
        }
        Ok(Self { mat, dim })
    }

    /// Completely positive within `tol` (Choi eigenvalues `>= -tol`).
    pub fn is_completely_positive(&self, tol: f64) -> bool {
        linalg::hermitian_eigenvalues(&self.choi())[0] >= -tol
    }

    pub fn frobenius_distance(&self, other: &SuperOperator) -> f64 {
        (&self.mat - &other.mat).norm()
    }
}

/// PTM of `rho -> U rho U^dagger`.
pub fn unitary_superop(u: &CMatrix) -> Result<SuperOperator> {
    let dim = check_square(u)?;
    let defect = linalg::max_abs_diff_c(&(u * u.adjoint()), &CMatrix::identity(dim, dim));
    if defect > UNITARY_TOL {
        return Err(Error::NotUnitary(defect));
    }
    let basis = pauli_basis(dim)?;
    let ud = u.adjoint();
    let conj: Vec<CMatrix> = basis.iter().map(|b| u * b * &ud).collect();
    let n = basis.len();
    let mut mat = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            mat[(i, j)] = trace_product(&basis[i], &conj[j]).re;
        }
    }
    Ok(SuperOperator { mat, dim })
}

/// Objects that can be depolarized: the Bloch part scales by `1 - p`.
pub trait Depolarize: Sized {
    fn depolarize(&self, p: f64) -> Result<Self>;
}

fn check_unit(name: &'static str, p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) || p.is_nan() {
        return Err(Error::OutOfRange {
            name,
            value: p,
            range: "[0, 1]",
        });
    }
    Ok(())
}

impl Depolarize for SuperOperator {
    /// Left-multiplies by `diag(1, 1-p, ..., 1-p)`.
    fn depolarize(&self, p: f64) -> Result<Self> {
        check_unit("depolarization", p)?;
        let mut mat = self.mat.clone();
        for i in 1..mat.nrows() {
            mat.row_mut(i).scale_mut(1.0 - p);
        }
        Ok(SuperOperator { mat, dim: self.dim })
    }
}

impl Depolarize for SuperKet {
    fn depolarize(&self, p: f64) -> Result<Self> {
        check_unit("depolarization", p)?;
        let mut coeffs = self.coeffs.clone();
        for i in 1..coeffs.len() {
            coeffs[i] *= 1.0 - p;
        }
        Ok(SuperKet {
            coeffs,
            dim: self.dim,
        })
    }
}

impl Depolarize for SuperBra {
    fn depolarize(&self, p: f64) -> Result<Self> {
        Ok(self.as_ket().depolarize(p)?.as_bra())
    }
}

/// Free-function form of [`Depolarize::depolarize`].
pub fn depolarize<T: Depolarize>(target: &T, p: f64) -> Result<T> {
    target.depolarize(p)
}

/// Convex combinations `(1 - eps) a + eps b`.
pub trait ConvexMix: Sized {
    fn mix(&self, other: &Self, eps: f64) -> Result<Self>;
}

fn mix_dims(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::DimensionMismatch {
            expected: a,
            found: b,
        });
    }
    Ok(())
}

impl ConvexMix for SuperOperator {
    fn mix(&self, other: &Self, eps: f64) -> Result<Self> {
        check_unit("mixing weight", eps)?;
        mix_dims(self.dim, other.dim)?;
        Ok(SuperOperator {
            mat: &self.mat * (1.0 - eps) + &other.mat * eps,
            dim: self.dim,
        })
    }
}

impl ConvexMix for SuperKet {
    fn mix(&self, other: &Self, eps: f64) -> Result<Self> {
        check_unit("mixing weight", eps)?;
        mix_dims(self.dim, other.dim)?;
        Ok(SuperKet {
            coeffs: &self.coeffs * (1.0 - eps) + &other.coeffs * eps,
            dim: self.dim,
        })
    }
}

impl ConvexMix for SuperBra {
    fn mix(&self, other: &Self, eps: f64) -> Result<Self> {
        Ok(self.as_ket().mix(&other.as_ket(), eps)?.as_bra())
    }
}

pub fn convex_mix<T: ConvexMix>(a: &T, b: &T, eps: f64) -> Result<T> {
    a.mix(b, eps)
}

// Single-qubit unitaries.

/// `exp(-i theta/2 X)`.
pub fn rx(theta: f64) -> CMatrix {
    let (s, co) = (theta / 2.0).sin_cos();
    CMatrix::from_row_slice(2, 2, &[c(co, 0.0), c(0.0, -s), c(0.0, -s), c(co, 0.0)])
}

/// `exp(-i theta/2 Y)`.
pub fn ry(theta: f64) -> CMatrix {
    let (s, co) = (theta / 2.0).sin_cos();
    CMatrix::from_row_slice(2, 2, &[c(co, 0.0), c(-s, 0.0), c(s, 0.0), c(co, 0.0)])
}

/// `exp(-i theta/2 Z)`.
pub fn rz(theta: f64) -> CMatrix {
    let (s, co) = (theta / 2.0).sin_cos();
    CMatrix::from_row_slice(2, 2, &[c(co, -s), c(0.0, 0.0), c(0.0, 0.0), c(co, s)])
}

pub fn hadamard() -> CMatrix {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    CMatrix::from_row_slice(2, 2, &[c(h, 0.0), c(h, 0.0), c(h, 0.0), c(-h, 0.0)])
}

pub fn phase_s() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 1.0)])
}

/// Hadamard evolved for time `pi/2 + dtheta`; `dtheta = 0` is the Hadamard
/// channel and `dtheta = pi/2` the identity.
pub fn overrotated_hadamard(dtheta: f64) -> SuperOperator {
    // exp(i phi (H (x) I - I (x) H)) on vec space equals conj(V) (x) V with
    // V = exp(-i phi H) = cos(phi) I - i sin(phi) H, since H^2 = I.
    let phi = std::f64::consts::FRAC_PI_2 + dtheta;
    let (s, co) = phi.sin_cos();
    let v = CMatrix::identity(2, 2).scale(co) - hadamard() * c(0.0, s);
    unitary_superop(&v).expect("closed-form unitary")
}

pub fn ptm_rx(theta: f64) -> SuperOperator {
    unitary_superop(&rx(theta)).expect("rotation is unitary")
}

pub fn ptm_ry(theta: f64) -> SuperOperator {
    unitary_superop(&ry(theta)).expect("rotation is unitary")
}

pub fn ptm_rz(theta: f64) -> SuperOperator {
    unitary_superop(&rz(theta)).expect("rotation is unitary")
}
