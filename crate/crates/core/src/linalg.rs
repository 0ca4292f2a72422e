//! Small dense linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;

/// Relative cutoff factor for numerical rank and pseudo-inverses.
pub const RANK_RTOL: f64 = 1e-10;

/// Singular-value cutoff: `max(rows, cols) * sigma_max * 1e-10`.
pub fn rank_cutoff(singular_values: &DVector<f64>, rows: usize, cols: usize) -> f64 {
    let smax = singular_values.iter().cloned().fold(0.0, f64::max);
    rows.max(cols) as f64 * smax * RANK_RTOL
}

/// Spectrum summary used by rank checks and pseudo-inverses.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub singular_values: Vec<f64>,
    pub rank: usize,
    pub condition: f64,
}

/// Thin SVD `m = u diag(s) v_t`.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: DMatrix<f64>,
    pub singular_values: DVector<f64>,
    pub v_t: DMatrix<f64>,
}

/// Thin SVD through faer. nalgebra's bidiagonal SVD returns inaccurate
/// factors on some well-conditioned 4x4 inputs, so it is not used here.
pub fn svd(m: &DMatrix<f64>) -> Svd {
    let (rows, cols) = m.shape();
    let k = rows.min(cols);
    if k == 0 {
        return Svd {
            u: DMatrix::zeros(rows, 0),
            singular_values: DVector::zeros(0),
            v_t: DMatrix::zeros(0, cols),
        };
    }
    let a = faer::Mat::<f64>::from_fn(rows, cols, |r, c| m[(r, c)]);
    if a.as_ref().is_all_finite() {
        if let Ok(f) = a.thin_svd() {
            let (u, v, s) = (f.U(), f.V(), f.S().column_vector());
            return Svd {
                u: DMatrix::from_fn(rows, k, |r, c| u[(r, c)]),
                singular_values: DVector::from_fn(k, |i, _| s[i]),
                v_t: DMatrix::from_fn(k, cols, |r, c| v[(c, r)]),
            };
        }
    }
    Svd {
        u: DMatrix::from_element(rows, k, f64::NAN),
        singular_values: DVector::from_element(k, f64::NAN),
        v_t: DMatrix::from_element(k, cols, f64::NAN),
    }
}

pub fn spectrum(m: &DMatrix<f64>) -> Spectrum {
    let svd = svd(m);
    let cutoff = rank_cutoff(&svd.singular_values, m.nrows(), m.ncols());
    let mut sv: Vec<f64> = svd.singular_values.iter().cloned().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    let rank = sv.iter().filter(|&&s| s > cutoff).count();
    let condition = match (sv.first(), sv.last()) {
        (Some(&hi), Some(&lo)) if lo > 0.0 => hi / lo,
        _ => f64::INFINITY,
    };
    Spectrum {
        singular_values: sv,
        rank,
        condition,
    }
}

/// Moore–Penrose pseudo-inverse with the crate-wide rank cutoff.
/// Returns the inverse and the rank that was kept.
pub fn pinv(m: &DMatrix<f64>) -> (DMatrix<f64>, usize) {
    let (rows, cols) = m.shape();
    if rows == 0 || cols == 0 {
        return (DMatrix::zeros(cols, rows), 0);
    }
    let svd = svd(m);
    let cutoff = rank_cutoff(&svd.singular_values, rows, cols);
    let (u, vt) = (&svd.u, &svd.v_t);
    let mut out = DMatrix::zeros(cols, rows);
    let mut rank = 0;
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if s > cutoff && s > 0.0 {
            rank += 1;
            let inv = 1.0 / s;
            for c in 0..cols {
                let v = vt[(k, c)] * inv;
                if v == 0.0 {
                    continue;
                }
                for r in 0..rows {
                    out[(c, r)] += v * u[(r, k)];
                }
            }
        }
    }
    (out, rank)
}

/// Symmetric PSD square root. Eigenvalues below `1e-12` of the largest are
/// treated as zero, so rounding noise in null directions is not amplified.
pub fn psd_sqrt(m: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    if m.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let sym = (m + m.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let top = eig.eigenvalues.iter().copied().fold(0.0, f64::max);
    let floor = top * 1e-12;
    let vals = eig.eigenvalues.map(|v| if v > floor { v.sqrt() } else { 0.0 });
    let v = &eig.eigenvectors;
    Some(v * DMatrix::from_diagonal(&vals) * v.transpose())
}

pub fn dagger(m: &CMatrix) -> CMatrix {
    m.adjoint()
}

pub fn max_abs_diff_c(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

pub fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    let sym = (m + m.adjoint()).scale(0.5);
    let mut vals: Vec<f64> = sym.symmetric_eigen().eigenvalues.iter().cloned().collect();
    vals.sort_by(f64::total_cmp);
    vals
}

/// Hermitian inverse square root; `None` if any eigenvalue is not positive.
pub fn hermitian_inv_sqrt(m: &CMatrix) -> Option<CMatrix> {
    let sym = (m + m.adjoint()).scale(0.5);
    let eig = sym.symmetric_eigen();
    if eig.eigenvalues.iter().any(|&v| v <= 0.0) {
        return None;
    }
    let d = DVector::from_iterator(
        eig.eigenvalues.len(),
        eig.eigenvalues.iter().map(|&v| Complex64::new(1.0 / v.sqrt(), 0.0)),
    );
    let u = &eig.eigenvectors;
    Some(u * CMatrix::from_diagonal(&d) * u.adjoint())
}

/// Kronecker product of complex matrices.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn svd_reconstructs_near_symmetric_input() {
        // nalgebra's own SVD misses this one by ~1e-3.
        let m = DMatrix::from_row_slice(
            4,
            4,
            &[
                0.3277094282480279, 0.3704273689028095, 0.4148556492719115, 0.4817174620604379,
                0.3704273689028095, 0.4817174620604379, 0.5063014364302888, 0.440930287028167,
                0.4148556492719115, 0.4459677993186654, 0.4611646360063434, 0.4920306507669634,
                0.4817174620604379, 0.440930287028167, 0.4534188768640675, 0.4861215483665392,
            ],
        );
        let f = svd(&m);
        let back = &f.u * DMatrix::from_diagonal(&f.singular_values) * &f.v_t;
        assert!((back - &m).amax() < 1e-13);
        let (p, rank) = pinv(&m);
        assert_eq!(rank, 4);
        assert!((p - m.try_inverse().unwrap()).amax() < 1e-9);
    }

    #[test]
    fn pinv_of_invertible_is_inverse() {
        let m = DMatrix::from_row_slice(3, 3, &[2.0, 1.0, 0.0, 0.0, 3.0, 1.0, 1.0, 0.0, 1.0]);
        let (p, rank) = pinv(&m);
        assert_eq!(rank, 3);
        let id = &m * &p;
        assert!(max_abs_diff(&id, &DMatrix::identity(3, 3)) < 1e-12);
    }

    #[test]
    fn pinv_of_rank_deficient_satisfies_penrose() {
        let m = DMatrix::from_row_slice(3, 3, &[1.0, 2.0, 3.0, 2.0, 4.0, 6.0, 1.0, 0.0, 1.0]);
        let (p, rank) = pinv(&m);
        assert_eq!(rank, 2);
        assert!(max_abs_diff(&(&m * &p * &m), &m) < 1e-10);
        assert!(max_abs_diff(&(&p * &m * &p), &p) < 1e-10);
        assert_eq!(spectrum(&m).rank, 2);
    }

    #[test]
    fn psd_sqrt_squares_back() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        let s = psd_sqrt(&m).unwrap();
        assert!(max_abs_diff(&(&s * &s), &m) < 1e-12);
        let singular = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let s = psd_sqrt(&singular).unwrap();
        assert!(max_abs_diff(&(&s * &s), &singular) < 1e-12);
    }
}
