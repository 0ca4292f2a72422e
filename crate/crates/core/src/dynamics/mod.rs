//! Continuous-time evolution of the operational representation under a
//! Lindbladian expanded in fiducial super-operators, `L = sum_l alpha_l F_l`.

mod generator;
mod taylor;

pub use generator::{apply_generator, learn_generator, GeneratorFit};
pub use taylor::{
    evolve_truncated, lambert_w, stirling_bound, taylor_remainder, taylor_truncation_order, ExtendedTensors,
};

use crate::channels::{SuperKet, SuperOperator};
use crate::error::{Error, Result};
use crate::gateset::GateSet;
use crate::linalg::pinv;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// PTM entries closer than this identify two algebra elements.
pub const ALGEBRA_TOL: f64 = 1e-9;
/// Relative endpoint change at which step halving stops.
pub const RK4_REL_TOL: f64 = 1e-8;
const MAX_HALVINGS: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LindbladCoefficients {
    pub alpha: DVector<f64>,
    /// `|F~ alpha - E~dot|`.
    pub residual: f64,
}

/// Least-squares `alpha` with `F~ alpha = E~dot`; minimum norm if `F~` is singular.
pub fn learn_alpha(e_dot: &DVector<f64>, f_tilde: &DMatrix<f64>) -> Result<LindbladCoefficients> {
    if f_tilde.nrows() != e_dot.len() {
        return Err(Error::DimensionMismatch {
            expected: f_tilde.nrows(),
            found: e_dot.len(),
        });
    }
    let (fp, _) = pinv(f_tilde);
    let alpha = fp * e_dot;
    let residual = (f_tilde * &alpha - e_dot).norm();
    Ok(LindbladCoefficients { alpha, residual })
}

/// `sum_l alpha_l F_l`.
pub fn lindbladian(alpha: &DVector<f64>, fiducials: &[SuperOperator]) -> Result<SuperOperator> {
    if alpha.len() != fiducials.len() || fiducials.is_empty() {
        return Err(Error::DimensionMismatch {
            expected: fiducials.len(),
            found: alpha.len(),
        });
    }
    let n = fiducials[0].mat.nrows();
    let mut mat = DMatrix::zeros(n, n);
    for (a, f) in alpha.iter().zip(fiducials) {
        mat += &f.mat * *a;
    }
    SuperOperator::new(mat, fiducials[0].dim)
}

/// `E~_i = <<E| F_i |rho>>` for each fiducial.
pub fn e_tilde(gs: &GateSet, fiducials: &[SuperOperator], rho: &SuperKet) -> DVector<f64> {
    DVector::from_iterator(
        fiducials.len(),
        fiducials.iter().map(|f| gs.effect.coeffs.dot(&(&f.mat * &rho.coeffs))),
    )
}

/// Forward difference `(E~(t + delta) - E~(t)) / delta` with
/// `|rho(t + delta)>> = exp(L delta) |rho(t)>>`.
pub fn finite_difference_edot(
    gs: &GateSet,
    lindblad: &SuperOperator,
    fiducials: &[SuperOperator],
    delta: f64,
) -> Result<DVector<f64>> {
    if !(delta > 0.0) {
        return Err(Error::OutOfRange {
            name: "delta",
            value: delta,
            range: "> 0",
        });
    }
    let later = SuperKet::new((&lindblad.mat * delta).exp() * &gs.rho.coeffs, gs.dim())?;
    Ok((e_tilde(gs, fiducials, &later) - e_tilde(gs, fiducials, &gs.rho)) / delta)
}

/// Monomials and binomials in the fiducials with their product table.
#[derive(Debug, Clone)]
pub struct FiducialAlgebra {
    pub elements: Vec<SuperOperator>,
    /// Element index of fiducial `i`.
    pub fiducial_index: Vec<usize>,
    /// `product[a][b]` indexes `s_a s_b` when it is an element.
    pub product: Vec<Vec<Option<usize>>>,
    pub closed: bool,
}

impl FiducialAlgebra {
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn n_fiducials(&self) -> usize {
        self.fiducial_index.len()
    }

    /// `g(a, b)`; only valid on a closed algebra.
    pub fn g(&self, a: usize, b: usize) -> usize {
        self.product[a][b].expect("closed algebra")
    }
}

fn find(elements: &[SuperOperator], m: &DMatrix<f64>) -> Option<usize> {
    elements.iter().position(|e| {
        e.mat.shape() == m.shape() && e.mat.iter().zip(m.iter()).all(|(a, b)| (a - b).abs() < ALGEBRA_TOL)
    })
}

/// Deduplicated `{F_i} u {F_i F_j}` and the pairwise product table.
pub fn close_fiducial_algebra(fiducials: &[SuperOperator]) -> Result<FiducialAlgebra> {
    if fiducials.is_empty() {
        return Err(Error::Config("no fiducials to close".into()));
    }
    let dim = fiducials[0].dim;
    if let Some(f) = fiducials.iter().find(|f| f.dim != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: f.dim,
        });
    }
    let mut elements: Vec<SuperOperator> = Vec::new();
    let intern = |m: DMatrix<f64>, elements: &mut Vec<SuperOperator>| -> Result<usize> {
        if let Some(k) = find(elements, &m) {
            return Ok(k);
        }
        elements.push(SuperOperator::new(m, dim)?);
        Ok(elements.len() - 1)
    };
    let mut fiducial_index = Vec::with_capacity(fiducials.len());
    for f in fiducials {
        fiducial_index.push(intern(f.mat.clone(), &mut elements)?);
    }
    for fi in fiducials {
        for fj in fiducials {
            intern(&fi.mat * &fj.mat, &mut elements)?;
        }
    }
    let product: Vec<Vec<Option<usize>>> = elements
        .iter()
        .map(|a| elements.iter().map(|b| find(&elements, &(&a.mat * &b.mat))).collect())
        .collect();
    let closed = product.iter().flatten().all(Option::is_some);
    Ok(FiducialAlgebra {
        elements,
        fiducial_index,
        product,
        closed,
    })
}

/// Index bookkeeping for [`OpStateVector`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateLayout {
    pub n_elements: usize,
    pub n_fiducials: usize,
    pub gate_labels: Vec<String>,
}

impl StateLayout {
    pub fn len(&self) -> usize {
        self.n_elements * (1 + self.gate_labels.len() * self.n_fiducials)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Position of `<<E| s_a |rho>>`.
    pub fn x(&self, a: usize) -> usize {
        a
    }

    /// Position of `<<E| F_i G_k s_a |rho>>`.
    pub fn y(&self, k: usize, i: usize, a: usize) -> usize {
        self.n_elements * (1 + k * self.n_fiducials + i) + a
    }

    /// Column names for trajectory export.
    pub fn header(&self) -> Vec<String> {
        let mut out: Vec<String> = (0..self.n_elements).map(|a| format!("x_s{a}")).collect();
        for label in &self.gate_labels {
            for i in 0..self.n_fiducials {
                out.extend((0..self.n_elements).map(|a| format!("y_{label}_f{i}_s{a}")));
            }
        }
        out
    }
}

/// `<<E| s_a |rho(t)>>` for every algebra element, then
/// `<<E| F_i G_k s_a |rho(t)>>` for every gate, fiducial and element.
///
/// On a closed algebra these values cover `E~`, `F~` and the rank-2 and
/// rank-3 `G~` tensors, and evolve linearly among themselves.
#[derive(Debug, Clone, PartialEq)]
pub struct OpStateVector {
    pub psi: DVector<f64>,
    pub layout: Arc<StateLayout>,
}

impl OpStateVector {
    pub fn from_gate_set(gs: &GateSet, algebra: &FiducialAlgebra) -> Self {
        let layout = Arc::new(StateLayout {
            n_elements: algebra.len(),
            n_fiducials: algebra.n_fiducials(),
            gate_labels: gs.labels(),
        });
        let mut psi = DVector::zeros(layout.len());
        let kets: Vec<DVector<f64>> = algebra.elements.iter().map(|s| &s.mat * &gs.rho.coeffs).collect();
        for (a, v) in kets.iter().enumerate() {
            psi[layout.x(a)] = gs.effect.coeffs.dot(v);
        }
        for (k, g) in gs.gates.values().enumerate() {
            for (i, &fi) in algebra.fiducial_index.iter().enumerate() {
                let bra = (&algebra.elements[fi].mat * &g.mat).transpose() * &gs.effect.coeffs;
                for (a, v) in kets.iter().enumerate() {
                    psi[layout.y(k, i, a)] = bra.dot(v);
                }
            }
        }
        Self { psi, layout }
    }

    /// `(E~, F~, G~(k))` in fiducial order.
    pub fn tensors(&self, algebra: &FiducialAlgebra) -> Result<(DVector<f64>, DMatrix<f64>, Vec<DMatrix<f64>>)> {
        if !algebra.closed {
            return Err(Error::NotClosed);
        }
        let l = &self.layout;
        let fid = &algebra.fiducial_index;
        let n = fid.len();
        let e = DVector::from_fn(n, |i, _| self.psi[l.x(fid[i])]);
        let f = DMatrix::from_fn(n, n, |i, j| self.psi[l.x(algebra.g(fid[i], fid[j]))]);
        let g = (0..l.gate_labels.len())
            .map(|k| DMatrix::from_fn(n, n, |i, j| self.psi[l.y(k, i, fid[j])]))
            .collect();
        Ok((e, f, g))
    }
}

/// The matrix `M` with `d psi / dt = M psi` on a closed algebra.
pub fn closed_generator(layout: &StateLayout, algebra: &FiducialAlgebra, alpha: &DVector<f64>) -> Result<DMatrix<f64>> {
    if !algebra.closed {
        return Err(Error::NotClosed);
    }
    if alpha.len() != algebra.n_fiducials() {
        return Err(Error::DimensionMismatch {
            expected: algebra.n_fiducials(),
            found: alpha.len(),
        });
    }
    let mut m = DMatrix::zeros(layout.len(), layout.len());
    for a in 0..algebra.len() {
        for (l, &fl) in algebra.fiducial_index.iter().enumerate() {
            let b = algebra.g(a, fl);
            m[(layout.x(a), layout.x(b))] += alpha[l];
            for k in 0..layout.gate_labels.len() {
                for i in 0..layout.n_fiducials {
                    m[(layout.y(k, i, a), layout.y(k, i, b))] += alpha[l];
                }
            }
        }
    }
    Ok(m)
}

fn rk4_step(m: &DMatrix<f64>, y: &DVector<f64>, h: f64) -> DVector<f64> {
    let k1 = m * y;
    let k2 = m * (y + &k1 * (h / 2.0));
    let k3 = m * (y + &k2 * (h / 2.0));
    let k4 = m * (y + &k3 * h);
    y + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0)
}

fn rk4_interval(m: &DMatrix<f64>, y: &DVector<f64>, h: f64) -> Result<DVector<f64>> {
    let run = |sub: usize| {
        let mut v = y.clone();
        for _ in 0..sub {
            v = rk4_step(m, &v, h / sub as f64);
        }
        v
    };
    let mut sub = 1;
    let mut prev = run(sub);
    for _ in 0..MAX_HALVINGS {
        sub *= 2;
        let next = run(sub);
        let change = (&next - &prev).amax();
        if change <= RK4_REL_TOL * next.amax().max(1.0) {
            return Ok(next);
        }
        prev = next;
    }
    Err(Error::FitFailure("step halving did not reach the tolerance".into()))
}

/// Integrates the closed equations of motion with fourth-order Runge-Kutta,
/// reporting `steps + 1` evenly spaced states over `t_span`.
pub fn evolve_closed(
    psi0: &OpStateVector,
    algebra: &FiducialAlgebra,
    alpha: &DVector<f64>,
    t_span: (f64, f64),
    steps: usize,
) -> Result<Vec<(f64, OpStateVector)>> {
    if steps == 0 {
        return Err(Error::Config("trajectory needs at least one step".into()));
    }
    if psi0.layout.n_elements != algebra.len() || psi0.layout.n_fiducials != algebra.n_fiducials() {
        return Err(Error::DimensionMismatch {
            expected: algebra.len(),
            found: psi0.layout.n_elements,
        });
    }
    let m = closed_generator(&psi0.layout, algebra, alpha)?;
    let h = (t_span.1 - t_span.0) / steps as f64;
    let mut out = Vec::with_capacity(steps + 1);
    let mut y = psi0.psi.clone();
    out.push((t_span.0, psi0.clone()));
    for s in 1..=steps {
        y = rk4_interval(&m, &y, h)?;
        out.push((
            t_span.0 + h * s as f64,
            OpStateVector {
                psi: y.clone(),
                layout: psi0.layout.clone(),
            },
        ));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{paulis, unitary_superop};
    use crate::rng::SeedTree;
    use rand_distr::{Distribution, StandardNormal};

    fn pauli_channels() -> Vec<SuperOperator> {
        paulis().iter().map(|p| unitary_superop(p).unwrap()).collect()
    }

    fn random_gate_set(seed: u64) -> GateSet {
        let mut rng = SeedTree::new(seed).stream("gs", 0);
        GateSet::random(&["Ga", "Gb"], 2, &mut rng).unwrap()
    }

    #[test]
    fn learn_alpha_examples() {
        let v = DVector::from_vec(vec![0.3, -0.1, 0.7]);
        let fit = learn_alpha(&v, &DMatrix::identity(3, 3)).unwrap();
        assert!((fit.alpha - &v).amax() < 1e-15);

        let gs = random_gate_set(1);
        let fids = pauli_channels();
        let f = DMatrix::from_fn(4, 4, |i, j| {
            gs.effect.coeffs.dot(&(&fids[i].mat * &fids[j].mat * &gs.rho.coeffs))
        });
        let truth = DVector::from_vec(vec![-0.4, 0.1, 0.2, 0.1]);
        let fit = learn_alpha(&(&f * &truth), &f).unwrap();
        assert!((fit.alpha - truth).amax() < 1e-8);

        let singular = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let fit = learn_alpha(&DVector::from_vec(vec![1.0, 3.0]), &singular).unwrap();
        assert!((fit.alpha[0] - 1.0).abs() < 1e-12 && (fit.alpha[1] - 1.0).abs() < 1e-12);
        assert!((fit.residual - 2f64.sqrt()).abs() < 1e-12);
        assert!(learn_alpha(&DVector::zeros(3), &singular).is_err());
    }

    #[test]
    fn finite_difference_converges_at_first_order() {
        let gs = random_gate_set(2);
        let fids = pauli_channels();
        let alpha = DVector::from_vec(vec![-0.9, 0.5, 0.3, 0.1]);
        let l = lindbladian(&alpha, &fids).unwrap();
        let exact = DVector::from_iterator(
            4,
            fids.iter().map(|f| gs.effect.coeffs.dot(&(&f.mat * &l.mat * &gs.rho.coeffs))),
        );
        let err = |d| (finite_difference_edot(&gs, &l, &fids, d).unwrap() - &exact).amax();
        let ratio = err(1e-3) / err(5e-4);
        assert!((ratio - 2.0).abs() < 0.05, "ratio {ratio}");
        assert!(err(1e-6) < 1e-4);
        let zero = lindbladian(&DVector::zeros(4), &fids).unwrap();
        assert_eq!(finite_difference_edot(&gs, &zero, &fids, 0.1).unwrap().amax(), 0.0);
        assert!(finite_difference_edot(&gs, &zero, &fids, 0.0).is_err());
    }

    #[test]
    fn algebra_closure_examples() {
        let alg = close_fiducial_algebra(&pauli_channels()).unwrap();
        assert!(alg.closed);
        assert_eq!(alg.len(), 4);

        let id = close_fiducial_algebra(&[SuperOperator::identity(2).unwrap()]).unwrap();
        assert!(id.closed && id.len() == 1);

        let mut fids = pauli_channels();
        let mut dep = fids[1].mat.clone();
        for r in 1..4 {
            dep.row_mut(r).scale_mut(0.9);
        }
        fids.push(SuperOperator::new(dep, 2).unwrap());
        assert!(!close_fiducial_algebra(&fids).unwrap().closed);
    }

    #[test]
    fn state_vector_reproduces_the_operational_tensors() {
        let gs = random_gate_set(3);
        let fids = pauli_channels();
        let alg = close_fiducial_algebra(&fids).unwrap();
        let psi = OpStateVector::from_gate_set(&gs, &alg);
        let (e, f, g) = psi.tensors(&alg).unwrap();
        for i in 0..4 {
            let ei = gs.effect.coeffs.dot(&(&fids[i].mat * &gs.rho.coeffs));
            assert!((e[i] - ei).abs() < 1e-14);
            for j in 0..4 {
                let fij = gs.effect.coeffs.dot(&(&fids[i].mat * &fids[j].mat * &gs.rho.coeffs));
                assert!((f[(i, j)] - fij).abs() < 1e-14);
                for (k, gate) in gs.gates.values().enumerate() {
                    let gij = gs.effect.coeffs.dot(&(&fids[i].mat * &gate.mat * &fids[j].mat * &gs.rho.coeffs));
                    assert!((g[k][(i, j)] - gij).abs() < 1e-14);
                }
            }
        }
        assert_eq!(psi.layout.header().len(), psi.psi.len());
    }

    fn exact_trajectory(gs: &GateSet, alg: &FiducialAlgebra, l: &SuperOperator, t: f64) -> OpStateVector {
        let rho = (&l.mat * t).exp() * &gs.rho.coeffs;
        let evolved = GateSet::new(SuperKet::new(rho, 2).unwrap(), gs.effect.clone(), gs.gates.clone()).unwrap();
        OpStateVector::from_gate_set(&evolved, alg)
    }

    #[test]
    fn closed_evolution_matches_direct_exponential() {
        let gs = random_gate_set(4);
        let fids = pauli_channels();
        let alg = close_fiducial_algebra(&fids).unwrap();
        let mut rng = SeedTree::new(4).stream("alpha", 0);
        let alpha = DVector::from_fn(4, |_, _| StandardNormal.sample(&mut rng));
        let l = lindbladian(&alpha, &fids).unwrap();
        let psi0 = OpStateVector::from_gate_set(&gs, &alg);
        let traj = evolve_closed(&psi0, &alg, &alpha, (0.0, 1.0), 10).unwrap();
        for (t, psi) in &traj {
            let oracle = exact_trajectory(&gs, &alg, &l, *t);
            assert!((&psi.psi - &oracle.psi).amax() < 1e-6);
        }

        let still = evolve_closed(&psi0, &alg, &DVector::zeros(4), (0.0, 1.0), 3).unwrap();
        assert!(still.iter().all(|(_, p)| p.psi == psi0.psi));

        let a = evolve_closed(&psi0, &alg, &(&alpha * 2.0), (0.0, 0.5), 1).unwrap();
        let b = evolve_closed(&psi0, &alg, &alpha, (0.0, 1.0), 1).unwrap();
        assert!((&a[1].1.psi - &b[1].1.psi).amax() < 1e-8);
    }

    #[test]
    fn non_closed_algebra_is_rejected() {
        let gs = random_gate_set(5);
        let mut fids = pauli_channels();
        fids[2] = crate::channels::depolarize(&fids[2], 0.1).unwrap();
        let alg = close_fiducial_algebra(&fids).unwrap();
        let psi0 = OpStateVector::from_gate_set(&gs, &alg);
        assert!(matches!(
            evolve_closed(&psi0, &alg, &DVector::zeros(4), (0.0, 1.0), 2),
            Err(Error::NotClosed)
        ));
    }
}
