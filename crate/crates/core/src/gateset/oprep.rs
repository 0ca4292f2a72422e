//! The operational representation `E~, F~, G~(k)` and linear inversion.

use super::plan::{ButtonIndex, Plan, Transfer};
use super::{clip_probability, GateSet, Sequence, MAX_GAUGE_CONDITION};
use crate::channels::{SuperBra, SuperKet, SuperOperator};
use crate::error::{Error, Result};
use crate::linalg::{self, pinv, rank_cutoff, spectrum, svd};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

/// Slot bookkeeping shared by every hypothesis over the same box.
///
/// Each tensor entry is the probability of one button sequence:
/// `E~_i` of `f_i`, `F~_ij` of `f_j + f_i` and `G~(k)_ij` of `f_j + (k) + f_i`,
/// where `f_j` runs over preparation fiducials and `f_i` over measurement
/// fiducials. Entries with identical sequences share a minimal slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layout {
    pub prep_fiducials: Vec<Sequence>,
    pub meas_fiducials: Vec<Sequence>,
    pub shared: bool,
    pub buttons: ButtonIndex,
    /// Button sequence measured by each minimal slot.
    pub slots: Vec<Sequence>,
    /// Slot of `E~_i` for measurement fiducial `i`.
    pub e_meas: Vec<usize>,
    /// Slot of `<<E|F_j|rho>>` for preparation fiducial `j`.
    pub e_prep: Vec<usize>,
    /// Row-major `|meas| x |prep|` slots of `F~`.
    pub f: Vec<usize>,
    /// Per gate (in button order), row-major slots of `G~(k)`.
    pub g: Vec<Vec<usize>>,
}

impl Layout {
    pub fn n_params(&self) -> usize {
        self.slots.len()
    }

    /// Number of tensor entries before deduplication.
    pub fn raw_entries(&self) -> usize {
        let e = self.e_meas.len() + if self.shared { 0 } else { self.e_prep.len() };
        e + self.f.len() + self.g.iter().map(Vec::len).sum::<usize>()
    }

    pub fn n_prep(&self) -> usize {
        self.prep_fiducials.len()
    }

    pub fn n_meas(&self) -> usize {
        self.meas_fiducials.len()
    }

    pub fn gate_labels(&self) -> &[String] {
        self.buttons.labels()
    }

    pub fn plan(&self, s: &Sequence) -> Result<Plan> {
        self.buttons.plan(s)
    }

    /// Every `(tensor, position)` mapped to its slot, in slot-assignment order.
    pub fn index_map(&self) -> Vec<(String, Vec<usize>)> {
        let mut out = vec![("e_tilde".to_string(), self.e_meas.clone())];
        if !self.shared {
            out.push(("e_tilde_prep".to_string(), self.e_prep.clone()));
        }
        out.push(("f_tilde".to_string(), self.f.clone()));
        for (label, g) in self.gate_labels().iter().zip(&self.g) {
            out.push((format!("g_tilde/{label}"), g.clone()));
        }
        out
    }
}

/// Builds the slot layout for a shared fiducial list.
pub fn minimal_parameterization(gate_labels: &[String], fiducials: &[Sequence]) -> Result<Layout> {
    build_layout(gate_labels, fiducials, fiducials, true)
}

/// Builds the slot layout with distinct preparation and measurement fiducials.
pub fn minimal_parameterization_split(
    gate_labels: &[String],
    prep: &[Sequence],
    meas: &[Sequence],
) -> Result<Layout> {
    build_layout(gate_labels, prep, meas, prep == meas)
}

fn build_layout(gate_labels: &[String], prep: &[Sequence], meas: &[Sequence], shared: bool) -> Result<Layout> {
    if prep.is_empty() || meas.is_empty() {
        return Err(Error::Config("fiducial list is empty".into()));
    }
    let buttons = ButtonIndex::new(gate_labels.to_vec())?;
    for f in prep.iter().chain(meas) {
        buttons.indices(f)?;
    }
    let mut slots = Vec::new();
    let mut lookup: HashMap<Sequence, usize> = HashMap::new();
    let mut slot = |s: Sequence| -> usize {
        if let Some(&k) = lookup.get(&s) {
            return k;
        }
        let k = slots.len();
        lookup.insert(s.clone(), k);
        slots.push(s);
        k
    };
    let e_meas: Vec<usize> = meas.iter().map(|f| slot(f.clone())).collect();
    let e_prep: Vec<usize> = prep.iter().map(|f| slot(f.clone())).collect();
    let mut f_slots = Vec::with_capacity(meas.len() * prep.len());
    for fi in meas {
        for fj in prep {
            f_slots.push(slot(fj.concat(fi)));
        }
    }
    let mut g_slots = Vec::new();
    for label in gate_labels {
        let mid = Sequence::new([label.as_str()]);
        let mut g = Vec::with_capacity(meas.len() * prep.len());
        for fi in meas {
            for fj in prep {
                g.push(slot(fj.concat(&mid).concat(fi)));
            }
        }
        g_slots.push(g);
    }
    Ok(Layout {
        prep_fiducials: prep.to_vec(),
        meas_fiducials: meas.to_vec(),
        shared,
        buttons,
        slots,
        e_meas,
        e_prep,
        f: f_slots,
        g: g_slots,
    })
}

/// A point in the gauge-free parameter space: minimal slot values over a layout.
#[derive(Debug, Clone, PartialEq)]
pub struct OperationalRep {
    pub layout: Arc<Layout>,
    pub minimal: DVector<f64>,
}

fn gather(minimal: &DVector<f64>, idx: &[usize]) -> DVector<f64> {
    DVector::from_iterator(idx.len(), idx.iter().map(|&k| minimal[k]))
}

fn gather_matrix(minimal: &DVector<f64>, idx: &[usize], rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |i, j| minimal[idx[i * cols + j]])
}

impl OperationalRep {
    pub fn from_minimal(layout: Arc<Layout>, minimal: DVector<f64>) -> Result<Self> {
        if minimal.len() != layout.n_params() {
            return Err(Error::DimensionMismatch {
                expected: layout.n_params(),
                found: minimal.len(),
            });
        }
        Ok(Self { layout, minimal })
    }

    /// `E~_i = <<E|F_i|rho>>` over measurement fiducials.
    pub fn e_tilde(&self) -> DVector<f64> {
        gather(&self.minimal, &self.layout.e_meas)
    }

    /// `<<E|F_j|rho>>` over preparation fiducials (equal to `e_tilde` when shared).
    pub fn e_tilde_prep(&self) -> DVector<f64> {
        gather(&self.minimal, &self.layout.e_prep)
    }

    pub fn f_tilde(&self) -> DMatrix<f64> {
        gather_matrix(&self.minimal, &self.layout.f, self.layout.n_meas(), self.layout.n_prep())
    }

    pub fn g_tilde(&self, label: &str) -> Result<DMatrix<f64>> {
        let k = self.layout.buttons.position(label)?;
        Ok(self.g_tilde_at(k))
    }

    pub fn g_tilde_at(&self, k: usize) -> DMatrix<f64> {
        gather_matrix(&self.minimal, &self.layout.g[k], self.layout.n_meas(), self.layout.n_prep())
    }

    pub fn g_tildes(&self) -> BTreeMap<String, DMatrix<f64>> {
        self.layout
            .gate_labels()
            .iter()
            .enumerate()
            .map(|(k, l)| (l.clone(), self.g_tilde_at(k)))
            .collect()
    }

    pub fn compile(&self) -> Result<CompiledRep> {
        CompiledRep::new(self)
    }

    pub fn probability(&self, s: &Sequence, clip: bool) -> Result<f64> {
        oprep_sequence_probability(self, s, clip)
    }
}

/// Measures every slot sequence on a gate set.
pub fn build_operational_rep(gs: &GateSet, fiducials: &[Sequence]) -> Result<OperationalRep> {
    let layout = Arc::new(minimal_parameterization(&gs.labels(), fiducials)?);
    rep_on_layout(gs, layout)
}

/// Measures a gate set on an existing layout.
pub fn rep_on_layout(gs: &GateSet, layout: Arc<Layout>) -> Result<OperationalRep> {
    if gs.labels() != layout.gate_labels() {
        return Err(Error::Config(format!(
            "gate set buttons {:?} differ from layout buttons {:?}",
            gs.labels(),
            layout.gate_labels()
        )));
    }
    let compiled = gs.compile();
    let minimal = layout
        .slots
        .iter()
        .map(|s| compiled.probability(s))
        .collect::<Result<Vec<f64>>>()?;
    Ok(OperationalRep {
        minimal: DVector::from_vec(minimal),
        layout,
    })
}

/// Transfer matrices `F~+ G~(k)` and boundary vectors for fast evaluation.
#[derive(Debug, Clone)]
pub struct CompiledRep {
    left: DVector<f64>,
    right: DVector<f64>,
    mats: Vec<DMatrix<f64>>,
}

impl CompiledRep {
    pub fn new(rep: &OperationalRep) -> Result<Self> {
        let f = rep.f_tilde();
        if f.iter().all(|&x| x == 0.0) {
            return Err(Error::ZeroGram);
        }
        // F~+ = V S^-1 U^T, split as (V S^-1/2)(S^-1/2 U^T) so every transfer
        // matrix is expressed in a balanced frame. Same value, less rounding
        // growth when F~ is ill-conditioned.
        let svd = svd(&f);
        let cutoff = rank_cutoff(&svd.singular_values, f.nrows(), f.ncols());
        let kept: Vec<usize> = (0..svd.singular_values.len())
            .filter(|&k| svd.singular_values[k] > cutoff && svd.singular_values[k] > 0.0)
            .collect();
        let scale: Vec<f64> = kept.iter().map(|&k| svd.singular_values[k].sqrt().recip()).collect();
        let to_frame = DMatrix::from_fn(kept.len(), f.nrows(), |r, c| scale[r] * svd.u[(c, kept[r])]);
        let from_frame = DMatrix::from_fn(f.ncols(), kept.len(), |r, c| svd.v_t[(kept[c], r)] * scale[c]);
        let mats = (0..rep.layout.g.len())
            .map(|k| &to_frame * rep.g_tilde_at(k) * &from_frame)
            .collect();
        Ok(Self {
            left: from_frame.tr_mul(&rep.e_tilde_prep()),
            right: &to_frame * rep.e_tilde(),
            mats,
        })
    }
}

impl Transfer for CompiledRep {
    fn left(&self) -> &DVector<f64> {
        &self.left
    }

    fn right(&self) -> &DVector<f64> {
        &self.right
    }

    fn matrices(&self) -> &[DMatrix<f64>] {
        &self.mats
    }
}

/// `E~^T F~+ G~(s_{m-1}) F~+ ... G~(s_0) F~+ E~`, optionally clipped to `[0, 1]`.
pub fn oprep_sequence_probability(rep: &OperationalRep, s: &Sequence, clip: bool) -> Result<f64> {
    let plan = rep.layout.plan(s)?;
    let p = CompiledRep::new(rep)?.evaluate(&plan);
    Ok(if clip { clip_probability(p) } else { p })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Completeness {
    pub complete: bool,
    pub rank: usize,
    pub condition: f64,
}

/// Numerical rank of `F~` against the `d^2` requirement.
pub fn informational_completeness(rep: &OperationalRep, dim: usize) -> Completeness {
    let spec = spectrum(&rep.f_tilde());
    Completeness {
        complete: spec.rank >= dim * dim,
        rank: spec.rank,
        condition: spec.condition,
    }
}

/// A valid `d^2 x |prep|` gauge frame: the identity for square `F~`,
/// otherwise the right factor of the rank-`d^2` SVD of `F~`.
pub fn canonical_gauge(rep: &OperationalRep, dim: usize) -> Result<DMatrix<f64>> {
    let n = dim * dim;
    let f = rep.f_tilde();
    let spec = spectrum(&f);
    if spec.rank < n {
        return Err(Error::RankDeficient {
            rank: spec.rank,
            required: n,
        });
    }
    if rep.layout.n_prep() == n {
        return Ok(DMatrix::identity(n, n));
    }
    let svd = svd(&f);
    let v_t = svd.v_t;
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    Ok(DMatrix::from_fn(n, v_t.ncols(), |r, c| {
        let k = order[r];
        svd.singular_values[k].sqrt() * v_t[(k, c)]
    }))
}

/// The gauge `B = sum_j F_j|rho>> <j|` under which inversion returns `gs` itself.
pub fn true_gauge(gs: &GateSet, prep: &[Sequence]) -> Result<DMatrix<f64>> {
    let n = gs.dim() * gs.dim();
    let mut b = DMatrix::zeros(n, prep.len());
    for (j, f) in prep.iter().enumerate() {
        let col = gs.sequence_superop(f)?.apply(&gs.rho).coeffs;
        b.set_column(j, &col);
    }
    Ok(b)
}

/// Linear inversion in the gauge `b`:
/// `rho = B F~+ E~`, `E = E~_prep^T B+`, `G_k = B F~+ G~(k) B+`.
pub fn lgst_reconstruct(rep: &OperationalRep, b: &DMatrix<f64>, dim: usize) -> Result<GateSet> {
    let n = dim * dim;
    let layout = &rep.layout;
    if b.nrows() != n || b.ncols() != layout.n_prep() {
        return Err(Error::DimensionMismatch {
            expected: n * layout.n_prep(),
            found: b.nrows() * b.ncols(),
        });
    }
    let f = rep.f_tilde();
    let (f_pinv, rank) = pinv(&f);
    if rank < n {
        return Err(Error::RankDeficient { rank, required: n });
    }
    let bspec = spectrum(b);
    if bspec.rank < n || bspec.condition > MAX_GAUGE_CONDITION {
        return Err(Error::SingularGauge(bspec.condition));
    }
    let (b_pinv, _) = pinv(b);
    let rho = SuperKet::new(b * &f_pinv * rep.e_tilde(), dim)?;
    let effect = SuperBra::new(b_pinv.tr_mul(&rep.e_tilde_prep()), dim)?;
    let mut gates = BTreeMap::new();
    for (k, label) in layout.gate_labels().iter().enumerate() {
        let g = b * &f_pinv * rep.g_tilde_at(k) * &b_pinv;
        gates.insert(label.clone(), SuperOperator::new(g, dim)?);
    }
    GateSet::new(rho, effect, gates)
}

impl GateSet {
    /// Distance between two gate sets' matrices, for round-trip checks.
    pub fn max_abs_diff(&self, other: &GateSet) -> f64 {
        let mut d = (&self.rho.coeffs - &other.rho.coeffs).amax();
        d = d.max((&self.effect.coeffs - &other.effect.coeffs).amax());
        for (k, g) in &self.gates {
            match other.gates.get(k) {
                Some(h) => d = d.max(linalg::max_abs_diff(&g.mat, &h.mat)),
                None => return f64::INFINITY,
            }
        }
        d
    }
}
