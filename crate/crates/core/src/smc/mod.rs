//! Sequential Monte Carlo inference over minimal operational parameters.

mod prior;

pub use prior::{induce_operational_prior, PriorSpec, MAX_REJECTIONS};

use crate::error::{Error, Result};
use crate::gateset::{clip_probability, CompiledRep, Layout, OperationalRep, Plan, Sequence, Transfer};
use crate::linalg;
use crate::rng::SeedTree;
use nalgebra::{DMatrix, DVector};
use rand::Rng as _;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Tolerance on the weight normalization.
pub const WEIGHT_TOL: f64 = 1e-12;

/// Observed counts for one sequence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Datum {
    pub sequence: Sequence,
    pub trials: u64,
    pub successes: u64,
}

impl Datum {
    pub fn new(sequence: Sequence, trials: u64, successes: u64) -> Result<Self> {
        let d = Self {
            sequence,
            trials,
            successes,
        };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidDatum(format!("{}: zero trials", self.sequence)));
        }
        if self.successes > self.trials {
            return Err(Error::InvalidDatum(format!(
                "{}: {} successes out of {} trials",
                self.sequence, self.successes, self.trials
            )));
        }
        Ok(())
    }

    pub fn frequency(&self) -> f64 {
        self.successes as f64 / self.trials as f64
    }
}

/// Weighted particles over the minimal parameters of a shared layout.
#[derive(Debug, Clone)]
pub struct ParticleCloud {
    layout: Arc<Layout>,
    particles: Vec<DVector<f64>>,
    weights: Vec<f64>,
    compiled: Vec<Option<CompiledRep>>,
}

impl ParticleCloud {
    pub fn new(layout: Arc<Layout>, particles: Vec<DVector<f64>>, weights: Vec<f64>) -> Result<Self> {
        if particles.is_empty() {
            return Err(Error::Config("a particle cloud needs at least one particle".into()));
        }
        if weights.len() != particles.len() {
            return Err(Error::DimensionMismatch {
                expected: particles.len(),
                found: weights.len(),
            });
        }
        if let Some(p) = particles.iter().find(|p| p.len() != layout.n_params()) {
            return Err(Error::DimensionMismatch {
                expected: layout.n_params(),
                found: p.len(),
            });
        }
        let total: f64 = weights.iter().sum();
        if weights.iter().any(|w| !(*w >= 0.0)) || (total - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!("weights must be a probability vector (sum {total})")));
        }
        let compiled = compile_all(&layout, &particles);
        Ok(Self {
            layout,
            particles,
            weights,
            compiled,
        })
    }

    pub fn uniform(layout: Arc<Layout>, particles: Vec<DVector<f64>>) -> Result<Self> {
        let n = particles.len();
        Self::new(layout, particles, vec![1.0 / n as f64; n])
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    pub fn layout(&self) -> &Arc<Layout> {
        &self.layout
    }

    pub fn particles(&self) -> &[DVector<f64>] {
        &self.particles
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn rep(&self, i: usize) -> OperationalRep {
        OperationalRep {
            layout: self.layout.clone(),
            minimal: self.particles[i].clone(),
        }
    }

    /// Compiled transfer matrices of particle `i`, if its `F~` is nonzero.
    pub fn compiled(&self, i: usize) -> Option<&CompiledRep> {
        self.compiled[i].as_ref()
    }

    /// Raw probability per particle for one plan, in particle order.
    pub fn raw_probabilities(&self, plan: &Plan) -> Vec<f64> {
        self.compiled
            .par_iter()
            .map(|c| c.as_ref().map_or(f64::NAN, |c| c.evaluate(plan)))
            .collect()
    }

    /// Applies `f` to every compiled particle in parallel, keeping order.
    pub fn map_compiled<T, F>(&self, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(Option<&CompiledRep>) -> T + Sync + Send,
    {
        self.compiled.par_iter().map(|c| f(c.as_ref())).collect()
    }
}

fn compile_all(layout: &Arc<Layout>, particles: &[DVector<f64>]) -> Vec<Option<CompiledRep>> {
    particles
        .par_iter()
        .map(|x| {
            OperationalRep {
                layout: layout.clone(),
                minimal: x.clone(),
            }
            .compile()
            .ok()
        })
        .collect()
}

/// `1 / sum w_i^2`.
pub fn effective_sample_size(cloud: &ParticleCloud) -> f64 {
    ess(&cloud.weights)
}

fn ess(w: &[f64]) -> f64 {
    1.0 / w.iter().map(|x| x * x).sum::<f64>()
}

pub fn posterior_mean(cloud: &ParticleCloud) -> DVector<f64> {
    weighted_mean(&cloud.particles, &cloud.weights)
}

fn weighted_mean(x: &[DVector<f64>], w: &[f64]) -> DVector<f64> {
    let mut mu = DVector::zeros(x[0].len());
    for (xi, wi) in x.iter().zip(w) {
        mu.axpy(*wi, xi, 1.0);
    }
    mu
}

pub fn posterior_covariance(cloud: &ParticleCloud) -> DMatrix<f64> {
    let mu = posterior_mean(cloud);
    let p = mu.len();
    let mut cov = DMatrix::zeros(p, p);
    for (xi, wi) in cloud.particles.iter().zip(&cloud.weights) {
        let d = xi - &mu;
        cov.ger(*wi, &d, &d, 1.0);
    }
    cov
}

/// Empirical quadratic Bayes risk of an estimate under the cloud.
pub fn quadratic_risk(cloud: &ParticleCloud, estimate: &DVector<f64>) -> f64 {
    cloud
        .particles
        .iter()
        .zip(&cloud.weights)
        .map(|(x, w)| w * (x - estimate).norm_squared())
        .sum()
}

/// Resampling and smoothing settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SmcSettings {
    /// Resample when ESS falls below this fraction of the particle count.
    #[serde(default = "default_threshold")]
    pub resample_threshold: f64,
    /// Liu-West contraction `a`.
    #[serde(default = "default_a")]
    pub liu_west_a: f64,
}

fn default_threshold() -> f64 {
    0.5
}

fn default_a() -> f64 {
    0.98
}

impl Default for SmcSettings {
    fn default() -> Self {
        Self {
            resample_threshold: default_threshold(),
            liu_west_a: default_a(),
        }
    }
}

impl SmcSettings {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.resample_threshold) {
            return Err(Error::Config(format!(
                "resample_threshold {} outside [0, 1]",
                self.resample_threshold
            )));
        }
        if !(self.liu_west_a > 0.0 && self.liu_west_a <= 1.0) {
            return Err(Error::Config(format!("liu_west_a {} outside (0, 1]", self.liu_west_a)));
        }
        Ok(())
    }
}

/// What happened during one update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpdateDiagnostics {
    pub ess: f64,
    pub resampled: bool,
    pub smoothed: bool,
}

/// `ln Binom(k; K, p)` up to the `p`-independent coefficient.
fn log_likelihood(p: f64, trials: u64, successes: u64) -> f64 {
    let k = successes as f64;
    let f = (trials - successes) as f64;
    let term = |count: f64, q: f64| if count == 0.0 { 0.0 } else { count * q.ln() };
    term(k, p) + term(f, 1.0 - p)
}

/// Reweights by the binomial likelihood of `datum`; no resampling.
///
/// Fails with [`Error::InferenceFailure`] when every particle assigns the
/// datum zero probability.
pub fn reweight(cloud: &mut ParticleCloud, datum: &Datum, update: usize) -> Result<()> {
    datum.validate()?;
    let plan = cloud.layout.plan(&datum.sequence)?;
    let raw = cloud.raw_probabilities(&plan);
    let log_w: Vec<f64> = raw
        .iter()
        .zip(&cloud.weights)
        .map(|(&p, &w)| {
            if w == 0.0 {
                f64::NEG_INFINITY
            } else {
                w.ln() + log_likelihood(clip_probability(p), datum.trials, datum.successes)
            }
        })
        .collect();
    cloud.weights = normalize_log_weights(&log_w, update)?;
    Ok(())
}

fn normalize_log_weights(log_w: &[f64], update: usize) -> Result<Vec<f64>> {
    let max = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return Err(Error::InferenceFailure { update });
    }
    let unnorm: Vec<f64> = log_w.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = unnorm.iter().sum();
    Ok(unnorm.into_iter().map(|u| u / total).collect())
}

/// Bayes update followed by Liu-West resampling when ESS drops below threshold.
pub fn bayes_update(
    cloud: &mut ParticleCloud,
    datum: &Datum,
    settings: &SmcSettings,
    seeds: &SeedTree,
    update: usize,
) -> Result<UpdateDiagnostics> {
    reweight(cloud, datum, update)?;
    let e = effective_sample_size(cloud);
    let mut diag = UpdateDiagnostics {
        ess: e,
        resampled: false,
        smoothed: false,
    };
    if e < settings.resample_threshold * cloud.len() as f64 {
        diag.smoothed = liu_west_resample(cloud, settings.liu_west_a, &seeds.child("resample", update as u64));
        diag.resampled = true;
    }
    Ok(diag)
}

/// Liu-West resampling: ancestors drawn in proportion to weight, moved to
/// `a x + (1 - a) mu` and perturbed by `N(0, (1 - a^2) Sigma)`.
///
/// The covariance square root is taken on its nonnegative spectrum, so a
/// singular covariance only freezes the degenerate directions. A non-finite
/// covariance falls back to plain multinomial resampling. Returns whether
/// smoothing was applied.
pub fn liu_west_resample(cloud: &mut ParticleCloud, a: f64, seeds: &SeedTree) -> bool {
    let n = cloud.len();
    let mu = posterior_mean(cloud);
    let cov = posterior_covariance(cloud);
    let h2 = 1.0 - a * a;
    let root = if h2 > 0.0 && cov.iter().all(|x| x.is_finite()) {
        linalg::psd_sqrt(&cov).map(|s| s * h2.sqrt())
    } else {
        None
    };
    let mut cdf = Vec::with_capacity(n);
    let mut acc = 0.0;
    for w in &cloud.weights {
        acc += w;
        cdf.push(acc);
    }
    let total = acc;
    let old = &cloud.particles;
    let fresh: Vec<DVector<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = seeds.stream("particle", i as u64);
            let u = rng.random::<f64>() * total;
            let j = cdf.partition_point(|&c| c <= u).min(n - 1);
            match &root {
                Some(s) => {
                    let z = DVector::from_fn(mu.len(), |_, _| rng.sample::<f64, _>(StandardNormal));
                    &old[j] * a + &mu * (1.0 - a) + s * z
                }
                None => old[j].clone(),
            }
        })
        .collect();
    cloud.compiled = compile_all(&cloud.layout, &fresh);
    cloud.particles = fresh;
    cloud.weights = vec![1.0 / n as f64; n];
    root.is_some()
}

/// Bayes-mean prediction and its spread over the posterior.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Prediction {
    pub bme: f64,
    pub variance: f64,
}

pub fn predict(cloud: &ParticleCloud, s: &Sequence) -> Result<Prediction> {
    let plan = cloud.layout.plan(s)?;
    Ok(predict_plan(cloud, &plan))
}

pub fn predict_plan(cloud: &ParticleCloud, plan: &Plan) -> Prediction {
    let p: Vec<f64> = cloud.raw_probabilities(plan).into_iter().map(clip_probability).collect();
    weighted_moments(&p, &cloud.weights)
}

/// Weighted mean and variance of per-particle values.
pub fn weighted_moments(values: &[f64], weights: &[f64]) -> Prediction {
    let bme: f64 = values.iter().zip(weights).map(|(p, w)| p * w).sum();
    let variance = values.iter().zip(weights).map(|(p, w)| w * (p - bme).powi(2)).sum();
    Prediction { bme, variance }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossKind {
    Quadratic,
    Kl,
}

/// Floor applied to `p_hat` for the KL loss.
pub const KL_FLOOR: f64 = 1e-12;

pub fn prediction_loss(p_hat: f64, p_true: f64, kind: LossKind) -> f64 {
    match kind {
        LossKind::Quadratic => (p_hat - p_true).powi(2),
        LossKind::Kl => {
            let q = p_hat.clamp(KL_FLOOR, 1.0 - KL_FLOOR);
            let term = |p: f64, q: f64| if p == 0.0 { 0.0 } else { p * (p / q).ln() };
            term(p_true, q) + term(1.0 - p_true, 1.0 - q)
        }
    }
}

/// Serializable snapshot of a cloud and the counters needed to resume.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub layout: Layout,
    pub particles: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    pub seeds: SeedTree,
    pub updates: usize,
}

impl Checkpoint {
    pub fn capture(cloud: &ParticleCloud, seeds: &SeedTree, updates: usize) -> Self {
        Self {
            layout: (*cloud.layout).clone(),
            particles: cloud.particles.iter().map(|p| p.iter().copied().collect()).collect(),
            weights: cloud.weights.clone(),
            seeds: seeds.clone(),
            updates,
        }
    }

    pub fn restore(&self) -> Result<ParticleCloud> {
        let layout = Arc::new(crate::gateset::minimal_parameterization_split(
            self.layout.gate_labels(),
            &self.layout.prep_fiducials,
            &self.layout.meas_fiducials,
        )?);
        if *layout != self.layout {
            return Err(Error::Config("checkpoint layout is inconsistent with its fiducials".into()));
        }
        let particles = self.particles.iter().map(|p| DVector::from_vec(p.clone())).collect();
        ParticleCloud::new(layout, particles, self.weights.clone())
    }
}

#[cfg(test)]
mod tests;
