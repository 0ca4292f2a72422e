//! Compiled sequences: button indices with repeated blocks collapsed.
//!
//! Long-sequence designs repeat short germs thousands of times. A plan
//! stores such runs as `(unit, reps)` and evaluates them by repeated
//! squaring of the unit's transfer matrix.

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

use super::Sequence;

/// Longest periodic unit searched for.
const MAX_PERIOD: usize = 8;
/// Runs shorter than this are applied button by button.
const MIN_REPS: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq)]
enum Segment {
    Single(usize),
    Power { unit: Vec<usize>, reps: usize },
}

/// A sequence compiled against a fixed button ordering.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Plan {
    segments: Vec<Segment>,
    len: usize,
}

impl Plan {
    pub fn from_indices(idx: &[usize]) -> Self {
        let n = idx.len();
        let mut segments = Vec::new();
        let mut i = 0;
        while i < n {
            let mut best: Option<(usize, usize)> = None;
            for p in 1..=MAX_PERIOD.min((n - i) / MIN_REPS) {
                let unit = &idx[i..i + p];
                let mut reps = 1;
                while i + (reps + 1) * p <= n && &idx[i + reps * p..i + (reps + 1) * p] == unit {
                    reps += 1;
                }
                if reps >= MIN_REPS && best.is_none_or(|(bp, br)| p * reps > bp * br) {
                    best = Some((p, reps));
                }
            }
            match best {
                Some((p, reps)) => {
                    segments.push(Segment::Power {
                        unit: idx[i..i + p].to_vec(),
                        reps,
                    });
                    i += p * reps;
                }
                None => {
                    segments.push(Segment::Single(idx[i]));
                    i += 1;
                }
            }
        }
        Plan { segments, len: n }
    }

    /// Number of buttons in the uncompressed sequence.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// `M_{s_{m-1}} ... M_{s_0} v`.
    pub fn apply(&self, mats: &[DMatrix<f64>], mut v: DVector<f64>) -> DVector<f64> {
        for seg in &self.segments {
            match seg {
                Segment::Single(k) => v = &mats[*k] * v,
                Segment::Power { unit, reps } => {
                    let mut u = mats[unit[0]].clone();
                    for &k in &unit[1..] {
                        u = &mats[k] * u;
                    }
                    v = matrix_power(&u, *reps) * v;
                }
            }
        }
        v
    }

    /// `left^T M_{s_{m-1}} ... M_{s_0} right`.
    pub fn evaluate(&self, left: &DVector<f64>, mats: &[DMatrix<f64>], right: &DVector<f64>) -> f64 {
        left.dot(&self.apply(mats, right.clone()))
    }
}

fn matrix_power(m: &DMatrix<f64>, mut e: usize) -> DMatrix<f64> {
    let mut base = m.clone();
    let mut acc = DMatrix::identity(m.nrows(), m.ncols());
    while e > 0 {
        if e & 1 == 1 {
            acc = &acc * &base;
        }
        e >>= 1;
        if e > 0 {
            base = &base * &base;
        }
    }
    acc
}

/// A linear model `left^T M_{s_{m-1}} ... M_{s_0} right` over buttons.
pub trait Transfer {
    fn left(&self) -> &DVector<f64>;
    fn right(&self) -> &DVector<f64>;
    fn matrices(&self) -> &[DMatrix<f64>];

    /// Raw value of a compiled sequence.
    fn evaluate(&self, plan: &Plan) -> f64 {
        plan.evaluate(self.left(), self.matrices(), self.right())
    }

    /// Transfer matrix of a button word applied left to right.
    fn word(&self, buttons: &[usize]) -> DMatrix<f64> {
        let n = self.right().len();
        let mut acc = DMatrix::identity(n, n);
        for &b in buttons {
            acc = &self.matrices()[b] * acc;
        }
        acc
    }

    /// Raw value of a sequence of precomputed word matrices.
    fn evaluate_words(&self, words: &[DMatrix<f64>], seq: &[usize]) -> f64 {
        let mut v = self.right().clone();
        for &w in seq {
            v = &words[w] * v;
        }
        self.left().dot(&v)
    }
}

/// Maps button labels to matrix positions.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ButtonIndex {
    labels: Vec<String>,
    #[serde(skip)]
    lookup: HashMap<String, usize>,
}

impl PartialEq for ButtonIndex {
    fn eq(&self, other: &Self) -> bool {
        self.labels == other.labels
    }
}

impl Eq for ButtonIndex {}

impl ButtonIndex {
    pub fn new(labels: Vec<String>) -> Result<Self> {
        let mut lookup = HashMap::new();
        for (i, l) in labels.iter().enumerate() {
            if lookup.insert(l.clone(), i).is_some() {
                return Err(Error::DuplicateButton(l.clone()));
            }
        }
        Ok(Self { labels, lookup })
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn position(&self, label: &str) -> Result<usize> {
        if self.lookup.is_empty() && !self.labels.is_empty() {
            // Deserialized without the lookup table.
            return self
                .labels
                .iter()
                .position(|l| l == label)
                .ok_or_else(|| Error::UnknownButton(label.to_string()));
        }
        self.lookup
            .get(label)
            .copied()
            .ok_or_else(|| Error::UnknownButton(label.to_string()))
    }

    pub fn indices(&self, s: &Sequence) -> Result<Vec<usize>> {
        s.labels().iter().map(|l| self.position(l)).collect()
    }

    pub fn plan(&self, s: &Sequence) -> Result<Plan> {
        Ok(Plan::from_indices(&self.indices(s)?))
    }
}
