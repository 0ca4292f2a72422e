//! The single-qubit Clifford group generated by `H` and `S`.

use crate::channels::{hadamard, phase_s, unitary_superop, SuperOperator};
use crate::error::{Error, Result};
use crate::gateset::Sequence;
use nalgebra::DMatrix;
use std::collections::VecDeque;

/// PTM entries closer than this are the same element.
pub const CLIFFORD_TOL: f64 = 1e-9;
pub const CLIFFORD_ORDER: usize = 24;

/// Generator buttons, in tie-breaking order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Generator {
    H,
    S,
}

impl Generator {
    pub const ALL: [Generator; 2] = [Generator::H, Generator::S];

    pub fn label(self) -> &'static str {
        match self {
            Generator::H => "H",
            Generator::S => "S",
        }
    }

    pub fn ptm(self) -> SuperOperator {
        let u = match self {
            Generator::H => hadamard(),
            Generator::S => phase_s(),
        };
        unitary_superop(&u).expect("generators are unitary")
    }
}

#[derive(Debug, Clone)]
pub struct CliffordTable {
    pub elements: Vec<SuperOperator>,
    /// `products[i][j]` indexes `elements[i] * elements[j]`, i.e. `j` first.
    pub products: Vec<Vec<usize>>,
    pub inverses: Vec<usize>,
    /// Shortest generator word per element, applied left to right.
    pub decomposition: Vec<Vec<Generator>>,
    pub identity: usize,
}

fn find(elements: &[SuperOperator], m: &DMatrix<f64>) -> Option<usize> {
    elements
        .iter()
        .position(|e| e.mat.iter().zip(m.iter()).all(|(a, b)| (a - b).abs() < CLIFFORD_TOL))
}

/// Breadth-first closure of `{H, S}` over ideal PTMs.
pub fn build_clifford_table() -> Result<CliffordTable> {
    let gens: Vec<SuperOperator> = Generator::ALL.iter().map(|g| g.ptm()).collect();
    let mut elements = vec![SuperOperator::identity(2)?];
    let mut decomposition: Vec<Vec<Generator>> = vec![vec![]];
    let mut queue = VecDeque::from([0usize]);
    while let Some(i) = queue.pop_front() {
        for (g, gm) in Generator::ALL.iter().zip(&gens) {
            let next = &gm.mat * &elements[i].mat;
            if find(&elements, &next).is_none() {
                if elements.len() == CLIFFORD_ORDER {
                    return Err(Error::NotClosed);
                }
                let mut word = decomposition[i].clone();
                word.push(*g);
                elements.push(SuperOperator::new(next, 2)?);
                decomposition.push(word);
                queue.push_back(elements.len() - 1);
            }
        }
    }
    if elements.len() != CLIFFORD_ORDER {
        return Err(Error::NotClosed);
    }
    let n = elements.len();
    let mut products = vec![vec![0; n]; n];
    for i in 0..n {
        for j in 0..n {
            let m = &elements[i].mat * &elements[j].mat;
            products[i][j] = find(&elements, &m).ok_or(Error::NotClosed)?;
        }
    }
    let identity = 0;
    let inverses = (0..n)
        .map(|i| (0..n).find(|&j| products[i][j] == identity).ok_or(Error::NotClosed))
        .collect::<Result<Vec<_>>>()?;
    Ok(CliffordTable {
        elements,
        products,
        inverses,
        decomposition,
        identity,
    })
}

impl CliffordTable {
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Index of `C_{k-1} ... C_0` for elements applied in order.
    pub fn compose(&self, cliffords: &[usize]) -> usize {
        cliffords.iter().fold(self.identity, |acc, &c| self.products[c][acc])
    }

    /// Button sequence for Clifford indices applied in order.
    pub fn expand(&self, cliffords: &[usize]) -> Sequence {
        Sequence(
            cliffords
                .iter()
                .flat_map(|&c| self.decomposition[c].iter().map(|g| g.label().to_string()))
                .collect(),
        )
    }
}
