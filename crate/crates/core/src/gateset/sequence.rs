//! Button sequences.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Ordered gate-button labels, applied left to right; SPAM is implicit.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Sequence(pub Vec<String>);

impl Sequence {
    pub fn empty() -> Self {
        Self(Vec::new())
    }

    pub fn new<I, S>(labels: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self(labels.into_iter().map(Into::into).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.0
    }

    /// `self` followed by `other`.
    pub fn concat(&self, other: &Sequence) -> Sequence {
        let mut v = self.0.clone();
        v.extend(other.0.iter().cloned());
        Sequence(v)
    }

    /// `self` repeated `n` times.
    pub fn power(&self, n: usize) -> Sequence {
        let mut v = Vec::with_capacity(self.0.len() * n);
        for _ in 0..n {
            v.extend(self.0.iter().cloned());
        }
        Sequence(v)
    }

    pub fn push(&mut self, label: impl Into<String>) {
        self.0.push(label.into());
    }
}

impl std::ops::Add for &Sequence {
    type Output = Sequence;
    fn add(self, rhs: &Sequence) -> Sequence {
        self.concat(rhs)
    }
}

impl fmt::Display for Sequence {
    /// `()` for the empty sequence, otherwise comma-separated labels.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            f.write_str("()")
        } else {
            f.write_str(&self.0.join(","))
        }
    }
}

/// Whether `label` is a usable button name.
pub fn valid_label(label: &str) -> bool {
    !label.is_empty()
        && label != "()"
        && !label.chars().any(|c| c.is_whitespace() || c == ',' || c == '#')
}

impl FromStr for Sequence {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "()" || s.is_empty() {
            return Ok(Sequence::empty());
        }
        let labels: Vec<String> = s.split(',').map(|l| l.trim().to_string()).collect();
        if let Some(bad) = labels.iter().find(|l| !valid_label(l)) {
            return Err(Error::InvalidDatum(format!("bad button label `{bad}` in `{s}`")));
        }
        Ok(Sequence(labels))
    }
}

/// Kind of a button on the box.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ButtonKind {
    Prep,
    Measure,
    Gate,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Button {
    pub label: String,
    pub kind: ButtonKind,
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parse_and_display() {
        assert_eq!("()".parse::<Sequence>().unwrap(), Sequence::empty());
        let s: Sequence = "Rx, dt,Rx".parse().unwrap();
        assert_eq!(s, Sequence::new(["Rx", "dt", "Rx"]));
        assert_eq!(s.to_string(), "Rx,dt,Rx");
        assert_eq!(Sequence::empty().to_string(), "()");
        assert!("a,,b".parse::<Sequence>().is_err());
    }

    fn seq() -> impl Strategy<Value = Sequence> {
        prop::collection::vec(prop::sample::select(vec!["a", "b", "c"]), 0..8).prop_map(Sequence::new)
    }

    proptest! {
        #[test]
        fn monoid_laws(s in seq(), t in seq(), u in seq()) {
            prop_assert_eq!((&(&s + &t)) + &u, &s + &(&t + &u));
            prop_assert_eq!(&s + &Sequence::empty(), s.clone());
            prop_assert_eq!(&Sequence::empty() + &s, s.clone());
            prop_assert_eq!((&s + &t).len(), s.len() + t.len());
        }

        #[test]
        fn display_round_trip(s in seq()) {
            prop_assert_eq!(s.to_string().parse::<Sequence>().unwrap(), s);
        }
    }
}
