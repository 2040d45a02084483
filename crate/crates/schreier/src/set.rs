//! Finite sets of positive integers kept as strictly increasing vectors.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{domain, Error, Result};

/// A finite subset of `{1, 2, ...}`, stored in increasing order.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize)]
#[serde(transparent)]
pub struct FiniteSet(Vec<u64>);

impl FiniteSet {
    pub fn empty() -> Self {
        Self(Vec::new())
    }

    /// Accepts only strictly increasing positive entries.
    pub fn new(elements: Vec<u64>) -> Result<Self> {
        if elements.first() == Some(&0) {
            return Err(domain("set elements must be positive"));
        }
        if elements.windows(2).any(|w| w[0] >= w[1]) {
            return Err(domain("set elements must be strictly increasing"));
        }
        Ok(Self(elements))
    }

    /// Sorts and deduplicates; zero is rejected.
    pub fn from_unsorted(mut elements: Vec<u64>) -> Result<Self> {
        elements.sort_unstable();
        elements.dedup();
        Self::new(elements)
    }

    /// `{lo, ..., hi}`; empty when `lo > hi`.
    pub fn interval(lo: u64, hi: u64) -> Self {
        assert!(lo >= 1, "intervals start at 1 or later");
        Self((lo..=hi).collect())
    }

    /// Elements of `[1, 64]` selected by the bits of `mask` (bit `i` is element `i + 1`).
    pub fn from_mask(mask: u64) -> Self {
        Self((0..64).filter(|b| mask >> b & 1 == 1).map(|b| b + 1).collect())
    }

    pub fn as_slice(&self) -> &[u64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<u64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `min E`, with `None` standing for the `min {} = infinity` convention.
    pub fn min_elem(&self) -> Option<u64> {
        self.0.first().copied()
    }

    /// `max E`, zero for the empty set.
    pub fn max_elem(&self) -> u64 {
        self.0.last().copied().unwrap_or(0)
    }

    pub fn contains(&self, v: u64) -> bool {
        self.0.binary_search(&v).is_ok()
    }

    pub fn iter(&self) -> impl Iterator<Item = u64> + '_ {
        self.0.iter().copied()
    }

    /// `E < F`: every element of `E` is below every element of `F`.
    pub fn precedes(&self, other: &FiniteSet) -> bool {
        match other.min_elem() {
            None => true,
            Some(m) => self.max_elem() < m,
        }
    }

    pub fn union(&self, other: &FiniteSet) -> FiniteSet {
        let mut out = Vec::with_capacity(self.len() + other.len());
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() && j < other.0.len() {
            match self.0[i].cmp(&other.0[j]) {
                std::cmp::Ordering::Less => {
                    out.push(self.0[i]);
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    out.push(other.0[j]);
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    out.push(self.0[i]);
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&self.0[i..]);
        out.extend_from_slice(&other.0[j..]);
        FiniteSet(out)
    }

    /// `E ⌢ (v)`; `v` must exceed `max E`.
    pub fn push(&self, v: u64) -> Result<FiniteSet> {
        if v <= self.max_elem() {
            return Err(domain(format!("{v} does not extend {self}")));
        }
        let mut out = self.0.clone();
        out.push(v);
        Ok(FiniteSet(out))
    }

    pub fn is_subset(&self, other: &FiniteSet) -> bool {
        self.iter().all(|v| other.contains(v))
    }
}

/// `target` is a spread of `source`: equal sizes and `source(i) <= target(i)` coordinatewise.
pub fn is_spread(target: &FiniteSet, source: &FiniteSet) -> bool {
    target.len() == source.len() && source.iter().zip(target.iter()).all(|(s, t)| s <= t)
}

impl fmt::Display for FiniteSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (k, v) in self.0.iter().enumerate() {
            if k > 0 {
                f.write_str(",")?;
            }
            write!(f, "{v}")?;
        }
        f.write_str("}")
    }
}

impl fmt::Debug for FiniteSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl<'de> Deserialize<'de> for FiniteSet {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = Vec::<u64>::deserialize(d)?;
        FiniteSet::new(raw).map_err(serde::de::Error::custom)
    }
}

impl TryFrom<Vec<u64>> for FiniteSet {
    type Error = Error;
    fn try_from(v: Vec<u64>) -> Result<Self> {
        FiniteSet::new(v)
    }
}

/// Parses `a,b,c` (whitespace tolerated, empty string is the empty set).
pub fn parse_set(text: &str) -> Result<FiniteSet> {
    let trimmed = text.trim();
    if trimmed.is_empty() {
        return Ok(FiniteSet::empty());
    }
    let mut out = Vec::new();
    let mut offset = 0;
    for part in trimmed.split(',') {
        let v = part.trim().parse::<u64>().map_err(|_| Error::Parse {
            pos: offset,
            msg: format!("bad set element {:?}", part.trim()),
        })?;
        out.push(v);
        offset += part.len() + 1;
    }
    FiniteSet::from_unsorted(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(v: &[u64]) -> FiniteSet {
        FiniteSet::new(v.to_vec()).unwrap()
    }

    #[test]
    fn conventions() {
        let e = FiniteSet::empty();
        assert_eq!(e.max_elem(), 0);
        assert_eq!(e.min_elem(), None);
        assert!(e.precedes(&s(&[1])));
        assert!(s(&[1, 2]).precedes(&e));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(FiniteSet::new(vec![2, 2]).is_err());
        assert!(FiniteSet::new(vec![0, 1]).is_err());
        assert!(FiniteSet::new(vec![3, 1]).is_err());
        assert_eq!(parse_set("3, 1,2").unwrap(), s(&[1, 2, 3]));
        assert!(matches!(parse_set("1,x"), Err(Error::Parse { pos: 2, .. })));
    }

    #[test]
    fn spreads() {
        assert!(is_spread(&s(&[2, 5]), &s(&[1, 3])));
        assert!(!is_spread(&s(&[1, 3]), &s(&[2, 5])));
        assert!(is_spread(&FiniteSet::empty(), &FiniteSet::empty()));
    }

    #[test]
    fn union_and_mask() {
        assert_eq!(s(&[1, 4]).union(&s(&[2, 4, 9])), s(&[1, 2, 4, 9]));
        assert_eq!(FiniteSet::from_mask(0b1011), s(&[1, 2, 4]));
        assert_eq!(serde_json::to_string(&s(&[2, 3])).unwrap(), "[2,3]");
        assert!(serde_json::from_str::<FiniteSet>("[3,2]").is_err());
    }
}
