//! Finitely supported vectors with exact rational coefficients.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{domain, Error, Result};
use crate::set::FiniteSet;

pub type Q = BigRational;

pub fn q(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

pub fn qi(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn parse_q(text: &str) -> Result<Q> {
    text.trim()
        .parse::<Q>()
        .map_err(|_| Error::Parse { pos: 0, msg: format!("bad rational {text:?}") })
}

/// `sum_i c_i e_i` over indices `i >= 1`; entries sorted by index, zeros never stored.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct RationalVector {
    entries: Vec<(u64, Q)>,
}

impl RationalVector {
    pub fn zero() -> Self {
        Self::default()
    }

    /// Sums duplicate indices and drops zeros; index 0 is rejected.
    pub fn from_entries(mut entries: Vec<(u64, Q)>) -> Result<Self> {
        if entries.iter().any(|(i, _)| *i == 0) {
            return Err(domain("vector indices start at 1"));
        }
        entries.sort_by_key(|(i, _)| *i);
        let mut out: Vec<(u64, Q)> = Vec::with_capacity(entries.len());
        for (i, c) in entries {
            match out.last_mut() {
                Some((j, acc)) if *j == i => *acc += c,
                _ => out.push((i, c)),
            }
        }
        out.retain(|(_, c)| !c.is_zero());
        Ok(Self { entries: out })
    }

    pub fn basis(k: u64) -> Self {
        Self::indicator(&FiniteSet::new(vec![k]).expect("k >= 1"))
    }

    /// `1_E`.
    pub fn indicator(e: &FiniteSet) -> Self {
        Self::constant_on(e, Q::one())
    }

    /// `c * 1_E`.
    pub fn constant_on(e: &FiniteSet, c: Q) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        Self { entries: e.iter().map(|i| (i, c.clone())).collect() }
    }

    pub fn entries(&self) -> &[(u64, Q)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn support(&self) -> FiniteSet {
        FiniteSet::new(self.entries.iter().map(|(i, _)| *i).collect()).expect("sorted support")
    }

    pub fn get(&self, i: u64) -> Q {
        match self.entries.binary_search_by_key(&i, |(j, _)| *j) {
            Ok(k) => self.entries[k].1.clone(),
            Err(_) => Q::zero(),
        }
    }

    pub fn add(&self, other: &RationalVector) -> RationalVector {
        let mut all = self.entries.clone();
        all.extend(other.entries.iter().cloned());
        Self::from_entries(all).expect("indices are positive")
    }

    pub fn scale(&self, c: &Q) -> RationalVector {
        if c.is_zero() {
            return Self::zero();
        }
        Self { entries: self.entries.iter().map(|(i, v)| (*i, v * c)).collect() }
    }

    pub fn abs(&self) -> RationalVector {
        Self { entries: self.entries.iter().map(|(i, v)| (*i, v.abs())).collect() }
    }

    pub fn is_nonnegative(&self) -> bool {
        self.entries.iter().all(|(_, v)| v.is_positive())
    }

    pub fn l1(&self) -> Q {
        self.entries.iter().fold(Q::zero(), |acc, (_, v)| acc + v.abs())
    }

    pub fn linf(&self) -> Q {
        self.entries.iter().map(|(_, v)| v.abs()).max().unwrap_or_else(Q::zero)
    }

    pub fn sum(&self) -> Q {
        self.entries.iter().fold(Q::zero(), |acc, (_, v)| acc + v)
    }

    /// `E x`: the restriction to `E`.
    pub fn restrict(&self, e: &FiniteSet) -> RationalVector {
        Self { entries: self.entries.iter().filter(|(i, _)| e.contains(*i)).cloned().collect() }
    }

    /// `sum_{i in E} |x_i|`.
    pub fn mass_on(&self, e: &FiniteSet) -> Q {
        self.restrict(e).l1()
    }

    /// `<self, other>`.
    pub fn dot(&self, other: &RationalVector) -> Q {
        let (mut a, mut b) = (self.entries.iter().peekable(), other.entries.iter().peekable());
        let mut acc = Q::zero();
        while let (Some((i, x)), Some((j, y))) = (a.peek(), b.peek()) {
            match i.cmp(j) {
                std::cmp::Ordering::Less => {
                    a.next();
                }
                std::cmp::Ordering::Greater => {
                    b.next();
                }
                std::cmp::Ordering::Equal => {
                    acc += x * y;
                    a.next();
                    b.next();
                }
            }
        }
        acc
    }
}

impl fmt::Display for RationalVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.entries.is_empty() {
            return f.write_str("0");
        }
        for (k, (i, c)) in self.entries.iter().enumerate() {
            if k > 0 {
                f.write_str(" + ")?;
            }
            write!(f, "{c}*e{i}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for RationalVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[derive(Serialize, Deserialize)]
struct VectorRepr {
    entries: Vec<(u64, String)>,
}

impl Serialize for RationalVector {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        VectorRepr { entries: self.entries.iter().map(|(i, c)| (*i, c.to_string())).collect() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for RationalVector {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = VectorRepr::deserialize(d)?;
        let entries = repr
            .entries
            .into_iter()
            .map(|(i, c)| parse_q(&c).map(|c| (i, c)))
            .collect::<Result<Vec<_>>>()
            .map_err(serde::de::Error::custom)?;
        RationalVector::from_entries(entries).map_err(serde::de::Error::custom)
    }
}
