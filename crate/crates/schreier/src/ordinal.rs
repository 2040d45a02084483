//! Ordinals below epsilon-zero in Cantor normal form.
//!
//! Text grammar (also used for rendering):
//!
//! ```text
//! expr := term ('+' term)*
//! term := '0' | NAT | 'w' ['^' atom] ['*' NAT]
//! atom := NAT | 'w' | '(' expr ')'
//! ```

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{domain, Error, Result};

/// An ordinal `w^e1*c1 + ... + w^ek*ck` with `e1 > ... > ek` and every `ci >= 1`.
/// The empty term list is zero.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Ordinal {
    terms: Vec<(Ordinal, u64)>,
}

impl Ordinal {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn finite(n: u64) -> Self {
        if n == 0 {
            Self::zero()
        } else {
            Self { terms: vec![(Self::zero(), n)] }
        }
    }

    pub fn omega() -> Self {
        Self::omega_pow(Self::finite(1))
    }

    /// `w^exp`.
    pub fn omega_pow(exp: Ordinal) -> Self {
        Self { terms: vec![(exp, 1)] }
    }

    /// `w^exp * coef`; zero when `coef == 0`.
    pub fn monomial(exp: Ordinal, coef: u64) -> Self {
        if coef == 0 {
            Self::zero()
        } else {
            Self { terms: vec![(exp, coef)] }
        }
    }

    pub fn terms(&self) -> &[(Ordinal, u64)] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_successor(&self) -> bool {
        matches!(self.terms.last(), Some((e, _)) if e.is_zero())
    }

    pub fn is_limit(&self) -> bool {
        matches!(self.terms.last(), Some((e, _)) if !e.is_zero())
    }

    pub fn as_finite(&self) -> Option<u64> {
        match self.terms.as_slice() {
            [] => Some(0),
            [(e, c)] if e.is_zero() => Some(*c),
            _ => None,
        }
    }

    /// Sum of all CNF coefficients (the `k` with `|R(xi)| = k + 1`).
    pub fn coefficient_mass(&self) -> u64 {
        self.terms.iter().map(|(_, c)| *c).sum()
    }

    /// Nesting depth of exponents: 0 for zero, 1 for naturals, 2 for `w`, ...
    pub fn cnf_depth(&self) -> usize {
        self.terms.iter().map(|(e, _)| 1 + e.cnf_depth()).max().unwrap_or(0)
    }

    pub fn succ(&self) -> Self {
        self.add(&Self::finite(1))
    }

    /// The immediate predecessor of a successor ordinal.
    pub fn pred(&self) -> Option<Self> {
        if !self.is_successor() {
            return None;
        }
        let mut out = self.clone();
        let last = out.terms.last_mut().expect("successor has terms");
        if last.1 == 1 {
            out.terms.pop();
        } else {
            last.1 -= 1;
        }
        Some(out)
    }

    /// Ordinal addition (absorbs every term of `self` below the leading exponent of `other`).
    pub fn add(&self, other: &Ordinal) -> Ordinal {
        let Some((lead, lead_coef)) = other.terms.first() else {
            return self.clone();
        };
        let mut terms: Vec<(Ordinal, u64)> = Vec::with_capacity(self.terms.len() + other.terms.len());
        let mut merged = *lead_coef;
        for (e, c) in &self.terms {
            match e.cmp(lead) {
                Ordering::Greater => terms.push((e.clone(), *c)),
                Ordering::Equal => merged += c,
                Ordering::Less => break,
            }
        }
        terms.push((lead.clone(), merged));
        terms.extend(other.terms[1..].iter().cloned());
        Ordinal { terms }
    }

    /// The unique `rho` with `iota + rho = self`.
    pub fn left_subtract(&self, iota: &Ordinal) -> Result<Ordinal> {
        if iota > self {
            return Err(domain(format!("cannot subtract {iota} from smaller {self}")));
        }
        for (k, (xe, xc)) in self.terms.iter().enumerate() {
            let Some((ie, ic)) = iota.terms.get(k) else {
                return Ok(Ordinal { terms: self.terms[k..].to_vec() });
            };
            if ie == xe && ic == xc {
                continue;
            }
            if ie < xe {
                return Ok(Ordinal { terms: self.terms[k..].to_vec() });
            }
            // same exponent, smaller coefficient (iota <= self rules out the rest)
            let mut terms = vec![(xe.clone(), xc - ic)];
            terms.extend(self.terms[k + 1..].iter().cloned());
            return Ok(Ordinal { terms });
        }
        Ok(Ordinal::zero())
    }

    /// `I(xi)`: zero together with every CNF prefix, coefficients expanded one unit at a time.
    pub fn i_set(&self) -> Vec<Ordinal> {
        let mut out = vec![Ordinal::zero()];
        let mut prefix: Vec<(Ordinal, u64)> = Vec::new();
        for (e, c) in &self.terms {
            prefix.push((e.clone(), 0));
            for _ in 0..*c {
                prefix.last_mut().expect("just pushed").1 += 1;
                out.push(Ordinal { terms: prefix.clone() });
            }
        }
        out
    }

    /// `R(xi) = { xi - iota : iota in I(xi) }`, ascending.
    pub fn r_set(&self) -> Vec<Ordinal> {
        let mut out: Vec<Ordinal> = self
            .i_set()
            .iter()
            .map(|iota| self.left_subtract(iota).expect("prefixes never exceed xi"))
            .collect();
        out.sort();
        out.dedup();
        out
    }

    /// The canonical fundamental sequence `xi[n]`, `n >= 1`:
    /// `(g + w^(b+1))[n] = g + w^b * n` and `(g + w^l)[n] = g + w^(l[n])` for limit `l`.
    pub fn fundamental(&self, n: u64) -> Result<Ordinal> {
        if n == 0 {
            return Err(domain("fundamental sequence index starts at 1"));
        }
        let Some((exp, coef)) = self.terms.last() else {
            return Err(domain("0 has no fundamental sequence"));
        };
        if exp.is_zero() {
            return Err(domain(format!("{self} is a successor")));
        }
        let mut base = self.clone();
        if *coef == 1 {
            base.terms.pop();
        } else {
            base.terms.last_mut().expect("nonempty").1 -= 1;
        }
        let step = match exp.pred() {
            Some(b) => Ordinal::monomial(b, n),
            None => Ordinal::omega_pow(exp.fundamental(n)?),
        };
        Ok(base.add(&step))
    }
}

impl Ord for Ordinal {
    fn cmp(&self, other: &Self) -> Ordering {
        for (a, b) in self.terms.iter().zip(&other.terms) {
            match a.0.cmp(&b.0).then(a.1.cmp(&b.1)) {
                Ordering::Equal => continue,
                ord => return ord,
            }
        }
        self.terms.len().cmp(&other.terms.len())
    }
}

impl PartialOrd for Ordinal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl From<u64> for Ordinal {
    fn from(n: u64) -> Self {
        Ordinal::finite(n)
    }
}

fn fmt_atom(e: &Ordinal, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if e.as_finite().is_some() || *e == Ordinal::omega() {
        write!(f, "{e}")
    } else {
        write!(f, "({e})")
    }
}

impl fmt::Display for Ordinal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return f.write_str("0");
        }
        for (k, (e, c)) in self.terms.iter().enumerate() {
            if k > 0 {
                f.write_str("+")?;
            }
            if e.is_zero() {
                write!(f, "{c}")?;
                continue;
            }
            f.write_str("w")?;
            if e.as_finite() != Some(1) {
                f.write_str("^")?;
                fmt_atom(e, f)?;
            }
            if *c > 1 {
                write!(f, "*{c}")?;
            }
        }
        Ok(())
    }
}

impl fmt::Debug for Ordinal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Ordinal({self})")
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        Err(Error::Parse { pos: self.pos, msg: msg.into() })
    }

    fn skip_ws(&mut self) {
        while self.src.get(self.pos).is_some_and(|b| b.is_ascii_whitespace()) {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, b: u8) -> bool {
        if self.peek() == Some(b) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn nat(&mut self) -> Result<u64> {
        self.skip_ws();
        let start = self.pos;
        while self.src.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        if start == self.pos {
            return self.err("expected a natural number");
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii digits");
        text.parse().or_else(|_| {
            self.pos = start;
            self.err("number too large")
        })
    }

    fn expr(&mut self) -> Result<Ordinal> {
        let mut acc = self.term()?;
        while self.eat(b'+') {
            let t = self.term()?;
            acc = acc.add(&t);
        }
        Ok(acc)
    }

    fn term(&mut self) -> Result<Ordinal> {
        match self.peek() {
            Some(b'w') => {
                self.pos += 1;
                let exp = if self.eat(b'^') { self.atom()? } else { Ordinal::finite(1) };
                let coef = if self.eat(b'*') {
                    let at = self.pos;
                    let c = self.nat()?;
                    if c == 0 {
                        self.pos = at;
                        return self.err("coefficient 0 is not allowed");
                    }
                    c
                } else {
                    1
                };
                Ok(Ordinal::monomial(exp, coef))
            }
            Some(b) if b.is_ascii_digit() => Ok(Ordinal::finite(self.nat()?)),
            _ => self.err("expected a term"),
        }
    }

    fn atom(&mut self) -> Result<Ordinal> {
        match self.peek() {
            Some(b'w') => {
                self.pos += 1;
                Ok(Ordinal::omega())
            }
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat(b')') {
                    return self.err("expected ')'");
                }
                Ok(e)
            }
            Some(b) if b.is_ascii_digit() => Ok(Ordinal::finite(self.nat()?)),
            _ => self.err("expected an exponent"),
        }
    }
}

/// Parses the ordinal grammar; non-normal sums are normalized left to right.
pub fn parse_ordinal(text: &str) -> Result<Ordinal> {
    let mut p = Parser { src: text.as_bytes(), pos: 0 };
    let out = p.expr()?;
    if p.peek().is_some() {
        return p.err("trailing input");
    }
    Ok(out)
}

impl FromStr for Ordinal {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        parse_ordinal(s)
    }
}

impl Serialize for Ordinal {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Ordinal {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        parse_ordinal(&text).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn o(s: &str) -> Ordinal {
        parse_ordinal(s).unwrap()
    }

    #[test]
    fn parses_and_renders() {
        assert_eq!(o("w^2*3+w+4").to_string(), "w^2*3+w+4");
        assert_eq!(o("1+w"), Ordinal::omega());
        assert_eq!(o("w^(w)"), Ordinal::omega_pow(Ordinal::omega()));
        assert_eq!(o("w^(w+1)*2").to_string(), "w^(w+1)*2");
        assert_eq!(o("0"), Ordinal::zero());
        assert_eq!(o("w + w"), o("w*2"));
    }

    #[test]
    fn parse_errors_carry_position() {
        assert!(matches!(parse_ordinal("w*0"), Err(Error::Parse { pos: 2, .. })));
        assert!(matches!(parse_ordinal("w+"), Err(Error::Parse { pos: 2, .. })));
        assert!(matches!(parse_ordinal("w^(2"), Err(Error::Parse { .. })));
        assert!(matches!(parse_ordinal("x"), Err(Error::Parse { pos: 0, .. })));
    }

    #[test]
    fn addition_absorbs() {
        assert_eq!(o("w+1").add(&o("w")), o("w*2"));
        assert_eq!(o("w^2").add(&o("w")), o("w^2+w"));
        assert_eq!(o("3").add(&o("w^2")), o("w^2"));
    }

    #[test]
    fn subtraction() {
        assert_eq!(o("w^2+w+1").left_subtract(&o("w^2")).unwrap(), o("w+1"));
        assert_eq!(o("w^2").left_subtract(&o("0")).unwrap(), o("w^2"));
        assert_eq!(o("w*2").left_subtract(&o("w")).unwrap(), o("w"));
        assert_eq!(o("w*3+2").left_subtract(&o("w+5")).unwrap(), o("w*2+2"));
        assert!(o("3").left_subtract(&o("w")).is_err());
    }

    #[test]
    fn prefix_and_suffix_sets() {
        let xi = o("w^2+w+1");
        assert_eq!(xi.i_set(), vec![o("0"), o("w^2"), o("w^2+w"), o("w^2+w+1")]);
        assert_eq!(xi.r_set(), vec![o("0"), o("1"), o("w+1"), o("w^2+w+1")]);
        assert_eq!(o("0").r_set(), vec![o("0")]);
        assert_eq!(o("2").r_set(), vec![o("0"), o("1"), o("2")]);
    }

    #[test]
    fn fundamental_sequences() {
        assert_eq!(o("w").fundamental(3).unwrap(), o("3"));
        assert_eq!(o("w^2").fundamental(3).unwrap(), o("w*3"));
        assert_eq!(o("w^w").fundamental(3).unwrap(), o("w^3"));
        assert_eq!(o("w*2").fundamental(2).unwrap(), o("w+2"));
        assert_eq!(o("w^(w+1)").fundamental(2).unwrap(), o("w^w*2"));
        assert!(o("w+1").fundamental(1).is_err());
        assert!(o("0").fundamental(1).is_err());
    }

    pub(crate) fn arb_ordinal() -> impl Strategy<Value = Ordinal> {
        let leaf = (0u64..4).prop_map(Ordinal::finite);
        leaf.prop_recursive(3, 12, 3, |inner| {
            prop::collection::vec((inner, 1u64..4), 1..4).prop_map(|parts| {
                parts
                    .into_iter()
                    .fold(Ordinal::zero(), |acc, (e, c)| acc.add(&Ordinal::monomial(e, c)))
            })
        })
    }

    proptest! {
        #[test]
        fn round_trip(a in arb_ordinal()) {
            prop_assert_eq!(parse_ordinal(&a.to_string()).unwrap(), a);
        }

        #[test]
        fn addition_is_associative(a in arb_ordinal(), b in arb_ordinal(), c in arb_ordinal()) {
            prop_assert_eq!(a.add(&b).add(&c), a.add(&b.add(&c)));
        }

        #[test]
        fn subtraction_inverts_addition(a in arb_ordinal(), b in arb_ordinal()) {
            prop_assert_eq!(a.add(&b).left_subtract(&a).unwrap(), b);
        }

        #[test]
        fn addition_is_monotone_on_the_right(a in arb_ordinal(), b in arb_ordinal(), c in arb_ordinal()) {
            prop_assert!(a <= a.add(&b));
            if b < c {
                prop_assert!(a.add(&b) < a.add(&c));
            }
        }

        #[test]
        fn fundamental_sequence_increases(a in arb_ordinal(), n in 1u64..5) {
            if a.is_limit() {
                let lo = a.fundamental(n).unwrap();
                let hi = a.fundamental(n + 1).unwrap();
                prop_assert!(lo < hi && hi < a);
            }
        }

        #[test]
        fn suffix_count_is_mass_plus_one(a in arb_ordinal()) {
            prop_assert_eq!(a.r_set().len() as u64, a.coefficient_mass() + 1);
        }
    }
}
