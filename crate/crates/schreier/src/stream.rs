//! Lazily evaluated infinite subsets of the naturals.
//!
//! Streams are cheap to clone (shared behind an `Arc`). Derived streams memoize
//! behind a mutex, so concurrent queries see identical values.

use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::ser::{Error as _, SerializeMap};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{domain, Result};
use crate::set::FiniteSet;

#[derive(Clone)]
pub struct IndexStream(Arc<Inner>);

struct Inner {
    kind: Kind,
    offset: OnceLock<usize>,
    memo: Mutex<DiffMemo>,
}

#[derive(Default)]
struct DiffMemo {
    produced: Vec<u64>,
    cursor: usize,
}

enum Kind {
    Naturals,
    Arith { prefix: Vec<u64>, start: u64, step: u64 },
    /// `base(positions(k))`, the subsequence `M(L)`.
    Compose { base: IndexStream, positions: IndexStream },
    /// `base` minus a finite sorted list.
    Difference { base: IndexStream, removed: Vec<u64> },
    Splice { prefix: Vec<u64>, rest: IndexStream },
    AtLeast { base: IndexStream, bound: u64 },
    /// Element `k` from `f(k, previous elements)`, bumped to stay strictly increasing.
    Generated { f: Generator },
}

type Generator = Box<dyn Fn(usize, &[u64]) -> u64 + Send + Sync>;

fn strictly_increasing_positive(v: &[u64]) -> bool {
    v.first().is_none_or(|&x| x >= 1) && v.windows(2).all(|w| w[0] < w[1])
}

impl IndexStream {
    fn wrap(kind: Kind) -> Self {
        IndexStream(Arc::new(Inner { kind, offset: OnceLock::new(), memo: Mutex::new(DiffMemo::default()) }))
    }

    /// `{1, 2, 3, ...}`.
    pub fn naturals() -> Self {
        Self::wrap(Kind::Naturals)
    }

    /// A finite prefix followed by `start, start + step, ...`.
    pub fn arithmetic(prefix: Vec<u64>, start: u64, step: u64) -> Result<Self> {
        if step == 0 || start == 0 || !strictly_increasing_positive(&prefix) {
            return Err(domain("stream must be strictly increasing and positive"));
        }
        if prefix.last().is_some_and(|&l| l >= start) {
            return Err(domain("tail must start above the prefix"));
        }
        Ok(Self::wrap(Kind::Arith { prefix, start, step }))
    }

    /// `{2, 4, 6, ...}`.
    pub fn evens() -> Self {
        Self::arithmetic(Vec::new(), 2, 2).expect("valid progression")
    }

    /// `{m, m+1, ...}`.
    pub fn from(m: u64) -> Self {
        Self::arithmetic(Vec::new(), m.max(1), 1).expect("valid progression")
    }

    /// A random-gap prefix of `prefix_len` elements and an arithmetic tail, all gaps in `1..=max_gap`.
    pub fn seeded_random(seed: u64, prefix_len: usize, max_gap: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let max_gap = max_gap.max(1);
        let mut prefix = Vec::with_capacity(prefix_len);
        let mut cur = 0;
        for _ in 0..prefix_len {
            cur += rng.gen_range(1..=max_gap);
            prefix.push(cur);
        }
        let start = cur + rng.gen_range(1..=max_gap);
        let step = rng.gen_range(1..=max_gap);
        Self::arithmetic(prefix, start, step).expect("gaps are positive")
    }

    /// The subsequence `self(positions)`, positions being 1-based.
    pub fn compose(&self, positions: &IndexStream) -> Self {
        Self::wrap(Kind::Compose { base: self.clone(), positions: positions.clone() })
    }

    /// `self` with the listed elements removed.
    pub fn without(&self, removed: &[u64]) -> Self {
        let mut removed = removed.to_vec();
        removed.sort_unstable();
        removed.dedup();
        Self::wrap(Kind::Difference { base: self.clone(), removed })
    }

    /// `self ∩ [bound, ∞)`.
    pub fn at_least(&self, bound: u64) -> Self {
        Self::wrap(Kind::AtLeast { base: self.clone(), bound })
    }

    /// `prefix` followed by `rest`; the first element of `rest` must exceed the prefix.
    pub fn splice(prefix: Vec<u64>, rest: &IndexStream) -> Result<Self> {
        if !strictly_increasing_positive(&prefix) {
            return Err(domain("splice prefix must be strictly increasing"));
        }
        if prefix.last().is_some_and(|&l| l >= rest.get(0)) {
            return Err(domain("splice tail must start above the prefix"));
        }
        Ok(Self::wrap(Kind::Splice { prefix, rest: rest.clone() }))
    }

    /// A stream defined by a recursion on its own prefix. `f` must not query the stream it defines.
    pub fn generated(f: impl Fn(usize, &[u64]) -> u64 + Send + Sync + 'static) -> Self {
        Self::wrap(Kind::Generated { f: Box::new(f) })
    }

    /// The element at 0-based position `k`, i.e. `M(k + 1)`.
    pub fn get(&self, k: usize) -> u64 {
        match &self.0.kind {
            Kind::Naturals => k as u64 + 1,
            Kind::Arith { prefix, start, step } => match prefix.get(k) {
                Some(&v) => v,
                None => start + step * (k - prefix.len()) as u64,
            },
            Kind::Compose { base, positions } => base.get(positions.get(k) as usize - 1),
            Kind::Splice { prefix, rest } => match prefix.get(k) {
                Some(&v) => v,
                None => rest.get(k - prefix.len()),
            },
            Kind::AtLeast { base, bound } => {
                let off = *self.0.offset.get_or_init(|| base.position_at_least(*bound));
                base.get(off + k)
            }
            Kind::Difference { base, removed } => {
                let mut memo = self.0.memo.lock().expect("stream memo poisoned");
                while memo.produced.len() <= k {
                    let v = base.get(memo.cursor);
                    memo.cursor += 1;
                    if removed.binary_search(&v).is_err() {
                        memo.produced.push(v);
                    }
                }
                memo.produced[k]
            }
            Kind::Generated { f } => {
                let mut memo = self.0.memo.lock().expect("stream memo poisoned");
                while memo.produced.len() <= k {
                    let j = memo.produced.len();
                    let floor = memo.produced.last().map_or(1, |&l| l + 1);
                    let v = f(j, &memo.produced).max(floor);
                    memo.produced.push(v);
                }
                memo.produced[k]
            }
        }
    }

    /// Least position whose element is `>= v` (galloping, then bisection).
    pub fn position_at_least(&self, v: u64) -> usize {
        if self.get(0) >= v {
            return 0;
        }
        let mut hi = 1usize;
        while self.get(hi) < v {
            hi *= 2;
        }
        let mut lo = hi / 2;
        while lo + 1 < hi {
            let mid = lo + (hi - lo) / 2;
            if self.get(mid) < v {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi
    }

    pub fn take(&self, n: usize) -> Vec<u64> {
        (0..n).map(|k| self.get(k)).collect()
    }

    /// All elements `<= bound`.
    pub fn up_to(&self, bound: u64) -> Vec<u64> {
        (0..).map(|k| self.get(k)).take_while(|&v| v <= bound).collect()
    }

    /// Elements at the 1-based positions of `positions`, i.e. `M(E)`.
    pub fn image(&self, positions: &FiniteSet) -> FiniteSet {
        FiniteSet::new(positions.iter().map(|p| self.get(p as usize - 1)).collect())
            .expect("a strictly increasing stream preserves order")
    }

    /// True when `self` is a subsequence of `other`, checked on the first `n` elements.
    pub fn is_subsequence_of(&self, other: &IndexStream, n: usize) -> bool {
        let mut pos = 0;
        for k in 0..n {
            let v = self.get(k);
            pos = other.position_at_least(v).max(pos);
            if other.get(pos) != v {
                return false;
            }
            pos += 1;
        }
        true
    }
}

impl fmt::Debug for IndexStream {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "IndexStream{:?}..", self.take(8))
    }
}

impl Serialize for IndexStream {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match &self.0.kind {
            Kind::Naturals => {
                let mut m = s.serialize_map(Some(1))?;
                m.serialize_entry("all_naturals", &true)?;
                m.end()
            }
            Kind::Arith { prefix, start, step } => {
                let mut m = s.serialize_map(Some(2))?;
                m.serialize_entry("prefix", prefix)?;
                m.serialize_entry("tail", &Tail { start: *start, step: *step })?;
                m.end()
            }
            _ => Err(S::Error::custom("only naturals and prefix/tail streams are serializable")),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct Tail {
    start: u64,
    step: u64,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum StreamRepr {
    Naturals { all_naturals: bool },
    Arith { prefix: Vec<u64>, tail: Tail },
}

impl<'de> Deserialize<'de> for IndexStream {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        match StreamRepr::deserialize(d)? {
            StreamRepr::Naturals { all_naturals: true } => Ok(IndexStream::naturals()),
            StreamRepr::Naturals { .. } => Err(serde::de::Error::custom("all_naturals must be true")),
            StreamRepr::Arith { prefix, tail } => {
                IndexStream::arithmetic(prefix, tail.start, tail.step).map_err(serde::de::Error::custom)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basic_streams() {
        assert_eq!(IndexStream::naturals().take(3), vec![1, 2, 3]);
        assert_eq!(IndexStream::evens().take(3), vec![2, 4, 6]);
        let s = IndexStream::arithmetic(vec![1, 5], 9, 3).unwrap();
        assert_eq!(s.take(5), vec![1, 5, 9, 12, 15]);
        assert!(IndexStream::arithmetic(vec![5], 5, 1).is_err());
    }

    #[test]
    fn derived_streams() {
        let n = IndexStream::naturals();
        let ev = IndexStream::evens();
        assert_eq!(n.compose(&ev).take(3), vec![2, 4, 6]);
        assert_eq!(ev.compose(&ev).take(3), vec![4, 8, 12]);
        assert_eq!(n.without(&[2, 3, 7]).take(5), vec![1, 4, 5, 6, 8]);
        assert_eq!(ev.at_least(7).take(2), vec![8, 10]);
        let sp = IndexStream::splice(vec![1, 3], &ev.at_least(10)).unwrap();
        assert_eq!(sp.take(4), vec![1, 3, 10, 12]);
        assert!(IndexStream::splice(vec![20], &ev).is_err());
        assert_eq!(ev.position_at_least(9), 4);
        assert_eq!(n.up_to(4), vec![1, 2, 3, 4]);
        assert!(ev.is_subsequence_of(&n, 20));
        assert!(!n.is_subsequence_of(&ev, 2));
        let sq = IndexStream::generated(|k, _| (k as u64 + 1).pow(2));
        assert_eq!(sq.take(4), vec![1, 4, 9, 16]);
        let flat = IndexStream::generated(|_, _| 3);
        assert_eq!(flat.take(3), vec![3, 4, 5]);
    }

    #[test]
    fn concurrent_queries_agree() {
        let s = IndexStream::naturals().without(&[3, 10, 11]);
        let reads: Vec<Vec<u64>> = std::thread::scope(|sc| {
            let hs: Vec<_> = (0..4).map(|_| sc.spawn(|| s.take(200))).collect();
            hs.into_iter().map(|h| h.join().unwrap()).collect()
        });
        assert!(reads.windows(2).all(|w| w[0] == w[1]));
    }

    #[test]
    fn json_forms() {
        let s: IndexStream = serde_json::from_str(r#"{"prefix":[1,4],"tail":{"start":6,"step":2}}"#).unwrap();
        assert_eq!(s.take(4), vec![1, 4, 6, 8]);
        assert_eq!(
            serde_json::to_string(&s).unwrap(),
            r#"{"prefix":[1,4],"tail":{"start":6,"step":2}}"#
        );
        let n: IndexStream = serde_json::from_str(r#"{"all_naturals":true}"#).unwrap();
        assert_eq!(serde_json::to_string(&n).unwrap(), r#"{"all_naturals":true}"#);
        assert!(serde_json::to_string(&n.without(&[1])).is_err());
    }

    #[test]
    fn seeded_random_is_deterministic() {
        let a = IndexStream::seeded_random(7, 10, 4).take(30);
        let b = IndexStream::seeded_random(7, 10, 4).take(30);
        assert_eq!(a, b);
        assert!(a.windows(2).all(|w| w[0] < w[1]));
    }
}
