//! Repeated averages `S^xi_{M,n}` and the constructions built from them: weak summing
//! bounds, tail thresholds, small `beta`-norm averages, and isometric `c_0` sequences.

use num_bigint::BigInt;
use num_traits::{One, Signed};
use serde::Serialize;

use crate::error::{domain, resource, Result};
use crate::families;
use crate::norms::{self, ser_q};
use crate::ordinal::Ordinal;
use crate::set::FiniteSet;
use crate::stream::IndexStream;
use crate::vector::{RationalVector, Q};
use crate::Caps;

/// Walks the nested averaging recursion; visits at most `budget` stream elements.
struct Averager<'a> {
    stream: &'a IndexStream,
    end: usize,
    budget: u64,
}

impl Averager<'_> {
    /// Pushes the coefficients of the level-`xi` average starting at position `pos`, scaled by
    /// `scale`, and returns its length. Positions at or past `end` are cut off; the coefficients
    /// of the positions before `end` are exact either way.
    fn block(&mut self, xi: &Ordinal, pos: usize, scale: &Q, out: &mut Vec<(u64, Q)>) -> Result<usize> {
        if pos >= self.end {
            return Ok(0);
        }
        let first = self.stream.get(pos);
        stacker::maybe_grow(64 * 1024, 4 * 1024 * 1024, || {
            if xi.is_zero() {
                if self.budget == 0 {
                    return Err(resource("average support exceeds the materialization cap"));
                }
                self.budget -= 1;
                out.push((first, scale.clone()));
                return Ok(1);
            }
            if let Some(lower) = xi.pred() {
                let part = scale / Q::from_integer(BigInt::from(first));
                let mut p = pos;
                for _ in 0..first {
                    if p >= self.end {
                        break;
                    }
                    p += self.block(&lower, p, &part, out)?;
                }
                return Ok(p - pos);
            }
            self.block(&xi.fundamental(first)?.succ(), pos, scale, out)
        })
    }
}

/// `S^xi_{M,n}` as a vector (`n >= 1`).
pub fn repeated_average(xi: &Ordinal, m: &IndexStream, n: usize, caps: &Caps) -> Result<RationalVector> {
    if n == 0 {
        return Err(domain("averages are indexed from 1"));
    }
    let spans = families::block_spans(m, xi, n, caps.materialize)?;
    let &(start, len) = spans.last().expect("streams are infinite");
    let mut out = Vec::with_capacity(len);
    Averager { stream: m, end: start + len, budget: caps.materialize }.block(xi, start, &Q::one(), &mut out)?;
    RationalVector::from_entries(out)
}

/// `sum_n S^xi_{M,n}` restricted to `[1, horizon]`, exact on every index it keeps.
pub fn average_sum_up_to(xi: &Ordinal, m: &IndexStream, horizon: u64, caps: &Caps) -> Result<RationalVector> {
    let end = m.position_at_least(horizon + 1);
    let mut walker = Averager { stream: m, end, budget: caps.materialize };
    let mut out = Vec::with_capacity(end);
    let mut pos = 0;
    while pos < end {
        pos += walker.block(xi, pos, &Q::one(), &mut out)?;
    }
    RationalVector::from_entries(out)
}

/// Largest value of `sum_{i∈F} (sum_n S^xi_{M,n})(i)` over nonempty `F ∈ S_xi` inside `M ∩ [1, horizon]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeakSumming {
    #[serde(serialize_with = "ser_q")]
    pub max: Q,
    pub witness: FiniteSet,
    pub horizon: u64,
}

pub fn verify_weak_summing(xi: &Ordinal, m: &IndexStream, horizon: u64, caps: &Caps) -> Result<WeakSumming> {
    if horizon > caps.horizon {
        return Err(resource(format!("horizon {horizon} exceeds cap {}", caps.horizon)));
    }
    let sum = average_sum_up_to(xi, m, horizon, caps)?;
    let wide = Caps { support: caps.support.max(horizon as usize), ..*caps };
    let cert = norms::schreier_norm(&sum, xi, &wide)?;
    Ok(WeakSumming { max: cert.value, witness: cert.witness, horizon })
}

fn check_eps(eps: &Q) -> Result<()> {
    if !eps.is_positive() || *eps >= Q::one() {
        return Err(domain("eps must lie in (0, 1)"));
    }
    Ok(())
}

/// `n(beta, xi, eps)`: for every `M` with `n <= M`, `||S^xi_{M,1}||_beta <= eps`.
///
/// Built from a tail certificate `S_beta ∩ [m, ∞) ⊆ S_zeta` (`zeta` the predecessor, or
/// `xi_l` for the first `l` with `beta < xi_l`), then `n >= max(m, l)` with `n > 6/eps`.
pub fn tail_threshold(beta: &Ordinal, xi: &Ordinal, eps: &Q, caps: &Caps) -> Result<u64> {
    if beta >= xi {
        return Err(domain(format!("need beta < xi, got {beta} and {xi}")));
    }
    check_eps(eps)?;
    let (target, l) = match xi.pred() {
        Some(zeta) => (zeta, 1),
        None => {
            let mut l = 1;
            while xi.fundamental(l)? <= *beta {
                l += 1;
            }
            (xi.fundamental(l)?, l)
        }
    };
    let m = families::tail_bound_empirical(beta, &target, caps.certificate)
        .ok_or_else(|| resource(format!("no tail certificate for S_{beta} in S_{target} up to {}", caps.certificate)))?;
    let by_eps: BigInt = (Q::from_integer(BigInt::from(6)) / eps).floor().to_integer() + 1;
    let by_eps: u64 = by_eps.try_into().map_err(|_| domain("eps too small"))?;
    Ok(m.max(l).max(by_eps))
}

/// `||S^xi_{M,1}||_beta` for each sample stream; `None` where the average is too large to materialize.
pub fn validate_tail(beta: &Ordinal, xi: &Ordinal, samples: &[IndexStream], caps: &Caps) -> Result<Vec<Option<Q>>> {
    samples
        .iter()
        .map(|m| match repeated_average(xi, m, 1, caps) {
            Ok(x) => {
                let wide = Caps { support: caps.support.max(x.len()), ..*caps };
                Ok(Some(norms::schreier_norm(&x, beta, &wide)?.value))
            }
            Err(crate::Error::Resource(_)) => Ok(None),
            Err(e) => Err(e),
        })
        .collect()
}

/// Least position `p >= from` with `accept(p)`, by galloping then bisection.
/// Exact when acceptance is monotone in `p`; the returned position is always accepted.
fn least_accepted_position(from: usize, mut accept: impl FnMut(usize) -> Result<bool>) -> Result<usize> {
    if accept(from)? {
        return Ok(from);
    }
    let mut bad = from;
    let mut step = 1usize;
    let good = loop {
        let probe = from + step;
        if accept(probe)? {
            break probe;
        }
        bad = probe;
        step = step.checked_mul(2).ok_or_else(|| resource("tail search overflowed"))?;
    };
    let (mut lo, mut hi) = (bad, good);
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if accept(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// `E ∈ MAX(S_xi) ∩ [M]` and `x = S^xi_{M',1}` with `supp x = E` and `||x||_beta < eps`, for the
/// least tail `M'` of `M` found by the search.
pub fn small_beta_vector(
    beta: &Ordinal,
    xi: &Ordinal,
    eps: &Q,
    m: &IndexStream,
    caps: &Caps,
) -> Result<(FiniteSet, RationalVector)> {
    let bound = tail_threshold(beta, xi, eps, caps)?;
    let limit = m.position_at_least(bound);
    let small = |p: usize| -> Result<bool> {
        let x = repeated_average(xi, &m.at_least(m.get(p)), 1, caps)?;
        let wide = Caps { support: caps.support.max(x.len()), ..*caps };
        Ok(norms::schreier_norm(&x, beta, &wide)?.value < *eps)
    };
    let p = least_accepted_position(0, |p| if p >= limit { Ok(true) } else { small(p) })?;
    let x = repeated_average(xi, &m.at_least(m.get(p)), 1, caps)?;
    let wide = Caps { support: caps.support.max(x.len()), ..*caps };
    let norm = norms::schreier_norm(&x, beta, &wide)?.value;
    if norm >= *eps {
        return Err(crate::Error::Certificate(format!("tail at {} gives ||x||_{beta} = {norm}", m.get(p))));
    }
    Ok((x.support(), x))
}

/// Output of [`isometric_c0_select`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IsometricSelection {
    /// `E_1 < E_2 < ...`, whose union is the chosen `M`.
    pub blocks: Vec<FiniteSet>,
    /// `min L_i` for every step.
    pub tail_minima: Vec<u64>,
    pub vectors: Vec<RationalVector>,
}

/// `|x|_n`: the `A_n[S_beta]` seminorm when `xi = beta + 1`, the `S_{xi_n + 1}` norm for limit `xi`.
pub(crate) fn selection_seminorm(x: &RationalVector, xi: &Ordinal, n: u64, caps: &Caps) -> Result<Q> {
    let wide = Caps { support: caps.support.max(x.len()), ..*caps };
    match xi.pred() {
        Some(beta) => Ok(norms::an_seminorm(x, &beta, n, &wide)?.value),
        None => Ok(norms::schreier_norm(x, &xi.fundamental(n)?.succ(), &wide)?.value),
    }
}

/// The recursive selection of `M ⊆ L` making `(S^xi_{M,n})_n` isometrically `c_0`, for `count` steps.
///
/// Each `L_i` is the least tail of `L_{i-1}` past `E_{i-1}` whose first average has
/// `|.|_{max E_k} < eta / 2^k` for every `k < i`, with `eta` the least coefficient used so far.
pub fn isometric_c0_select(xi: &Ordinal, l: &IndexStream, count: usize, caps: &Caps) -> Result<IsometricSelection> {
    if count as u64 > caps.horizon {
        return Err(resource(format!("count {count} exceeds cap {}", caps.horizon)));
    }
    if xi.is_zero() {
        let picked = l.take(count);
        return Ok(IsometricSelection {
            blocks: picked.iter().map(|&i| FiniteSet::new(vec![i]).expect("positive")).collect(),
            tail_minima: picked.clone(),
            vectors: picked.into_iter().map(RationalVector::basis).collect(),
        });
    }
    let mut current = l.clone();
    let mut out = IsometricSelection { blocks: vec![], tail_minima: vec![], vectors: vec![] };
    for i in 1..=count {
        if i > 1 {
            let eta = out.vectors.iter().flat_map(|v| v.entries().iter().map(|(_, c)| c.clone())).min().expect("earlier");
            let prev_max = out.blocks.last().expect("earlier").max_elem();
            let from = current.position_at_least(prev_max + 1);
            let maxima: Vec<u64> = out.blocks.iter().map(|b| b.max_elem()).collect();
            let admissible = |p: usize| -> Result<bool> {
                let x = repeated_average(xi, &current.at_least(current.get(p)), 1, caps)?;
                for (k, &n) in maxima.iter().enumerate() {
                    let bound = &eta / Q::from_integer(BigInt::one() << (k + 1));
                    if selection_seminorm(&x, xi, n, caps)? >= bound {
                        return Ok(false);
                    }
                }
                Ok(true)
            };
            let p = least_accepted_position(from, admissible)?;
            current = current.at_least(current.get(p));
        }
        let x = repeated_average(xi, &current, 1, caps)?;
        out.tail_minima.push(current.get(0));
        out.blocks.push(x.support());
        out.vectors.push(x);
    }
    Ok(out)
}

/// `||sum_{n∈A} x_n||_xi` for every nonempty `A ⊆ [1, len]`, keyed by `A`.
pub fn isometric_sums(vectors: &[RationalVector], xi: &Ordinal, caps: &Caps) -> Result<Vec<(FiniteSet, Q)>> {
    if vectors.len() > 20 {
        return Err(resource("at most 20 vectors"));
    }
    let subsets: Vec<u64> = (1u64..1 << vectors.len()).collect();
    crate::par::try_map(&subsets, |&mask| {
        let a = FiniteSet::from_mask(mask);
        let sum = a.iter().fold(RationalVector::zero(), |acc, k| acc.add(&vectors[k as usize - 1]));
        let wide = Caps { support: caps.support.max(sum.len()), ..*caps };
        Ok((a, norms::schreier_norm(&sum, xi, &wide)?.value))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ordinal::parse_ordinal;
    use crate::vector::{q, qi};
    use proptest::prelude::*;

    fn o(s: &str) -> Ordinal {
        parse_ordinal(s).unwrap()
    }

    fn caps() -> Caps {
        Caps::default()
    }

    fn v(entries: &[(u64, Q)]) -> RationalVector {
        RationalVector::from_entries(entries.to_vec()).unwrap()
    }

    /// Straight transcription of the definition: residual streams and nested averages.
    fn brute_average(xi: &Ordinal, m: &[u64], n: usize) -> Vec<(u64, Q)> {
        let mut rest = m.to_vec();
        for _ in 1..n {
            let used: Vec<u64> = brute_average(xi, &rest, 1).into_iter().map(|(i, _)| i).collect();
            rest.retain(|i| !used.contains(i));
        }
        if xi.is_zero() {
            return vec![(rest[0], qi(1))];
        }
        match xi.pred() {
            Some(lower) => {
                let k = rest[0] as usize;
                let mut acc: Vec<(u64, Q)> = Vec::new();
                for j in 1..=k {
                    acc.extend(brute_average(&lower, &rest, j).into_iter().map(|(i, c)| (i, c / qi(k as i64))));
                }
                acc
            }
            None => brute_average(&xi.fundamental(rest[0]).unwrap().succ(), &rest, 1),
        }
    }

    #[test]
    fn average_examples() {
        let nat = IndexStream::naturals();
        assert_eq!(repeated_average(&o("1"), &nat, 2, &caps()).unwrap(), v(&[(2, q(1, 2)), (3, q(1, 2))]));
        assert_eq!(repeated_average(&o("2"), &nat, 1, &caps()).unwrap(), RationalVector::basis(1));
        let expected = v(&[(2, q(1, 4)), (3, q(1, 4)), (4, q(1, 8)), (5, q(1, 8)), (6, q(1, 8)), (7, q(1, 8))]);
        assert_eq!(repeated_average(&o("2"), &nat, 2, &caps()).unwrap(), expected);
        assert!(repeated_average(&o("1"), &nat, 0, &caps()).is_err());
    }

    #[test]
    fn matches_definition() {
        let ground: Vec<u64> = (1..=2100).collect();
        let evens: Vec<u64> = (1..=600).map(|i| 2 * i).collect();
        // (xi, blocks of N that fit, blocks of 2N that fit)
        for (xi, on_nat, on_evens) in [("0", 4, 4), ("1", 4, 4), ("2", 3, 1), ("w", 2, 0), ("w+1", 1, 0)] {
            for n in 1..=on_nat {
                let got = repeated_average(&o(xi), &IndexStream::naturals(), n, &caps()).unwrap();
                assert_eq!(got, v(&brute_average(&o(xi), &ground, n)), "xi={xi} n={n}");
            }
            for n in 1..=on_evens {
                let got = repeated_average(&o(xi), &IndexStream::evens(), n, &caps()).unwrap();
                assert_eq!(got, v(&brute_average(&o(xi), &evens, n)), "evens xi={xi} n={n}");
            }
        }
    }

    #[test]
    fn support_is_partition_block() {
        let m = IndexStream::arithmetic(vec![1, 2, 3], 5, 2).unwrap();
        for (xi, count) in [("1", 5), ("2", 2), ("w", 1)] {
            let blocks = families::maximal_partition(&m, &o(xi), count, caps().materialize).unwrap();
            for (n, b) in blocks.iter().enumerate() {
                let x = repeated_average(&o(xi), &m, n + 1, &caps()).unwrap();
                assert_eq!(&x.support(), b);
                assert_eq!(x.sum(), qi(1));
                assert!(x.entries().iter().all(|(_, c)| c.is_positive()));
            }
        }
        assert!(matches!(repeated_average(&o("2"), &m, 4, &caps()), Err(crate::Error::Resource(_))));
    }

    #[test]
    fn permanence_and_successor_decomposition() {
        // equal supports give equal averages: the n-th block of N, restarted at that block
        let nat = IndexStream::naturals();
        for xi in ["1", "2", "w"] {
            let second = repeated_average(&o(xi), &nat, 2, &caps()).unwrap();
            let restart = nat.at_least(second.support().min_elem().unwrap());
            assert_eq!(repeated_average(&o(xi), &restart, 1, &caps()).unwrap(), second);
        }
        // S^{xi+1}_{M,n} = (1/min E_n) sum over the matching run of level-xi averages
        let m = IndexStream::naturals();
        let lower = o("1");
        let upper = o("2");
        let mut offset = 0;
        for n in 1..=3 {
            let big = repeated_average(&upper, &m, n, &caps()).unwrap();
            let k = big.support().min_elem().unwrap();
            let parts = (offset + 1..=offset + k as usize)
                .map(|j| repeated_average(&lower, &m, j, &caps()).unwrap())
                .fold(RationalVector::zero(), |acc, x| acc.add(&x));
            assert_eq!(parts.scale(&q(1, k as i64)), big);
            offset += k as usize;
        }
    }

    #[test]
    fn weak_summing_examples() {
        let nat = IndexStream::naturals();
        let r = verify_weak_summing(&o("1"), &nat, 31, &caps()).unwrap();
        assert_eq!(r.max, qi(1));
        assert_eq!(verify_weak_summing(&o("0"), &IndexStream::evens(), 20, &caps()).unwrap().max, qi(1));
        let r = verify_weak_summing(&o("2"), &nat, 40, &caps()).unwrap();
        assert!(r.max <= qi(6) && r.max >= qi(1));
        assert!(verify_weak_summing(&o("1"), &nat, 65, &caps()).is_err());
    }

    #[test]
    fn tail_examples() {
        assert_eq!(tail_threshold(&o("0"), &o("1"), &q(1, 2), &caps()).unwrap(), 13);
        let n = tail_threshold(&o("1"), &o("2"), &q(1, 4), &caps()).unwrap();
        assert_eq!(n, 25);
        assert!(tail_threshold(&o("0"), &o("1"), &qi(1), &caps()).is_err());
        assert!(tail_threshold(&o("2"), &o("2"), &q(1, 2), &caps()).is_err());
        assert!(tail_threshold(&o("2"), &o("w"), &q(1, 2), &caps()).unwrap() >= 13);
        let samples = [IndexStream::from(13), IndexStream::from(20), IndexStream::arithmetic(vec![], 13, 3).unwrap()];
        for value in validate_tail(&o("0"), &o("1"), &samples, &caps()).unwrap() {
            assert!(value.unwrap() <= q(1, 2));
        }
        let big = validate_tail(&o("1"), &o("2"), &[IndexStream::from(n)], &caps()).unwrap();
        assert_eq!(big, vec![None]);
    }

    #[test]
    fn small_beta_examples() {
        let (e, x) = small_beta_vector(&o("0"), &o("1"), &q(1, 8), &IndexStream::naturals(), &caps()).unwrap();
        assert_eq!(e, FiniteSet::interval(9, 17));
        assert_eq!(x.linf(), q(1, 9));
        let (e, x) = small_beta_vector(&o("1"), &o("2"), &q(1, 2), &IndexStream::naturals(), &caps()).unwrap();
        assert_eq!(e, FiniteSet::interval(3, 23));
        assert!(families::is_maximal(&e, &o("2")).unwrap());
        assert_eq!(x.sum(), qi(1));
        assert!(small_beta_vector(&o("1"), &o("1"), &q(1, 2), &IndexStream::naturals(), &caps()).is_err());
    }

    #[test]
    fn isometric_first_level() {
        let sel = isometric_c0_select(&o("1"), &IndexStream::naturals(), 4, &caps()).unwrap();
        assert_eq!(sel.tail_minima, vec![1, 3, 61, 59049]);
        for (_, value) in isometric_sums(&sel.vectors, &o("1"), &caps()).unwrap() {
            assert_eq!(value, qi(1));
        }
        let sel = isometric_c0_select(&o("0"), &IndexStream::evens(), 3, &caps()).unwrap();
        assert_eq!(sel.vectors, vec![RationalVector::basis(2), RationalVector::basis(4), RationalVector::basis(6)]);
        assert!(isometric_c0_select(&o("2"), &IndexStream::naturals(), 3, &caps()).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn averages_are_probability_vectors(seed in 0u64..1000, n in 1usize..4, which in 0usize..3) {
            let xi = [o("1"), o("2"), o("w")][which].clone();
            let m = IndexStream::seeded_random(seed, 32, 4);
            let small = Caps { materialize: 1 << 16, ..caps() };
            let (x, lower) = match (repeated_average(&xi, &m, n, &small), repeated_average(&xi, &m, n + 1, &small)) {
                (Ok(x), Ok(y)) => (x, y),
                _ => return Ok(()),
            };
            prop_assert_eq!(x.sum(), qi(1));
            prop_assert!(families::is_maximal(&x.support(), &xi).unwrap());
            prop_assert!(x.support().precedes(&lower.support()));
        }

        #[test]
        fn weak_summing_bound(seed in 0u64..1000, which in 0usize..3) {
            let xi = [o("1"), o("2"), o("w")][which].clone();
            let m = IndexStream::seeded_random(seed, 8, 3);
            let r = verify_weak_summing(&xi, &m, 24, &caps()).unwrap();
            prop_assert!(r.max <= qi(6));
        }
    }
}
