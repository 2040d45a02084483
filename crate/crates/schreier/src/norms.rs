//! Exact `||.||_xi`, the `A_n[S_xi]` seminorms, the dual norm, and search-based
//! domination and spreading-model checks.
//!
//! The primal norm is a dynamic program over support positions. For a set anchored
//! at position `p` (so `min E = g_p`), successor levels pick a first piece and then at
//! most `g_p - 1` further pieces one level down; limit levels move to `xi[g_p] + 1`.
//! Segments that already belong to the family short-circuit to their full mass.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{domain, resource, Error, Result};
use crate::families::{self, Walker};
use crate::lp;
use crate::ordinal::Ordinal;
use crate::par;
use crate::set::FiniteSet;
use crate::vector::{RationalVector, Q};
use crate::Caps;

/// A norm value with the set that attains it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormCertificate {
    #[serde(serialize_with = "ser_q")]
    pub value: Q,
    pub witness: FiniteSet,
}

/// A dual norm value with the optimal primal point and the constraint sets carrying positive dual weight.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DualCertificate {
    #[serde(serialize_with = "ser_q")]
    pub value: Q,
    pub primal: RationalVector,
    pub tight: Vec<FiniteSet>,
    pub rounds: usize,
    pub pivots: usize,
}

pub(crate) fn ser_q<S: serde::Serializer>(v: &Q, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_str(v)
}

/// Common denominator scaling: `values[i] = ints[i] / denom`.
fn integer_weights(values: &[Q]) -> (Vec<BigInt>, BigInt) {
    let mut denom = BigInt::one();
    let mut seen: Vec<&BigInt> = Vec::new();
    for v in values {
        let d = v.denom();
        if !seen.contains(&d) {
            denom = denom.lcm(d);
            if seen.len() < 64 {
                seen.push(d);
            }
        }
    }
    let ints = values.iter().map(|v| v.numer() * (&denom / v.denom())).collect();
    (ints, denom)
}

fn verified(x: &RationalVector, xi: &Ordinal, value: Q, witness: FiniteSet) -> Result<NormCertificate> {
    if !families::is_member(&witness, xi) {
        return Err(Error::Certificate(format!("witness {witness} is not in S_{xi}")));
    }
    if x.mass_on(&witness) != value {
        return Err(Error::Certificate(format!("witness {witness} does not reproduce {value}")));
    }
    Ok(NormCertificate { value, witness })
}

/// `||x||_xi = max_{E ∈ S_xi} sum_{i∈E} |x_i|`, exact, with a norming set.
pub fn schreier_norm(x: &RationalVector, xi: &Ordinal, caps: &Caps) -> Result<NormCertificate> {
    if x.is_empty() {
        return Ok(NormCertificate { value: Q::zero(), witness: FiniteSet::empty() });
    }
    let supp = x.support();
    if families::is_member(&supp, xi) {
        return Ok(NormCertificate { value: x.l1(), witness: supp });
    }
    if xi.is_zero() {
        let (i, _) = x.entries().iter().max_by(|a, b| a.1.abs().cmp(&b.1.abs())).expect("nonempty");
        return verified(x, xi, x.linf(), FiniteSet::new(vec![*i]).expect("singleton"));
    }
    if *xi == Ordinal::finite(1) {
        let (value, witness) = first_level_norm(x);
        return verified(x, xi, value, witness);
    }
    if x.len() > caps.support {
        return Err(resource(format!("support {} exceeds cap {}", x.len(), caps.support)));
    }
    let mut dp = NormDp::new(x, caps.materialize);
    let top = dp.id(xi);
    let last = dp.len() - 1;
    let (best_p, best) = (0..dp.len())
        .map(|p| (p, dp.anchored(top, p, last)))
        .max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(&a.0)))
        .expect("nonempty");
    dp.finish()?;
    let mut picks = Vec::new();
    dp.anchored_witness(top, best_p, last, &mut picks);
    let value = Q::new(best, dp.denom.clone());
    verified(x, xi, value, dp.positions_to_set(&picks))
}

/// The `A_n[S_xi]` seminorm `max { sum_{i∈E} |x_i| : E a union of at most n successive S_xi sets }`.
pub fn an_seminorm(x: &RationalVector, xi: &Ordinal, n: u64, caps: &Caps) -> Result<NormCertificate> {
    if n == 0 {
        return Err(domain("n must be positive"));
    }
    if x.is_empty() {
        return Ok(NormCertificate { value: Q::zero(), witness: FiniteSet::empty() });
    }
    let supp = x.support();
    let checked = |value: Q, witness: FiniteSet| -> Result<NormCertificate> {
        if !families::is_member_an(&witness, xi, n) || x.mass_on(&witness) != value {
            return Err(Error::Certificate(format!("A_{n} witness {witness} failed re-evaluation")));
        }
        Ok(NormCertificate { value, witness })
    };
    if families::is_member_an(&supp, xi, n) {
        return Ok(NormCertificate { value: x.l1(), witness: supp });
    }
    if xi.is_zero() {
        let mut order: Vec<&(u64, Q)> = x.entries().iter().collect();
        order.sort_by(|a, b| b.1.abs().cmp(&a.1.abs()).then(a.0.cmp(&b.0)));
        let picked = FiniteSet::from_unsorted(order.iter().take(n as usize).map(|(i, _)| *i).collect())?;
        let value = x.mass_on(&picked);
        return checked(value, picked);
    }
    if x.len() > caps.support {
        return Err(resource(format!("support {} exceeds cap {}", x.len(), caps.support)));
    }
    let mut dp = NormDp::new(x, caps.materialize);
    let top = dp.id(xi);
    let last = dp.len() - 1;
    let best = dp.unions(top, 0, last, n as usize);
    dp.finish()?;
    let mut picks = Vec::new();
    dp.unions_witness(top, 0, last, n as usize, &mut picks);
    checked(Q::new(best, dp.denom.clone()), dp.positions_to_set(&picks))
}

/// `xi = 1`: for each candidate minimum `e`, take `|x_e|` plus the `e - 1` largest later entries.
fn first_level_norm(x: &RationalVector) -> (Q, FiniteSet) {
    let (anchors, ints, denom) = first_level_anchors(x);
    let (p, value) = anchors
        .iter()
        .enumerate()
        .rev()
        .max_by(|a, b| a.1.cmp(b.1))
        .map(|(p, v)| (p, v.clone()))
        .expect("nonempty vector");
    (Q::new(value, denom), first_level_witness(x, &ints, p))
}

/// Scaled best mass for every anchor position, the scaled weights, and the scale.
fn first_level_anchors(x: &RationalVector) -> (Vec<BigInt>, Vec<BigInt>, BigInt) {
    let values: Vec<Q> = x.entries().iter().map(|(_, v)| v.abs()).collect();
    let (ints, denom) = integer_weights(&values);
    let mut distinct: Vec<BigInt> = ints.clone();
    distinct.sort_unstable_by(|a, b| b.cmp(a));
    distinct.dedup();
    let rank: HashMap<&BigInt, usize> = distinct.iter().enumerate().map(|(r, v)| (v, r)).collect();
    let mut tree = TopK::new(distinct.clone());
    let mut anchors = vec![BigInt::zero(); ints.len()];
    for p in (0..ints.len()).rev() {
        let e = x.entries()[p].0;
        anchors[p] = &ints[p] + tree.top_sum(e.saturating_sub(1));
        tree.insert(rank[&ints[p]]);
    }
    (anchors, ints, denom)
}

fn first_level_witness(x: &RationalVector, ints: &[BigInt], p: usize) -> FiniteSet {
    let e = x.entries()[p].0;
    let mut later: Vec<usize> = (p + 1..ints.len()).collect();
    later.sort_by(|&a, &b| ints[b].cmp(&ints[a]).then(a.cmp(&b)));
    let mut chosen: Vec<u64> = later.into_iter().take(e.saturating_sub(1) as usize).map(|k| x.entries()[k].0).collect();
    chosen.push(e);
    FiniteSet::from_unsorted(chosen).expect("distinct indices")
}

/// Sets of `S_xi` carrying mass above 1, at most one per minimum and at most `limit`, heaviest first.
pub fn heavy_sets(x: &RationalVector, xi: &Ordinal, limit: usize, caps: &Caps) -> Result<Vec<FiniteSet>> {
    if x.is_empty() {
        return Ok(vec![]);
    }
    let supp = x.support();
    if families::is_member(&supp, xi) {
        return Ok(if x.l1() > Q::one() { vec![supp] } else { vec![] });
    }
    let pick = |anchors: &[BigInt], denom: &BigInt| -> Vec<usize> {
        let mut heavy: Vec<usize> = (0..anchors.len()).filter(|&p| anchors[p] > *denom).collect();
        heavy.sort_by(|&a, &b| anchors[b].cmp(&anchors[a]).then(a.cmp(&b)));
        heavy.truncate(limit);
        heavy
    };
    if xi.is_zero() {
        let (ints, denom) = integer_weights(&x.entries().iter().map(|(_, v)| v.abs()).collect::<Vec<_>>());
        return Ok(pick(&ints, &denom).into_iter().map(|p| FiniteSet::new(vec![x.entries()[p].0]).expect("index")).collect());
    }
    if *xi == Ordinal::finite(1) {
        let (anchors, ints, denom) = first_level_anchors(x);
        return Ok(pick(&anchors, &denom).into_iter().map(|p| first_level_witness(x, &ints, p)).collect());
    }
    if x.len() > caps.support {
        return Err(resource(format!("support {} exceeds cap {}", x.len(), caps.support)));
    }
    let mut dp = NormDp::new(x, caps.materialize);
    let top = dp.id(xi);
    let last = dp.len() - 1;
    let anchors: Vec<BigInt> = (0..dp.len()).map(|p| dp.anchored(top, p, last)).collect();
    dp.finish()?;
    let denom = dp.denom.clone();
    Ok(pick(&anchors, &denom)
        .into_iter()
        .map(|p| {
            let mut picks = Vec::new();
            dp.anchored_witness(top, p, last, &mut picks);
            dp.positions_to_set(&picks)
        })
        .collect())
}

/// Fenwick tree over value ranks (rank 0 is the largest value) answering "sum of the k largest".
struct TopK {
    values: Vec<BigInt>,
    count: Vec<u64>,
    sum: Vec<BigInt>,
    total: u64,
}

impl TopK {
    fn new(values: Vec<BigInt>) -> Self {
        let n = values.len();
        TopK { values, count: vec![0; n + 1], sum: vec![BigInt::zero(); n + 1], total: 0 }
    }

    fn insert(&mut self, rank: usize) {
        let v = self.values[rank].clone();
        let mut i = rank + 1;
        while i < self.count.len() {
            self.count[i] += 1;
            self.sum[i] += &v;
            i += i & i.wrapping_neg();
        }
        self.total += 1;
    }

    fn top_sum(&self, k: u64) -> BigInt {
        let k = k.min(self.total);
        let mut pos = 0;
        let mut taken = 0u64;
        let mut acc = BigInt::zero();
        let mut step = self.count.len().next_power_of_two();
        while step > 0 {
            let next = pos + step;
            if next < self.count.len() && taken + self.count[next] <= k {
                pos = next;
                taken += self.count[next];
                acc += &self.sum[next];
            }
            step >>= 1;
        }
        if taken < k {
            acc += &self.values[pos] * BigInt::from(k - taken);
        }
        acc
    }
}

type Id = usize;

/// Memoized dynamic program over support positions `0..len`.
struct NormDp {
    g: Vec<u64>,
    w: Vec<BigInt>,
    prefix: Vec<BigInt>,
    denom: BigInt,
    ords: Vec<Ordinal>,
    ids: HashMap<Ordinal, Id>,
    lower: HashMap<(Id, u64), Id>,
    reach: HashMap<(Id, usize), usize>,
    anchored: HashMap<(Id, usize, usize), BigInt>,
    unions: HashMap<(Id, usize, usize, usize), BigInt>,
    /// Work still allowed, counted in inner-loop steps; once spent every lookup returns 0 and
    /// `finish` reports it.
    work: u64,
    exhausted: bool,
}

impl NormDp {
    fn new(x: &RationalVector, work: u64) -> Self {
        let values: Vec<Q> = x.entries().iter().map(|(_, v)| v.abs()).collect();
        let (w, denom) = integer_weights(&values);
        let mut prefix = vec![BigInt::zero()];
        for v in &w {
            let next = prefix.last().expect("seeded") + v;
            prefix.push(next);
        }
        NormDp {
            g: x.entries().iter().map(|(i, _)| *i).collect(),
            w,
            prefix,
            denom,
            ords: Vec::new(),
            ids: HashMap::new(),
            lower: HashMap::new(),
            reach: HashMap::new(),
            anchored: HashMap::new(),
            unions: HashMap::new(),
            work,
            exhausted: false,
        }
    }

    fn spend(&mut self, steps: usize) -> bool {
        if self.work < steps as u64 {
            self.exhausted = true;
        }
        self.work = self.work.saturating_sub(steps as u64);
        !self.exhausted
    }

    fn finish(&self) -> Result<()> {
        if self.exhausted {
            return Err(resource(format!("norm evaluation on {} coordinates exceeded its work budget", self.len())));
        }
        Ok(())
    }

    fn len(&self) -> usize {
        self.g.len()
    }

    fn id(&mut self, o: &Ordinal) -> Id {
        if let Some(&i) = self.ids.get(o) {
            return i;
        }
        self.ords.push(o.clone());
        self.ids.insert(o.clone(), self.ords.len() - 1);
        self.ords.len() - 1
    }

    /// Predecessor for successors, `o[m] + 1` for limits.
    fn step_down(&mut self, o: Id, m: u64) -> Id {
        if let Some(&i) = self.lower.get(&(o, m)) {
            return i;
        }
        let ord = self.ords[o].clone();
        let next = match ord.pred() {
            Some(p) => p,
            None => ord.fundamental(m).expect("limit ordinal").succ(),
        };
        let i = self.id(&next);
        self.lower.insert((o, m), i);
        i
    }

    fn mass(&self, p: usize, q: usize) -> BigInt {
        &self.prefix[q + 1] - &self.prefix[p]
    }

    /// Longest initial segment of `g[p..]` inside the family.
    fn reach(&mut self, o: Id, p: usize) -> usize {
        if let Some(&r) = self.reach.get(&(o, p)) {
            return r;
        }
        let ord = self.ords[o].clone();
        let r = Walker::new(&self.g[..], self.g.len(), u64::MAX).block_len(p, &ord).expect("finite walk");
        self.reach.insert((o, p), r);
        r
    }

    /// Best mass of `E ∈ S_o` with `min E = g_p` and `E ⊆ g[p..=q]`.
    fn anchored(&mut self, o: Id, p: usize, q: usize) -> BigInt {
        if q + 1 - p <= self.reach(o, p) {
            return self.mass(p, q);
        }
        if self.ords[o].is_zero() {
            return self.w[p].clone();
        }
        if let Some(v) = self.anchored.get(&(o, p, q)) {
            return v.clone();
        }
        if !self.spend(q + 1 - p) {
            return BigInt::zero();
        }
        let v = stacker::maybe_grow(64 * 1024, 4 * 1024 * 1024, || {
            let down = self.step_down(o, self.g[p]);
            if self.ords[o].is_successor() {
                let extra = (self.g[p] - 1) as usize;
                (p..=q)
                    .map(|r| self.anchored(down, p, r) + self.unions(down, r + 1, q, extra))
                    .max()
                    .expect("p <= q")
            } else {
                self.anchored(down, p, q)
            }
        });
        self.anchored.insert((o, p, q), v.clone());
        v
    }

    /// Best mass of a union of at most `k` successive `S_o` sets inside `g[s..=q]`.
    fn unions(&mut self, o: Id, s: usize, q: usize, k: usize) -> BigInt {
        if s > q || k == 0 {
            return BigInt::zero();
        }
        let k = k.min(q + 1 - s);
        if k == q + 1 - s {
            return self.mass(s, q);
        }
        if let Some(v) = self.unions.get(&(o, s, q, k)) {
            return v.clone();
        }
        if !self.spend(q + 1 - s) {
            return BigInt::zero();
        }
        let v = stacker::maybe_grow(64 * 1024, 4 * 1024 * 1024, || {
            let skip = self.unions(o, s + 1, q, k);
            let take = (s..=q)
                .map(|r| self.anchored(o, s, r) + self.unions(o, r + 1, q, k - 1))
                .max()
                .expect("s <= q");
            skip.max(take)
        });
        self.unions.insert((o, s, q, k), v.clone());
        v
    }

    fn anchored_witness(&mut self, o: Id, p: usize, q: usize, out: &mut Vec<usize>) {
        if q + 1 - p <= self.reach(o, p) {
            out.extend(p..=q);
            return;
        }
        if self.ords[o].is_zero() {
            out.push(p);
            return;
        }
        let target = self.anchored(o, p, q);
        let down = self.step_down(o, self.g[p]);
        if !self.ords[o].is_successor() {
            return self.anchored_witness(down, p, q, out);
        }
        let extra = (self.g[p] - 1) as usize;
        for r in p..=q {
            if self.anchored(down, p, r) + self.unions(down, r + 1, q, extra) == target {
                self.anchored_witness(down, p, r, out);
                self.unions_witness(down, r + 1, q, extra, out);
                return;
            }
        }
        unreachable!("the maximum is attained");
    }

    fn unions_witness(&mut self, o: Id, s: usize, q: usize, k: usize, out: &mut Vec<usize>) {
        if s > q || k == 0 {
            return;
        }
        let k = k.min(q + 1 - s);
        if k == q + 1 - s {
            out.extend(s..=q);
            return;
        }
        let target = self.unions(o, s, q, k);
        for r in s..=q {
            if self.anchored(o, s, r) + self.unions(o, r + 1, q, k - 1) == target {
                self.anchored_witness(o, s, r, out);
                self.unions_witness(o, r + 1, q, k - 1, out);
                return;
            }
        }
        self.unions_witness(o, s + 1, q, k, out);
    }

    fn positions_to_set(&self, picks: &[usize]) -> FiniteSet {
        FiniteSet::from_unsorted(picks.iter().map(|&p| self.g[p]).collect()).expect("positive indices")
    }
}

const MAX_ROUNDS: usize = 20_000;
const PRICING_BATCH: usize = 64;

/// `sup { |x*(x)| : ||x||_xi <= 1 }` by an exact LP over the constraints
/// `sum_{i∈E} t_i <= 1`, `E ∈ S_xi`, generated lazily from norming sets of the current optimum.
pub fn dual_norm(xstar: &RationalVector, xi: &Ordinal, caps: &Caps) -> Result<DualCertificate> {
    if xstar.is_empty() {
        return Ok(DualCertificate { value: Q::zero(), primal: RationalVector::zero(), tight: vec![], rounds: 0, pivots: 0 });
    }
    let supp = xstar.support();
    if families::is_member(&supp, xi) {
        let (i, c) = xstar.entries().iter().max_by(|a, b| a.1.abs().cmp(&b.1.abs())).expect("nonempty");
        let sign = if c.is_negative() { -Q::one() } else { Q::one() };
        return Ok(DualCertificate {
            value: xstar.linf(),
            primal: RationalVector::from_entries(vec![(*i, sign)])?,
            tight: vec![supp],
            rounds: 0,
            pivots: 0,
        });
    }
    let norm_caps = Caps { support: caps.support.max(xstar.len()), ..*caps };
    if xstar.len() > caps.support {
        return Err(resource(format!("support {} exceeds cap {}", xstar.len(), caps.support)));
    }
    let index: Vec<u64> = supp.iter().collect();
    let c: Vec<Q> = xstar.entries().iter().map(|(_, v)| v.abs()).collect();
    let cover = lp::cover_by_columns(&c, MAX_ROUNDS, |t| {
        let point = RationalVector::from_entries(index.iter().copied().zip(t.iter().cloned()).collect())?;
        Ok(heavy_sets(&point, xi, PRICING_BATCH, &norm_caps)?
            .into_iter()
            .map(|e| e.iter().map(|i| index.binary_search(&i).expect("witness inside support")).collect())
            .collect())
    })?;
    let signed = RationalVector::from_entries(
        xstar
            .entries()
            .iter()
            .zip(&cover.packing)
            .map(|((i, v), t)| (*i, if v.is_negative() { -t.clone() } else { t.clone() }))
            .collect(),
    )?;
    let tight = cover
        .columns
        .iter()
        .map(|(e, _)| FiniteSet::from_unsorted(e.iter().map(|&k| index[k]).collect()).expect("positive indices"))
        .collect();
    Ok(DualCertificate { value: cover.value, primal: signed, tight, rounds: cover.rounds, pivots: cover.pivots })
}

/// Outcome of a search-based inequality check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchReport {
    /// Worst ratio found (largest for upper bounds, smallest for lower bounds).
    #[serde(serialize_with = "ser_q")]
    pub worst: Q,
    /// Coefficients (and index set, when relevant) realizing `worst`.
    pub witness_coefficients: Vec<String>,
    pub witness_set: FiniteSet,
    pub checked: usize,
    pub pass: bool,
}

/// Nonnegative coefficient vectors of length `len`: the full grid `{0,1/4,...,1}` when it has at most
/// `limit` points, otherwise `limit` seeded samples from it. The zero vector is skipped.
pub(crate) fn coefficient_grid(len: usize, limit: usize, seed: u64, allow_zero: bool) -> Vec<Vec<Q>> {
    let levels: Vec<Q> = if allow_zero { (0..=4).collect::<Vec<i64>>() } else { (1..=4).collect() }
        .into_iter()
        .map(|k| Q::new(BigInt::from(k), BigInt::from(4)))
        .collect();
    let total = (levels.len() as f64).powi(len as i32);
    let mut out = Vec::new();
    if total <= limit as f64 {
        let mut idx = vec![0usize; len];
        loop {
            let v: Vec<Q> = idx.iter().map(|&k| levels[k].clone()).collect();
            if v.iter().any(|c| !c.is_zero()) {
                out.push(v);
            }
            let mut pos = 0;
            while pos < len {
                idx[pos] += 1;
                if idx[pos] < levels.len() {
                    break;
                }
                idx[pos] = 0;
                pos += 1;
            }
            if pos == len {
                break;
            }
        }
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        while out.len() < limit {
            let v: Vec<Q> = (0..len).map(|_| levels[rng.gen_range(0..levels.len())].clone()).collect();
            if v.iter().any(|c| !c.is_zero()) {
                out.push(v);
            }
        }
    }
    out
}

pub(crate) fn combine(vectors: &[RationalVector], coeffs: &[Q]) -> RationalVector {
    let mut entries = Vec::new();
    for (v, a) in vectors.iter().zip(coeffs) {
        entries.extend(v.entries().iter().map(|(i, c)| (*i, c * a)));
    }
    RationalVector::from_entries(entries).expect("positive indices")
}

/// Searches for the worst `||sum a_i A_i||_{xi_a} / ||sum a_i B_i||_{xi_b}` over nonnegative
/// lattice coefficients; passes when it never exceeds `c`.
pub fn check_domination(
    a: &[RationalVector],
    b: &[RationalVector],
    c: &Q,
    xi_a: &Ordinal,
    xi_b: &Ordinal,
    limit: usize,
    seed: u64,
    caps: &Caps,
) -> Result<SearchReport> {
    if a.len() != b.len() {
        return Err(domain("domination check needs sequences of equal length"));
    }
    let grid = coefficient_grid(a.len(), limit, seed, true);
    let ratios = par::try_map(&grid, |coeffs| -> Result<Q> {
        let top = schreier_norm(&combine(a, coeffs), xi_a, caps)?.value;
        let bottom = schreier_norm(&combine(b, coeffs), xi_b, caps)?.value;
        if bottom.is_zero() {
            return Err(domain("denominator vector vanished"));
        }
        Ok(top / bottom)
    })?;
    let (k, worst) = ratios.iter().enumerate().max_by(|x, y| x.1.cmp(y.1)).expect("grid is nonempty");
    Ok(SearchReport {
        worst: worst.clone(),
        witness_coefficients: grid[k].iter().map(|q| q.to_string()).collect(),
        witness_set: FiniteSet::empty(),
        checked: grid.len(),
        pass: worst <= c,
    })
}

/// Lower `l_1^rho` estimate: for every nonempty `F ∈ S_rho` inside `[1, len X]` and lattice
/// coefficients, `||sum_{i∈F} a_i X_i||_xi >= C sum |a_i|`. Reports the smallest ratio.
pub fn ell1_sm_check(
    x: &[RationalVector],
    rho: &Ordinal,
    xi: &Ordinal,
    c: &Q,
    limit: usize,
    seed: u64,
    caps: &Caps,
) -> Result<SearchReport> {
    let family: Vec<FiniteSet> =
        families::enumerate_members(rho, x.len() as u64, caps.horizon)?.into_iter().filter(|f| !f.is_empty()).collect();
    let cases: Vec<(FiniteSet, Vec<Q>)> = family
        .iter()
        .flat_map(|f| coefficient_grid(f.len(), limit, seed, false).into_iter().map(move |a| (f.clone(), a)))
        .collect();
    let ratios = par::try_map(&cases, |(f, coeffs)| -> Result<Q> {
        let picked: Vec<RationalVector> = f.iter().map(|i| x[i as usize - 1].clone()).collect();
        let total: Q = coeffs.iter().sum();
        Ok(schreier_norm(&combine(&picked, coeffs), xi, caps)?.value / total)
    })?;
    let (k, worst) = ratios.iter().enumerate().min_by(|p, q| p.1.cmp(q.1)).expect("at least one singleton");
    Ok(SearchReport {
        worst: worst.clone(),
        witness_coefficients: cases[k].1.iter().map(|q| q.to_string()).collect(),
        witness_set: cases[k].0.clone(),
        checked: cases.len(),
        pass: worst >= c,
    })
}

/// Upper `c_0^rho` estimate: `||sum_{i∈F} X*_i||_{xi,*} <= C` for every nonempty `F ∈ S_rho`
/// inside `[1, len X*]`. Reports the largest dual norm found.
pub fn c0_sm_check(xstar: &[RationalVector], rho: &Ordinal, xi: &Ordinal, c: &Q, caps: &Caps) -> Result<SearchReport> {
    let family: Vec<FiniteSet> = families::enumerate_members(rho, xstar.len() as u64, caps.horizon)?
        .into_iter()
        .filter(|f| !f.is_empty())
        .collect();
    let values = par::try_map(&family, |f| -> Result<Q> {
        let sum = f.iter().fold(RationalVector::zero(), |acc, i| acc.add(&xstar[i as usize - 1]));
        Ok(dual_norm(&sum, xi, caps)?.value)
    })?;
    let (k, worst) = values.iter().enumerate().max_by(|p, q| p.1.cmp(q.1)).expect("at least one singleton");
    Ok(SearchReport {
        worst: worst.clone(),
        witness_coefficients: vec![],
        witness_set: family[k].clone(),
        checked: family.len(),
        pass: worst <= c,
    })
}

/// `(T_eps x*, R_eps x*)`: entries with `|c| > eps`, and the rest.
pub fn split_by_size(xstar: &RationalVector, eps: &Q) -> Result<(RationalVector, RationalVector)> {
    if eps.is_negative() {
        return Err(domain("eps must be nonnegative"));
    }
    let (big, small): (Vec<(u64, Q)>, Vec<(u64, Q)>) = xstar.entries().iter().cloned().partition(|(_, c)| c.abs() > *eps);
    Ok((RationalVector::from_entries(big)?, RationalVector::from_entries(small)?))
}

/// What [`strip_large_part`] did and the exact quantities it verified.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StripReport {
    pub l: u64,
    pub pieces: Vec<FiniteSet>,
    #[serde(serialize_with = "ser_q")]
    pub pairing: Q,
    #[serde(serialize_with = "ser_q")]
    pub beta_norm: Q,
    #[serde(serialize_with = "ser_q")]
    pub xi_norm: Q,
}

/// Threshold `l`: least `l > 1` with `S_{beta+1} ∩ [l, ∞) ⊆ S_xi` (certified to `horizon`) and `l - 1 > 1/eps`.
pub fn strip_threshold(beta: &Ordinal, xi: &Ordinal, eps: &Q, horizon: u64) -> Result<u64> {
    if beta >= xi {
        return Err(domain(format!("need beta < xi, got {beta} and {xi}")));
    }
    if !eps.is_positive() || *eps >= Q::one() {
        return Err(domain("eps must lie in (0, 1)"));
    }
    let tail = families::tail_bound_empirical(&beta.succ(), xi, horizon)
        .ok_or_else(|| resource(format!("no tail certificate for S_{} in S_{xi} up to {horizon}", beta.succ())))?;
    let by_eps: BigInt = (Q::one() / eps).floor().to_integer() + 2;
    let by_eps: u64 = by_eps.try_into().map_err(|_| domain("eps too small"))?;
    Ok(tail.max(by_eps).max(2))
}

/// Given a norm-one functional with small, late coefficients, produces `x` in the unit sphere of
/// `X_xi` with `x*(x) > 1 - eps` and `||x||_beta <= eps`, both verified exactly.
pub fn strip_large_part(
    xstar: &RationalVector,
    beta: &Ordinal,
    xi: &Ordinal,
    eps: &Q,
    caps: &Caps,
) -> Result<(RationalVector, StripReport)> {
    let l = strip_threshold(beta, xi, eps, caps.certificate)?;
    let dual = dual_norm(xstar, xi, caps)?;
    if dual.value != Q::one() {
        return Err(domain(format!("functional has dual norm {}, expected 1", dual.value)));
    }
    let bound = Q::new(BigInt::one(), BigInt::from(l));
    if xstar.linf() > bound {
        return Err(domain(format!("sup norm {} exceeds 1/l = {bound}", xstar.linf())));
    }
    if xstar.support().min_elem().is_some_and(|m| m < l) {
        return Err(domain(format!("support must start at l = {l} or later")));
    }
    let y = dual.primal;
    let mut remaining = y.clone();
    let mut pieces = Vec::with_capacity(l as usize);
    let big_caps = Caps { support: caps.support.max(y.len()), ..*caps };
    for _ in 0..l {
        let cert = schreier_norm(&remaining, beta, &big_caps)?;
        if cert.witness.is_empty() {
            break;
        }
        remaining = RationalVector::from_entries(
            remaining.entries().iter().filter(|(i, _)| !cert.witness.contains(*i)).cloned().collect(),
        )?;
        pieces.push(cert.witness);
    }
    let xi_norm = schreier_norm(&remaining, xi, &big_caps)?.value;
    if xi_norm.is_zero() {
        return Err(Error::Certificate("stripping removed the whole vector".into()));
    }
    let x = remaining.scale(&(Q::one() / &xi_norm));
    let pairing = xstar.dot(&x);
    let beta_norm = schreier_norm(&x, beta, &big_caps)?.value;
    if pairing <= Q::one() - eps || beta_norm > *eps {
        return Err(Error::Certificate(format!("stripped vector gives x*(x) = {pairing}, ||x||_beta = {beta_norm}")));
    }
    Ok((x, StripReport { l, pieces, pairing, beta_norm, xi_norm }))
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

    fn ones(lo: u64, hi: u64) -> RationalVector {
        RationalVector::indicator(&FiniteSet::interval(lo, hi))
    }

    fn caps() -> Caps {
        Caps::default()
    }

    /// Exhaustive maximum over every subset of the support.
    fn brute_norm(x: &RationalVector, xi: &Ordinal, n: Option<u64>) -> Q {
        let idx: Vec<u64> = x.support().iter().collect();
        (0u64..1 << idx.len())
            .map(|mask| {
                let e = FiniteSet::new(idx.iter().enumerate().filter(|(b, _)| mask >> b & 1 == 1).map(|(_, &i)| i).collect())
                    .unwrap();
                let ok = match n {
                    None => families::is_member(&e, xi),
                    Some(n) => families::is_member_an(&e, xi, n),
                };
                if ok {
                    x.mass_on(&e)
                } else {
                    Q::zero()
                }
            })
            .max()
            .unwrap()
    }

    #[test]
    fn norm_examples() {
        let c = schreier_norm(&ones(1, 3), &o("1"), &caps()).unwrap();
        assert_eq!(c.value, qi(2));
        assert_eq!(c.witness, FiniteSet::new(vec![2, 3]).unwrap());
        let c = schreier_norm(&ones(1, 7), &o("2"), &caps()).unwrap();
        assert_eq!(c.value, qi(6));
        assert_eq!(c.witness, FiniteSet::interval(2, 7));
        for xi in ["0", "1", "w", "w^2"] {
            assert_eq!(schreier_norm(&RationalVector::basis(9), &o(xi), &caps()).unwrap().value, qi(1));
        }
    }

    #[test]
    fn an_examples() {
        assert_eq!(an_seminorm(&ones(1, 7), &o("1"), 2, &caps()).unwrap().value, qi(6));
        assert_eq!(
            an_seminorm(&ones(1, 7), &o("1"), 1, &caps()).unwrap().value,
            schreier_norm(&ones(1, 7), &o("1"), &caps()).unwrap().value
        );
        assert_eq!(an_seminorm(&RationalVector::basis(1), &o("1"), 5, &caps()).unwrap().value, qi(1));
        assert_eq!(an_seminorm(&ones(1, 7), &o("0"), 3, &caps()).unwrap().value, qi(3));
    }

    #[test]
    fn dual_examples() {
        let d = dual_norm(&ones(1, 3), &o("1"), &caps()).unwrap();
        assert_eq!(d.value, qi(2));
        assert_eq!(d.primal.get(1), qi(1));
        assert_eq!(d.primal.get(2) + d.primal.get(3), qi(1));
        assert_eq!(dual_norm(&RationalVector::basis(4), &o("2"), &caps()).unwrap().value, qi(1));
        assert_eq!(dual_norm(&ones(2, 7), &o("2"), &caps()).unwrap().value, qi(1));
        assert_eq!(dual_norm(&ones(1, 4), &o("0"), &caps()).unwrap().value, qi(4));
    }

    #[test]
    fn duality_pairing_is_attained() {
        let xs = RationalVector::from_entries(vec![(1, q(1, 2)), (2, qi(-1)), (3, q(1, 3)), (5, q(2, 3)), (6, qi(1))])
            .unwrap();
        for xi in ["1", "2", "w"] {
            let d = dual_norm(&xs, &o(xi), &caps()).unwrap();
            let n = schreier_norm(&d.primal, &o(xi), &caps()).unwrap();
            assert!(n.value <= qi(1));
            assert_eq!(xs.dot(&d.primal), d.value);
        }
    }

    #[test]
    fn split_examples() {
        let xs = RationalVector::from_entries(vec![(1, q(1, 2)), (2, q(-1, 8)), (4, q(1, 3))]).unwrap();
        let (t, r) = split_by_size(&xs, &qi(0)).unwrap();
        assert_eq!((t, r), (xs.clone(), RationalVector::zero()));
        let (t, r) = split_by_size(&xs, &qi(1)).unwrap();
        assert_eq!((t, r), (RationalVector::zero(), xs.clone()));
        let (t, r) = split_by_size(&xs, &q(1, 4)).unwrap();
        assert_eq!(t.support(), FiniteSet::new(vec![1, 4]).unwrap());
        assert_eq!(r.support(), FiniteSet::new(vec![2]).unwrap());
        assert_eq!(t.add(&r), xs);
    }

    #[test]
    fn strip_examples() {
        let raw = ones(4, 64);
        let big = Caps { support: 64, ..caps() };
        let d = dual_norm(&raw, &o("1"), &big).unwrap().value;
        assert_eq!(d, q(129, 32));
        let xs = raw.scale(&(Q::one() / d));
        let (x, rep) = strip_large_part(&xs, &o("0"), &o("1"), &q(1, 2), &big).unwrap();
        assert_eq!(rep.l, 4);
        assert!(xs.dot(&x) > q(1, 2));
        assert!(schreier_norm(&x, &o("0"), &big).unwrap().value <= q(1, 2));
        assert_eq!(schreier_norm(&x, &o("1"), &big).unwrap().value, qi(1));
        assert!(matches!(strip_large_part(&RationalVector::basis(9), &o("0"), &o("1"), &q(1, 2), &big), Err(Error::Domain(_))));
    }

    #[test]
    fn domination_examples() {
        let basis = |idx: &[u64]| idx.iter().map(|&i| RationalVector::basis(i)).collect::<Vec<_>>();
        let a = basis(&[1, 2, 3, 4]);
        let r = check_domination(&a, &a, &qi(1), &o("1"), &o("1"), 700, 1, &caps()).unwrap();
        assert_eq!(r.worst, qi(1));
        let k = basis(&[1, 2, 4, 6]);
        let l = basis(&[2, 5, 7, 9]);
        let r = check_domination(&k, &l, &qi(1), &o("1"), &o("1"), 700, 1, &caps()).unwrap();
        assert!(r.pass && r.worst <= qi(1));
        let m = basis(&[3, 6, 8, 10]);
        let r = check_domination(&m, &l, &qi(2), &o("1"), &o("1"), 700, 1, &caps()).unwrap();
        assert!(r.pass, "worst {}", r.worst);
    }

    #[test]
    fn spreading_model_examples() {
        let basis: Vec<RationalVector> = (1..=6).map(RationalVector::basis).collect();
        let r = ell1_sm_check(&basis, &o("1"), &o("1"), &qi(1), 256, 3, &caps()).unwrap();
        assert!(r.pass && r.worst == qi(1));
        let r = c0_sm_check(&basis, &o("1"), &o("1"), &qi(1), &caps()).unwrap();
        assert!(r.pass && r.worst == qi(1));
    }

    fn small_vector() -> impl Strategy<Value = RationalVector> {
        prop::collection::btree_map(1u64..14, (-4i64..=4, 1i64..=3), 1..9).prop_map(|m| {
            RationalVector::from_entries(m.into_iter().map(|(i, (n, d))| (i, q(n, d))).collect()).unwrap()
        })
    }

    fn small_ordinal() -> impl Strategy<Value = Ordinal> {
        prop::sample::select(vec![o("0"), o("1"), o("2"), o("3"), o("w"), o("w+1"), o("w*2")])
    }

    #[test]
    fn work_budget_turns_into_resource_error() {
        let x = RationalVector::indicator(&FiniteSet::interval(1, 200));
        let tight = Caps { support: 200, materialize: 1000, ..Caps::default() };
        assert!(matches!(schreier_norm(&x, &o("3"), &tight), Err(Error::Resource(_))));
        let roomy = Caps { support: 200, ..Caps::default() };
        assert!(schreier_norm(&x, &o("3"), &roomy).is_ok());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(128))]

        #[test]
        fn dp_matches_exhaustive(x in small_vector(), xi in small_ordinal()) {
            let got = schreier_norm(&x, &xi, &caps()).unwrap();
            prop_assert_eq!(&got.value, &brute_norm(&x, &xi, None));
        }

        #[test]
        fn an_matches_exhaustive(x in small_vector(), xi in small_ordinal(), n in 1u64..4) {
            let got = an_seminorm(&x, &xi, n, &caps()).unwrap();
            prop_assert_eq!(&got.value, &brute_norm(&x, &xi, Some(n)));
        }

        #[test]
        fn sandwich_and_lattice(x in small_vector(), xi in small_ordinal()) {
            let n = schreier_norm(&x, &xi, &caps()).unwrap().value;
            prop_assert!(x.linf() <= n && n <= x.l1());
            prop_assert_eq!(&schreier_norm(&x.abs(), &xi, &caps()).unwrap().value, &n);
            let shrunk = RationalVector::from_entries(x.entries().iter().skip(1).cloned().collect()).unwrap();
            prop_assert!(schreier_norm(&shrunk, &xi, &caps()).unwrap().value <= n);
        }

        #[test]
        fn duality_inequality(x in small_vector(), y in small_vector(), xi in small_ordinal()) {
            let d = dual_norm(&y, &xi, &caps()).unwrap();
            let n = schreier_norm(&x, &xi, &caps()).unwrap();
            prop_assert!(y.dot(&x).abs() <= &d.value * &n.value);
            prop_assert_eq!(y.dot(&d.primal), d.value);
        }
    }
}
