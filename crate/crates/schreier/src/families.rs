//! Membership, maximality, partitions and `tau` for `S_xi`, `A_n[S_xi]` and the
//! modified families, plus the selection procedures relating families of different order.
//!
//! Every answer depends on the fundamental sequences of [`crate::ordinal`].
//!
//! The workhorse is [`Walker::block_len`]: the length of the maximal initial
//! `S_xi` segment of a sequence. Successor levels strip greedy blocks one level
//! down; limit levels defer to `xi[min] + 1`.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use crate::error::{domain, resource, Result};
use crate::ordinal::Ordinal;
use crate::par;
use crate::set::FiniteSet;
use crate::stream::IndexStream;

/// Positional access to an increasing sequence; `None` past the end.
pub trait Sequence {
    fn at(&self, i: usize) -> Option<u64>;
}

impl Sequence for [u64] {
    fn at(&self, i: usize) -> Option<u64> {
        self.get(i).copied()
    }
}

impl Sequence for IndexStream {
    fn at(&self, i: usize) -> Option<u64> {
        Some(self.get(i))
    }
}

/// Greedy block walker over positions `< end` of a sequence.
pub struct Walker<'a, S: Sequence + ?Sized> {
    seq: &'a S,
    end: usize,
    budget: u64,
}

impl<'a, S: Sequence + ?Sized> Walker<'a, S> {
    /// `budget` bounds the number of elements visited.
    pub fn new(seq: &'a S, end: usize, budget: u64) -> Self {
        Walker { seq, end, budget }
    }

    fn avail(&self, i: usize) -> Option<u64> {
        if i >= self.end {
            None
        } else {
            self.seq.at(i)
        }
    }

    /// Length of the maximal initial `S_xi` segment starting at position `start`.
    pub fn block_len(&mut self, start: usize, xi: &Ordinal) -> Result<usize> {
        let Some(first) = self.avail(start) else {
            return Ok(0);
        };
        stacker::maybe_grow(64 * 1024, 4 * 1024 * 1024, || self.block_from(start, first, xi))
    }

    fn block_from(&mut self, start: usize, first: u64, xi: &Ordinal) -> Result<usize> {
        if xi.is_zero() {
            if self.budget == 0 {
                return Err(resource("stream walk exceeded its element budget"));
            }
            self.budget -= 1;
            return Ok(1);
        }
        if is_first_level(xi) {
            // `S_1`: the next `first` positions, or as many as remain
            let want = usize::try_from(first).unwrap_or(usize::MAX).min(self.end.saturating_sub(start));
            if want > 0 && self.avail(start + want - 1).is_some() {
                if self.budget < want as u64 {
                    return Err(resource("stream walk exceeded its element budget"));
                }
                self.budget -= want as u64;
                return Ok(want);
            }
        }
        if let Some(rest) = self.short_tail(start, first, xi)? {
            return Ok(rest);
        }
        if let Some(lower) = xi.pred() {
            let mut pos = start;
            for _ in 0..first {
                if self.avail(pos).is_none() {
                    break;
                }
                pos += self.block_len(pos, &lower)?;
            }
            return Ok(pos - start);
        }
        let next = xi.fundamental(first)?.succ();
        self.block_from(start, first, &next)
    }

    /// The whole remaining tail when it provably lies in `S_xi`, `xi` infinite.
    ///
    /// `S_1 ⊆ S_xi` for `xi >= 1`, and for infinite `xi` every set in `S_{m+1}` with minimum at least
    /// `m` is in `S_xi` (induction on `xi`; limits use `xi[m'] >= m'`). Without this the descent
    /// `xi, xi[m], xi[m][m], ...` at a fixed anchor can take astronomically many steps.
    fn short_tail(&mut self, start: usize, first: u64, xi: &Ordinal) -> Result<Option<usize>> {
        const SHORT: usize = 64;
        if xi.as_finite().is_some() || self.end.saturating_sub(start) > SHORT {
            return Ok(None);
        }
        let rest = self.end - start;
        if self.avail(start + rest - 1).is_none() {
            return Ok(None);
        }
        let fits = rest as u64 <= first
            || Walker::new(self.seq, self.end, u64::MAX).block_len(start, &Ordinal::finite(first + 1))? == rest;
        if !fits {
            return Ok(None);
        }
        if self.budget < rest as u64 {
            return Err(resource("stream walk exceeded its element budget"));
        }
        self.budget -= rest as u64;
        Ok(Some(rest))
    }

    /// Consecutive greedy blocks as `(start, len)` until `count` blocks or the end.
    pub fn spans(&mut self, start: usize, xi: &Ordinal, count: usize) -> Result<Vec<(usize, usize)>> {
        let mut out = Vec::new();
        let mut pos = start;
        while out.len() < count {
            let len = self.block_len(pos, xi)?;
            if len == 0 {
                break;
            }
            out.push((pos, len));
            pos += len;
        }
        Ok(out)
    }
}

fn is_first_level(xi: &Ordinal) -> bool {
    xi.as_finite() == Some(1)
}

fn finite_walker(e: &[u64]) -> Walker<'_, [u64]> {
    Walker::new(e, e.len(), u64::MAX)
}

/// `E ∈ S_xi`.
pub fn is_member(e: &FiniteSet, xi: &Ordinal) -> bool {
    let s = e.as_slice();
    finite_walker(s).block_len(0, xi).expect("finite walks cannot exhaust their budget") == s.len()
}

/// Greedy decomposition of `A` into successive maximal initial `S_xi` segments.
pub fn greedy_blocks(a: &FiniteSet, xi: &Ordinal) -> Vec<FiniteSet> {
    let s = a.as_slice();
    let spans = finite_walker(s).spans(0, xi, usize::MAX).expect("finite walk");
    spans.into_iter().map(|(p, l)| FiniteSet::new(s[p..p + l].to_vec()).expect("subslice")).collect()
}

/// `tau_xi(A)`: number of greedy blocks.
pub fn tau(a: &FiniteSet, xi: &Ordinal) -> usize {
    tau_of_sequence(a.as_slice(), a.len(), xi)
}

/// `tau_xi` of the first `len` terms of an increasing sequence, for sets too large to list.
pub fn tau_of_sequence<S: Sequence + ?Sized>(seq: &S, len: usize, xi: &Ordinal) -> usize {
    let mut walker = Walker::new(seq, len, u64::MAX);
    let mut pos = 0;
    let mut count = 0;
    while pos < len {
        let step = walker.block_len(pos, xi).expect("unbounded budget");
        if step == 0 {
            break;
        }
        pos += step;
        count += 1;
    }
    count
}

/// `E ∈ A_n[S_xi]`.
pub fn is_member_an(e: &FiniteSet, xi: &Ordinal, n: u64) -> bool {
    tau(e, xi) as u64 <= n
}

/// `E ∈ MAX(S_xi)`, tested by the single extension `E ⌢ (max E + 1)`.
pub fn is_maximal(e: &FiniteSet, xi: &Ordinal) -> Result<bool> {
    if !is_member(e, xi) {
        return Err(domain(format!("{e} is not in S_{xi}")));
    }
    if e.is_empty() {
        return Ok(false);
    }
    Ok(!is_member(&e.push(e.max_elem() + 1)?, xi))
}

/// `(start, len)` positions of the first `count` maximal blocks of `M`.
pub fn block_spans(m: &IndexStream, xi: &Ordinal, count: usize, budget: u64) -> Result<Vec<(usize, usize)>> {
    Walker::new(m, usize::MAX, budget).spans(0, xi, count)
}

/// The first `count` blocks of the unique partition of `M` into successive maximal `S_xi` sets.
pub fn maximal_partition(m: &IndexStream, xi: &Ordinal, count: usize, budget: u64) -> Result<Vec<FiniteSet>> {
    let spans = block_spans(m, xi, count, budget)?;
    Ok(spans
        .into_iter()
        .map(|(p, l)| FiniteSet::new((p..p + l).map(|k| m.get(k)).collect()).expect("stream is increasing"))
        .collect())
}

/// Membership straight from the recursive definition: ordered partitions are
/// searched exhaustively (by dynamic programming over cut points), never greedily.
struct Definitional<'a> {
    a: &'a [u64],
    memo: HashMap<(Ordinal, usize, usize), bool>,
}

impl Definitional<'_> {
    /// `a[i..j] ∈ S_xi` for `i < j`.
    fn member(&mut self, xi: &Ordinal, i: usize, j: usize) -> bool {
        if let Some(&v) = self.memo.get(&(xi.clone(), i, j)) {
            return v;
        }
        let v = if xi.is_zero() {
            j - i <= 1
        } else if let Some(lower) = xi.pred() {
            self.pieces(&lower, i, j) as u64 <= self.a[i]
        } else {
            let next = xi.fundamental(self.a[i]).expect("limit").succ();
            self.member(&next, i, j)
        };
        self.memo.insert((xi.clone(), i, j), v);
        v
    }

    /// Fewest successive `S_xi` pieces covering `a[i..j]`.
    fn pieces(&mut self, xi: &Ordinal, i: usize, j: usize) -> usize {
        let mut best = vec![usize::MAX; j - i + 1];
        best[j - i] = 0;
        for s in (i..j).rev() {
            for r in s + 1..=j {
                if best[r - i] != usize::MAX && self.member(xi, s, r) {
                    best[s - i] = best[s - i].min(1 + best[r - i]);
                }
            }
        }
        best[0]
    }
}

/// The least `k` with `A` a union of `k` successive `S_xi` sets, by exhaustive search.
pub fn tau_oracle(a: &FiniteSet, xi: &Ordinal) -> usize {
    let s = a.as_slice();
    Definitional { a: s, memo: HashMap::new() }.pieces(xi, 0, s.len())
}

/// Membership in the modified families over a fixed ground set `[1, ground]`,
/// by subset dynamic programming over disjoint pieces.
pub struct ModifiedOracle {
    ground: u32,
    tables: Mutex<HashMap<(Ordinal, u32), Arc<Vec<bool>>>>,
}

impl ModifiedOracle {
    pub fn new(ground: u32) -> Result<Self> {
        if ground > 20 {
            return Err(resource(format!("modified-family oracle limited to ground sets of 20, got {ground}")));
        }
        Ok(ModifiedOracle { ground, tables: Mutex::new(HashMap::new()) })
    }

    /// `E ∈ S^M_xi` for `E ⊆ [1, ground]`.
    pub fn contains(&self, e: &FiniteSet, xi: &Ordinal) -> Result<bool> {
        if e.max_elem() > self.ground as u64 {
            return Err(resource(format!("{e} exceeds the oracle ground set [1,{}]", self.ground)));
        }
        let mask = e.iter().fold(0usize, |m, v| m | 1 << (v - 1));
        Ok(self.table(xi, 1)[mask])
    }

    /// Indicator of `S^M_xi` over all subsets of `[1, ground]`, indexed by bitmask (bit `i` is `i + 1`).
    pub fn full_table(&self, xi: &Ordinal) -> Arc<Vec<bool>> {
        self.table(xi, 1)
    }

    /// Table over subsets of `[lo, ground]`; bit `i` of a local mask is element `lo + i`.
    fn table(&self, xi: &Ordinal, lo: u32) -> Arc<Vec<bool>> {
        let key = (xi.clone(), lo);
        if let Some(t) = self.tables.lock().expect("oracle lock").get(&key) {
            return t.clone();
        }
        let t = Arc::new(stacker::maybe_grow(64 * 1024, 4 * 1024 * 1024, || self.compute(xi, lo)));
        self.tables.lock().expect("oracle lock").insert(key, t.clone());
        t
    }

    fn compute(&self, xi: &Ordinal, lo: u32) -> Vec<bool> {
        let width = self.ground + 1 - lo.min(self.ground + 1);
        let size = 1usize << width;
        let min_of = |mask: usize| lo as u64 + mask.trailing_zeros() as u64;
        if xi.is_zero() {
            return (0..size).map(|m| m.count_ones() <= 1).collect();
        }
        if let Some(lower) = xi.pred() {
            let base = self.table(&lower, lo);
            let mut pieces = vec![u32::MAX; size];
            pieces[0] = 0;
            for mask in 1..size {
                let low = mask & mask.wrapping_neg();
                let rest = mask ^ low;
                // submasks of `mask` that contain its lowest element
                let mut sub = rest;
                loop {
                    let piece = sub | low;
                    let left = pieces[mask ^ piece];
                    if base[piece] && left != u32::MAX {
                        pieces[mask] = pieces[mask].min(left + 1);
                    }
                    if sub == 0 {
                        break;
                    }
                    sub = (sub - 1) & rest;
                }
            }
            return (0..size).map(|m| m == 0 || pieces[m] as u64 <= min_of(m)).collect();
        }
        let mut out = vec![false; size];
        out[0] = true;
        for n in 1..=self.ground {
            let next = xi.fundamental(n as u64).expect("limit").succ();
            let sub_lo = lo.max(n);
            let shift = sub_lo - lo;
            let t = self.table(&next, sub_lo);
            for (mask, slot) in out.iter_mut().enumerate().skip(1) {
                if !*slot && min_of(mask) >= n as u64 {
                    *slot = t[mask >> shift];
                }
            }
        }
        out
    }
}

/// `E ∈ S^M_xi`, for `max E` at most `cap`.
pub fn is_member_modified(e: &FiniteSet, xi: &Ordinal, cap: usize) -> Result<bool> {
    if e.max_elem() > cap as u64 {
        return Err(resource(format!("{e} exceeds the brute-force cap {cap}")));
    }
    ModifiedOracle::new(e.max_elem().max(1) as u32)?.contains(e, xi)
}

fn check_horizon(n: u64, cap: u64) -> Result<()> {
    if n > cap {
        return Err(resource(format!("horizon {n} exceeds cap {cap}")));
    }
    Ok(())
}

fn extend_members(e: &FiniteSet, xi: &Ordinal, n: u64, out: &mut Vec<FiniteSet>) {
    out.push(e.clone());
    for v in e.max_elem() + 1..=n {
        let next = e.push(v).expect("v exceeds max");
        if is_member(&next, xi) {
            extend_members(&next, xi, n, out);
        }
    }
}

/// All members of `S_xi` inside `[1, n]`, sorted.
pub fn enumerate_members(xi: &Ordinal, n: u64, cap: u64) -> Result<Vec<FiniteSet>> {
    check_horizon(n, cap)?;
    let firsts: Vec<u64> = (1..=n).collect();
    let mut all: Vec<FiniteSet> = par::map(&firsts, |&m| {
        let mut out = Vec::new();
        extend_members(&FiniteSet::new(vec![m]).expect("singleton"), xi, n, &mut out);
        out
    })
    .into_iter()
    .flatten()
    .collect();
    all.push(FiniteSet::empty());
    all.sort();
    Ok(all)
}

/// All maximal members of `S_xi` inside `[1, n]`, sorted.
pub fn enumerate_maximal(xi: &Ordinal, n: u64, cap: u64) -> Result<Vec<FiniteSet>> {
    let all = enumerate_members(xi, n, cap)?;
    let flags = par::map(&all, |e| is_maximal(e, xi).expect("enumerated sets are members"));
    Ok(all.into_iter().zip(flags).filter_map(|(e, f)| f.then_some(e)).collect())
}

/// Whether some `E ∈ S_beta \ S_xi` with `min E = m` lies in `[m, n]`.
fn has_escape(m: u64, beta: &Ordinal, xi: &Ordinal, n: u64) -> bool {
    let mut stack = vec![FiniteSet::new(vec![m]).expect("singleton")];
    while let Some(e) = stack.pop() {
        if !is_member(&e, xi) {
            return true;
        }
        for v in e.max_elem() + 1..=n {
            let next = e.push(v).expect("v exceeds max");
            if is_member(&next, beta) {
                stack.push(next);
            }
        }
    }
    false
}

/// Least `m <= n` with `S_beta ∩ [m, n] ⊆ S_xi`, or `None` when no such `m` exists at this horizon.
/// This certifies the inclusion only up to `n`.
pub fn tail_bound_empirical(beta: &Ordinal, xi: &Ordinal, n: u64) -> Option<u64> {
    if beta == xi {
        return Some(1);
    }
    let mins: Vec<u64> = (1..=n).collect();
    let escapes = par::map(&mins, |&m| has_escape(m, beta, xi, n));
    let worst = mins.iter().zip(&escapes).filter(|(_, &bad)| bad).map(|(&m, _)| m).max();
    match worst {
        None => Some(1),
        Some(m) if m < n => Some(m + 1),
        Some(_) => None,
    }
}

/// `L(j)` = least element of `base` that is `>= j * n` and above `L(j - 1)`.
fn thin(base: &IndexStream, n: u64) -> IndexStream {
    let base = base.clone();
    IndexStream::generated(move |j, prev| {
        let floor = ((j as u64 + 1) * n).max(prev.last().map_or(1, |&l| l + 1));
        base.get(base.position_at_least(floor))
    })
}

/// Least element of `k` above `after` accepted by `ok`; gives up after `tries` candidates.
fn least_accepted(
    k: &IndexStream,
    after: u64,
    tries: usize,
    mut ok: impl FnMut(u64) -> Result<bool>,
) -> Result<u64> {
    let mut pos = k.position_at_least(after + 1);
    for _ in 0..tries {
        let c = k.get(pos);
        if ok(c)? {
            return Ok(c);
        }
        pos += 1;
    }
    Err(resource(format!("no admissible element found within {tries} candidates after {after}")))
}

const SEARCH_TRIES: usize = 256;

/// Checks the hypotheses `E_1 < E_2 < ...`, `i <= E_i` and `E_i ∈ A_n[S_gamma]` on a finite prefix.
pub fn check_union_preconditions(blocks: &[FiniteSet], gamma: &Ordinal, n: u64) -> Result<()> {
    for (i, e) in blocks.iter().enumerate() {
        if e.min_elem().is_some_and(|m| m < i as u64 + 1) {
            return Err(domain(format!("block {} = {e} starts below {}", i + 1, i + 1)));
        }
        if !is_member_an(e, gamma, n) {
            return Err(domain(format!("block {} = {e} is not in A_{n}[S_{gamma}]", i + 1)));
        }
        if i > 0 && !blocks[i - 1].precedes(e) {
            return Err(domain(format!("blocks {} and {} are not successive", i, i + 1)));
        }
    }
    Ok(())
}

/// An `L ∈ [K]` such that unions `∪_{j∈F} E_{L(j)}` over `F ∈ S_rho` land in `S_{gamma+rho}`,
/// for any successive `E_i ∈ A_n[S_gamma]` with `i <= E_i`.
///
/// Limit stages follow the diagonal `L(i) = L_i(i)`, materialized for `depth` positions;
/// the tail inclusions they rely on are certified by enumeration up to `horizon`.
pub fn select_union_stream(
    gamma: &Ordinal,
    rho: &Ordinal,
    k: &IndexStream,
    n: u64,
    depth: usize,
    horizon: u64,
) -> Result<IndexStream> {
    if rho.is_zero() {
        return Err(domain("the union selection needs rho >= 1"));
    }
    if n == 0 {
        return Err(domain("n must be positive"));
    }
    if *rho == Ordinal::finite(1) {
        return Ok(thin(k, n));
    }
    if let Some(lower) = rho.pred() {
        return select_union_stream(gamma, &lower, k, n, depth, horizon);
    }
    let target = gamma.add(rho);
    let mut l0 = Vec::with_capacity(depth);
    for i in 1..=depth as u64 {
        let need = gamma.add(&rho.fundamental(i)?).succ();
        let after = l0.last().copied().unwrap_or(0);
        let c = least_accepted(k, after, SEARCH_TRIES, |c| {
            let host = target.fundamental(c)?.succ();
            Ok(need < host && tail_bound_empirical(&need, &host, horizon).is_some_and(|m| m <= c))
        })?;
        l0.push(c);
    }
    let last = *l0.last().expect("depth >= 1");
    let mut current = IndexStream::splice(l0, &k.at_least(last + 1))?;
    let mut diagonal = Vec::with_capacity(depth);
    for i in 1..=depth {
        let inner = rho.fundamental(i as u64)?.succ();
        current = select_union_stream(gamma, &inner, &current, n, depth, horizon)?;
        diagonal.push(current.get(i - 1));
    }
    let last = *diagonal.last().expect("depth >= 1");
    IndexStream::splice(diagonal, &current.at_least(last + 1))
}

/// First `F ∈ S_rho ∩ [1, horizon]` whose union `∪_{j∈F} E_{L(j)}` falls outside `S_{gamma+rho}`.
pub fn union_inclusion_failure(
    gamma: &Ordinal,
    rho: &Ordinal,
    l: &IndexStream,
    blocks: &(dyn Fn(usize) -> Result<FiniteSet> + Sync),
    horizon: u64,
    cap: u64,
) -> Result<Option<FiniteSet>> {
    let target = gamma.add(rho);
    let family = enumerate_members(rho, horizon, cap)?;
    let verdicts = par::try_map(&family, |f| -> Result<bool> {
        let mut union = FiniteSet::empty();
        for j in f.iter() {
            union = union.union(&blocks(l.get(j as usize - 1) as usize)?);
        }
        Ok(is_member(&union, &target))
    })?;
    Ok(family.into_iter().zip(verdicts).find(|(_, ok)| !ok).map(|(f, _)| f))
}

/// An `M` such that every `E ∈ S_{gamma+delta}` splits into successive `S_gamma` pieces
/// whose minima satisfy `M(mins) ∈ S_delta`. Limit stages are materialized for `depth` positions.
pub fn select_split_witness(gamma: &Ordinal, delta: &Ordinal, depth: usize, horizon: u64) -> Result<IndexStream> {
    if delta.is_zero() {
        return Ok(IndexStream::naturals());
    }
    if let Some(lower) = delta.pred() {
        return select_split_witness(gamma, &lower, depth, horizon);
    }
    let target = gamma.add(delta);
    let inner: Vec<IndexStream> = (1..=depth as u64)
        .map(|n| select_split_witness(gamma, &delta.fundamental(n)?, depth, horizon))
        .collect::<Result<_>>()?;
    let mut index = Vec::with_capacity(depth);
    for n in 1..=depth as u64 {
        let mu = target.fundamental(n)?.succ();
        let after = index.last().copied().unwrap_or(0);
        let c = least_accepted(&IndexStream::naturals(), after, SEARCH_TRIES, |c| {
            let host = gamma.add(&delta.fundamental(c)?);
            Ok(mu <= host && tail_bound_empirical(&mu, &host, horizon).is_some_and(|m| m <= c))
        })?;
        index.push(c);
    }
    let mut prefix: Vec<u64> = Vec::with_capacity(depth);
    for i in 0..depth {
        let mut v = 2.max(index[i]);
        for stream in &inner[..=i] {
            v = v.max(stream.get(i));
        }
        if let Some(&p) = prefix.last() {
            v = v.max(p + 1);
        }
        prefix.push(v);
    }
    let last = *prefix.last().expect("depth >= 1");
    IndexStream::splice(prefix, &IndexStream::from(last + 1))
}

/// A split of `E` into successive `S_gamma` pieces with `M(mins) ∈ S_delta`, found by search.
pub fn find_split(e: &FiniteSet, gamma: &Ordinal, delta: &Ordinal, m: &IndexStream) -> Option<Vec<FiniteSet>> {
    fn go(
        rest: &[u64],
        gamma: &Ordinal,
        delta: &Ordinal,
        m: &IndexStream,
        mins: &mut Vec<u64>,
        pieces: &mut Vec<FiniteSet>,
    ) -> bool {
        if rest.is_empty() {
            return true;
        }
        mins.push(m.get(rest[0] as usize - 1));
        let image_ok = is_member(&FiniteSet::new(mins.clone()).expect("increasing"), delta);
        if image_ok {
            let longest = finite_walker(rest).block_len(0, gamma).expect("finite walk");
            for len in (1..=longest).rev() {
                pieces.push(FiniteSet::new(rest[..len].to_vec()).expect("subslice"));
                if go(&rest[len..], gamma, delta, m, mins, pieces) {
                    mins.pop();
                    return true;
                }
                pieces.pop();
            }
        }
        mins.pop();
        false
    }
    let mut pieces = Vec::new();
    go(e.as_slice(), gamma, delta, m, &mut Vec::new(), &mut pieces).then_some(pieces)
}

/// An `N` such that successive `E_i ∈ S_gamma` with `min E_i >= N(i)`, indexed by `F ∈ S_delta`,
/// glue into a member of `S_{gamma+delta}`. Limit stages are materialized for `depth` positions.
pub fn select_glue_witness(gamma: &Ordinal, delta: &Ordinal, depth: usize, horizon: u64) -> Result<IndexStream> {
    if delta.is_zero() {
        return Ok(IndexStream::naturals());
    }
    if let Some(lower) = delta.pred() {
        return select_glue_witness(gamma, &lower, depth, horizon);
    }
    let target = gamma.add(delta);
    let inner: Vec<IndexStream> = (1..=depth as u64)
        .map(|n| select_glue_witness(gamma, &delta.fundamental(n)?.succ(), depth, horizon))
        .collect::<Result<_>>()?;
    let mut index = Vec::with_capacity(depth);
    for n in 1..=depth as u64 {
        let need = gamma.add(&delta.fundamental(n)?).succ();
        let after = index.last().copied().unwrap_or(0);
        let c = least_accepted(&IndexStream::naturals(), after, SEARCH_TRIES, |c| {
            let host = target.fundamental(c)?.succ();
            Ok(need <= host && tail_bound_empirical(&need, &host, horizon).is_some_and(|m| m <= c))
        })?;
        index.push(c);
    }
    let mut prefix: Vec<u64> = Vec::with_capacity(depth);
    for i in 0..depth {
        let mut v = index[i];
        for stream in &inner[..=i] {
            v = v.max(stream.get(i));
        }
        if let Some(&p) = prefix.last() {
            v = v.max(p + 1);
        }
        prefix.push(v);
    }
    let last = *prefix.last().expect("depth >= 1");
    IndexStream::splice(prefix, &IndexStream::from(last + 1))
}

/// First `F ∈ S_delta ∩ [1, horizon]` for which gluing the earliest admissible maximal
/// `S_gamma` blocks (`min E_i >= N(i)`) leaves `S_{gamma+delta}`.
pub fn glue_failure(
    gamma: &Ordinal,
    delta: &Ordinal,
    n: &IndexStream,
    horizon: u64,
    cap: u64,
    budget: u64,
) -> Result<Option<FiniteSet>> {
    let target = gamma.add(delta);
    let family = enumerate_members(delta, horizon, cap)?;
    let verdicts = par::try_map(&family, |f| -> Result<bool> {
        let mut union = FiniteSet::empty();
        for i in f.iter() {
            let start = n.get(i as usize - 1).max(union.max_elem() + 1);
            let block = maximal_partition(&IndexStream::from(start), gamma, 1, budget)?;
            union = union.union(&block[0]);
        }
        Ok(is_member(&union, &target))
    })?;
    Ok(family.into_iter().zip(verdicts).find(|(_, ok)| !ok).map(|(f, _)| f))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ordinal::parse_ordinal;
    use proptest::prelude::*;

    fn o(s: &str) -> Ordinal {
        parse_ordinal(s).unwrap()
    }

    fn s(v: &[u64]) -> FiniteSet {
        FiniteSet::new(v.to_vec()).unwrap()
    }

    #[test]
    fn membership_examples() {
        assert!(is_member(&s(&[2, 3]), &o("1")));
        assert!(!is_member(&s(&[1, 2, 3]), &o("2")));
        assert!(is_member(&s(&[2, 3, 4, 5]), &o("w")));
        assert!(is_member(&FiniteSet::empty(), &o("w^w")));
        assert!(is_member_an(&s(&[1, 2, 3]), &o("1"), 2));
        assert!(is_member_an(&FiniteSet::empty(), &o("3"), 1));
        assert!(!is_member_an(&s(&[1, 2, 3, 4, 5]), &o("1"), 2));
    }

    #[test]
    fn maximality_examples() {
        assert!(is_maximal(&s(&[1]), &o("1")).unwrap());
        assert!(!is_maximal(&s(&[3, 7]), &o("1")).unwrap());
        assert!(is_maximal(&s(&[2, 3, 4, 5, 6, 7]), &o("2")).unwrap());
        assert!(is_maximal(&s(&[1, 2]), &o("1")).is_err());
        assert!(!is_maximal(&FiniteSet::empty(), &o("1")).unwrap());
    }

    #[test]
    fn partitions() {
        let n = IndexStream::naturals();
        let p = maximal_partition(&n, &o("1"), 4, 1000).unwrap();
        assert_eq!(p, vec![s(&[1]), s(&[2, 3]), FiniteSet::interval(4, 7), FiniteSet::interval(8, 15)]);
        assert_eq!(maximal_partition(&n, &o("0"), 3, 1000).unwrap(), vec![s(&[1]), s(&[2]), s(&[3])]);
        let m = IndexStream::from(2);
        assert_eq!(maximal_partition(&m, &o("1"), 2, 1000).unwrap(), vec![s(&[2, 3]), FiniteSet::interval(4, 7)]);
        assert!(matches!(maximal_partition(&n, &o("2"), 4, 100_000), Err(crate::Error::Resource(_))));
    }

    #[test]
    fn tau_examples() {
        assert_eq!(tau(&s(&[1, 2, 3]), &o("1")), 2);
        assert_eq!(tau_oracle(&s(&[1, 2, 3]), &o("1")), 2);
        assert_eq!(tau(&FiniteSet::interval(1, 5), &o("1")), 3);
        assert_eq!(tau_oracle(&FiniteSet::interval(1, 5), &o("1")), 3);
        assert_eq!(tau(&FiniteSet::empty(), &o("w")), 0);
        assert_eq!(tau_oracle(&FiniteSet::empty(), &o("w")), 0);
        assert_eq!(tau(&FiniteSet::interval(2, 7), &o("1")), 2);
        assert_eq!(tau(&FiniteSet::interval(8, 1023), &o("1")), 7);
    }

    #[test]
    fn modified_examples() {
        assert!(is_member_modified(&s(&[2, 3, 4, 5]), &o("2"), 12).unwrap());
        assert!(!is_member_modified(&s(&[1, 2]), &o("1"), 12).unwrap());
        assert!(is_member_modified(&s(&[3, 4, 5]), &o("w"), 12).unwrap());
        assert!(is_member_modified(&s(&[13]), &o("1"), 12).is_err());
    }

    #[test]
    fn modified_agrees_with_ordinary_on_small_ground() {
        let oracle = ModifiedOracle::new(9).unwrap();
        for xi in ["0", "1", "2", "w", "w+1"] {
            let xi = o(xi);
            let table = oracle.full_table(&xi);
            for mask in 0..1u64 << 9 {
                assert_eq!(table[mask as usize], is_member(&FiniteSet::from_mask(mask), &xi), "{xi} {mask:b}");
            }
        }
    }

    #[test]
    fn enumeration_examples() {
        let all = enumerate_members(&o("1"), 3, 64).unwrap();
        assert_eq!(all, vec![FiniteSet::empty(), s(&[1]), s(&[2]), s(&[2, 3]), s(&[3])]);
        let brute: Vec<FiniteSet> =
            (0..8u64).map(FiniteSet::from_mask).filter(|e| e.len() as u64 <= e.min_elem().unwrap_or(u64::MAX)).collect();
        assert_eq!(all.len(), brute.len());
        assert_eq!(enumerate_members(&o("0"), 2, 64).unwrap(), vec![FiniteSet::empty(), s(&[1]), s(&[2])]);
        assert_eq!(enumerate_maximal(&o("1"), 3, 64).unwrap(), vec![s(&[1]), s(&[2, 3])]);
        assert!(enumerate_members(&o("1"), 70, 64).is_err());
    }

    #[test]
    fn tail_bounds() {
        assert_eq!(tail_bound_empirical(&o("2"), &o("2"), 20), Some(1));
        assert_eq!(tail_bound_empirical(&o("1"), &o("2"), 14), Some(1));
        assert_eq!(tail_bound_empirical(&o("2"), &o("1"), 10), Some(6));
        assert_eq!(tail_bound_empirical(&o("1"), &o("0"), 10), Some(10));
        assert_eq!(tail_bound_empirical(&o("2"), &o("w"), 14), Some(1));
    }

    #[test]
    fn union_selection_small_cases() {
        let n = IndexStream::naturals();
        let l = select_union_stream(&o("1"), &o("1"), &n, 1, 4, 12).unwrap();
        assert_eq!(l.take(5), vec![1, 2, 3, 4, 5]);
        let l = select_union_stream(&o("0"), &o("1"), &n, 1, 4, 12).unwrap();
        assert_eq!(l.take(5), vec![1, 2, 3, 4, 5]);
        let l = select_union_stream(&o("1"), &o("1"), &n, 3, 4, 12).unwrap();
        assert_eq!(l.take(3), vec![3, 6, 9]);
        let l = select_union_stream(&o("1"), &o("w"), &n, 1, 5, 12).unwrap();
        assert_eq!(l.take(5), vec![3, 4, 5, 6, 7]);
        assert!(select_union_stream(&o("1"), &o("0"), &n, 1, 4, 12).is_err());
    }

    #[test]
    fn union_selection_certificates() {
        let n = IndexStream::naturals();
        let blocks = |xi: Ordinal| move |i: usize| -> Result<FiniteSet> {
            Ok(maximal_partition(&IndexStream::naturals(), &xi, i, 1 << 16)?.pop().expect("i >= 1"))
        };
        let gamma = o("1");
        let l = select_union_stream(&gamma, &o("1"), &n, 1, 6, 12).unwrap();
        let b = blocks(gamma.clone());
        assert_eq!(union_inclusion_failure(&gamma, &o("1"), &l, &b, 6, 64).unwrap(), None);
        // any further subsequence keeps the inclusion
        let sub = l.compose(&IndexStream::evens());
        assert_eq!(union_inclusion_failure(&gamma, &o("1"), &sub, &b, 5, 64).unwrap(), None);
        let lw = select_union_stream(&gamma, &o("w"), &n, 1, 5, 12).unwrap();
        assert_eq!(union_inclusion_failure(&gamma, &o("w"), &lw, &b, 5, 64).unwrap(), None);
        let b0 = blocks(o("0"));
        let l0 = select_union_stream(&o("0"), &o("1"), &n, 1, 4, 12).unwrap();
        assert_eq!(union_inclusion_failure(&o("0"), &o("1"), &l0, &b0, 10, 64).unwrap(), None);
    }

    #[test]
    fn union_preconditions() {
        let good = vec![s(&[1]), s(&[2, 3]), FiniteSet::interval(4, 7)];
        assert!(check_union_preconditions(&good, &o("1"), 1).is_ok());
        assert!(check_union_preconditions(&[s(&[1, 2])], &o("1"), 1).is_err());
        assert!(check_union_preconditions(&[s(&[3]), s(&[2])], &o("0"), 1).is_err());
    }

    #[test]
    fn split_witnesses() {
        let m = select_split_witness(&o("0"), &o("1"), 4, 12).unwrap();
        assert_eq!(m.take(4), vec![1, 2, 3, 4]);
        assert_eq!(select_split_witness(&o("3"), &o("0"), 4, 12).unwrap().take(3), vec![1, 2, 3]);
        let id = IndexStream::naturals();
        let split = find_split(&FiniteSet::interval(2, 7), &o("1"), &o("1"), &id).unwrap();
        assert_eq!(split, vec![s(&[2, 3]), FiniteSet::interval(4, 7)]);
        for e in enumerate_members(&o("2"), 11, 64).unwrap() {
            assert!(find_split(&e, &o("1"), &o("1"), &id).is_some(), "{e}");
        }
        let mw = select_split_witness(&o("1"), &o("w"), 4, 10).unwrap();
        for e in enumerate_members(&o("w"), 10, 64).unwrap() {
            assert!(find_split(&e, &o("1"), &o("w"), &mw).is_some(), "{e}");
        }
    }

    #[test]
    fn glue_witnesses() {
        let n = select_glue_witness(&o("0"), &o("1"), 4, 12).unwrap();
        assert_eq!(glue_failure(&o("0"), &o("1"), &n, 10, 64, 1 << 16).unwrap(), None);
        assert_eq!(select_glue_witness(&o("2"), &o("0"), 3, 12).unwrap().take(2), vec![1, 2]);
        assert!(is_member(&s(&[2, 3, 6, 7]), &o("2")));
        let n1 = select_glue_witness(&o("1"), &o("1"), 4, 12).unwrap();
        assert_eq!(glue_failure(&o("1"), &o("1"), &n1, 6, 64, 1 << 16).unwrap(), None);
        let nw = select_glue_witness(&o("0"), &o("w"), 4, 10).unwrap();
        assert_eq!(glue_failure(&o("0"), &o("w"), &nw, 4, 64, 1 << 16).unwrap(), None);
    }

    fn small_set() -> impl Strategy<Value = FiniteSet> {
        prop::collection::btree_set(1u64..16, 0..8).prop_map(|b| FiniteSet::new(b.into_iter().collect()).unwrap())
    }

    fn small_ordinal() -> impl Strategy<Value = Ordinal> {
        prop::sample::select(vec![o("0"), o("1"), o("2"), o("3"), o("w"), o("w+1"), o("w*2"), o("w^2")])
    }

    #[test]
    fn high_limits_contain_low_successor_levels() {
        for xi in ["w^w+w", "w^(w+1)", "w^(w*2)"] {
            let xi = o(xi);
            for mask in 1..1u64 << 12 {
                let e = FiniteSet::from_mask(mask);
                let m = e.min_elem().unwrap();
                if is_member(&e, &Ordinal::finite(m + 1)) {
                    assert!(is_member(&e, &xi), "{xi} {e}");
                }
            }
            assert!(!is_member(&FiniteSet::interval(1, 2), &xi));
        }
    }

    proptest! {
        #[test]
        fn hereditary(e in small_set(), xi in small_ordinal(), drop in any::<prop::sample::Index>()) {
            if is_member(&e, &xi) && !e.is_empty() {
                let k = drop.index(e.len());
                let f = FiniteSet::new(e.iter().enumerate().filter(|&(i, _)| i != k).map(|(_, v)| v).collect()).unwrap();
                prop_assert!(is_member(&f, &xi));
            }
        }

        #[test]
        fn spreading(e in small_set(), xi in small_ordinal(), bumps in prop::collection::vec(0u64..3, 8)) {
            if is_member(&e, &xi) {
                let mut acc = 0;
                let f: Vec<u64> = e.iter().zip(&bumps).map(|(v, b)| { acc += b; v + acc }).collect();
                let f = FiniteSet::new(f).unwrap();
                prop_assert!(crate::set::is_spread(&f, &e));
                prop_assert!(is_member(&f, &xi));
            }
        }

        #[test]
        fn greedy_tau_is_optimal(e in small_set(), xi in small_ordinal()) {
            prop_assert_eq!(tau(&e, &xi), tau_oracle(&e, &xi));
        }

        #[test]
        fn tau_subadditive(parts in prop::collection::vec(small_set(), 1..4), xi in small_ordinal()) {
            let union = parts.iter().fold(FiniteSet::empty(), |a, b| a.union(b));
            let total: usize = parts.iter().map(|p| tau(p, &xi)).sum();
            prop_assert!(tau(&union, &xi) <= total);
        }

        #[test]
        fn greedy_blocks_are_maximal(e in small_set(), xi in small_ordinal()) {
            let blocks = greedy_blocks(&e, &xi);
            let rebuilt = blocks.iter().fold(FiniteSet::empty(), |a, b| a.union(b));
            prop_assert_eq!(&rebuilt, &e);
            for w in blocks.windows(2) {
                prop_assert!(w[0].precedes(&w[1]));
                prop_assert!(!is_member(&w[0].push(w[1].min_elem().unwrap()).unwrap(), &xi));
            }
        }
    }
}
