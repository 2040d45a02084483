//! Finite sections of operators between Schreier spaces: operator norms, formal
//! identities, strict-singularity witnesses, the chain of strictly singular factors,
//! index maps with their `tau` growth, and the dyadic family of fast-growing sets.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::{Serialize, Serializer};

use crate::averages::small_beta_vector;
use crate::error::{domain, resource, Error, Result};
use crate::families::{self, Sequence, Walker};
use crate::norms::{self, ser_q};
use crate::ordinal::Ordinal;
use crate::pairs::{build_pair, SchreierPair};
use crate::par;
use crate::set::FiniteSet;
use crate::stream::IndexStream;
use crate::vector::{RationalVector, Q};
use crate::Caps;

/// A finitely supported matrix `T e_col = sum_row T[row, col] e_row` from `X_domain` to `X_codomain`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteOperator {
    entries: BTreeMap<(u64, u64), Q>,
    pub domain_xi: Ordinal,
    pub codomain_xi: Ordinal,
}

impl Serialize for FiniteOperator {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Wire<'a> {
            domain_xi: &'a Ordinal,
            codomain_xi: &'a Ordinal,
            matrix: Vec<(u64, u64, String)>,
        }
        Wire {
            domain_xi: &self.domain_xi,
            codomain_xi: &self.codomain_xi,
            matrix: self.entries.iter().map(|(&(r, c), v)| (r, c, v.to_string())).collect(),
        }
        .serialize(s)
    }
}

impl FiniteOperator {
    pub fn new(domain_xi: Ordinal, codomain_xi: Ordinal) -> Self {
        FiniteOperator { entries: BTreeMap::new(), domain_xi, codomain_xi }
    }

    /// `(row, col, value)` triplets; repeated positions are summed.
    pub fn from_triplets(domain_xi: Ordinal, codomain_xi: Ordinal, triplets: Vec<(u64, u64, Q)>) -> Result<Self> {
        let mut op = Self::new(domain_xi, codomain_xi);
        for (r, c, v) in triplets {
            if r == 0 || c == 0 {
                return Err(domain("matrix indices start at 1"));
            }
            *op.entries.entry((r, c)).or_insert_with(Q::zero) += v;
        }
        op.entries.retain(|_, v| !v.is_zero());
        Ok(op)
    }

    /// `x ⊗ x*`: `v ↦ x*(v) x`.
    pub fn rank_one(x: &RationalVector, xstar: &RationalVector, domain_xi: &Ordinal, codomain_xi: &Ordinal) -> Self {
        let mut op = Self::new(domain_xi.clone(), codomain_xi.clone());
        for (r, a) in x.entries() {
            for (c, b) in xstar.entries() {
                op.entries.insert((*r, *c), a * b);
            }
        }
        op
    }

    pub fn entries(&self) -> impl Iterator<Item = (u64, u64, &Q)> {
        self.entries.iter().map(|(&(r, c), v)| (r, c, v))
    }

    pub fn get(&self, row: u64, col: u64) -> Q {
        self.entries.get(&(row, col)).cloned().unwrap_or_else(Q::zero)
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn is_nonnegative(&self) -> bool {
        self.entries.values().all(|v| !v.is_negative())
    }

    pub fn abs(&self) -> Self {
        FiniteOperator {
            entries: self.entries.iter().map(|(k, v)| (*k, v.abs())).collect(),
            ..self.clone()
        }
    }

    pub fn rows(&self) -> FiniteSet {
        FiniteSet::from_unsorted(self.entries.keys().map(|&(r, _)| r).collect()).expect("positive")
    }

    pub fn columns(&self) -> FiniteSet {
        FiniteSet::from_unsorted(self.entries.keys().map(|&(_, c)| c).collect()).expect("positive")
    }

    pub fn column(&self, col: u64) -> RationalVector {
        let entries = self.entries.iter().filter(|((_, c), _)| *c == col).map(|(&(r, _), v)| (r, v.clone())).collect();
        RationalVector::from_entries(entries).expect("positive")
    }

    /// `T x`.
    pub fn apply(&self, x: &RationalVector) -> RationalVector {
        let entries = self.entries.iter().map(|(&(r, c), v)| (r, v * x.get(c))).collect();
        RationalVector::from_entries(entries).expect("positive")
    }

    /// `T^t y`, i.e. the functional `y ∘ T` on the domain.
    pub fn adjoint_apply(&self, y: &RationalVector) -> RationalVector {
        let entries = self.entries.iter().map(|(&(r, c), v)| (c, v * y.get(r))).collect();
        RationalVector::from_entries(entries).expect("positive")
    }

    pub fn add(&self, other: &FiniteOperator) -> Result<FiniteOperator> {
        if self.domain_xi != other.domain_xi || self.codomain_xi != other.codomain_xi {
            return Err(domain("operators act between different spaces"));
        }
        let mut out = self.clone();
        for (k, v) in &other.entries {
            *out.entries.entry(*k).or_insert_with(Q::zero) += v;
        }
        out.entries.retain(|_, v| !v.is_zero());
        Ok(out)
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &FiniteOperator) -> Result<FiniteOperator> {
        if inner.codomain_xi != self.domain_xi {
            return Err(domain(format!(
                "cannot compose: inner lands in X_{}, outer starts from X_{}",
                inner.codomain_xi, self.domain_xi
            )));
        }
        let mut by_row: BTreeMap<u64, Vec<(u64, &Q)>> = BTreeMap::new();
        for (&(r, c), v) in &self.entries {
            by_row.entry(c).or_default().push((r, v));
        }
        let mut out = FiniteOperator::new(inner.domain_xi.clone(), self.codomain_xi.clone());
        for (&(mid, c), v) in &inner.entries {
            for (r, w) in by_row.get(&mid).into_iter().flatten() {
                *out.entries.entry((*r, c)).or_insert_with(Q::zero) += *w * v;
            }
        }
        out.entries.retain(|_, v| !v.is_zero());
        Ok(out)
    }
}

/// `id: X_xi -> X_zeta` on `[1, n]`.
pub fn formal_identity(xi: &Ordinal, zeta: &Ordinal, n: u64) -> FiniteOperator {
    let triplets = (1..=n).map(|i| (i, i, Q::one())).collect();
    FiniteOperator::from_triplets(xi.clone(), zeta.clone(), triplets).expect("positive indices")
}

/// `lower <= ||T|| <= upper`; the two agree for entrywise nonnegative `T`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OpNorm {
    #[serde(serialize_with = "ser_q")]
    pub lower: Q,
    #[serde(serialize_with = "ser_q")]
    pub upper: Q,
    pub exact: bool,
    /// A domain vector attaining `lower` (up to normalization).
    pub witness: RationalVector,
    /// Codomain Schreier set used by the best functional `1_F ∘ T`.
    pub witness_set: FiniteSet,
    /// Number of codomain sets for which a dual norm was solved.
    pub candidates: usize,
}

/// Codomain Schreier sets that can norm `1_F ∘ T` for nonnegative `T`.
///
/// Rows are grouped into runs of consecutive rows with identical entries. Inside a run only the
/// number of chosen rows matters, and taking the rightmost ones keeps `F` a spread of any other
/// choice, so `F` stays in the family. Only maximal count vectors are kept.
fn codomain_candidates(t: &FiniteOperator, budget: u64) -> Result<Vec<FiniteSet>> {
    let xi = &t.codomain_xi;
    let rows = t.rows();
    if families::is_member(&rows, xi) {
        return Ok(vec![rows]);
    }
    let mut row_data: BTreeMap<u64, Vec<(u64, &Q)>> = BTreeMap::new();
    for (&(r, c), v) in &t.entries {
        row_data.entry(r).or_default().push((c, v));
    }
    let mut runs: Vec<Vec<u64>> = Vec::new();
    let mut last: Option<&Vec<(u64, &Q)>> = None;
    for (r, data) in &row_data {
        match (runs.last_mut(), last) {
            (Some(run), Some(prev)) if prev == data => run.push(*r),
            _ => runs.push(vec![*r]),
        }
        last = Some(data);
    }

    struct Search<'a> {
        runs: &'a [Vec<u64>],
        xi: &'a Ordinal,
        budget: u64,
        counts: Vec<usize>,
        found: Vec<Vec<usize>>,
    }
    impl Search<'_> {
        fn go(&mut self, k: usize, chosen: &mut Vec<u64>) -> Result<()> {
            if self.budget == 0 {
                return Err(resource("too many codomain sets to compare"));
            }
            self.budget -= 1;
            let run = &self.runs[k];
            let last = k + 1 == self.runs.len();
            for take in (0..=run.len()).rev() {
                let mark = chosen.len();
                chosen.extend_from_slice(&run[run.len() - take..]);
                let ok = families::is_member(&FiniteSet::new(chosen.clone()).expect("increasing"), self.xi);
                if ok {
                    self.counts.push(take);
                    if last {
                        self.found.push(self.counts.clone());
                    } else {
                        self.go(k + 1, chosen)?;
                    }
                    self.counts.pop();
                }
                chosen.truncate(mark);
                if ok && last {
                    break;
                }
            }
            Ok(())
        }
    }
    let mut search = Search { runs: &runs, xi, budget, counts: vec![], found: vec![] };
    search.go(0, &mut Vec::new())?;
    let mut found = search.found;
    found.sort_by_key(|v| std::cmp::Reverse(v.iter().sum::<usize>()));
    let mut maximal: Vec<Vec<usize>> = Vec::new();
    for v in found {
        if !maximal.iter().any(|w| w.iter().zip(&v).all(|(a, b)| a >= b)) {
            maximal.push(v);
        }
    }
    Ok(maximal
        .into_iter()
        .map(|counts| {
            let picked = runs.iter().zip(&counts).flat_map(|(run, &take)| run[run.len() - take..].iter().copied());
            FiniteSet::new(picked.collect()).expect("runs are increasing")
        })
        .collect())
}

struct Solved {
    value: Q,
    set: FiniteSet,
    primal: RationalVector,
}

/// `max_F ||1_F ∘ T||_{domain,*}` over the candidate sets.
fn best_functional(t: &FiniteOperator, sets: &[FiniteSet], caps: &Caps) -> Result<Solved> {
    let values = par::try_map(sets, |f| -> Result<(Q, RationalVector)> {
        let g = t.adjoint_apply(&RationalVector::indicator(f));
        let cert = norms::dual_norm(&g, &t.domain_xi, caps)?;
        Ok((cert.value, cert.primal))
    })?;
    let (k, (value, primal)) =
        values.into_iter().enumerate().max_by(|a, b| a.1 .0.cmp(&b.1 .0).then(b.0.cmp(&a.0))).expect("nonempty");
    Ok(Solved { value, set: sets[k].clone(), primal })
}

/// Largest `||T e_c||` over the columns.
fn best_column(t: &FiniteOperator, caps: &Caps) -> Result<Solved> {
    let cols: Vec<u64> = t.columns().iter().collect();
    let values = par::try_map(&cols, |&c| norms::schreier_norm(&t.column(c), &t.codomain_xi, caps))?;
    let (k, cert) =
        values.into_iter().enumerate().max_by(|a, b| a.1.value.cmp(&b.1.value).then(b.0.cmp(&a.0))).expect("nonempty");
    Ok(Solved { value: cert.value, set: cert.witness, primal: RationalVector::basis(cols[k]) })
}

fn nonnegative_norm(t: &FiniteOperator, caps: &Caps) -> Result<(Solved, usize)> {
    if families::is_member(&t.columns(), &t.domain_xi) {
        // the domain norm is l_1 on the columns, so the norm is the largest column norm
        return Ok((best_column(t, caps)?, t.columns().len()));
    }
    let sets = codomain_candidates(t, caps.materialize)?;
    Ok((best_functional(t, &sets, caps)?, sets.len()))
}

/// The finite-section operator norm. Nonnegative matrices get the exact value from
/// `||T|| = ||T*|| = max_F ||1_F ∘ T||_*`; other sign patterns get a bracket whose upper end is
/// the exact norm of `|T|`.
pub fn op_norm(t: &FiniteOperator, caps: &Caps) -> Result<OpNorm> {
    if t.is_empty() {
        return Ok(OpNorm {
            lower: Q::zero(),
            upper: Q::zero(),
            exact: true,
            witness: RationalVector::zero(),
            witness_set: FiniteSet::empty(),
            candidates: 0,
        });
    }
    let abs = t.abs();
    let (best, candidates) = nonnegative_norm(&abs, caps)?;
    if t.is_nonnegative() {
        let image = t.apply(&best.primal);
        let wide = Caps { support: caps.support.max(image.len()).max(best.primal.len()), ..*caps };
        let top = norms::schreier_norm(&image, &t.codomain_xi, &wide)?.value;
        let bottom = norms::schreier_norm(&best.primal, &t.domain_xi, &wide)?.value;
        if bottom.is_zero() || top / bottom != best.value {
            return Err(Error::Certificate(format!("the optimal vector does not attain {}", best.value)));
        }
        return Ok(OpNorm {
            lower: best.value.clone(),
            upper: best.value,
            exact: true,
            witness: best.primal,
            witness_set: best.set,
            candidates,
        });
    }
    let sets = codomain_candidates(&abs, caps.materialize)?;
    let signed = best_functional(t, &sets, caps)?;
    let column = best_column(t, caps)?;
    let lower = if column.value > signed.value { column } else { signed };
    Ok(OpNorm {
        exact: lower.value == best.value,
        lower: lower.value,
        upper: best.value,
        witness: lower.primal,
        witness_set: lower.set,
        candidates: sets.len(),
    })
}

/// A vector with large domain mass and small image norm.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SsWitness {
    pub set: FiniteSet,
    pub vector: RationalVector,
    /// `sum |a_i|`.
    #[serde(serialize_with = "ser_q")]
    pub mass: Q,
    pub in_successor_family: bool,
    #[serde(serialize_with = "ser_q")]
    pub rho_norm: Q,
    /// `||u||_zeta`, the norm of the image under `id: X_xi -> X_zeta`.
    #[serde(serialize_with = "ser_q")]
    pub image_norm: Q,
    /// `||u||_xi`, when the support is small enough to evaluate.
    pub domain_norm: Option<String>,
    pub pass: bool,
}

/// `u` with `supp u ∈ S_{rho+1}`, `sum |a_i| = 1` and `||u||_rho < eps`: a repeated average of
/// order `rho + 1` with a late enough start.
pub fn ss_witness(xi: &Ordinal, zeta: &Ordinal, rho: &Ordinal, eps: &Q, caps: &Caps) -> Result<SsWitness> {
    if !eps.is_positive() {
        return Err(domain("eps must be positive"));
    }
    let level = rho.succ();
    let (set, vector) = small_beta_vector(rho, &level, eps, &IndexStream::naturals(), caps)?;
    let wide = Caps { support: caps.support.max(vector.len()), ..*caps };
    let rho_norm = norms::schreier_norm(&vector, rho, &wide)?.value;
    let image_norm = norms::schreier_norm(&vector, zeta, &wide)?.value;
    let domain_norm = norms::schreier_norm(&vector, xi, &wide).ok().map(|c| c.value.to_string());
    let mass = vector.l1();
    let in_successor_family = families::is_member(&set, &level);
    let pass = in_successor_family && mass.is_one() && rho_norm < *eps;
    Ok(SsWitness { set, vector, mass, in_successor_family, rho_norm, image_norm, domain_norm, pass })
}

/// An `S_rho` set on which the pair vectors of level `rho` are exactly `l_1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NonSsWitness {
    pub iota: Ordinal,
    pub set: FiniteSet,
    /// `∪_{i∈E} supp x_i`; lying in `S_xi` gives `||sum a_i x_i|| = sum |a_i|` for all scalars.
    pub union: FiniteSet,
    pub union_in_family: bool,
    /// Lattice coefficient vectors evaluated exactly.
    pub checked: usize,
    #[serde(serialize_with = "ser_q")]
    pub worst_ratio: Q,
    pub pass: bool,
}

/// Some `iota ∈ I(xi)` with `iota + rho = xi`, the least one.
pub fn left_part(xi: &Ordinal, rho: &Ordinal) -> Result<Ordinal> {
    xi.i_set()
        .into_iter()
        .find(|i| xi.left_subtract(i).is_ok_and(|r| r == *rho))
        .ok_or_else(|| domain(format!("{rho} is not in R({xi})")))
}

pub fn non_ss_witness(xi: &Ordinal, rho: &Ordinal, horizon: u64, caps: &Caps) -> Result<NonSsWitness> {
    let iota = left_part(xi, rho)?;
    let members = families::enumerate_members(rho, horizon, caps.materialize)?;
    let set = members
        .into_iter()
        .max_by(|a, b| a.len().cmp(&b.len()).then(b.max_elem().cmp(&a.max_elem())).then(b.cmp(a)))
        .filter(|e| !e.is_empty())
        .ok_or_else(|| domain("horizon must be positive"))?;
    let pair = build_pair(xi, &iota, &IndexStream::naturals(), set.max_elem() as usize, caps)?;
    let picked: Vec<RationalVector> = set.iter().map(|i| pair.x[i as usize - 1].clone()).collect();
    let union = picked.iter().fold(FiniteSet::empty(), |acc, v| acc.union(&v.support()));
    let union_in_family = families::is_member(&union, xi);
    let grid = norms::coefficient_grid(picked.len(), 32, 11, false);
    let wide = Caps { support: caps.support.max(union.len()), ..*caps };
    let ratios = par::try_map(&grid, |a| -> Result<Q> {
        let total: Q = a.iter().sum();
        Ok(norms::schreier_norm(&norms::combine(&picked, a), xi, &wide)?.value / total)
    })?;
    let worst_ratio = ratios.iter().min().cloned().unwrap_or_else(Q::one);
    let pass = union_in_family && worst_ratio.is_one();
    Ok(NonSsWitness { iota, set, union, union_in_family, checked: grid.len(), worst_ratio, pass })
}

/// The small-image witness for one factor of the chain.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FactorWitness {
    pub factor: usize,
    /// Coefficients `a` on the pair indices.
    pub coefficients: Option<RationalVector>,
    /// `||T u|| / ||u||` for `u = sum a_i x_i`.
    pub ratio: Option<String>,
    pub failure: Option<String>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SsChain {
    pub levels: Vec<Ordinal>,
    pub operators: Vec<FiniteOperator>,
    /// The composite sends `x_i^k` to `x_i^0` for every `i <= horizon`.
    pub composite_fixes: bool,
    /// `min_i ||x_i^0||` and `min_{i<j} ||x_i^0 - x_j^0||`.
    #[serde(serialize_with = "ser_q")]
    pub min_image_norm: Q,
    #[serde(serialize_with = "ser_q")]
    pub min_separation: Q,
    pub witnesses: Vec<FactorWitness>,
    pub pass: bool,
}

fn factor_witness(
    s: usize,
    op: &FiniteOperator,
    upper: &SchreierPair,
    lower_rho: &Ordinal,
    eps: &Q,
    caps: &Caps,
) -> Result<FactorWitness> {
    let (_, a) = small_beta_vector(lower_rho, &lower_rho.succ(), eps, &IndexStream::naturals(), caps)?;
    if a.support().max_elem() as usize > upper.x.len() {
        return Ok(FactorWitness {
            factor: s,
            coefficients: Some(a.clone()),
            ratio: None,
            failure: Some(format!("the witness needs index {} past the horizon {}", a.support().max_elem(), upper.x.len())),
            pass: false,
        });
    }
    let mut u = RationalVector::zero();
    for (i, c) in a.entries() {
        u = u.add(&upper.x[*i as usize - 1].scale(c));
    }
    let image = op.apply(&u);
    let wide = Caps { support: caps.support.max(u.len()).max(image.len()), ..*caps };
    let ratio = norms::schreier_norm(&image, &op.codomain_xi, &wide)?.value / norms::schreier_norm(&u, &op.domain_xi, &wide)?.value;
    let pass = ratio < *eps;
    Ok(FactorWitness { factor: s, coefficients: Some(a), ratio: Some(ratio.to_string()), failure: None, pass })
}

/// Finite sections of `T_s = R_s P_s`, mapping the level-`rho_s` pair onto the level-`rho_{s-1}`
/// pair, for `R(xi) = {rho_0 < ... < rho_k}`.
pub fn build_ss_chain(xi: &Ordinal, horizon: usize, eps: &Q, caps: &Caps) -> Result<SsChain> {
    let levels = xi.r_set();
    if levels.len() < 2 {
        return Err(domain(format!("R({xi}) has a single element")));
    }
    let pairs = levels
        .iter()
        .map(|rho| build_pair(xi, &left_part(xi, rho)?, &IndexStream::naturals(), horizon, caps))
        .collect::<Result<Vec<_>>>()?;
    let mut operators = Vec::new();
    for s in 1..pairs.len() {
        let (lower, upper) = (&pairs[s - 1], &pairs[s]);
        let mut op = FiniteOperator::new(xi.clone(), xi.clone());
        for i in 0..horizon {
            let pairing = upper.xstar[i].dot(&upper.x[i]);
            op = op.add(&FiniteOperator::rank_one(&lower.x[i], &upper.xstar[i].scale(&pairing.recip()), xi, xi))?;
        }
        operators.push(op);
    }
    let composite = operators.iter().skip(1).try_fold(operators[0].clone(), |acc, op| acc.compose(op))?;
    let top = pairs.last().expect("two levels");
    let bottom = &pairs[0];
    let composite_fixes = (0..horizon).all(|i| composite.apply(&top.x[i]) == bottom.x[i]);
    let wide = Caps { support: caps.support.max(64), ..*caps };
    let image_norms =
        bottom.x.iter().map(|v| Ok(norms::schreier_norm(v, xi, &wide)?.value)).collect::<Result<Vec<Q>>>()?;
    let min_image_norm = image_norms.iter().min().cloned().unwrap_or_else(Q::zero);
    let mut min_separation: Option<Q> = None;
    for i in 0..horizon {
        for j in i + 1..horizon {
            let diff = bottom.x[i].add(&bottom.x[j].scale(&-Q::one()));
            let d = norms::schreier_norm(&diff, xi, &Caps { support: caps.support.max(diff.len()), ..*caps })?.value;
            min_separation = Some(min_separation.map_or(d.clone(), |m: Q| m.min(d)));
        }
    }
    let witnesses = (1..pairs.len())
        .map(|s| match factor_witness(s, &operators[s - 1], &pairs[s], &levels[s - 1], eps, caps) {
            Ok(w) => w,
            Err(e) => FactorWitness { factor: s, coefficients: None, ratio: None, failure: Some(e.to_string()), pass: false },
        })
        .collect::<Vec<_>>();
    let pass = composite_fixes && min_image_norm.is_one() && witnesses.iter().all(|w| w.pass);
    Ok(SsChain {
        levels,
        operators,
        composite_fixes,
        min_image_norm,
        min_separation: min_separation.unwrap_or_else(Q::zero),
        witnesses,
        pass,
    })
}

/// The closed interval `[lo, hi]` of integers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct Interval {
    pub lo: u64,
    pub hi: u64,
}

impl Interval {
    pub fn len(&self) -> u64 {
        self.hi + 1 - self.lo
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// A finite union of disjoint intervals, kept sorted; stands in for sets too large to list.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
#[serde(transparent)]
pub struct IntervalUnion {
    parts: Vec<Interval>,
}

impl IntervalUnion {
    pub fn new(mut parts: Vec<Interval>) -> Result<Self> {
        parts.sort();
        if parts.iter().any(|p| p.lo == 0 || p.lo > p.hi) {
            return Err(domain("intervals must be nonempty and start at 1 or later"));
        }
        let mut merged: Vec<Interval> = Vec::with_capacity(parts.len());
        for p in parts {
            match merged.last_mut() {
                Some(m) if p.lo <= m.hi => return Err(domain(format!("intervals {m:?} and {p:?} overlap"))),
                Some(m) if p.lo == m.hi + 1 => m.hi = p.hi,
                _ => merged.push(p),
            }
        }
        Ok(IntervalUnion { parts: merged })
    }

    pub fn parts(&self) -> &[Interval] {
        &self.parts
    }

    pub fn len(&self) -> u64 {
        self.parts.iter().map(Interval::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    /// `tau_xi` of the union, walking block lengths instead of elements where possible.
    pub fn tau(&self, xi: &Ordinal) -> Result<usize> {
        let len = usize::try_from(self.len()).map_err(|_| resource("set too large"))?;
        Ok(families::tau_of_sequence(self, len, xi))
    }

    /// Lists the elements, refusing sets with more than `cap` of them.
    pub fn to_set(&self, cap: u64) -> Result<FiniteSet> {
        if self.len() > cap {
            return Err(resource(format!("{} elements exceed cap {cap}", self.len())));
        }
        FiniteSet::new(self.parts.iter().flat_map(|p| p.lo..=p.hi).collect())
    }
}

impl Sequence for IntervalUnion {
    fn at(&self, i: usize) -> Option<u64> {
        let mut rest = i as u64;
        for p in &self.parts {
            if rest < p.len() {
                return Some(p.lo + rest);
            }
            rest -= p.len();
        }
        None
    }
}

/// One set `F_n` of the dyadic family with its `tau`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DyadicMember {
    pub interval: Interval,
    pub tau: usize,
}

/// Largest element a constructed interval may reach.
const INTERVAL_CEILING: u64 = 1 << 62;

/// `F_1 < ... < F_n` with `min F_{i+1} > max F_i`, `min F_{i+1} > sum_{j<=i} |F_j|` and
/// `tau(F_{i+1}) > i * sum_{j<=i} tau(F_j)`; each `F_{i+1}` is the union of just enough
/// successive maximal `S_xi` sets, so its `tau` is that count.
pub fn dyadic_family(xi: &Ordinal, n: usize, caps: &Caps) -> Result<Vec<DyadicMember>> {
    if n as u64 > caps.horizon {
        return Err(resource(format!("n = {n} exceeds cap {}", caps.horizon)));
    }
    let mut out: Vec<DyadicMember> = Vec::with_capacity(n);
    for i in 0..n {
        if i == 0 {
            out.push(DyadicMember { interval: Interval { lo: 1, hi: 1 }, tau: 1 });
            continue;
        }
        let size: u64 = out.iter().map(|m| m.interval.len()).sum();
        let start = out.last().expect("i > 0").interval.hi.max(size) + 1;
        let need = i * out.iter().map(|m| m.tau).sum::<usize>() + 1;
        let room = IntervalUnion::new(vec![Interval { lo: start, hi: INTERVAL_CEILING }])?;
        let room_len = (INTERVAL_CEILING - start + 1) as usize;
        let mut walker = Walker::new(&room, room_len, u64::MAX);
        let mut pos = 0usize;
        for _ in 0..need {
            let step = walker.block_len(pos, xi)?;
            pos += step;
            if pos >= room_len {
                return Err(resource(format!(
                    "F_{} needs {need} maximal S_{xi} sets from {start}, reaching past 2^62",
                    i + 1
                )));
            }
        }
        let interval = Interval { lo: start, hi: start + pos as u64 - 1 };
        let tau = IntervalUnion::new(vec![interval])?.tau(xi)?;
        out.push(DyadicMember { interval, tau });
    }
    if let Some(failure) = dyadic_failure(&out) {
        return Err(Error::Certificate(failure));
    }
    Ok(out)
}

/// The first violated condition of the dyadic family, if any.
pub fn dyadic_failure(family: &[DyadicMember]) -> Option<String> {
    for i in 1..family.len() {
        let (prev, next) = (&family[..i], &family[i].interval);
        let size: u64 = prev.iter().map(|m| m.interval.len()).sum();
        let taus: usize = prev.iter().map(|m| m.tau).sum();
        if next.lo <= prev[i - 1].interval.hi {
            return Some(format!("min F_{} does not exceed max F_{i}", i + 1));
        }
        if next.lo <= size {
            return Some(format!("min F_{} does not exceed the total size {size}", i + 1));
        }
        if family[i].tau <= i * taus {
            return Some(format!("tau(F_{}) = {} is not above {i} * {taus}", i + 1, family[i].tau));
        }
    }
    None
}

/// `J_A = ∪_{n∈A} F_n` for 1-based indices `A`.
pub fn branch_union(family: &[DyadicMember], indices: &FiniteSet) -> Result<IntervalUnion> {
    let parts = indices
        .iter()
        .map(|k| {
            family
                .get(k as usize - 1)
                .map(|m| m.interval)
                .ok_or_else(|| domain(format!("index {k} is past the family length {}", family.len())))
        })
        .collect::<Result<Vec<_>>>()?;
    IntervalUnion::new(parts)
}

/// A map `psi` that is constant on each of finitely many disjoint intervals.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IndexMap {
    pieces: Vec<(Interval, u64)>,
}

impl IndexMap {
    pub fn new(mut pieces: Vec<(Interval, u64)>) -> Result<Self> {
        pieces.sort();
        IntervalUnion::new(pieces.iter().map(|(i, _)| *i).collect())?;
        if pieces.iter().any(|(_, t)| *t == 0) {
            return Err(domain("targets must be positive"));
        }
        Ok(IndexMap { pieces })
    }

    /// A table `l ↦ psi(l)`.
    pub fn from_table(table: Vec<(u64, u64)>) -> Result<Self> {
        Self::new(table.into_iter().map(|(l, m)| (Interval { lo: l, hi: l }, m)).collect())
    }

    pub fn identity(n: u64) -> Self {
        Self::from_table((1..=n).map(|i| (i, i)).collect()).expect("distinct positive")
    }

    /// Identity on `[1, n]` except that `[lo, hi]` collapses to `lo`.
    pub fn collapse(n: u64, lo: u64, hi: u64) -> Result<Self> {
        let mut pieces: Vec<(Interval, u64)> =
            (1..=n).filter(|i| *i < lo || *i > hi).map(|i| (Interval { lo: i, hi: i }, i)).collect();
        pieces.push((Interval { lo, hi }, lo));
        Self::new(pieces)
    }

    pub fn image(&self) -> FiniteSet {
        FiniteSet::from_unsorted(self.pieces.iter().map(|(_, t)| *t).collect()).expect("positive")
    }

    pub fn preimage(&self, f: &FiniteSet) -> IntervalUnion {
        IntervalUnion::new(self.pieces.iter().filter(|(_, t)| f.contains(*t)).map(|(i, _)| *i).collect())
            .expect("pieces are disjoint")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InjectivityReport {
    #[serde(serialize_with = "ser_q")]
    pub max_ratio: Q,
    pub witness: FiniteSet,
    pub preimage_tau: usize,
    pub checked: usize,
}

/// Members of `S_xi` inside `ground`, found depth first (the family is hereditary).
fn members_within(ground: &[u64], xi: &Ordinal, cap: u64) -> Result<Vec<FiniteSet>> {
    let mut out = vec![FiniteSet::empty()];
    let mut stack: Vec<(Vec<u64>, usize)> = vec![(vec![], 0)];
    while let Some((set, from)) = stack.pop() {
        for k in from..ground.len() {
            let mut next = set.clone();
            next.push(ground[k]);
            let candidate = FiniteSet::new(next.clone()).expect("increasing");
            if families::is_member(&candidate, xi) {
                if out.len() as u64 >= cap {
                    return Err(resource(format!("more than {cap} sets to enumerate")));
                }
                out.push(candidate);
                stack.push((next, k + 1));
            }
        }
    }
    Ok(out)
}

/// `max tau_xi(psi^{-1}(F)) / max(1, tau_xi(F))` over `F ∈ S_xi` inside the image of `psi`
/// and `[1, horizon]`. A growth certificate at this horizon, not a decision of the supremum.
pub fn xi_injectivity_report(psi: &IndexMap, xi: &Ordinal, horizon: u64, caps: &Caps) -> Result<InjectivityReport> {
    let ground: Vec<u64> = psi.image().iter().filter(|&v| v <= horizon).collect();
    let family = members_within(&ground, xi, caps.materialize)?;
    let taus = par::try_map(&family, |f| psi.preimage(f).tau(xi))?;
    let mut best = InjectivityReport { max_ratio: Q::zero(), witness: FiniteSet::empty(), preimage_tau: 0, checked: family.len() };
    for (f, t) in family.iter().zip(taus) {
        let ratio = Q::new(BigInt::from(t), BigInt::from(families::tau(f, xi).max(1)));
        if ratio > best.max_ratio {
            best = InjectivityReport { max_ratio: ratio, witness: f.clone(), preimage_tau: t, checked: best.checked };
        }
    }
    Ok(best)
}

/// `psi` collapsing every `F_n` onto `min F_n`.
pub fn dyadic_collapse(family: &[DyadicMember]) -> Result<IndexMap> {
    IndexMap::new(family.iter().map(|m| (m.interval, m.interval.lo)).collect())
}
