//! Schreier pairs `((x_i), (x*_i))` built from repeated averages, and their
//! finite-horizon certificates.
//!
//! [`build_pair`] takes `x_i = S^iota_{N,K(i)}` and `x*_i = 1_{supp x_i}`, where `N` is a tail
//! of `L` on which `S_iota` sits inside `S_xi` and `K` makes unions over `S_rho` land in `S_xi`.
//! The thinning step of the general subsequence argument asks for doubly exponential
//! growth of the supports, so it is only reported as a diagnostic; the operator bound it
//! would guarantee is checked directly by [`verify_pair`].

use num_traits::{One, Zero};
use serde::{Serialize, Serializer};

use crate::averages::{self, repeated_average};
use crate::error::{domain, resource, Error, Result};
use crate::families::{self, select_union_stream, tail_bound_empirical};
use crate::norms::{self, ser_q, SearchReport};
use crate::operators::{self, FiniteOperator, OpNorm};
use crate::ordinal::Ordinal;
use crate::par;
use crate::set::FiniteSet;
use crate::stream::IndexStream;
use crate::vector::{q, RationalVector, Q};
use crate::Caps;

pub(crate) fn ser_qs<S: Serializer>(v: &[Q], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(|c| c.to_string()))
}

/// The thinning parameter `eta`; partial-sum operators are then bounded by `2(1 + eta) = 3`.
pub fn eta() -> Q {
    q(1, 2)
}

/// How far the constructed sequence is from the thinning condition
/// `|x_j|_{max supp x_i} < eta / (max supp x_i * 2^(i+j))` for `i < j`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Thinning {
    #[serde(serialize_with = "ser_q")]
    pub eta: Q,
    pub checked: usize,
    pub satisfied: usize,
    /// First `(i, j)` (1-based) violating the condition.
    pub first_violation: Option<(usize, usize)>,
}

/// How the pair was obtained.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Construction {
    /// `m` with `S_iota ∩ [m, ∞) ⊆ S_xi`, certified by enumeration up to `certified_up_to`.
    pub tail_start: u64,
    pub certified_up_to: u64,
    /// `K(1), ..., K(count)`: which averages of `N` were kept.
    pub selection: Vec<u64>,
    /// Number of `F ∈ S_rho ∩ [1, count]` whose support unions were checked to lie in `S_xi`.
    pub unions_checked: usize,
    pub thinning: Thinning,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SchreierPair {
    pub xi: Ordinal,
    pub iota: Ordinal,
    pub rho: Ordinal,
    /// Indices of the `e^rho` basis the pair is compared with.
    pub j: Vec<u64>,
    pub x: Vec<RationalVector>,
    pub xstar: Vec<RationalVector>,
    pub horizon: usize,
    pub construction: Construction,
}

impl SchreierPair {
    /// `sum_{i<=n} x_i ⊗ x*_i / x*_i(x_i)` as a finite matrix on `X_xi`.
    pub fn partial_sum(&self, n: usize) -> Result<FiniteOperator> {
        if n > self.horizon {
            return Err(domain(format!("n = {n} exceeds the horizon {}", self.horizon)));
        }
        let mut op = FiniteOperator::new(self.xi.clone(), self.xi.clone());
        for (i, (x, xs)) in self.x.iter().zip(&self.xstar).take(n).enumerate() {
            let pairing = xs.dot(x);
            if pairing.is_zero() {
                return Err(domain(format!("x*_{}(x_{}) = 0", i + 1, i + 1)));
            }
            op = op.add(&FiniteOperator::rank_one(x, &xs.scale(&pairing.recip()), &self.xi, &self.xi))?;
        }
        Ok(op)
    }
}

fn union_of(supports: &[FiniteSet], f: &FiniteSet) -> FiniteSet {
    f.iter().fold(FiniteSet::empty(), |acc, i| acc.union(&supports[i as usize - 1]))
}

/// The pair of the existence construction, truncated to `count` terms.
pub fn build_pair(xi: &Ordinal, iota: &Ordinal, l: &IndexStream, count: usize, caps: &Caps) -> Result<SchreierPair> {
    if iota > xi {
        return Err(domain(format!("iota = {iota} exceeds xi = {xi}")));
    }
    if count as u64 > caps.horizon {
        return Err(resource(format!("count {count} exceeds cap {}", caps.horizon)));
    }
    let rho = xi.left_subtract(iota)?;
    let tail_start = tail_bound_empirical(iota, xi, caps.certificate).ok_or_else(|| {
        Error::Certificate(format!("no m <= {} with S_{iota} ∩ [m, ∞) ⊆ S_{xi}", caps.certificate))
    })?;
    let n = l.at_least(tail_start);
    let k = if rho.is_zero() || count == 0 {
        IndexStream::naturals()
    } else {
        select_union_stream(iota, &rho, &IndexStream::naturals(), 1, count, caps.certificate)?
    };
    let selection = k.take(count);
    let x: Vec<RationalVector> = selection
        .iter()
        .map(|&b| repeated_average(iota, &n, b as usize, caps))
        .collect::<Result<_>>()?;
    let supports: Vec<FiniteSet> = x.iter().map(RationalVector::support).collect();
    for (i, s) in supports.iter().enumerate() {
        if !families::is_member(s, iota) || !families::is_member(s, xi) {
            return Err(Error::Certificate(format!("supp x_{} = {s} is not in S_{iota} ∩ S_{xi}", i + 1)));
        }
    }
    let family = families::enumerate_members(&rho, count as u64, caps.materialize)?;
    let failures = par::map(&family, |f| !families::is_member(&union_of(&supports, f), xi));
    if let Some((f, _)) = family.iter().zip(&failures).find(|(_, &bad)| bad) {
        return Err(Error::Certificate(format!(
            "the supports indexed by F = {f} ∈ S_{rho} have union {} outside S_{xi}",
            union_of(&supports, f)
        )));
    }
    let xstar = supports.iter().map(RationalVector::indicator).collect();
    let thinning = thinning_report(&x, iota, caps)?;
    Ok(SchreierPair {
        xi: xi.clone(),
        iota: iota.clone(),
        rho,
        j: (1..=count as u64).collect(),
        x,
        xstar,
        horizon: count,
        construction: Construction {
            tail_start,
            certified_up_to: caps.certificate,
            selection,
            unions_checked: family.len(),
            thinning,
        },
    })
}

fn thinning_report(x: &[RationalVector], iota: &Ordinal, caps: &Caps) -> Result<Thinning> {
    let mut report = Thinning { eta: eta(), checked: 0, satisfied: 0, first_violation: None };
    if iota.is_zero() {
        // no level below iota: the condition is vacuous
        return Ok(report);
    }
    for i in 0..x.len() {
        let top = x[i].support().max_elem();
        for j in i + 1..x.len() {
            let seminorm = averages::selection_seminorm(&x[j], iota, top, caps)?;
            let bound = eta() / Q::from_integer((top as i64).into()) / Q::from_integer(num_bigint::BigInt::from(2).pow((i + j + 2) as u32));
            report.checked += 1;
            if seminorm < bound {
                report.satisfied += 1;
            } else if report.first_violation.is_none() {
                report.first_violation = Some((i + 1, j + 1));
            }
        }
    }
    Ok(report)
}

/// Pass/fail with the first failure spelled out.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub pass: bool,
    pub failure: Option<String>,
}

impl Check {
    fn from_failure(failure: Option<String>) -> Self {
        Check { pass: failure.is_none(), failure }
    }
}

/// Best constants found for `(u_i)` against a comparison sequence: `lower <= ratio <= upper`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Equivalence {
    #[serde(serialize_with = "ser_q")]
    pub lower: Q,
    #[serde(serialize_with = "ser_q")]
    pub upper: Q,
    pub checked: usize,
}

/// Sampling and thresholds for [`verify_pair`].
#[derive(Debug, Clone, PartialEq)]
pub struct VerifyOptions {
    pub theta_expected: Q,
    /// Coefficient vectors per primal equivalence search.
    pub samples: usize,
    /// Coefficient vectors per dual equivalence search (each one is an LP).
    pub dual_samples: usize,
    pub seed: u64,
    /// Bound for the partial-sum operators.
    pub bound: Q,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions { theta_expected: Q::one(), samples: 64, dual_samples: 6, seed: 7, bound: qi2() * (Q::one() + eta()) }
    }
}

fn qi2() -> Q {
    q(2, 1)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairCertificate {
    pub biorthogonal: Check,
    pub absolute_values: Check,
    #[serde(serialize_with = "ser_q")]
    pub theta: Q,
    pub theta_ok: bool,
    /// `||sum_{i∈F} a_i x_i||_xi / sum |a_i|` over `F ∈ S_rho`; the worst ratio must be exactly 1.
    pub ell1_spreading: SearchReport,
    /// `||sum_{i∈F} x*_i||_{xi,*}` over `F ∈ S_rho`; the worst value must be exactly 1.
    pub c0_spreading: SearchReport,
    /// `||sum a_i x_i||_xi / ||sum a_i e_{J(i)}||_rho`.
    pub primal_equivalence: Equivalence,
    /// `||sum a_i x*_i||_{xi,*} / ||sum a_i f_{J(i)}||_{rho,*}`.
    pub dual_equivalence: Equivalence,
    /// Exact norms of `sum_{i<=n} x_i ⊗ x*_i` for `n = 1..horizon`.
    #[serde(serialize_with = "ser_qs")]
    pub partial_sums: Vec<Q>,
    #[serde(serialize_with = "ser_q")]
    pub partial_sum_max: Q,
    #[serde(serialize_with = "ser_q")]
    pub partial_sum_bound: Q,
    pub partial_sums_ok: bool,
    pub pass: bool,
}

fn comparison(pair: &SchreierPair) -> Vec<RationalVector> {
    pair.j.iter().map(|&k| RationalVector::basis(k)).collect()
}

fn ratio_range(ratios: &[Q]) -> (Q, Q) {
    let lower = ratios.iter().min().cloned().unwrap_or_else(Q::one);
    let upper = ratios.iter().max().cloned().unwrap_or_else(Q::one);
    (lower, upper)
}

/// Conditions (i)-(vi) of a Schreier pair, checked exactly up to the pair's horizon.
pub fn verify_pair(pair: &SchreierPair, opts: &VerifyOptions, caps: &Caps) -> Result<PairCertificate> {
    let n = pair.x.len();
    if pair.xstar.len() != n {
        return Err(domain("x and x* have different lengths"));
    }
    let mut bi_failure = None;
    'outer: for (i, xs) in pair.xstar.iter().enumerate() {
        for (j, x) in pair.x.iter().enumerate() {
            if i != j && !xs.dot(x).is_zero() {
                bi_failure = Some(format!("x*_{}(x_{}) = {}", i + 1, j + 1, xs.dot(x)));
                break 'outer;
            }
        }
    }
    let abs_failure = pair
        .xstar
        .iter()
        .zip(&pair.x)
        .position(|(xs, x)| xs.dot(x) != xs.abs().dot(&x.abs()))
        .map(|i| format!("x*_{0}(x_{0}) differs from |x*_{0}|(|x_{0}|)", i + 1));
    let theta = pair.xstar.iter().zip(&pair.x).map(|(xs, x)| xs.dot(x)).min().unwrap_or_else(Q::one);
    let wide = Caps { support: caps.support.max(64), ..*caps };

    let ell1_spreading = norms::ell1_sm_check(&pair.x, &pair.rho, &pair.xi, &Q::one(), opts.samples, opts.seed, &wide)?;
    let c0_spreading = norms::c0_sm_check(&pair.xstar, &pair.rho, &pair.xi, &Q::one(), &wide)?;

    let basis = comparison(pair);
    let grid = norms::coefficient_grid(n, opts.samples, opts.seed, true);
    let primal = par::try_map(&grid, |a| -> Result<Q> {
        let top = norms::schreier_norm(&norms::combine(&pair.x, a), &pair.xi, &wide)?.value;
        Ok(top / norms::schreier_norm(&norms::combine(&basis, a), &pair.rho, &wide)?.value)
    })?;
    let (lower, upper) = ratio_range(&primal);
    let primal_equivalence = Equivalence { lower, upper, checked: grid.len() };

    let dual_grid = norms::coefficient_grid(n, opts.dual_samples, opts.seed ^ 0x9e37, true);
    let dual = par::try_map(&dual_grid, |a| -> Result<Q> {
        let top = norms::dual_norm(&norms::combine(&pair.xstar, a), &pair.xi, &wide)?.value;
        Ok(top / norms::dual_norm(&norms::combine(&basis, a), &pair.rho, &wide)?.value)
    })?;
    let (lower, upper) = ratio_range(&dual);
    let dual_equivalence = Equivalence { lower, upper, checked: dual_grid.len() };

    // partial sums divide by x*_i(x_i), so they are only formed for a biorthogonal system
    let partial_sums = if bi_failure.is_none() {
        (1..=n).map(|k| Ok(operators::op_norm(&pair.partial_sum(k)?, &wide)?.upper)).collect::<Result<Vec<Q>>>()?
    } else {
        Vec::new()
    };
    let partial_sum_max = partial_sums.iter().max().cloned().unwrap_or_else(Q::zero);
    let partial_sums_ok = bi_failure.is_none() && partial_sum_max <= opts.bound;

    let theta_ok = theta >= opts.theta_expected;
    let ell1_ok = ell1_spreading.worst == Q::one();
    let c0_ok = c0_spreading.worst == Q::one();
    let pass = bi_failure.is_none() && abs_failure.is_none() && theta_ok && ell1_ok && c0_ok && partial_sums_ok;
    Ok(PairCertificate {
        biorthogonal: Check::from_failure(bi_failure),
        absolute_values: Check::from_failure(abs_failure),
        theta,
        theta_ok,
        ell1_spreading,
        c0_spreading,
        primal_equivalence,
        dual_equivalence,
        partial_sums,
        partial_sum_max,
        partial_sum_bound: opts.bound.clone(),
        partial_sums_ok,
        pass,
    })
}

/// Finite section of the projection `sum_{i<=n} x_i ⊗ x*_i / x*_i(x_i)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProjectionReport {
    pub n: usize,
    pub norm: OpNorm,
    /// `P x_j = x_j` for every `j <= n`.
    pub idempotent: Check,
}

pub fn pair_projection_norm(pair: &SchreierPair, n: usize, caps: &Caps) -> Result<ProjectionReport> {
    let op = pair.partial_sum(n)?;
    let failure = pair.x.iter().take(n).enumerate().find_map(|(j, x)| {
        let image = op.apply(x);
        (image != *x).then(|| format!("P x_{} = {image} differs from x_{}", j + 1, j + 1))
    });
    let wide = Caps { support: caps.support.max(64), ..*caps };
    Ok(ProjectionReport { n, norm: operators::op_norm(&op, &wide)?, idempotent: Check::from_failure(failure) })
}

/// One row of [`beta_profile`]: `||x_i||_beta` for every `i`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProfileRow {
    pub gamma: Ordinal,
    pub beta: Ordinal,
    #[serde(serialize_with = "ser_qs")]
    pub norms: Vec<Q>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BetaProfile {
    pub label: &'static str,
    pub rows: Vec<ProfileRow>,
    #[serde(serialize_with = "ser_q")]
    pub threshold: Q,
    /// Largest `gamma ∈ I(xi)` all of whose probes (and those of smaller `gamma`) end below the threshold.
    pub iota_estimate: Ordinal,
}

fn probes(gamma: &Ordinal) -> Result<Vec<Ordinal>> {
    if gamma.is_zero() {
        return Ok(vec![]);
    }
    match gamma.pred() {
        Some(p) if p.is_zero() => Ok(vec![p]),
        Some(p) => Ok(vec![Ordinal::zero(), p]),
        None => (1..=3).map(|k| gamma.fundamental(k)).collect(),
    }
}

/// `||x_i||_beta` along canonical probes `beta < gamma` for every `gamma ∈ I(xi)`.
/// A finite-horizon heuristic for the index `iota` of a block sequence.
pub fn beta_profile(x: &[RationalVector], xi: &Ordinal, threshold: &Q, caps: &Caps) -> Result<BetaProfile> {
    let mut rows = Vec::new();
    let mut estimate = Ordinal::zero();
    let mut decaying = true;
    for gamma in xi.i_set() {
        let mut all_small = true;
        for beta in probes(&gamma)? {
            let norms = x
                .iter()
                .map(|v| {
                    let wide = Caps { support: caps.support.max(v.len()), ..*caps };
                    Ok(norms::schreier_norm(v, &beta, &wide)?.value)
                })
                .collect::<Result<Vec<Q>>>()?;
            all_small &= norms.last().is_some_and(|last| last < threshold);
            rows.push(ProfileRow { gamma: gamma.clone(), beta, norms });
        }
        decaying &= all_small;
        if decaying {
            estimate = gamma;
        }
    }
    Ok(BetaProfile { label: "finite-horizon heuristic", rows, threshold: threshold.clone(), iota_estimate: estimate })
}

/// Convex blocks `y_k = sum_i S^lambda_{N,k}(i) x_i` and `y*_k = sum_{i∈supp} x*_i` with
/// `lambda + delta = rho`, turning a `rho`-pair into a `delta`-pair.
pub fn convex_block_descend(pair: &SchreierPair, delta: &Ordinal, count: usize, caps: &Caps) -> Result<SchreierPair> {
    if !pair.rho.r_set().contains(delta) {
        return Err(domain(format!("{delta} is not in R({})", pair.rho)));
    }
    if *delta == pair.rho {
        return Ok(pair.clone());
    }
    let lambda = pair
        .rho
        .i_set()
        .into_iter()
        .find(|l| pair.rho.left_subtract(l).is_ok_and(|r| r == *delta))
        .expect("delta ∈ R(rho)");
    let mut x = Vec::with_capacity(count);
    let mut xstar = Vec::with_capacity(count);
    let mut selection = Vec::with_capacity(count);
    for k in 1..=count {
        let weights = repeated_average(&lambda, &IndexStream::naturals(), k, caps)?;
        let top = weights.support().max_elem() as usize;
        if top > pair.x.len() {
            return Err(resource(format!("block {k} needs x_{top}, past the pair's horizon {}", pair.x.len())));
        }
        let mut y = RationalVector::zero();
        let mut ys = RationalVector::zero();
        for (i, w) in weights.entries() {
            y = y.add(&pair.x[*i as usize - 1].scale(w));
            ys = ys.add(&pair.xstar[*i as usize - 1]);
        }
        selection.push(weights.support().min_elem().expect("averages are nonempty"));
        x.push(y);
        xstar.push(ys);
    }
    Ok(SchreierPair {
        xi: pair.xi.clone(),
        iota: pair.iota.add(&lambda),
        rho: delta.clone(),
        j: (1..=count as u64).collect(),
        x,
        xstar,
        horizon: count,
        construction: Construction {
            tail_start: pair.construction.tail_start,
            certified_up_to: pair.construction.certified_up_to,
            selection,
            unions_checked: 0,
            thinning: Thinning { eta: eta(), checked: 0, satisfied: 0, first_violation: None },
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ordinal::parse_ordinal;

    fn o(s: &str) -> Ordinal {
        parse_ordinal(s).unwrap()
    }

    fn quick() -> VerifyOptions {
        VerifyOptions { samples: 24, dual_samples: 3, ..VerifyOptions::default() }
    }

    #[test]
    fn basis_pair_at_first_level() {
        let p = build_pair(&o("1"), &o("0"), &IndexStream::naturals(), 4, &Caps::default()).unwrap();
        assert_eq!(p.rho, o("1"));
        for (i, (x, xs)) in p.x.iter().zip(&p.xstar).enumerate() {
            let k = p.construction.selection[i];
            assert_eq!(*x, RationalVector::basis(k));
            assert_eq!(xs, x);
        }
        let cert = verify_pair(&p, &quick(), &Caps::default()).unwrap();
        assert!(cert.pass, "{cert:?}");
        assert_eq!(cert.theta, Q::one());
    }

    #[test]
    fn averages_with_c0_behaviour() {
        let p = build_pair(&o("1"), &o("1"), &IndexStream::naturals(), 5, &Caps::default()).unwrap();
        assert!(p.rho.is_zero());
        // every union of supports indexed by a nonempty A is normed by one average
        for mask in 1u64..32 {
            let a = FiniteSet::from_mask(mask);
            let sum = a.iter().fold(RationalVector::zero(), |acc, i| acc.add(&p.x[i as usize - 1]));
            let wide = Caps { support: 64, ..Caps::default() };
            assert_eq!(norms::schreier_norm(&sum, &o("1"), &wide).unwrap().value, Q::one());
        }
        let cert = verify_pair(&p, &quick(), &Caps::default()).unwrap();
        assert!(cert.pass, "{cert:?}");
        assert!(cert.partial_sum_max <= q(3, 1));
    }

    #[test]
    fn second_level_pair_is_ell1_on_s1() {
        let p = build_pair(&o("2"), &o("1"), &IndexStream::naturals(), 5, &Caps::default()).unwrap();
        assert_eq!(p.rho, o("1"));
        let cert = verify_pair(&p, &quick(), &Caps::default()).unwrap();
        assert!(cert.biorthogonal.pass && cert.absolute_values.pass);
        assert_eq!(cert.theta, Q::one());
        assert_eq!(cert.ell1_spreading.worst, Q::one());
        assert_eq!(cert.c0_spreading.worst, Q::one());
        assert!(cert.partial_sum_max <= q(3, 1), "{:?}", cert.partial_sums);
        assert!(cert.pass);
        // the primal sequence dominates the e^1 basis with constant 1
        assert!(cert.primal_equivalence.lower >= Q::one());
    }

    #[test]
    fn corrupted_pair_is_caught() {
        let mut p = build_pair(&o("2"), &o("1"), &IndexStream::naturals(), 3, &Caps::default()).unwrap();
        p.xstar.swap(0, 1);
        let cert = verify_pair(&p, &quick(), &Caps::default()).unwrap();
        assert!(!cert.pass);
        assert_eq!(cert.biorthogonal.failure.as_deref(), Some("x*_1(x_2) = 1"));
        let proj = pair_projection_norm(&p, 2, &Caps::default());
        assert!(proj.is_err());
    }

    #[test]
    fn projections() {
        let p = build_pair(&o("2"), &o("1"), &IndexStream::naturals(), 4, &Caps::default()).unwrap();
        let empty = pair_projection_norm(&p, 0, &Caps::default()).unwrap();
        assert_eq!(empty.norm.upper, Q::zero());
        let one = pair_projection_norm(&p, 1, &Caps::default()).unwrap();
        assert_eq!(one.norm.upper, Q::one());
        assert!(one.idempotent.pass);
        let mut bad = p.clone();
        bad.x[1] = bad.x[1].scale(&q(2, 1));
        bad.xstar[1] = bad.xstar[1].scale(&q(1, 2));
        bad.x[0] = bad.x[0].add(&bad.x[1]);
        let report = pair_projection_norm(&bad, 2, &Caps::default()).unwrap();
        assert!(!report.idempotent.pass);
    }

    #[test]
    fn profiles() {
        let basis: Vec<RationalVector> = (1..=4).map(RationalVector::basis).collect();
        let prof = beta_profile(&basis, &o("2"), &q(1, 4), &Caps::default()).unwrap();
        assert_eq!(prof.iota_estimate, Ordinal::zero());
        assert!(prof.rows.iter().filter(|r| r.beta.is_zero()).all(|r| r.norms.iter().all(|v| v.is_one())));

        let averages: Vec<RationalVector> =
            (1..=6).map(|k| repeated_average(&o("1"), &IndexStream::naturals(), k, &Caps::default()).unwrap()).collect();
        let prof = beta_profile(&averages, &o("2"), &q(1, 4), &Caps::default()).unwrap();
        assert_eq!(prof.iota_estimate, o("1"));
        let row = prof.rows.iter().find(|r| r.gamma == o("1")).unwrap();
        assert_eq!(row.norms[5], q(1, 32));

        let mut mixed = averages.clone();
        mixed[5] = RationalVector::basis(100);
        let prof = beta_profile(&mixed, &o("2"), &q(1, 4), &Caps::default()).unwrap();
        assert_eq!(prof.iota_estimate, Ordinal::zero());
    }

    #[test]
    fn descending_to_c0() {
        let p = build_pair(&o("2"), &o("1"), &IndexStream::naturals(), 5, &Caps::default()).unwrap();
        assert_eq!(convex_block_descend(&p, &o("1"), 2, &Caps::default()).unwrap(), p);
        assert!(convex_block_descend(&p, &o("2"), 2, &Caps::default()).is_err());
        let d = convex_block_descend(&p, &o("0"), 2, &Caps::default()).unwrap();
        assert_eq!(d.rho, Ordinal::zero());
        assert_eq!(d.iota, o("2"));
        let cert = verify_pair(&d, &quick(), &Caps::default()).unwrap();
        assert!(cert.pass, "{cert:?}");
        assert!(convex_block_descend(&p, &o("0"), 3, &Caps::default()).is_err());
    }

    #[test]
    fn unreachable_cases_fail_cleanly() {
        assert!(build_pair(&o("1"), &o("2"), &IndexStream::naturals(), 2, &Caps::default()).is_err());
        // the fourth level-2 average over N is far too large to list
        assert!(matches!(
            build_pair(&o("2"), &o("2"), &IndexStream::naturals(), 5, &Caps::default()),
            Err(Error::Resource(_))
        ));
    }
}
