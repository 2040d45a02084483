//! Exact linear programming: a dense tableau simplex for small explicit programs and
//! revised-simplex column generation for covering programs with an oracle.

use std::collections::HashSet;

use num_traits::{One, Signed, Zero};

use crate::error::{domain, Error, Result};
use crate::vector::Q;

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub value: Q,
    /// Optimal primal point.
    pub primal: Vec<Q>,
    /// Optimal dual multipliers, one per row.
    pub dual: Vec<Q>,
    pub pivots: usize,
}

/// `max c·t  s.t.  A t <= b, t >= 0` with `b >= 0`, so the origin is feasible.
/// Bland's rule (least index entering, least basic index among ratio ties) rules out cycling.
pub fn maximize(c: &[Q], a: &[Vec<Q>], b: &[Q]) -> Result<LpSolution> {
    let n = c.len();
    let m = a.len();
    if b.len() != m || a.iter().any(|r| r.len() != n) {
        return Err(domain("inconsistent LP dimensions"));
    }
    if b.iter().any(|v| v.is_negative()) {
        return Err(domain("right-hand side must be nonnegative"));
    }
    let width = n + m;
    // tableau rows: [A | I | b]
    let mut tab: Vec<Vec<Q>> = a
        .iter()
        .zip(b)
        .enumerate()
        .map(|(i, (row, rhs))| {
            let mut r = row.clone();
            r.extend((0..m).map(|k| if k == i { Q::one() } else { Q::zero() }));
            r.push(rhs.clone());
            r
        })
        .collect();
    // reduced costs c_j - z_j, and the objective value in the last slot
    let mut cost: Vec<Q> = c.iter().cloned().chain((0..=m).map(|_| Q::zero())).collect();
    let mut basis: Vec<usize> = (n..width).collect();
    let mut pivots = 0;

    loop {
        let Some(enter) = (0..width).find(|&j| cost[j].is_positive()) else {
            break;
        };
        let mut leave: Option<usize> = None;
        let mut best: Option<Q> = None;
        for i in 0..m {
            if !tab[i][enter].is_positive() {
                continue;
            }
            let ratio = &tab[i][width] / &tab[i][enter];
            let better = match &best {
                None => true,
                Some(r) => ratio < *r || (ratio == *r && basis[i] < basis[leave.expect("set with best")]),
            };
            if better {
                best = Some(ratio);
                leave = Some(i);
            }
        }
        let Some(row) = leave else {
            return Err(Error::Domain("linear program is unbounded".into()));
        };
        let piv = tab[row][enter].clone();
        for v in tab[row].iter_mut() {
            *v /= &piv;
        }
        let pivot_row = tab[row].clone();
        for (i, r) in tab.iter_mut().enumerate() {
            if i == row || r[enter].is_zero() {
                continue;
            }
            let f = r[enter].clone();
            for (v, p) in r.iter_mut().zip(&pivot_row) {
                if !p.is_zero() {
                    *v -= &f * p;
                }
            }
        }
        let f = cost[enter].clone();
        for (v, p) in cost.iter_mut().zip(&pivot_row) {
            if !p.is_zero() {
                *v -= &f * p;
            }
        }
        basis[row] = enter;
        pivots += 1;
    }

    let mut primal = vec![Q::zero(); n];
    for (i, &bv) in basis.iter().enumerate() {
        if bv < n {
            primal[bv] = tab[i][width].clone();
        }
    }
    let dual: Vec<Q> = (0..m).map(|k| -cost[n + k].clone()).collect();
    let value = -cost[width].clone();
    Ok(LpSolution { value, primal, dual, pivots })
}

/// Result of [`cover_by_columns`].
#[derive(Debug, Clone, PartialEq)]
pub struct CoverSolution {
    pub value: Q,
    /// Optimal multipliers on the covering rows, i.e. the packing point.
    pub packing: Vec<Q>,
    /// Basic columns with positive weight.
    pub columns: Vec<(Vec<usize>, Q)>,
    /// Oracle calls, floating-point warm start included.
    pub rounds: usize,
    /// Exact pivots.
    pub pivots: usize,
}

#[derive(Clone, PartialEq, Eq, Hash)]
enum Column {
    Set(Vec<usize>),
    Surplus(usize),
}

impl Column {
    fn dense<T: Clone>(&self, n: usize, one: T, zero: T, minus_one: T) -> Vec<T> {
        let mut v = vec![zero; n];
        match self {
            Column::Set(e) => e.iter().for_each(|&i| v[i] = one.clone()),
            Column::Surplus(i) => v[*i] = minus_one,
        }
        v
    }

    fn is_set(&self) -> bool {
        matches!(self, Column::Set(_))
    }
}

/// Columns handed out by the oracle, deduplicated.
#[derive(Default)]
struct Pool {
    columns: Vec<Vec<usize>>,
    seen: HashSet<Vec<usize>>,
}

impl Pool {
    fn extend(&mut self, fresh: Vec<Vec<usize>>) {
        for e in fresh {
            if self.seen.insert(e.clone()) {
                self.columns.push(e);
            }
        }
    }
}

const FLOAT_TOL: f64 = 1e-9;

/// Grid for handing floating-point packing points to an exact oracle.
const FLOAT_GRID: f64 = (1u64 << 30) as f64;

/// `min sum_E y_E  s.t.  sum_{E∋i} y_E >= c_i, y >= 0` over 0/1 columns produced on demand.
///
/// `price(t)` must return columns `E` with `sum_{i∈E} t_i > 1`, and none only when none exist;
/// at that point `t` is optimal for the packing program `max c·t, sum_{i∈E} t_i <= 1`.
///
/// A floating-point pass picks a starting basis; the exact revised simplex (explicit inverse,
/// lexicographic ratio test) then finishes from it and alone decides optimality.
pub fn cover_by_columns<F>(c: &[Q], max_rounds: usize, mut price: F) -> Result<CoverSolution>
where
    F: FnMut(&[Q]) -> Result<Vec<Vec<usize>>>,
{
    let n = c.len();
    if c.iter().any(|v| v.is_negative()) {
        return Err(domain("covering demands must be nonnegative"));
    }
    let mut pool = Pool::default();
    let (warm, float_rounds) = float_basis(c, max_rounds, &mut pool, &mut price)?;
    let singletons: Vec<Column> = (0..n).map(|i| Column::Set(vec![i])).collect();
    let start = warm
        .and_then(|basis| exact_start(c, basis))
        .unwrap_or_else(|| (identity(n), singletons, c.to_vec()));
    let mut solution = exact_phase(c, start, max_rounds, &mut pool, &mut price)?;
    solution.rounds += float_rounds;
    Ok(solution)
}

fn identity(n: usize) -> Vec<Vec<Q>> {
    (0..n).map(|i| (0..n).map(|j| if i == j { Q::one() } else { Q::zero() }).collect()).collect()
}

/// Exact inverse of the basis matrix and its levels, if the basis is nonsingular and primal feasible.
fn exact_start(c: &[Q], basis: Vec<Column>) -> Option<(Vec<Vec<Q>>, Vec<Column>, Vec<Q>)> {
    let n = c.len();
    // B has the basic columns as columns; invert [B | I] by Gauss-Jordan on rows
    let cols: Vec<Vec<Q>> = basis.iter().map(|col| col.dense(n, Q::one(), Q::zero(), -Q::one())).collect();
    let mut m: Vec<Vec<Q>> = (0..n)
        .map(|i| {
            let mut row: Vec<Q> = (0..n).map(|j| cols[j][i].clone()).collect();
            row.extend((0..n).map(|j| if i == j { Q::one() } else { Q::zero() }));
            row
        })
        .collect();
    for col in 0..n {
        let p = (col..n).find(|&r| !m[r][col].is_zero())?;
        m.swap(col, p);
        let piv = m[col][col].clone();
        m[col].iter_mut().for_each(|v| *v /= &piv);
        let pivot_row = m[col].clone();
        for (r, row) in m.iter_mut().enumerate() {
            if r == col || row[col].is_zero() {
                continue;
            }
            let f = row[col].clone();
            for (v, pv) in row.iter_mut().zip(&pivot_row) {
                if !pv.is_zero() {
                    *v -= &f * pv;
                }
            }
        }
    }
    let inverse: Vec<Vec<Q>> = m.into_iter().map(|row| row[n..].to_vec()).collect();
    let level: Vec<Q> = inverse.iter().map(|row| row.iter().zip(c).map(|(a, b)| a * b).sum()).collect();
    if level.iter().any(|v| v.is_negative()) {
        return None;
    }
    Some((inverse, basis, level))
}

fn float_basis<F>(c: &[Q], max_rounds: usize, pool: &mut Pool, price: &mut F) -> Result<(Option<Vec<Column>>, usize)>
where
    F: FnMut(&[Q]) -> Result<Vec<Vec<usize>>>,
{
    use num_traits::ToPrimitive;
    let n = c.len();
    let cf: Vec<f64> = c.iter().map(|v| v.to_f64().unwrap_or(f64::NAN)).collect();
    if cf.iter().any(|v| !v.is_finite()) {
        return Ok((None, 0));
    }
    let mut inverse: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
    let mut basis: Vec<Column> = (0..n).map(|i| Column::Set(vec![i])).collect();
    // perturbed demands break the degeneracy that makes floating-point pivoting cycle
    let scale = cf.iter().cloned().fold(0.0f64, f64::max).max(1.0);
    let mut level: Vec<f64> =
        cf.iter().enumerate().map(|(i, v)| v + scale * 1e-7 * (1.0 + (i as f64 * 0.618_034).fract())).collect();
    let mut rounds = 0;
    let mut pivots = 0;
    let pivot_cap = 1000 * n + 10_000;
    loop {
        let mut t = vec![0.0f64; n];
        for (r, col) in basis.iter().enumerate() {
            if col.is_set() {
                t.iter_mut().zip(&inverse[r]).for_each(|(tj, v)| *tj += v);
            }
        }
        let load = |e: &Vec<usize>| -> f64 { e.iter().map(|&i| t[i]).sum() };
        let best_pool = |pool: &Pool| {
            pool.columns
                .iter()
                .map(|e| (load(e), e))
                .filter(|(l, _)| *l > 1.0 + FLOAT_TOL)
                .max_by(|a, b| a.0.total_cmp(&b.0))
                .map(|(_, e)| e.clone())
        };
        let entering = match t.iter().position(|v| *v < -FLOAT_TOL) {
            Some(i) => Column::Surplus(i),
            None => {
                let mut best = best_pool(pool);
                if best.is_none() {
                    if rounds >= max_rounds {
                        return Ok((Some(basis), rounds));
                    }
                    rounds += 1;
                    let grid: Vec<Q> = t
                        .iter()
                        .map(|v| {
                            let k = (v.max(0.0) * FLOAT_GRID).round() as i64;
                            Q::new(k.into(), (FLOAT_GRID as i64).into())
                        })
                        .collect();
                    pool.extend(price(&grid)?);
                    best = best_pool(pool);
                }
                match best {
                    Some(e) => Column::Set(e),
                    None => return Ok((Some(basis), rounds)),
                }
            }
        };
        if basis.contains(&entering) {
            return Ok((Some(basis), rounds));
        }
        let dense = entering.dense(n, 1.0, 0.0, -1.0);
        let direction: Vec<f64> = inverse.iter().map(|row| row.iter().zip(&dense).map(|(a, b)| a * b).sum()).collect();
        let mut leave: Option<(usize, f64)> = None;
        for r in 0..n {
            if direction[r] <= FLOAT_TOL {
                continue;
            }
            let ratio = level[r] / direction[r];
            if leave.is_none_or(|(_, best)| ratio < best - FLOAT_TOL) {
                leave = Some((r, ratio));
            }
        }
        let Some((row, step)) = leave else {
            return Ok((Some(basis), rounds));
        };
        let piv = direction[row];
        let pivot_row: Vec<f64> = inverse[row].iter().map(|v| v / piv).collect();
        for r in 0..n {
            if r == row || direction[r] == 0.0 {
                continue;
            }
            let f = direction[r];
            inverse[r].iter_mut().zip(&pivot_row).for_each(|(v, p)| *v -= f * p);
            level[r] = (level[r] - f * step).max(0.0);
        }
        inverse[row] = pivot_row;
        level[row] = step;
        basis[row] = entering;
        pivots += 1;
        if pivots > pivot_cap {
            return Ok((Some(basis), rounds));
        }
    }
}

fn exact_phase<F>(
    c: &[Q],
    start: (Vec<Vec<Q>>, Vec<Column>, Vec<Q>),
    max_rounds: usize,
    pool: &mut Pool,
    price: &mut F,
) -> Result<CoverSolution>
where
    F: FnMut(&[Q]) -> Result<Vec<Vec<usize>>>,
{
    let n = c.len();
    let (mut inverse, mut basis, mut level) = start;
    let mut rounds = 0;
    let mut pivots = 0;
    loop {
        // packing point t = c_B^T B^{-1}
        let mut t = vec![Q::zero(); n];
        for (r, col) in basis.iter().enumerate() {
            if col.is_set() {
                for (tj, v) in t.iter_mut().zip(&inverse[r]) {
                    *tj += v;
                }
            }
        }
        let load = |e: &Vec<usize>| -> Q { e.iter().map(|&i| t[i].clone()).sum() };
        let best_pool = |pool: &Pool| {
            pool.columns
                .iter()
                .map(|e| (load(e), e))
                .filter(|(l, _)| *l > Q::one())
                .max_by(|a, b| a.0.cmp(&b.0))
                .map(|(_, e)| e.clone())
        };
        let entering = match t.iter().position(|v| v.is_negative()) {
            Some(i) => Column::Surplus(i),
            None => {
                let mut best = best_pool(pool);
                if best.is_none() {
                    rounds += 1;
                    if rounds > max_rounds {
                        return Err(Error::Resource(format!(
                            "column generation did not converge in {max_rounds} oracle rounds"
                        )));
                    }
                    pool.extend(price(&t)?);
                    best = best_pool(pool);
                }
                match best {
                    Some(e) => Column::Set(e),
                    None => {
                        let value = c.iter().zip(&t).map(|(a, b)| a * b).sum();
                        let columns = basis
                            .iter()
                            .zip(&level)
                            .filter_map(|(col, y)| match col {
                                Column::Set(e) if y.is_positive() => Some((e.clone(), y.clone())),
                                _ => None,
                            })
                            .collect();
                        return Ok(CoverSolution { value, packing: t, columns, rounds, pivots });
                    }
                }
            }
        };
        let direction: Vec<Q> = inverse
            .iter()
            .map(|row| match &entering {
                Column::Set(e) => e.iter().map(|&i| row[i].clone()).sum(),
                Column::Surplus(i) => -row[*i].clone(),
            })
            .collect();
        // lexicographic ratio test on (level, inverse row) / direction; never cycles
        let scaled = |r: usize| -> Vec<Q> {
            std::iter::once(&level[r]).chain(&inverse[r]).map(|v| v / &direction[r]).collect()
        };
        let mut leave: Option<(usize, Vec<Q>)> = None;
        for r in 0..n {
            if !direction[r].is_positive() {
                continue;
            }
            if let Some((_, best)) = &leave {
                if level[r].clone() / &direction[r] > best[0] {
                    continue;
                }
            }
            let key = scaled(r);
            if leave.as_ref().is_none_or(|(_, best)| key < *best) {
                leave = Some((r, key));
            }
        }
        let Some((row, key)) = leave else {
            return Err(Error::Domain("covering program is unbounded".into()));
        };
        let step = key[0].clone();
        let piv = direction[row].clone();
        let pivot_row: Vec<Q> = inverse[row].iter().map(|v| v / &piv).collect();
        for r in 0..n {
            if r == row || direction[r].is_zero() {
                continue;
            }
            let f = &direction[r];
            for (v, p) in inverse[r].iter_mut().zip(&pivot_row) {
                if !p.is_zero() {
                    *v -= f * p;
                }
            }
            level[r] -= f * &step;
        }
        inverse[row] = pivot_row;
        level[row] = step;
        basis[row] = entering;
        pivots += 1;
    }
}
