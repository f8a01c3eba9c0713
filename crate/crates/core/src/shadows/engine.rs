//! Pair and triple sums over snapshots.
//!
//! Two interchangeable engines compute `Σ_{r≠s} Re tr(ρ̂⁽ʳ⁾ρ̂⁽ˢ⁾O)` and the
//! per-snapshot row sums needed by the jackknife:
//!
//! - `Factorized`: per-site 6×6 kernel tables, `O(K²·L)` per observable over the
//!   `K` distinct snapshots.
//! - `Accumulated`: dense `S = Σ_r ρ̂⁽ʳ⁾` on `2^L` dimensions, `O(K·4^L)`.

use std::collections::BTreeMap;

use nalgebra::Matrix2;

use super::{local_estimator, ShadowDataset};
use crate::qcore::{check_alloc, CMatrix, Pauli, PauliString, C64};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Engine {
    /// Picks the cheaper engine for the dataset.
    #[default]
    Auto,
    Factorized,
    Accumulated,
}

/// Real linear combination of Pauli strings.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PauliSum(pub Vec<(f64, PauliString)>);

impl PauliSum {
    pub fn single(p: PauliString) -> Self {
        PauliSum(vec![(1.0, p)])
    }

    pub fn identity() -> Self {
        PauliSum::single(PauliString::identity())
    }

    pub fn terms(&self) -> &[(f64, PauliString)] {
        &self.0
    }

    fn max_site(&self) -> Option<usize> {
        self.0.iter().filter_map(|(_, p)| p.max_site()).max()
    }
}

/// `total = Σ_{r≠s} k(r,s)` and `rows[c] = Σ_{s≠r} k(r,s)` for any snapshot `r`
/// of distinct-snapshot class `c`.
#[derive(Debug, Clone)]
pub struct PairStatistic {
    pub total: f64,
    pub rows: Vec<f64>,
}

/// Distinct snapshots with multiplicities, in sorted order.
#[derive(Debug, Clone)]
pub(crate) struct Classes {
    pub rows: Vec<Vec<u8>>,
    pub weights: Vec<usize>,
}

impl Classes {
    pub fn new(ds: &ShadowDataset) -> Classes {
        let mut map: BTreeMap<&[u8], usize> = BTreeMap::new();
        for r in 0..ds.m() {
            *map.entry(ds.row(r)).or_insert(0) += 1;
        }
        Classes { rows: map.keys().map(|k| k.to_vec()).collect(), weights: map.values().copied().collect() }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }
}

fn per_site_operators(p: &PauliString, l: usize) -> Vec<Pauli> {
    (0..l).map(|s| p.at(s)).collect()
}

/// `tr(ρ̂_a ρ̂_b σ)` for all codes `a, b` and Paulis `σ`.
fn kernel_tables() -> [[[C64; 6]; 6]; 4] {
    let mut t = [[[C64::new(0.0, 0.0); 6]; 6]; 4];
    for (o, p) in Pauli::ALL.iter().enumerate() {
        let sm = p.matrix();
        for a in 0..6u8 {
            for b in 0..6u8 {
                t[o][a as usize][b as usize] = (local_estimator(a) * local_estimator(b) * sm).trace();
            }
        }
    }
    t
}

fn choose(engine: Engine, classes: &Classes, l: usize, terms: usize) -> Engine {
    match engine {
        Engine::Auto => {
            let k = classes.len() as f64;
            let d2 = 4f64.powi(l as i32);
            let dense = k * d2 * (1.0 + 1.4 * terms as f64) + d2 * (2f64.powi(l as i32));
            let fact = k * k * l as f64 * terms as f64;
            if l <= 10 && dense < fact {
                Engine::Accumulated
            } else {
                Engine::Factorized
            }
        }
        e => e,
    }
}

fn check_sites(ds: &ShadowDataset, obs: &PauliSum) -> Result<()> {
    if let Some(s) = obs.max_site() {
        if s >= ds.l() {
            return Err(Error::arg(format!("observable acts on site {s} beyond L = {}", ds.l())));
        }
    }
    Ok(())
}

/// Pair sums of `Re tr(ρ̂⁽ʳ⁾ρ̂⁽ˢ⁾O)` for each observable.
pub(crate) fn pair_statistics(
    ds: &ShadowDataset,
    classes: &Classes,
    observables: &[PauliSum],
    engine: Engine,
) -> Result<Vec<PairStatistic>> {
    for o in observables {
        check_sites(ds, o)?;
    }
    let terms = observables.iter().map(|o| o.0.len()).max().unwrap_or(1);
    match choose(engine, classes, ds.l(), terms) {
        Engine::Accumulated => accumulated_pairs(ds.l(), classes, observables),
        _ => Ok(observables.iter().map(|o| factorized_pairs(ds.l(), classes, o)).collect()),
    }
}

fn factorized_pairs(l: usize, classes: &Classes, obs: &PauliSum) -> PairStatistic {
    let tables = kernel_tables();
    let ops: Vec<(f64, Vec<Pauli>)> = obs.0.iter().map(|(w, p)| (*w, per_site_operators(p, l))).collect();
    let kernel = |a: &[u8], b: &[u8]| -> f64 {
        ops.iter()
            .map(|(w, op)| {
                let mut prod = C64::new(1.0, 0.0);
                for s in 0..l {
                    prod *= tables[op[s].index()][a[s] as usize][b[s] as usize];
                }
                w * prod.re
            })
            .sum()
    };
    let rows: Vec<f64> = classes
        .rows
        .iter()
        .map(|ai| {
            let acc: f64 = classes.rows.iter().zip(&classes.weights).map(|(aj, &w)| w as f64 * kernel(ai, aj)).sum();
            acc - kernel(ai, ai)
        })
        .collect();
    let total = rows.iter().zip(&classes.weights).map(|(r, &w)| r * w as f64).sum();
    PairStatistic { total, rows }
}

/// Row-major Kronecker product of 2×2 factors, site 0 most significant.
pub(crate) fn kron_factors(factors: &[Matrix2<C64>], out: &mut Vec<C64>) {
    out.clear();
    out.push(C64::new(1.0, 0.0));
    let mut dim = 1usize;
    let mut next = Vec::new();
    for f in factors {
        let nd = 2 * dim;
        next.clear();
        next.resize(nd * nd, C64::new(0.0, 0.0));
        for y in 0..dim {
            for x in 0..dim {
                let v = out[y * dim + x];
                for b in 0..2 {
                    for c in 0..2 {
                        next[(2 * y + b) * nd + 2 * x + c] = v * f[(b, c)];
                    }
                }
            }
        }
        std::mem::swap(out, &mut next);
        dim = nd;
    }
}

/// `tr(A·N)` for the product operator `A = ⊗ factors` and a dense row-major `N`.
pub(crate) fn contract(n: &[C64], factors: &[Matrix2<C64>], scratch: &mut [Vec<C64>; 2]) -> C64 {
    let mut dim = 1usize << factors.len();
    // Σ_{x,y} A_{xy} N_{yx}; contract the most significant site each step.
    let [a, b] = scratch;
    a.clear();
    a.extend_from_slice(n);
    for f in factors {
        let h = dim / 2;
        b.clear();
        b.resize(h * h, C64::new(0.0, 0.0));
        for y0 in 0..2 {
            for x0 in 0..2 {
                let coef = f[(x0, y0)];
                if coef == C64::new(0.0, 0.0) {
                    continue;
                }
                for yr in 0..h {
                    let src = &a[(y0 * h + yr) * dim + x0 * h..(y0 * h + yr) * dim + x0 * h + h];
                    let dst = &mut b[yr * h..yr * h + h];
                    for (d, s) in dst.iter_mut().zip(src) {
                        *d += coef * s;
                    }
                }
            }
        }
        std::mem::swap(a, b);
        dim = h;
    }
    a[0]
}

fn as_matrix(v: &[C64], d: usize) -> CMatrix {
    CMatrix::from_row_slice(d, d, v)
}

/// `(M P)` for a Pauli string, row-major.
fn times_pauli(m: &CMatrix, p: &PauliString, l: usize, weight: f64, out: &mut [C64]) {
    let d = m.nrows();
    let (x, z, phase) = p.masks(l);
    for r in 0..d {
        for y in 0..d {
            // P_{k,y} is nonzero only at k = y⊕x, where it equals phase·sign(y).
            let sgn = if (y & z).count_ones() % 2 == 1 { -1.0 } else { 1.0 };
            out[r * d + y] += m[(r, y ^ x)] * phase * (sgn * weight);
        }
    }
}

fn class_factors(row: &[u8]) -> Vec<Matrix2<C64>> {
    row.iter().map(|&c| local_estimator(c)).collect()
}

fn accumulated_pairs(l: usize, classes: &Classes, observables: &[PauliSum]) -> Result<Vec<PairStatistic>> {
    let d = 1usize << l;
    check_alloc((d as u128) * (d as u128) * (observables.len() as u128 + 3), 16)?;
    let mut s = vec![C64::new(0.0, 0.0); d * d];
    let mut buf = Vec::new();
    for (row, &w) in classes.rows.iter().zip(&classes.weights) {
        kron_factors(&class_factors(row), &mut buf);
        for (a, b) in s.iter_mut().zip(&buf) {
            *a += b * w as f64;
        }
    }
    let sm = as_matrix(&s, d);
    let tables = kernel_tables();
    let mut out = Vec::with_capacity(observables.len());
    let mut scratch = [Vec::new(), Vec::new()];
    for obs in observables {
        // N = S·O; then tr(S·S·O) = tr(S·N) and row_c = Re tr(ρ̂_c N) − diag_c.
        let mut n = vec![C64::new(0.0, 0.0); d * d];
        for (w, p) in &obs.0 {
            times_pauli(&sm, p, l, *w, &mut n);
        }
        let ops: Vec<(f64, Vec<Pauli>)> = obs.0.iter().map(|(w, p)| (*w, per_site_operators(p, l))).collect();
        let mut rows = Vec::with_capacity(classes.len());
        for row in &classes.rows {
            let full = contract(&n, &class_factors(row), &mut scratch).re;
            let diag: f64 = ops
                .iter()
                .map(|(w, op)| {
                    let mut prod = C64::new(1.0, 0.0);
                    for (site, &c) in row.iter().enumerate() {
                        prod *= tables[op[site].index()][c as usize][c as usize];
                    }
                    w * prod.re
                })
                .sum();
            rows.push(full - diag);
        }
        let total = rows.iter().zip(&classes.weights).map(|(r, &w)| r * w as f64).sum();
        out.push(PairStatistic { total, rows });
    }
    Ok(out)
}

/// Ordered-triple sum `Σ_{r,s,t distinct} tr(a_r a_s a_t)` with `a = ρ̂^{T_A}`,
/// plus its value with one snapshot of each class removed.
#[derive(Debug, Clone)]
pub(crate) struct TripleStatistic {
    pub total: f64,
    pub delete_one: Vec<f64>,
}

/// Per-site factor `ρ̂` or `ρ̂ᵀ` raised to `power`.
fn pt_factor(code: u8, transposed: bool, power: u32) -> Matrix2<C64> {
    let e = if transposed { local_estimator(code).transpose() } else { local_estimator(code) };
    let mut acc = Matrix2::identity();
    for _ in 0..power {
        acc *= e;
    }
    acc
}

pub(crate) fn triple_statistic(l: usize, classes: &Classes, part: &[bool]) -> Result<TripleStatistic> {
    let d = 1usize << l;
    check_alloc((d as u128) * (d as u128) * 6, 16)?;
    let mut sums = [vec![C64::new(0.0, 0.0); d * d], vec![C64::new(0.0, 0.0); d * d], vec![C64::new(0.0, 0.0); d * d]];
    let mut buf = Vec::new();
    let factors = |row: &[u8], k: u32| -> Vec<Matrix2<C64>> {
        row.iter().enumerate().map(|(s, &c)| pt_factor(c, part[s], k)).collect()
    };
    for (row, &w) in classes.rows.iter().zip(&classes.weights) {
        for (k, acc) in sums.iter_mut().enumerate() {
            kron_factors(&factors(row, k as u32 + 1), &mut buf);
            for (a, b) in acc.iter_mut().zip(&buf) {
                *a += b * w as f64;
            }
        }
    }
    let s1 = as_matrix(&sums[0], d);
    let s2 = as_matrix(&sums[1], d);
    let s1sq = &s1 * &s1;
    let tr_s1_cubed = trace_product(&s1sq, &s1);
    let tr_s1s2 = trace_product(&s1, &s2);
    let tr_s3: C64 = (0..d).map(|i| sums[2][i * d + i]).sum();
    let total = (tr_s1_cubed - tr_s1s2 * 3.0 + tr_s3 * 2.0).re;

    let row_major = |m: &CMatrix| -> Vec<C64> { (0..d * d).map(|k| m[(k / d, k % d)]).collect() };
    let (n_s1sq, n_s1, n_s2) = (row_major(&s1sq), sums[0].clone(), sums[1].clone());
    let mut scratch = [Vec::new(), Vec::new()];
    let mut delete_one = Vec::with_capacity(classes.len());
    for row in &classes.rows {
        let a1 = factors(row, 1);
        let a2 = factors(row, 2);
        let tr_a3: C64 = factors(row, 3).iter().map(|f| f.trace()).product();
        let s1sq_a = contract(&n_s1sq, &a1, &mut scratch);
        let s1_a2 = contract(&n_s1, &a2, &mut scratch);
        let s2_a = contract(&n_s2, &a1, &mut scratch);
        let t1 = tr_s1_cubed - s1sq_a * 3.0 + s1_a2 * 3.0 - tr_a3;
        let t2 = tr_s1s2 - s1_a2 - s2_a + tr_a3;
        let t3 = tr_s3 - tr_a3;
        delete_one.push((t1 - t2 * 3.0 + t3 * 2.0).re);
    }
    Ok(TripleStatistic { total, delete_one })
}

fn trace_product(a: &CMatrix, b: &CMatrix) -> C64 {
    let d = a.nrows();
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..d {
        for j in 0..d {
            acc += a[(i, j)] * b[(j, i)];
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::tensor_product;

    #[test]
    fn contraction_matches_dense_trace() {
        let codes = [0u8, 3, 5];
        let f: Vec<Matrix2<C64>> = codes.iter().map(|&c| local_estimator(c)).collect();
        let dense = f.iter().fold(CMatrix::identity(1, 1), |acc, m| {
            tensor_product(&acc, &CMatrix::from_fn(2, 2, |r, c| m[(r, c)])).unwrap()
        });
        let mut buf = Vec::new();
        kron_factors(&f, &mut buf);
        assert!((as_matrix(&buf, 8) - &dense).norm() < 1e-14);
        let n = CMatrix::from_fn(8, 8, |r, c| C64::new((r * 8 + c) as f64 * 0.1, (r as f64) - (c as f64)));
        let nr: Vec<C64> = (0..64).map(|k| n[(k / 8, k % 8)]).collect();
        let got = contract(&nr, &f, &mut [Vec::new(), Vec::new()]);
        let want = (&dense * &n).trace();
        assert!((got - want).norm() < 1e-10);
    }
}
