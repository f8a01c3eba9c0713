//! Critical transverse-field Ising chain `H = −Σ XᵢXᵢ₊₁ − Σ Zᵢ` and its
//! low-energy eigenstates.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::qcore::{check_alloc, dim_for, Pauli, PauliString, Register, StateVector, C64};
use crate::{Error, Result};

/// Energies closer than this are reported as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-8;
/// Largest Hilbert-space dimension diagonalized densely by default.
pub const DENSE_LIMIT: usize = 1024;
/// Largest dimension the dense fallback accepts after an iterative failure.
pub const DENSE_FALLBACK_LIMIT: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    #[default]
    Periodic,
    Open,
}

impl fmt::Display for Boundary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Boundary::Periodic => "periodic",
            Boundary::Open => "open",
        })
    }
}

impl FromStr for Boundary {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "periodic" | "pbc" => Ok(Boundary::Periodic),
            "open" | "obc" => Ok(Boundary::Open),
            o => Err(Error::arg(format!("unknown boundary {o:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IsingModel {
    l: usize,
    boundary: Boundary,
}

impl IsingModel {
    pub fn new(l: usize, boundary: Boundary) -> Result<Self> {
        if l < 2 {
            return Err(Error::arg(format!("Ising chain needs L >= 2, got {l}")));
        }
        if boundary == Boundary::Periodic && l < 3 {
            return Err(Error::arg("periodic chain needs L >= 3 (L = 2 would double-count its bond)"));
        }
        Ok(IsingModel { l, boundary })
    }

    pub fn l(&self) -> usize {
        self.l
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn bonds(&self) -> Vec<(usize, usize)> {
        let mut b: Vec<(usize, usize)> = (0..self.l - 1).map(|i| (i, i + 1)).collect();
        if self.boundary == Boundary::Periodic {
            b.push((self.l - 1, 0));
        }
        b
    }

    pub fn register(&self) -> Register {
        Register::numbered("q", self.l)
    }
}

/// Real symmetric matrix in compressed sparse row form.
#[derive(Debug, Clone)]
pub struct SparseHamiltonian {
    n_qubits: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl SparseHamiltonian {
    pub fn dim(&self) -> usize {
        self.row_ptr.len() - 1
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// `y = H x`.
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        for (r, out) in y.iter_mut().enumerate() {
            let (a, b) = (self.row_ptr[r], self.row_ptr[r + 1]);
            *out = self.cols[a..b].iter().zip(&self.vals[a..b]).map(|(&c, &v)| v * x[c]).sum();
        }
    }

    pub fn element(&self, r: usize, c: usize) -> f64 {
        let (a, b) = (self.row_ptr[r], self.row_ptr[r + 1]);
        self.cols[a..b].iter().zip(&self.vals[a..b]).filter(|(&cc, _)| cc == c).map(|(_, &v)| v).sum()
    }

    pub fn to_dense(&self) -> Result<DMatrix<f64>> {
        let d = self.dim();
        check_alloc((d as u128) * (d as u128), 8)?;
        let mut m = DMatrix::zeros(d, d);
        for r in 0..d {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                m[(r, self.cols[k])] += self.vals[k];
            }
        }
        Ok(m)
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.dim()).all(|r| {
            (self.row_ptr[r]..self.row_ptr[r + 1])
                .all(|k| (self.element(self.cols[k], r) - self.element(r, self.cols[k])).abs() < 1e-14)
        })
    }

    /// `⟨ψ|H|ψ⟩` for a real or complex state.
    pub fn expectation(&self, psi: &[C64]) -> f64 {
        let mut acc = C64::new(0.0, 0.0);
        for (r, a) in psi.iter().enumerate() {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += a.conj() * psi[self.cols[k]] * self.vals[k];
            }
        }
        acc.re
    }
}

pub fn build_hamiltonian(model: &IsingModel) -> Result<SparseHamiltonian> {
    let n = model.l;
    let dim = dim_for(n)?;
    let bonds = model.bonds();
    check_alloc((dim as u128) * (bonds.len() as u128 + 1), 16)?;
    let flips: Vec<usize> = bonds.iter().map(|&(a, b)| (1 << (n - 1 - a)) | (1 << (n - 1 - b))).collect();
    let mut row_ptr = Vec::with_capacity(dim + 1);
    let mut cols = Vec::with_capacity(dim * (flips.len() + 1));
    let mut vals = Vec::with_capacity(dim * (flips.len() + 1));
    row_ptr.push(0);
    for i in 0..dim {
        // −Σ Zᵢ: each 1-bit contributes +1, each 0-bit −1.
        let ones = i.count_ones() as f64;
        cols.push(i);
        vals.push(2.0 * ones - n as f64);
        let mut row: Vec<usize> = flips.iter().map(|&f| i ^ f).collect();
        row.sort_unstable();
        for c in row {
            cols.push(c);
            vals.push(-1.0);
        }
        row_ptr.push(cols.len());
    }
    Ok(SparseHamiltonian { n_qubits: n, row_ptr, cols, vals })
}

/// Eigensolver selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Solver {
    /// Dense for dimensions up to [`DENSE_LIMIT`], Lanczos above.
    #[default]
    Auto,
    Dense,
    Lanczos,
}

/// Lowest eigenpairs in ascending order of energy.
#[derive(Debug, Clone)]
pub struct EnergySpectrum {
    pub energies: Vec<f64>,
    pub states: Vec<StateVector>,
    pub degeneracy_tol: f64,
    /// Index pairs `(i, i+1)` whose energies differ by less than the tolerance.
    pub degenerate_pairs: Vec<(usize, usize)>,
}

impl EnergySpectrum {
    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    /// Whether any of the first `d` states is degenerate with a neighbour
    /// that decides membership in the first `d` (including the state `d`).
    pub fn has_degeneracy_within(&self, d: usize) -> bool {
        self.degenerate_pairs.iter().any(|&(_, j)| j < d || (j == d && d < self.len()))
    }
}

pub fn lowest_eigenstates(h: &SparseHamiltonian, k: usize) -> Result<EnergySpectrum> {
    lowest_eigenstates_with(h, k, Solver::Auto)
}

pub fn lowest_eigenstates_with(h: &SparseHamiltonian, k: usize, solver: Solver) -> Result<EnergySpectrum> {
    let dim = h.dim();
    if k == 0 || k > dim {
        return Err(Error::arg(format!("requested {k} eigenstates of a {dim}-dimensional operator")));
    }
    // One extra state lets the degeneracy check see the boundary of the requested block.
    let want = (k + 1).min(dim);
    let pairs = match solver {
        Solver::Dense => dense_lowest(h, want)?,
        Solver::Lanczos => lanczos_lowest(h, want)?,
        Solver::Auto if dim <= DENSE_LIMIT => dense_lowest(h, want)?,
        Solver::Auto => match lanczos_lowest(h, want) {
            Ok(p) => p,
            Err(e) if dim <= DENSE_FALLBACK_LIMIT => {
                log::warn!("Lanczos failed ({e}); falling back to dense diagonalization");
                dense_lowest(h, want)?
            }
            Err(e) => return Err(e),
        },
    };
    let register = Register::numbered("q", h.n_qubits());
    let mut energies = Vec::with_capacity(want);
    let mut states = Vec::with_capacity(want);
    for (e, mut v) in pairs {
        fix_sign(&mut v);
        let mut hv = vec![0.0; dim];
        h.apply(&v, &mut hv);
        let res: f64 = hv.iter().zip(&v).map(|(a, b)| (a - e * b).powi(2)).sum::<f64>().sqrt();
        if res > 1e-8 {
            return Err(Error::numeric(format!("eigenpair residual {res:.3e} at energy {e}")));
        }
        energies.push(e);
        states.push(StateVector::new(v.into_iter().map(|x| C64::new(x, 0.0)).collect(), register.clone())?);
    }
    let degenerate_pairs: Vec<(usize, usize)> = (1..energies.len())
        .filter(|&i| (energies[i] - energies[i - 1]).abs() < DEGENERACY_TOL)
        .map(|i| (i - 1, i))
        .collect();
    for &(a, b) in &degenerate_pairs {
        if b < k {
            log::warn!("eigenstates {a} and {b} are degenerate within {DEGENERACY_TOL:e}");
        }
    }
    energies.truncate(k);
    states.truncate(k);
    let degenerate_pairs = degenerate_pairs.into_iter().filter(|&(a, _)| a < k).collect();
    Ok(EnergySpectrum { energies, states, degeneracy_tol: DEGENERACY_TOL, degenerate_pairs })
}

/// Makes the largest-magnitude entry positive (first one on ties).
fn fix_sign(v: &mut [f64]) {
    let max = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if let Some(x) = v.iter().find(|x| x.abs() >= max * (1.0 - 1e-9)) {
        if *x < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
}

fn dense_lowest(h: &SparseHamiltonian, k: usize) -> Result<Vec<(f64, Vec<f64>)>> {
    let m = h.to_dense()?;
    let d = m.nrows();
    let fm = faer::Mat::from_fn(d, d, |r, c| m[(r, c)]);
    let eig = fm
        .self_adjoint_eigen(faer::Side::Lower)
        .map_err(|e| Error::numeric(format!("dense eigensolver failed ({d}x{d}): {e:?}")))?;
    let (ev, u) = (eig.S().column_vector(), eig.U());
    if (0..d).any(|i| !ev[i].is_finite()) {
        return Err(Error::numeric(format!("dense eigensolver produced non-finite eigenvalues ({d}x{d})")));
    }
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| ev[a].total_cmp(&ev[b]));
    Ok(order[..k].iter().map(|&i| (ev[i], (0..d).map(|r| u[(r, i)]).collect())).collect())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    y.iter_mut().zip(x).for_each(|(y, x)| *y += a * x);
}

fn orthogonalize(v: &mut [f64], against: &[Vec<f64>]) {
    for _ in 0..2 {
        for q in against {
            let c = dot(q, v);
            axpy(v, -c, q);
        }
    }
}

/// Lowest `k` eigenpairs by repeated Lanczos runs, each deflated against the
/// vectors already found, with full reorthogonalization.
fn lanczos_lowest(h: &SparseHamiltonian, k: usize) -> Result<Vec<(f64, Vec<f64>)>> {
    let dim = h.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(0x15_1a9c);
    let mut found: Vec<(f64, Vec<f64>)> = Vec::with_capacity(k);
    for _ in 0..k {
        let locked: Vec<Vec<f64>> = found.iter().map(|(_, v)| v.clone()).collect();
        let mut start: Vec<f64> = (0..dim).map(|_| rng.gen::<f64>() - 0.5).collect();
        let mut result = None;
        for _restart in 0..20 {
            let (e, v, res) = lanczos_run(h, &start, &locked)?;
            if res < 1e-10 {
                result = Some((e, v));
                break;
            }
            start = v;
        }
        let pair =
            result.ok_or_else(|| Error::numeric(format!("Lanczos did not converge for eigenpair {}", found.len())))?;
        found.push(pair);
    }
    found.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(found)
}

fn lanczos_run(h: &SparseHamiltonian, start: &[f64], locked: &[Vec<f64>]) -> Result<(f64, Vec<f64>, f64)> {
    let dim = h.dim();
    let max_m = (dim - locked.len()).min(200);
    let mut q = start.to_vec();
    orthogonalize(&mut q, locked);
    let nrm = dot(&q, &q).sqrt();
    if nrm < 1e-300 {
        return Err(Error::numeric("Lanczos start vector lies in the deflated space"));
    }
    q.iter_mut().for_each(|x| *x /= nrm);
    let mut basis: Vec<Vec<f64>> = vec![q];
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut w = vec![0.0; dim];
    loop {
        let j = basis.len() - 1;
        h.apply(&basis[j], &mut w);
        let a = dot(&w, &basis[j]);
        alpha.push(a);
        orthogonalize(&mut w, locked);
        orthogonalize(&mut w, &basis);
        let b = dot(&w, &w).sqrt();
        let m = alpha.len();
        let done = m >= max_m || b < 1e-12;
        if done || m % 10 == 0 {
            let t = faer::Mat::from_fn(m, m, |r, c| {
                if r == c {
                    alpha[r]
                } else if r + 1 == c {
                    beta[r]
                } else if c + 1 == r {
                    beta[c]
                } else {
                    0.0
                }
            });
            let eig = t
                .self_adjoint_eigen(faer::Side::Lower)
                .map_err(|e| Error::numeric(format!("tridiagonal eigensolver failed: {e:?}")))?;
            let ev = eig.S().column_vector();
            let imin = (0..m).min_by(|&a, &b| ev[a].total_cmp(&ev[b])).expect("nonempty");
            let e = ev[imin];
            let s: Vec<f64> = (0..m).map(|r| eig.U()[(r, imin)]).collect();
            let est = (b * s[m - 1]).abs();
            if done || est < 1e-11 {
                let mut v = vec![0.0; dim];
                for (c, qv) in s.iter().zip(&basis) {
                    axpy(&mut v, *c, qv);
                }
                orthogonalize(&mut v, locked);
                let n = dot(&v, &v).sqrt();
                v.iter_mut().for_each(|x| *x /= n);
                let mut hv = vec![0.0; dim];
                h.apply(&v, &mut hv);
                let e = dot(&v, &hv);
                axpy(&mut hv, -e, &v);
                let res = dot(&hv, &hv).sqrt();
                return Ok((e, v, res));
            }
            let _ = e;
        }
        beta.push(b);
        basis.push(w.iter().map(|x| x / b).collect());
    }
}

/// Global parity `⟨∏ Zᵢ⟩`.
pub fn parity(state: &StateVector) -> f64 {
    state
        .amplitudes()
        .iter()
        .enumerate()
        .map(|(i, a)| if i.count_ones() % 2 == 0 { a.norm_sqr() } else { -a.norm_sqr() })
        .sum()
}

/// `⟨ψ| O1[0] O2[l] |ψ⟩`; the site index wraps around the register.
pub fn pure_correlator(state: &StateVector, o1: Pauli, o2: Pauli, l: usize) -> Result<f64> {
    pure_correlator_at(state, 0, o1, o2, l)
}

/// `⟨ψ| O1[base] O2[base + l] |ψ⟩` with the second site taken modulo L.
pub fn pure_correlator_at(state: &StateVector, base: usize, o1: Pauli, o2: Pauli, l: usize) -> Result<f64> {
    let n = state.n_qubits();
    if base >= n {
        return Err(Error::arg(format!("site {base} outside a {n}-qubit register")));
    }
    let s2 = (base + l) % n;
    let p = PauliString::pair(base, o1, s2, o2)?;
    Ok(p.expectation(state.amplitudes(), n).re)
}

/// Mean of [`pure_correlator_at`] over every base site.
pub fn translation_averaged_correlator(state: &StateVector, o1: Pauli, o2: Pauli, l: usize) -> Result<f64> {
    let n = state.n_qubits();
    let mut acc = 0.0;
    for b in 0..n {
        acc += pure_correlator_at(state, b, o1, o2, l)?;
    }
    Ok(acc / n as f64)
}

/// Convenience: lowest `k` eigenstates of the critical chain.
pub fn ising_lowest(l: usize, boundary: Boundary, k: usize) -> Result<EnergySpectrum> {
    let h = build_hamiltonian(&IsingModel::new(l, boundary)?)?;
    lowest_eigenstates(&h, k)
}
