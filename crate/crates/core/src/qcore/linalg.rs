use nalgebra::{Matrix2, Matrix4};

use super::{check_alloc, CMatrix, C64, ZERO};
use crate::{Error, Result};

/// Eigenvalues in `[−CLAMP_TOL, 0)` are treated as round-off and clamped to zero
/// before taking matrix square roots; anything more negative is a validity error.
pub const CLAMP_TOL: f64 = 1e-9;

/// Kronecker product of two square matrices.
pub fn tensor_product(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    if !a.is_square() || !b.is_square() {
        return Err(Error::arg("tensor_product expects square operands"));
    }
    let dim = (a.nrows() as u128) * (b.nrows() as u128);
    check_alloc(dim * dim, 16)?;
    Ok(a.kronecker(b))
}

pub fn kron_vec(a: &[C64], b: &[C64]) -> Vec<C64> {
    let mut out = Vec::with_capacity(a.len() * b.len());
    for &x in a {
        out.extend(b.iter().map(|&y| x * y));
    }
    out
}

/// Thin singular value decomposition `m = U·diag(s)·V†` with `s` descending.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: CMatrix,
    pub s: Vec<f64>,
    pub v: CMatrix,
}

pub fn svd(m: &CMatrix) -> Result<Svd> {
    let (rows, cols) = m.shape();
    if rows == 0 || cols == 0 {
        return Ok(Svd { u: CMatrix::zeros(rows, 0), s: vec![], v: CMatrix::zeros(cols, 0) });
    }
    check_finite(m, "SVD")?;
    let dec = to_faer(m).thin_svd().map_err(|e| {
        Error::numeric(format!("SVD failed for {rows}x{cols} matrix (Frobenius norm {:.3e}): {e:?}", m.norm()))
    })?;
    let k = rows.min(cols);
    let sv = dec.S().column_vector();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| sv[b].re.total_cmp(&sv[a].re));
    let s = order.iter().map(|&i| sv[i].re).collect();
    let (fu, fv) = (dec.U(), dec.V());
    let u = CMatrix::from_fn(rows, k, |r, c| fu[(r, order[c])]);
    let v = CMatrix::from_fn(cols, k, |r, c| fv[(r, order[c])]);
    Ok(Svd { u, s, v })
}

fn to_faer(m: &CMatrix) -> faer::Mat<C64> {
    faer::Mat::from_fn(m.nrows(), m.ncols(), |r, c| m[(r, c)])
}

fn check_finite(m: &CMatrix, what: &str) -> Result<()> {
    if m.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::numeric(format!("{what} input {}x{} has non-finite entries", m.nrows(), m.ncols())))
    }
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    /// Columns are the eigenvectors.
    pub vectors: CMatrix,
}

pub fn hermitian_eigen(m: &CMatrix) -> Result<HermitianEigen> {
    let n = m.nrows();
    if !m.is_square() {
        return Err(Error::arg("hermitian_eigen expects a square matrix"));
    }
    if n == 0 {
        return Ok(HermitianEigen { values: vec![], vectors: CMatrix::zeros(0, 0) });
    }
    check_finite(m, "Hermitian eigensolver")?;
    let herm = (m + m.adjoint()) * C64::new(0.5, 0.0);
    let dec = to_faer(&herm)
        .self_adjoint_eigen(faer::Side::Lower)
        .map_err(|e| Error::numeric(format!("Hermitian eigensolver failed ({n}x{n}): {e:?}")))?;
    let ev = dec.S().column_vector();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| ev[a].re.total_cmp(&ev[b].re));
    let values = order.iter().map(|&i| ev[i].re).collect();
    let fu = dec.U();
    let vectors = CMatrix::from_fn(n, n, |r, c| fu[(r, order[c])]);
    Ok(HermitianEigen { values, vectors })
}

pub fn is_hermitian(m: &CMatrix, tol: f64) -> bool {
    m.is_square() && (m - m.adjoint()).iter().all(|z| z.norm() <= tol)
}

/// Clamps eigenvalues of a PSD matrix, rejecting ones below `−CLAMP_TOL`.
fn clamp_psd(values: &[f64], what: &str) -> Result<Vec<f64>> {
    values
        .iter()
        .map(|&v| {
            if v < -CLAMP_TOL {
                Err(Error::Validity(format!("{what} has negative eigenvalue {v:.3e}")))
            } else {
                Ok(v.max(0.0))
            }
        })
        .collect()
}

/// Principal square root of a positive semidefinite matrix.
pub fn psd_sqrt(m: &CMatrix) -> Result<CMatrix> {
    let eig = hermitian_eigen(m)?;
    let vals = clamp_psd(&eig.values, "matrix")?;
    Ok(reassemble(&eig.vectors, vals.iter().map(|v| v.sqrt())))
}

fn reassemble(vectors: &CMatrix, values: impl Iterator<Item = f64>) -> CMatrix {
    let mut scaled = vectors.clone();
    for (c, v) in values.enumerate() {
        scaled.column_mut(c).scale_mut(v);
    }
    scaled * vectors.adjoint()
}

/// Squared Uhlmann fidelity `[tr √(√ρ σ √ρ)]²`, clamped to `[0, 1]`.
pub fn uhlmann_fidelity(rho: &CMatrix, sigma: &CMatrix) -> Result<f64> {
    if rho.shape() != sigma.shape() || !rho.is_square() {
        return Err(Error::arg(format!("fidelity operands differ in shape: {:?} vs {:?}", rho.shape(), sigma.shape())));
    }
    let eig_sigma = hermitian_eigen(sigma)?;
    clamp_psd(&eig_sigma.values, "second argument")?;
    let sqrt_rho = psd_sqrt(rho)?;
    let inner = &sqrt_rho * sigma * &sqrt_rho;
    let eig = hermitian_eigen(&inner)?;
    // `inner` is PSD by construction; residual negativity is round-off.
    let root_trace: f64 = eig.values.iter().map(|v| v.max(0.0).sqrt()).sum();
    Ok((root_trace * root_trace).clamp(0.0, 1.0))
}

/// Partial trace keeping the listed register positions (in the given order of
/// the register, i.e. ascending positions).
pub fn partial_trace_matrix(m: &CMatrix, n: usize, keep: &[usize]) -> CMatrix {
    let mut keep: Vec<usize> = keep.to_vec();
    keep.sort_unstable();
    keep.dedup();
    let traced: Vec<usize> = (0..n).filter(|p| !keep.contains(p)).collect();
    let spread =
        |positions: &[usize], x: usize| -> usize {
            let k = positions.len();
            positions.iter().enumerate().fold(0, |acc, (j, &p)| {
                if (x >> (k - 1 - j)) & 1 == 1 {
                    acc | (1 << (n - 1 - p))
                } else {
                    acc
                }
            })
        };
    let dk = 1usize << keep.len();
    let dt = 1usize << traced.len();
    let kfull: Vec<usize> = (0..dk).map(|i| spread(&keep, i)).collect();
    let tfull: Vec<usize> = (0..dt).map(|t| spread(&traced, t)).collect();
    CMatrix::from_fn(dk, dk, |i, j| tfull.iter().fold(ZERO, |acc, &t| acc + m[(kfull[i] | t, kfull[j] | t)]))
}

/// Transposes the listed register positions.
pub fn partial_transpose_matrix(m: &CMatrix, n: usize, part: &[usize]) -> CMatrix {
    let mask = part.iter().fold(0usize, |acc, &p| acc | (1 << (n - 1 - p)));
    let dim = m.nrows();
    CMatrix::from_fn(dim, dim, |i, j| {
        let i2 = (i & !mask) | (j & mask);
        let j2 = (j & !mask) | (i & mask);
        m[(i2, j2)]
    })
}

/// Applies a single-qubit operator in place.
pub fn apply_1q(amps: &mut [C64], n: usize, pos: usize, u: &Matrix2<C64>) {
    let bit = 1usize << (n - 1 - pos);
    for i in 0..amps.len() {
        if i & bit == 0 {
            let a0 = amps[i];
            let a1 = amps[i | bit];
            amps[i] = u[(0, 0)] * a0 + u[(0, 1)] * a1;
            amps[i | bit] = u[(1, 0)] * a0 + u[(1, 1)] * a1;
        }
    }
}

/// Applies a two-qubit operator in place; `u` is in the basis `|b₁ b₂⟩`
/// with the qubit at `p1` as the most significant bit.
pub fn apply_2q(amps: &mut [C64], n: usize, p1: usize, p2: usize, u: &Matrix4<C64>) {
    let b1 = 1usize << (n - 1 - p1);
    let b2 = 1usize << (n - 1 - p2);
    for i in 0..amps.len() {
        if i & (b1 | b2) == 0 {
            let idx = [i, i | b2, i | b1, i | b1 | b2];
            let a = [amps[idx[0]], amps[idx[1]], amps[idx[2]], amps[idx[3]]];
            for r in 0..4 {
                amps[idx[r]] = u[(r, 0)] * a[0] + u[(r, 1)] * a[1] + u[(r, 2)] * a[2] + u[(r, 3)] * a[3];
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::Pauli;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn svd_of_rank_two_matrix_with_degenerate_pair() {
        // Disjoint row supports, interleaved column supports and tiny entries:
        // a pattern that defeats some SVD implementations.
        let m = CMatrix::from_fn(8, 16, |r, c| {
            let w = [0.137, 0.026, 0.019, 0.013, 0.029, 0.014, 0.024, 0.017][c / 2];
            let scale = [1.0, 0.0, 0.0, 0.52, 0.0, 0.52, 0.52, 0.0][r] + [0.0, 1.0, 1.0, 0.0, 1.0, 0.0, 0.0, 0.46][r];
            let odd = [true, false, false, true, false, true, true, false][r];
            if (c % 2 == 1) == odd {
                C64::new(w * scale, 1e-19)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        let d = svd(&m).unwrap();
        let s =
            CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(d.s.len(), d.s.iter().map(|&x| C64::new(x, 0.0))));
        assert!((&d.u * s * d.v.adjoint() - &m).norm() < 1e-13);
        assert!((d.u.adjoint() * &d.u - CMatrix::identity(8, 8)).norm() < 1e-12);
    }

    #[test]
    fn identity_kron_identity() {
        let i2 = CMatrix::identity(2, 2);
        assert_eq!(tensor_product(&i2, &i2).unwrap(), CMatrix::identity(4, 4));
    }

    #[test]
    fn z_kron_z_is_diagonal() {
        let zz = tensor_product(&Pauli::Z.dmatrix(), &Pauli::Z.dmatrix()).unwrap();
        let expect = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(1.), c(-1.), c(-1.), c(1.)]));
        assert_eq!(zz, expect);
    }

    #[test]
    fn x_kron_z_maps_00_to_10() {
        let xz = tensor_product(&Pauli::X.dmatrix(), &Pauli::Z.dmatrix()).unwrap();
        let v = nalgebra::DVector::from_vec(vec![c(1.), c(0.), c(0.), c(0.)]);
        let out = xz * v;
        assert_eq!(out[2], c(1.0));
        assert_eq!(out.iter().filter(|z| z.norm() > 0.0).count(), 1);
    }

    #[test]
    fn tensor_product_rejects_non_square() {
        assert!(tensor_product(&CMatrix::zeros(2, 3), &CMatrix::identity(2, 2)).is_err());
    }

    #[test]
    fn svd_identity_and_sign_absorption() {
        let dec = svd(&CMatrix::identity(3, 3)).unwrap();
        assert!(dec.s.iter().all(|&s| (s - 1.0).abs() < 1e-14));
        let m = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(3.0), c(-4.0)]));
        let dec = svd(&m).unwrap();
        assert!((dec.s[0] - 4.0).abs() < 1e-14 && (dec.s[1] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn fidelity_closed_forms() {
        let zero = CMatrix::from_fn(2, 2, |r, c_| if r == 0 && c_ == 0 { c(1.) } else { ZERO });
        let one = CMatrix::from_fn(2, 2, |r, c_| if r == 1 && c_ == 1 { c(1.) } else { ZERO });
        let mixed = CMatrix::identity(2, 2) * c(0.5);
        assert!((uhlmann_fidelity(&zero, &zero).unwrap() - 1.0).abs() < 1e-12);
        assert!(uhlmann_fidelity(&zero, &one).unwrap().abs() < 1e-12);
        assert!((uhlmann_fidelity(&mixed, &zero).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn fidelity_rejects_clearly_negative_input() {
        let bad = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(1.1), c(-0.1)]));
        let good = CMatrix::identity(2, 2) * c(0.5);
        assert!(matches!(uhlmann_fidelity(&bad, &good), Err(Error::Validity(_))));
        // Tiny negatives are clamped.
        let near = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(1.0 + 1e-12), c(-1e-12)]));
        assert!(uhlmann_fidelity(&near, &good).is_ok());
    }
}
