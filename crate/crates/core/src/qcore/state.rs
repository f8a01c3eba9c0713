use super::linalg::{hermitian_eigen, is_hermitian, partial_trace_matrix, partial_transpose_matrix};
use super::{check_alloc, dim_for, uhlmann_fidelity, CMatrix, Register, C64, CLAMP_TOL, ZERO};
use crate::{Error, Result};

/// Pure state on a labeled register.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amps: Vec<C64>,
    register: Register,
}

impl StateVector {
    pub fn new(amps: Vec<C64>, register: Register) -> Result<Self> {
        let dim = dim_for(register.len())?;
        if amps.len() != dim {
            return Err(Error::arg(format!(
                "amplitude count {} does not match 2^{} for register {register}",
                amps.len(),
                register.len()
            )));
        }
        Ok(StateVector { amps, register })
    }

    /// Computational basis state `|index⟩`.
    pub fn basis(register: Register, index: usize) -> Result<Self> {
        let dim = dim_for(register.len())?;
        check_alloc(dim as u128, 16)?;
        if index >= dim {
            return Err(Error::arg(format!("basis index {index} out of range for {dim} amplitudes")));
        }
        let mut amps = vec![ZERO; dim];
        amps[index] = C64::new(1.0, 0.0);
        Ok(StateVector { amps, register })
    }

    pub fn zero(register: Register) -> Result<Self> {
        Self::basis(register, 0)
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut [C64] {
        &mut self.amps
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amps
    }

    pub fn register(&self) -> &Register {
        &self.register
    }

    pub fn n_qubits(&self) -> usize {
        self.register.len()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn normalize(&mut self) -> Result<()> {
        let n = self.norm_sqr().sqrt();
        if n < 1e-300 {
            return Err(Error::Validity("cannot normalize the zero vector".into()));
        }
        self.amps.iter_mut().for_each(|a| *a /= n);
        Ok(())
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        if self.register != other.register {
            return Err(Error::arg("inner product across different registers"));
        }
        Ok(self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum())
    }

    /// `|self⟩ ⊗ |other⟩` on the concatenated register.
    pub fn tensor(&self, other: &StateVector) -> Result<StateVector> {
        let register = self.register.concat(&other.register)?;
        check_alloc((self.amps.len() as u128) * (other.amps.len() as u128), 16)?;
        Ok(StateVector { amps: super::kron_vec(&self.amps, &other.amps), register })
    }

    pub fn to_density(&self) -> Result<DensityMatrix> {
        let d = self.amps.len();
        check_alloc((d as u128) * (d as u128), 16)?;
        let m = CMatrix::from_fn(d, d, |i, j| self.amps[i] * self.amps[j].conj());
        Ok(DensityMatrix { m, register: self.register.clone() })
    }
}

/// Mixed state on a labeled register.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    m: CMatrix,
    register: Register,
}

impl DensityMatrix {
    /// Wraps a matrix without checking positivity; see [`DensityMatrix::validate`].
    pub fn new(m: CMatrix, register: Register) -> Result<Self> {
        let dim = dim_for(register.len())?;
        if m.shape() != (dim, dim) {
            return Err(Error::arg(format!("matrix shape {:?} does not match register {register}", m.shape())));
        }
        Ok(DensityMatrix { m, register })
    }

    pub fn maximally_mixed(register: Register) -> Result<Self> {
        let dim = dim_for(register.len())?;
        check_alloc((dim as u128) * (dim as u128), 16)?;
        Ok(DensityMatrix { m: CMatrix::identity(dim, dim) / C64::new(dim as f64, 0.0), register })
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.m
    }

    pub fn into_matrix(self) -> CMatrix {
        self.m
    }

    pub fn register(&self) -> &Register {
        &self.register
    }

    pub fn n_qubits(&self) -> usize {
        self.register.len()
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn trace(&self) -> C64 {
        self.m.trace()
    }

    /// `tr(ρ²)`, computed as `Σ|ρ_ij|²` for Hermitian input.
    pub fn purity(&self) -> f64 {
        self.m.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Checks Hermiticity and unit trace within `tol` and eigenvalues ≥ −1e-9.
    pub fn validate(&self, tol: f64) -> Result<()> {
        if !is_hermitian(&self.m, tol) {
            return Err(Error::Validity("density matrix is not Hermitian".into()));
        }
        let tr = self.trace();
        if (tr.re - 1.0).abs() > tol || tr.im.abs() > tol {
            return Err(Error::Validity(format!("trace {tr} differs from 1")));
        }
        let min = hermitian_eigen(&self.m)?.values.first().copied().unwrap_or(0.0);
        if min < -CLAMP_TOL {
            return Err(Error::Validity(format!("negative eigenvalue {min:.3e}")));
        }
        Ok(())
    }

    /// Squared Uhlmann fidelity with another state on the same register.
    pub fn fidelity(&self, other: &DensityMatrix) -> Result<f64> {
        if self.register != other.register {
            return Err(Error::arg(format!("fidelity between registers {} and {}", self.register, other.register)));
        }
        uhlmann_fidelity(&self.m, &other.m)
    }

    /// `ρ ⊗ σ` on the concatenated register.
    pub fn tensor(&self, other: &DensityMatrix) -> Result<DensityMatrix> {
        let register = self.register.concat(&other.register)?;
        let m = super::tensor_product(&self.m, &other.m)?;
        Ok(DensityMatrix { m, register })
    }
}

/// Keeps the listed qubits (result ordered as in the input register).
pub fn partial_trace<S: AsRef<str>>(rho: &DensityMatrix, keep: &[S]) -> Result<DensityMatrix> {
    let mut pos = rho.register.positions(keep)?;
    pos.sort_unstable();
    pos.dedup();
    let m = partial_trace_matrix(&rho.m, rho.n_qubits(), &pos);
    Ok(DensityMatrix { m, register: rho.register.select(&pos) })
}

/// Transposes the listed qubits. The result need not be positive.
pub fn partial_transpose<S: AsRef<str>>(rho: &DensityMatrix, part: &[S]) -> Result<CMatrix> {
    let pos = rho.register.positions(part)?;
    Ok(partial_transpose_matrix(&rho.m, rho.n_qubits(), &pos))
}

/// Doubled-space state `|ρ⟩ = Σ ρ_ij |i⟩⊗|j*⟩` of length `4^N`, stored at index
/// `i·2^N + j`. With this layout `⟨ρ|(O⊗I)|ρ⟩ = tr(ρ² O)` for Hermitian ρ.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorizedDensity {
    amps: Vec<C64>,
    register: Register,
    n: usize,
}

pub fn vectorize(rho: &DensityMatrix) -> Result<VectorizedDensity> {
    let d = rho.dim();
    check_alloc((d as u128) * (d as u128), 16)?;
    let mut amps = Vec::with_capacity(d * d);
    for i in 0..d {
        amps.extend((0..d).map(|j| rho.m[(i, j)]));
    }
    Ok(VectorizedDensity { amps, register: doubled_register(&rho.register)?, n: rho.n_qubits() })
}

fn doubled_register(reg: &Register) -> Result<Register> {
    Register::new(reg.labels().iter().cloned().chain(reg.labels().iter().map(|l| format!("{l}*"))))
}

impl VectorizedDensity {
    /// Builds `|ρ⟩` directly from a pure state: amplitudes `ψ_i ψ_j*`.
    pub fn from_pure(psi: &StateVector) -> Result<Self> {
        let d = psi.amps.len();
        check_alloc((d as u128) * (d as u128), 16)?;
        let mut amps = Vec::with_capacity(d * d);
        for a in &psi.amps {
            amps.extend(psi.amps.iter().map(|b| a * b.conj()));
        }
        Ok(VectorizedDensity { amps, register: doubled_register(&psi.register)?, n: psi.n_qubits() })
    }

    pub fn devectorize(&self) -> DensityMatrix {
        let d = 1usize << self.n;
        let m = CMatrix::from_fn(d, d, |i, j| self.amps[i * d + j]);
        let labels = &self.register.labels()[..self.n];
        DensityMatrix { m, register: Register::new(labels.iter().cloned()).expect("distinct labels") }
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut [C64] {
        &mut self.amps
    }

    /// Doubled register: the original labels followed by their starred copies.
    pub fn register(&self) -> &Register {
        &self.register
    }

    /// Qubits of the undoubled system.
    pub fn n_qubits(&self) -> usize {
        self.n
    }

    /// `⟨ρ|ρ⟩ = tr(ρ²)`.
    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }
}
