//! Dense complex linear algebra and qubit-register primitives.
//!
//! Amplitude index convention: for a register `[q₀, q₁, …, q_{N−1}]` the basis
//! state `|b₀ b₁ … b_{N−1}⟩` has index `Σ bₖ·2^{N−1−k}`, i.e. register position 0
//! is the most significant bit.

mod io;
mod linalg;
mod memory;
mod pauli;
mod register;
mod state;

pub use io::{read_state_file, write_state_file, StateKind, StateRecord, MAGIC};
pub use linalg::{
    apply_1q, apply_2q, hermitian_eigen, is_hermitian, kron_vec, partial_trace_matrix, partial_transpose_matrix,
    psd_sqrt, svd, tensor_product, uhlmann_fidelity, HermitianEigen, Svd, CLAMP_TOL,
};
pub use memory::{check_alloc, dim_for, memory_cap, set_memory_cap, DEFAULT_MEMORY_CAP};
pub use pauli::{Pauli, PauliString};
pub use register::Register;
pub use state::{partial_trace, partial_transpose, vectorize, DensityMatrix, StateVector, VectorizedDensity};

pub use num_complex::Complex64 as C64;

/// Dense complex matrix used throughout.
pub type CMatrix = nalgebra::DMatrix<C64>;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);
