//! Desk-scale simulation of mixed-state phases of the critical transverse-field
//! Ising chain under Pauli dephasing.
//!
//! Two diagnostics are provided:
//!
//! - **Rényi correlators** `tr(ρⁿ O₁O₂)/tr(ρⁿ)`, computed exactly (dense or on the
//!   doubled state `|ρ⟩`) and estimated from simulated randomized Pauli
//!   measurements ([`shadows`]) with jackknife error bars.
//! - **Entanglement fidelity** of the low-energy "CFT code", optimized either by
//!   alternating SVD over decoder isometries ([`decoder`]) or by a ladder-shaped
//!   variational circuit with ancillas ([`variational`]), together with the
//!   channel-distance bounds.
//!
//! All registers share one convention: qubit 0 of a register is the most
//! significant bit of an amplitude index.

pub mod channels;
pub mod decoder;
mod error;
pub mod harness;
pub mod ising;
pub mod qcore;
pub mod renyi;
pub mod shadows;
pub mod variational;

pub use error::{Error, Result};

/// Library version embedded in every experiment artifact.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
