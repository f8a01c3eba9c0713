//! Ladder-shaped variational decoders with ancillas.
//!
//! The chain interleaves system and ancilla qubits, `[q₀, a₀, q₁, …, a_{L−2}, q_{L−1}]`;
//! ancillas start in `|0⟩` and are traced out after the circuit. Each gate is
//! `exp(−i Σ_m θ_m σ_m)` over the sixteen two-qubit Pauli products.

mod circuit;
mod dense;
mod engine;
mod gate;
mod optimize;
#[cfg(test)]
mod tests;

pub use circuit::LadderCircuit;
pub use dense::{apply_decoder, evaluate_fe};
pub use engine::FidelityEngine;
pub use gate::{generator, pauli_pair, synthesize_gate, GATE_PARAMS};
pub use optimize::{
    optimize, optimize_warmstart, random_params, AdamOptions, DepthBest, DepthRecord, GradientMode, OptRun, Phase,
    WarmStartReport,
};
