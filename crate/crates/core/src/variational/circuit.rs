use serde::{Deserialize, Serialize};

use super::gate::{synthesize_gate, GATE_PARAMS};
use crate::{Error, Result};

/// Parametrized two-qubit gates on the interleaved chain `[q₁, a₁, q₂, …, a_{L−1}, q_L]`,
/// repeated over `tau` identical layers.
///
/// Chain position `2i` is system qubit `i`, `2i+1` is ancilla `i`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LadderCircuit {
    l: usize,
    tau: usize,
    layer: Vec<usize>,
}

impl LadderCircuit {
    /// The default layer: every adjacent chain pair once, left to right.
    pub fn ladder(l: usize, tau: usize) -> Result<Self> {
        if l == 0 {
            return Err(Error::arg("ladder needs at least one system qubit"));
        }
        Self::with_layer(l, tau, (0..2 * (l - 1)).collect())
    }

    /// A custom layer given by the left chain positions of its gates, in order.
    pub fn with_layer(l: usize, tau: usize, layer: Vec<usize>) -> Result<Self> {
        if l == 0 {
            return Err(Error::arg("ladder needs at least one system qubit"));
        }
        if let Some(&c) = layer.iter().find(|&&c| c + 1 >= 2 * l - 1) {
            return Err(Error::arg(format!("gate at chain position {c} leaves a chain of {}", 2 * l - 1)));
        }
        Ok(LadderCircuit { l, tau, layer })
    }

    pub fn l(&self) -> usize {
        self.l
    }

    pub fn tau(&self) -> usize {
        self.tau
    }

    pub fn chain_len(&self) -> usize {
        2 * self.l - 1
    }

    pub fn ancillas(&self) -> usize {
        self.l - 1
    }

    pub fn gates_per_layer(&self) -> usize {
        self.layer.len()
    }

    pub fn gate_count(&self) -> usize {
        self.layer.len() * self.tau
    }

    pub fn n_params(&self) -> usize {
        self.gate_count() * GATE_PARAMS
    }

    /// Left chain position of gate `g` (global order).
    pub fn gate_site(&self, g: usize) -> usize {
        self.layer[g % self.layer.len()]
    }

    pub fn chain_labels(&self) -> Vec<String> {
        (0..self.chain_len()).map(|c| if c % 2 == 0 { format!("q{}", c / 2) } else { format!("a{}", c / 2) }).collect()
    }

    /// Same layer at a different depth.
    pub fn with_tau(&self, tau: usize) -> Self {
        LadderCircuit { tau, ..self.clone() }
    }

    pub fn check_params(&self, params: &[f64]) -> Result<()> {
        if params.len() != self.n_params() {
            return Err(Error::arg(format!("circuit takes {} parameters, got {}", self.n_params(), params.len())));
        }
        if params.iter().any(|t| !t.is_finite()) {
            return Err(Error::numeric("non-finite circuit parameter"));
        }
        Ok(())
    }

    pub fn gate_params<'a>(&self, params: &'a [f64], g: usize) -> &'a [f64] {
        &params[g * GATE_PARAMS..(g + 1) * GATE_PARAMS]
    }

    /// First and last gate touching each ancilla, if any.
    pub(crate) fn ancilla_span(&self) -> Vec<Option<(usize, usize)>> {
        let mut span = vec![None; self.ancillas()];
        for g in 0..self.gate_count() {
            let c = self.gate_site(g);
            let a = if c % 2 == 1 { c / 2 } else { c.div_ceil(2) };
            span[a] = Some(match span[a] {
                None => (g, g),
                Some((first, _)) => (first, g),
            });
        }
        span
    }

    /// Largest unitarity residual over all synthesized gates.
    pub fn unitarity_residual(&self, params: &[f64]) -> Result<f64> {
        self.check_params(params)?;
        let mut worst: f64 = 0.0;
        for g in 0..self.gate_count() {
            let u = synthesize_gate(self.gate_params(params, g))?;
            worst = worst.max((u.adjoint() * u - nalgebra::Matrix4::identity()).norm());
        }
        Ok(worst)
    }
}
