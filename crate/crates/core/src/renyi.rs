//! Rényi observables `tr(ρⁿO)/tr(ρⁿ)`, two-point Rényi correlators of the
//! dephased Ising ground state, power-law fits and PT-moment negativities.

mod fit;
mod negativity;

pub use fit::{chord_distance, fit_log_coefficient, fit_power_law, FitMode, PowerLawFit};
pub use negativity::{negativity_from_moments, pt_moments, renyi_negativity, NegativityResult};

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::channels::{apply_channel_density, apply_channel_doubled_in_place, ChannelSpec};
use crate::qcore::{CMatrix, DensityMatrix, Pauli, PauliString, StateVector, VectorizedDensity, C64};
use crate::{Error, Result};

/// Denominators `tr(ρⁿ)` below this are treated as vanishing.
pub const MIN_DENOMINATOR: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Explicit `ρⁿ` on the `2^L`-dimensional space.
    Dense,
    /// Norms and expectation values of `|ρ⟩` on the doubled space (n ≤ 2).
    Doubled,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Dense => "dense",
            Method::Doubled => "doubled",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RenyiEstimate {
    pub value: f64,
    pub n: u32,
    pub observable: String,
    pub method: Method,
}

fn matrix_power(rho: &CMatrix, n: u32) -> CMatrix {
    let mut acc = rho.clone();
    for _ in 1..n {
        acc = &acc * rho;
    }
    acc
}

/// `tr(ρⁿ O)/tr(ρⁿ)` for an arbitrary operator.
pub fn renyi_observable(rho: &DensityMatrix, o: &CMatrix, n: u32) -> Result<RenyiEstimate> {
    if n == 0 {
        return Err(Error::arg("Rényi index must be at least 1"));
    }
    if o.shape() != rho.matrix().shape() {
        return Err(Error::arg(format!("operator shape {:?} does not match state", o.shape())));
    }
    let rn = matrix_power(rho.matrix(), n);
    let den = rn.trace().re;
    if den <= MIN_DENOMINATOR {
        return Err(Error::numeric(format!("tr(rho^{n}) = {den:.3e} vanishes")));
    }
    let num = (&rn * o).trace().re;
    Ok(RenyiEstimate { value: num / den, n, observable: "operator".into(), method: Method::Dense })
}

/// `tr(M P)` using the sparse structure of a Pauli string.
fn trace_with_pauli(m: &CMatrix, p: &PauliString, nq: usize) -> C64 {
    let (x, z, phase) = p.masks(nq);
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..m.nrows() {
        let s = if (i & z).count_ones() % 2 == 1 { -1.0 } else { 1.0 };
        acc += m[(i, i ^ x)] * s;
    }
    acc * phase
}

/// Precomputed state that evaluates many Rényi expectation values.
pub enum RenyiEvaluator {
    Dense { rho_n: CMatrix, n_qubits: usize, n: u32, den: f64 },
    Doubled { v: VectorizedDensity, n: u32, den: f64 },
}

impl RenyiEvaluator {
    /// Noisy state `N(|ψ⟩⟨ψ|)` prepared for index `n` by the given method.
    pub fn new(psi: &StateVector, spec: &ChannelSpec, n: u32, method: Method) -> Result<Self> {
        if n == 0 {
            return Err(Error::arg("Rényi index must be at least 1"));
        }
        match method {
            Method::Dense => {
                let rho = apply_channel_density(&psi.to_density()?, spec)?;
                Self::from_density(&rho, n)
            }
            Method::Doubled => {
                if n > 2 {
                    return Err(Error::arg("the doubled-state path supports n <= 2"));
                }
                let mut v = VectorizedDensity::from_pure(psi)?;
                apply_channel_doubled_in_place(&mut v, spec)?;
                let den = if n == 2 { v.norm_sqr() } else { doubled_trace(&v, &PauliString::identity()).re };
                if den <= MIN_DENOMINATOR {
                    return Err(Error::numeric(format!("tr(rho^{n}) = {den:.3e} vanishes")));
                }
                Ok(RenyiEvaluator::Doubled { v, n, den })
            }
        }
    }

    pub fn from_density(rho: &DensityMatrix, n: u32) -> Result<Self> {
        let rho_n = matrix_power(rho.matrix(), n);
        let den = rho_n.trace().re;
        if den <= MIN_DENOMINATOR {
            return Err(Error::numeric(format!("tr(rho^{n}) = {den:.3e} vanishes")));
        }
        Ok(RenyiEvaluator::Dense { rho_n, n_qubits: rho.n_qubits(), n, den })
    }

    pub fn method(&self) -> Method {
        match self {
            RenyiEvaluator::Dense { .. } => Method::Dense,
            RenyiEvaluator::Doubled { .. } => Method::Doubled,
        }
    }

    pub fn n_qubits(&self) -> usize {
        match self {
            RenyiEvaluator::Dense { n_qubits, .. } => *n_qubits,
            RenyiEvaluator::Doubled { v, .. } => v.n_qubits(),
        }
    }

    /// `tr(ρⁿ)`.
    pub fn denominator(&self) -> f64 {
        match self {
            RenyiEvaluator::Dense { den, .. } | RenyiEvaluator::Doubled { den, .. } => *den,
        }
    }

    /// `tr(ρⁿ P)` (unnormalized).
    pub fn numerator(&self, p: &PauliString) -> Result<f64> {
        let nq = self.n_qubits();
        if p.max_site().is_some_and(|s| s >= nq) {
            return Err(Error::arg(format!("Pauli string {p} exceeds {nq} qubits")));
        }
        Ok(match self {
            RenyiEvaluator::Dense { rho_n, .. } => trace_with_pauli(rho_n, p, nq).re,
            RenyiEvaluator::Doubled { v, n: 2, .. } => p.expectation(v.amplitudes(), 2 * nq).re,
            RenyiEvaluator::Doubled { v, .. } => doubled_trace(v, p).re,
        })
    }

    pub fn value(&self, p: &PauliString) -> Result<f64> {
        Ok(self.numerator(p)? / self.denominator())
    }
}

/// `tr(ρ P)` read off the doubled amplitudes `ρ_ij` at index `i·2^N + j`.
fn doubled_trace(v: &VectorizedDensity, p: &PauliString) -> C64 {
    let nq = v.n_qubits();
    let d = 1usize << nq;
    let (x, z, phase) = p.masks(nq);
    let a = v.amplitudes();
    let mut acc = C64::new(0.0, 0.0);
    // tr(ρP) = Σ_k ρ_{k, k⊕x} · sign(k), with P|k⟩ = phase·sign(k)|k⊕x⟩.
    for k in 0..d {
        let s = if (k & z).count_ones() % 2 == 1 { -1.0 } else { 1.0 };
        acc += a[k * d + (k ^ x)] * s;
    }
    acc * phase
}

/// Rényi-2 two-point correlator `tr(ρ² O1[0] O2[l]) / tr(ρ²)` via the doubled state.
pub fn renyi2_correlator_doubled(
    psi: &StateVector,
    spec: &ChannelSpec,
    o1: Pauli,
    o2: Pauli,
    l: usize,
) -> Result<RenyiEstimate> {
    let ev = RenyiEvaluator::new(psi, spec, 2, Method::Doubled)?;
    let p = pair_string(psi.n_qubits(), 0, o1, o2, l)?;
    Ok(RenyiEstimate { value: ev.value(&p)?, n: 2, observable: format!("{o1}{o2}(l={l})"), method: Method::Doubled })
}

/// Same correlator for any `n` via an explicit `ρⁿ`.
pub fn renyi_correlator_dense(
    psi: &StateVector,
    spec: &ChannelSpec,
    o1: Pauli,
    o2: Pauli,
    l: usize,
    n: u32,
) -> Result<RenyiEstimate> {
    let ev = RenyiEvaluator::new(psi, spec, n, Method::Dense)?;
    let p = pair_string(psi.n_qubits(), 0, o1, o2, l)?;
    Ok(RenyiEstimate { value: ev.value(&p)?, n, observable: format!("{o1}{o2}(l={l})"), method: Method::Dense })
}

/// `O1[base] O2[base + l mod L]`.
pub fn pair_string(n_qubits: usize, base: usize, o1: Pauli, o2: Pauli, l: usize) -> Result<PauliString> {
    if base >= n_qubits {
        return Err(Error::arg(format!("site {base} outside a {n_qubits}-qubit register")));
    }
    PauliString::pair(base, o1, (base + l) % n_qubits, o2)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub l: usize,
    pub chord: f64,
    pub value: f64,
    pub method: Method,
}

/// Correlator at separations `l = 1..=L/2`, averaged over all base sites when
/// `translation_average` is set.
pub fn correlator_curve(
    ev: &RenyiEvaluator,
    o1: Pauli,
    o2: Pauli,
    translation_average: bool,
) -> Result<Vec<CurvePoint>> {
    let nq = ev.n_qubits();
    let bases: Vec<usize> = if translation_average { (0..nq).collect() } else { vec![0] };
    (1..=nq / 2)
        .map(|l| {
            let mut acc = 0.0;
            for &b in &bases {
                acc += ev.value(&pair_string(nq, b, o1, o2, l)?)?;
            }
            Ok(CurvePoint { l, chord: chord_distance(l, nq), value: acc / bases.len() as f64, method: ev.method() })
        })
        .collect()
}

/// Translation-averaged one-point value `tr(ρⁿ O[i])/tr(ρⁿ)`.
pub fn one_point(ev: &RenyiEvaluator, o: Pauli) -> Result<f64> {
    let nq = ev.n_qubits();
    let mut acc = 0.0;
    for s in 0..nq {
        acc += ev.value(&PauliString::single(s, o))?;
    }
    Ok(acc / nq as f64)
}
