//! Single-site Pauli dephasing channels `ρ → (1−q)ρ + q PρP`, their doubled-space
//! superoperators, environment dilations and the ancilla-randomness gadget.

use std::fmt;
use std::str::FromStr;

use nalgebra::{Matrix2, Matrix4};
use serde::{Deserialize, Serialize};

use crate::qcore::{
    apply_2q, check_alloc, CMatrix, DensityMatrix, Pauli, PauliString, Register, StateVector, VectorizedDensity, C64,
};
use crate::{Error, Result};

/// Dephasing axis; `I` is the identity channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Axis {
    #[serde(rename = "i")]
    I,
    #[serde(rename = "x")]
    X,
    #[serde(rename = "y")]
    Y,
    #[serde(rename = "z")]
    Z,
}

impl Axis {
    pub fn pauli(self) -> Pauli {
        match self {
            Axis::I => Pauli::I,
            Axis::X => Pauli::X,
            Axis::Y => Pauli::Y,
            Axis::Z => Pauli::Z,
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axis::I => "I",
            Axis::X => "X",
            Axis::Y => "Y",
            Axis::Z => "Z",
        })
    }
}

impl FromStr for Axis {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "i" | "none" | "identity" => Ok(Axis::I),
            "x" => Ok(Axis::X),
            "y" => Ok(Axis::Y),
            "z" => Ok(Axis::Z),
            o => Err(Error::arg(format!("unknown channel axis {o:?}"))),
        }
    }
}

/// How the rate `p` maps to the per-site flip probability `q`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Convention {
    /// `q = p/2`.
    #[default]
    Half,
    /// `q = p`.
    Full,
}

impl fmt::Display for Convention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Convention::Half => "half",
            Convention::Full => "full",
        })
    }
}

impl FromStr for Convention {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "half" | "p/2" | "flip-prob-p/2" => Ok(Convention::Half),
            "full" | "p" | "flip-prob-p" => Ok(Convention::Full),
            o => Err(Error::arg(format!("unknown flip-probability convention {o:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelSpec {
    pub axis: Axis,
    pub p: f64,
    pub convention: Convention,
    /// Noisy qubits by label; `None` means every qubit of the register.
    pub sites: Option<Vec<String>>,
}

impl ChannelSpec {
    pub fn new(axis: Axis, p: f64, convention: Convention) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) || p.is_nan() {
            return Err(Error::arg(format!("rate p = {p} outside [0, 1]")));
        }
        Ok(ChannelSpec { axis, p, convention, sites: None })
    }

    pub fn identity() -> Self {
        ChannelSpec { axis: Axis::I, p: 0.0, convention: Convention::Half, sites: None }
    }

    pub fn on_sites<S: Into<String>>(mut self, labels: impl IntoIterator<Item = S>) -> Self {
        self.sites = Some(labels.into_iter().map(Into::into).collect());
        self
    }

    /// Per-site flip probability `q`.
    pub fn flip_probability(&self) -> f64 {
        match (self.axis, self.convention) {
            (Axis::I, _) => 0.0,
            (_, Convention::Half) => self.p / 2.0,
            (_, Convention::Full) => self.p,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.p) || self.p.is_nan() {
            return Err(Error::arg(format!("rate p = {} outside [0, 1]", self.p)));
        }
        Ok(())
    }

    /// Noisy positions within `register`.
    pub fn positions(&self, register: &Register) -> Result<Vec<usize>> {
        match &self.sites {
            None => Ok((0..register.len()).collect()),
            Some(labels) => register.positions(labels),
        }
    }

    fn is_trivial(&self) -> bool {
        self.flip_probability() == 0.0
    }
}

/// `(1−q)ρ + q PρP` on every noisy site.
pub fn apply_channel_density(rho: &DensityMatrix, spec: &ChannelSpec) -> Result<DensityMatrix> {
    spec.validate()?;
    let sites = spec.positions(rho.register())?;
    if spec.is_trivial() {
        return Ok(rho.clone());
    }
    let q = spec.flip_probability();
    let n = rho.n_qubits();
    let mut m = rho.matrix().clone();
    let d = m.nrows();
    for &s in &sites {
        let (x, z, _) = PauliString::single(s, spec.axis.pauli()).masks(n);
        let sign = |k: usize| if (k & z).count_ones() % 2 == 1 { -1.0 } else { 1.0 };
        // Phases of P and P† cancel in PρP.
        let flipped = CMatrix::from_fn(d, d, |a, b| m[(a ^ x, b ^ x)] * (sign(a ^ x) * sign(b ^ x)));
        m = m * C64::new(1.0 - q, 0.0) + flipped * C64::new(q, 0.0);
    }
    DensityMatrix::new(m, rho.register().clone())
}

/// Per-site superoperator `(1−q) I⊗I + q P⊗P*` on a (ket, bra) qubit pair.
pub fn superoperator(axis: Axis, q: f64) -> Matrix4<C64> {
    let p = axis.pauli().matrix();
    let pc = p.map(|z| z.conj());
    let kron = Matrix4::from_fn(|r, c| p[(r / 2, c / 2)] * pc[(r % 2, c % 2)]);
    Matrix4::identity() * C64::new(1.0 - q, 0.0) + kron * C64::new(q, 0.0)
}

pub fn apply_channel_doubled(v: &VectorizedDensity, spec: &ChannelSpec) -> Result<VectorizedDensity> {
    let mut out = v.clone();
    apply_channel_doubled_in_place(&mut out, spec)?;
    Ok(out)
}

/// In-place doubled-space channel: site `s` acts on doubled positions `(s, N+s)`.
pub fn apply_channel_doubled_in_place(v: &mut VectorizedDensity, spec: &ChannelSpec) -> Result<()> {
    spec.validate()?;
    let n = v.n_qubits();
    let base = Register::new(v.register().labels()[..n].iter().cloned())?;
    let sites = spec.positions(&base)?;
    if spec.is_trivial() {
        return Ok(());
    }
    let sup = superoperator(spec.axis, spec.flip_probability());
    let amps = v.amplitudes_mut();
    for s in sites {
        apply_2q(amps, 2 * n, s, n + s, &sup);
    }
    Ok(())
}

/// Purification of the noisy state on `R∪Q∪E`, one environment qubit per noisy site.
#[derive(Debug, Clone)]
pub struct DilatedState {
    pub state: StateVector,
    pub environment: Vec<String>,
}

impl DilatedState {
    /// Labels of the non-environment qubits.
    pub fn system_labels(&self) -> Vec<String> {
        let n = self.state.n_qubits() - self.environment.len();
        self.state.register().labels()[..n].to_vec()
    }
}

/// `|ψ⟩|0⟩_E → √(1−q)|ψ⟩|0⟩_E + √q P|ψ⟩|1⟩_E` for each noisy site, environment
/// qubits appended after the system in site order.
pub fn dilate(psi: &StateVector, spec: &ChannelSpec) -> Result<DilatedState> {
    spec.validate()?;
    let sites = spec.positions(psi.register())?;
    let n = psi.n_qubits();
    check_alloc(1u128 << (n + sites.len()), 16)?;
    let q = spec.flip_probability();
    let (a0, a1) = ((1.0 - q).sqrt(), q.sqrt());
    let mut amps = psi.amplitudes().to_vec();
    let mut environment = Vec::with_capacity(sites.len());
    for (k, &s) in sites.iter().enumerate() {
        let flipped = PauliString::single(s, spec.axis.pauli()).apply(&amps, n + k);
        let mut next = Vec::with_capacity(2 * amps.len());
        for (a, b) in amps.iter().zip(&flipped) {
            next.push(a * a0);
            next.push(b * a1);
        }
        amps = next;
        let mut label = format!("E{k}");
        while psi.register().position(&label).is_some() {
            label.push('_');
        }
        environment.push(label);
    }
    let register = psi.register().concat(&Register::new(environment.clone())?)?;
    Ok(DilatedState { state: StateVector::new(amps, register)?, environment })
}

/// Rotation angle and outcome probabilities of the randomness gadget.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gadget {
    /// `θ = 2·arcsin(√(p/2))`.
    pub theta: f64,
    /// `sin²(θ/2)`, the probability that the ancilla reads 1.
    pub flip_probability: f64,
    /// Outcome probabilities `(p00, p01, p10, p11)` of the basis-selection pair.
    pub basis_probs: [f64; 4],
}

/// Angle of the `R_X` rotation in the basis-selection pair.
pub fn basis_selection_angle() -> f64 {
    2.0 * (2.0f64 / 3.0).sqrt().asin()
}

pub fn gadget_probabilities(p: f64) -> Result<Gadget> {
    if !(0.0..=1.0).contains(&p) || p.is_nan() {
        return Err(Error::arg(format!("rate p = {p} outside [0, 1]")));
    }
    let theta = 2.0 * (p / 2.0).sqrt().asin();
    let flip_probability = (theta / 2.0).sin().powi(2);

    let i = C64::new(0.0, 1.0);
    let half = basis_selection_angle() / 2.0;
    let rx = Matrix2::new(C64::new(half.cos(), 0.0), -i * half.sin(), -i * half.sin(), C64::new(half.cos(), 0.0));
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let h = Matrix2::new(C64::new(s, 0.0), C64::new(s, 0.0), C64::new(s, 0.0), C64::new(-s, 0.0));
    let a = rx.column(0);
    let b = h.column(0);
    let mut basis_probs = [0.0; 4];
    for (k, pr) in basis_probs.iter_mut().enumerate() {
        *pr = (a[k >> 1] * b[k & 1]).norm_sqr();
    }
    Ok(Gadget { theta, flip_probability, basis_probs })
}
