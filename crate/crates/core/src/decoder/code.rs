use super::restrict_to_system;
use crate::channels::{apply_channel_density, ChannelSpec};
use crate::ising::{ising_lowest, Boundary, EnergySpectrum};
use crate::qcore::{DensityMatrix, Register, StateVector, C64, ZERO};
use crate::{Error, Result};

const GRAM_TOL: f64 = 1e-9;

/// `D` orthonormal codewords on the physical chain `Q`.
#[derive(Debug, Clone)]
pub struct CftCode {
    codewords: Vec<StateVector>,
}

impl CftCode {
    /// Lowest `d` eigenstates of `spectrum`; refuses degenerate codeword choices.
    pub fn from_spectrum(spectrum: &EnergySpectrum, d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::arg("code dimension must be at least 1"));
        }
        if spectrum.len() < d {
            return Err(Error::arg(format!("spectrum holds {} states, code needs {d}", spectrum.len())));
        }
        // A degenerate pair inside the code, or straddling its edge, makes the
        // codeword basis ambiguous.
        if let Some(&(i, j)) = spectrum.degenerate_pairs.iter().find(|&&(i, _)| i < d) {
            if j <= d {
                return Err(Error::Validity(format!(
                    "eigenstates {i} and {j} are degenerate (ΔE = {:.3e}); resolve the symmetry sector explicitly",
                    (spectrum.energies[j] - spectrum.energies[i]).abs()
                )));
            }
        }
        Self::from_codewords(spectrum.states[..d].to_vec())
    }

    pub fn from_codewords(codewords: Vec<StateVector>) -> Result<Self> {
        let first = codewords.first().ok_or_else(|| Error::arg("empty codeword list"))?;
        let reg = first.register().clone();
        for (a, ca) in codewords.iter().enumerate() {
            if ca.register() != &reg {
                return Err(Error::arg("codewords live on different registers"));
            }
            for (b, cb) in codewords.iter().enumerate().skip(a) {
                let g = ca.inner(cb)?;
                let want = if a == b { 1.0 } else { 0.0 };
                if (g - C64::new(want, 0.0)).norm() > GRAM_TOL {
                    return Err(Error::Validity(format!("codeword Gram entry ({a},{b}) = {g}, expected {want}")));
                }
            }
        }
        Ok(CftCode { codewords })
    }

    /// Ground state and first `d−1` excitations of the critical chain.
    pub fn ising(l: usize, boundary: Boundary, d: usize) -> Result<Self> {
        Self::from_spectrum(&ising_lowest(l, boundary, d)?, d)
    }

    pub fn d(&self) -> usize {
        self.codewords.len()
    }

    pub fn l(&self) -> usize {
        self.codewords[0].n_qubits()
    }

    pub fn codewords(&self) -> &[StateVector] {
        &self.codewords
    }

    /// Qubits needed to hold the reference system, at least one.
    pub fn reference_qubits(&self) -> usize {
        let d = self.d();
        (usize::BITS - (d - 1).leading_zeros()).max(1) as usize
    }

    /// `(1/√D) Σ_α |α⟩_R |φ_α⟩_Q`.
    pub fn state(&self) -> Result<StateVector> {
        let nr = self.reference_qubits();
        let q_reg = self.codewords[0].register();
        let mut r_labels: Vec<String> = (0..nr).map(|k| format!("R{k}")).collect();
        for lab in r_labels.iter_mut() {
            while q_reg.position(lab).is_some() {
                lab.push('_');
            }
        }
        let register = Register::new(r_labels)?.concat(q_reg)?;
        let dq = 1usize << self.l();
        let mut amps = vec![ZERO; dq << nr];
        let w = 1.0 / (self.d() as f64).sqrt();
        for (alpha, cw) in self.codewords.iter().enumerate() {
            for (q, &a) in cw.amplitudes().iter().enumerate() {
                amps[alpha * dq + q] = a * w;
            }
        }
        StateVector::new(amps, register)
    }
}

/// Maximally entangled code state built from the lowest `d` states of `spectrum`.
pub fn build_code_state(spectrum: &EnergySpectrum, d: usize) -> Result<StateVector> {
    CftCode::from_spectrum(spectrum, d)?.state()
}

/// Code state `|φ⟩_RQ` together with its image under a channel on `Q`.
#[derive(Debug, Clone)]
pub struct NoisyCode {
    pub target: StateVector,
    pub rho: DensityMatrix,
    pub n_reference: usize,
}

impl NoisyCode {
    pub fn new(code: &CftCode, spec: &ChannelSpec) -> Result<Self> {
        let target = code.state()?;
        let n_reference = code.reference_qubits();
        let spec = restrict_to_system(spec, target.register(), n_reference)?;
        let rho = apply_channel_density(&target.to_density()?, &spec)?;
        Ok(NoisyCode { target, rho, n_reference })
    }

    /// The two-dimensional periodic Ising code on `l` sites.
    pub fn ising(l: usize, spec: &ChannelSpec) -> Result<Self> {
        Self::new(&CftCode::ising(l, Boundary::Periodic, 2)?, spec)
    }
}
