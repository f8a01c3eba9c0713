use serde::{Deserialize, Serialize};

use super::restrict_to_system;
use crate::channels::{dilate, ChannelSpec};
use crate::qcore::{check_alloc, psd_sqrt, svd, CMatrix, StateVector};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelDistanceResult {
    pub d_rho: f64,
    /// Root fidelity `‖√ρ_RE √σ‖₁` with `σ = ρ_R ⊗ ρ_E`.
    pub f: f64,
    pub reference_qubits: usize,
    pub environment_qubits: usize,
}

/// `d_ρ = √(1 − f(ρ_RE, ρ_R⊗ρ_E))` for the dephasing dilation of `φ_RQ`.
///
/// `f` is the root fidelity (not its square), the convention under which
/// `½d_ρ ≤ √(1−√F_e) ≤ d_ρ` holds. With `ρ_RE = AA†` (columns of `A` indexed by
/// `Q`) it is the nuclear norm of `√σ A`, which avoids square roots of the
/// rank-deficient `ρ_RE`.
pub fn channel_distance(phi_rq: &StateVector, n_reference: usize, spec: &ChannelSpec) -> Result<ChannelDistanceResult> {
    let spec = restrict_to_system(spec, phi_rq.register(), n_reference)?;
    let dil = dilate(phi_rq, &spec)?;
    let ne = dil.environment.len();
    let n = phi_rq.n_qubits();
    if n_reference + ne > n + ne || n_reference == 0 {
        return Err(Error::arg("channel distance needs at least one reference qubit"));
    }
    let (dr, de) = (1usize << n_reference, 1usize << ne);
    let dq = 1usize << (n - n_reference);
    check_alloc((dr * de) as u128 * (dr * de).max(dq) as u128, 16)?;
    let f = dilation_fidelity(dil.state.amplitudes(), dr, dq, de)?;
    Ok(ChannelDistanceResult {
        d_rho: (1.0 - f).max(0.0).sqrt(),
        f,
        reference_qubits: n_reference,
        environment_qubits: ne,
    })
}

/// Root fidelity of `ρ_RE` and `ρ_R⊗ρ_E` for a purification with amplitude index `((r·d_Q + q)·d_E) + e`.
fn dilation_fidelity(amps: &[crate::qcore::C64], dr: usize, dq: usize, de: usize) -> Result<f64> {
    let a = CMatrix::from_fn(dr * de, dq, |row, q| {
        let (r, e) = (row / de, row % de);
        amps[(r * dq + q) * de + e]
    });
    let rho_re = &a * a.adjoint();
    let rho_r = CMatrix::from_fn(dr, dr, |r, s| (0..de).map(|e| rho_re[(r * de + e, s * de + e)]).sum());
    let rho_e = CMatrix::from_fn(de, de, |e, g| (0..dr).map(|r| rho_re[(r * de + e, r * de + g)]).sum());
    let sqrt_sigma = psd_sqrt(&rho_r)?.kronecker(&psd_sqrt(&rho_e)?);
    let nuclear: f64 = svd(&(sqrt_sigma * a))?.s.iter().sum();
    Ok(nuclear.clamp(0.0, 1.0))
}
