//! The low-energy Ising code, its optimal entanglement fidelity under dephasing,
//! and the channel-distance bounds on that fidelity.
//!
//! Registers are laid out as `R∪Q`: reference qubits first (most significant),
//! then the physical chain. Channel specs without explicit sites act on `Q` only.

mod bounds;
mod code;
mod distance;
mod svd;

pub use bounds::{check_bound_sandwich, BoundReport, SANDWICH_SLACK, SATURATION_GAP};
pub use code::{build_code_state, CftCode, NoisyCode};
pub use distance::{channel_distance, ChannelDistanceResult};
pub use svd::{
    decoder_fidelity, noisy_branches, optimize_fe_svd, optimize_fe_svd_branches, AncillaDim, DecoderState, SvdOptions,
};

use crate::channels::ChannelSpec;
use crate::qcore::Register;
use crate::Result;

/// `spec` with its default site set narrowed to the non-reference qubits.
pub(crate) fn restrict_to_system(spec: &ChannelSpec, register: &Register, n_reference: usize) -> Result<ChannelSpec> {
    if n_reference > register.len() {
        return Err(crate::Error::arg(format!("{n_reference} reference qubits in a register of {}", register.len())));
    }
    let mut out = spec.clone();
    if out.sites.is_none() {
        out.sites = Some(register.labels()[n_reference..].to_vec());
    }
    Ok(out)
}
