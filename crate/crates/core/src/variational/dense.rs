use super::circuit::LadderCircuit;
use super::engine::FidelityEngine;
use super::gate::synthesize_gate;
use crate::qcore::{apply_2q, hermitian_eigen, partial_trace_matrix, DensityMatrix, StateVector, C64, ZERO};
use crate::{Error, Result};

/// Runs the decoder on the full register `R∪Q∪ancillas` and traces the ancillas out.
///
/// `rho_rq` holds `n_ref` reference qubits followed by the `L` system qubits.
pub fn apply_decoder(
    circuit: &LadderCircuit,
    params: &[f64],
    rho_rq: &DensityMatrix,
    n_ref: usize,
) -> Result<DensityMatrix> {
    circuit.check_params(params)?;
    let n_rq = rho_rq.n_qubits();
    if n_rq != n_ref + circuit.l() {
        return Err(Error::arg(format!("state on {n_rq} qubits, circuit expects {}", n_ref + circuit.l())));
    }
    let n = n_rq + circuit.ancillas();
    let full_dim = crate::qcore::dim_for(n)?;
    let site = |c: usize| if c % 2 == 0 { n_ref + c / 2 } else { n_rq + c / 2 };
    let gates = (0..circuit.gate_count())
        .map(|g| {
            Ok((
                site(circuit.gate_site(g)),
                site(circuit.gate_site(g) + 1),
                synthesize_gate(circuit.gate_params(params, g))?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;

    let eig = hermitian_eigen(rho_rq.matrix())?;
    let shift = circuit.ancillas();
    let mut out = crate::qcore::CMatrix::zeros(full_dim, full_dim);
    for (w, col) in eig.values.iter().zip(eig.vectors.column_iter()) {
        if *w <= 0.0 {
            continue;
        }
        let mut psi = vec![ZERO; full_dim];
        for (i, a) in col.iter().enumerate() {
            psi[i << shift] = *a;
        }
        for (p1, p2, u) in &gates {
            apply_2q(&mut psi, n, *p1, *p2, u);
        }
        let v = nalgebra::DVector::from_vec(psi);
        out += (&v * v.adjoint()) * C64::new(*w, 0.0);
    }
    let keep: Vec<usize> = (0..n_rq).collect();
    DensityMatrix::new(partial_trace_matrix(&out, n, &keep), rho_rq.register().clone())
}

/// `⟨target| tr_anc(U ρ U†) |target⟩`, clamped into `[0, 1]`.
pub fn evaluate_fe(
    circuit: &LadderCircuit,
    params: &[f64],
    rho_rq: &DensityMatrix,
    target: &StateVector,
    n_ref: usize,
) -> Result<f64> {
    let fe = FidelityEngine::new(circuit, target, n_ref, rho_rq)?.value(params)?;
    Ok(fe.clamp(0.0, 1.0))
}
