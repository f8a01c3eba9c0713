//! Exact entanglement fidelity of a ladder decoder and its adjoint gradient.
//!
//! `F = Σ_k ⟨χ_k| ρ_RQ ⊗ |0⟩⟨0| |χ_k⟩` with `χ_k = U†(|target⟩ ⊗ |k⟩_anc)`. Vectors live
//! on `R ∪ Q ∪ {active ancillas}`: an ancilla joins the register at its first gate
//! and leaves after its last one, so a depth-one ladder never holds more than one.

use nalgebra::Matrix4;

use super::circuit::LadderCircuit;
use super::gate::{GateFactor, GATE_PARAMS};
use crate::decoder::NoisyCode;
use crate::qcore::{check_alloc, DensityMatrix, StateVector, C64, ZERO};
use crate::{Error, Result};

/// Reusable evaluator for one decoding problem and circuit shape.
#[derive(Debug, Clone)]
pub struct FidelityEngine {
    circuit: LadderCircuit,
    n_ref: usize,
    target: Vec<C64>,
    rho: faer::Mat<C64>,
    span: Vec<Option<(usize, usize)>>,
}

/// A batch of `count` vectors on `n` qubits, stored back to back.
#[derive(Clone, Default)]
struct Batch {
    data: Vec<C64>,
    count: usize,
    n: usize,
}

impl FidelityEngine {
    pub fn new(circuit: &LadderCircuit, target: &StateVector, n_ref: usize, rho_rq: &DensityMatrix) -> Result<Self> {
        let n_rq = n_ref + circuit.l();
        if target.n_qubits() != n_rq || rho_rq.n_qubits() != n_rq {
            return Err(Error::arg(format!(
                "target on {} and state on {} qubits, circuit expects {n_rq}",
                target.n_qubits(),
                rho_rq.n_qubits()
            )));
        }
        if target.register() != rho_rq.register() {
            return Err(Error::arg("target and state registers differ"));
        }
        let m = rho_rq.matrix();
        let rho = faer::Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)]);
        Ok(FidelityEngine {
            circuit: circuit.clone(),
            n_ref,
            target: target.amplitudes().to_vec(),
            rho,
            span: circuit.ancilla_span(),
        })
    }

    pub fn for_code(circuit: &LadderCircuit, code: &NoisyCode) -> Result<Self> {
        Self::new(circuit, &code.target, code.n_reference, &code.rho)
    }

    pub fn circuit(&self) -> &LadderCircuit {
        &self.circuit
    }

    /// Engine for the same problem at another depth.
    pub fn with_circuit(&self, circuit: &LadderCircuit) -> Result<Self> {
        if circuit.l() != self.circuit.l() {
            return Err(Error::arg("circuit size differs from the problem"));
        }
        Ok(FidelityEngine { circuit: circuit.clone(), span: circuit.ancilla_span(), ..self.clone() })
    }

    pub fn value(&self, params: &[f64]) -> Result<f64> {
        Ok(self.run(params, false)?.0)
    }

    pub fn value_and_gradient(&self, params: &[f64]) -> Result<(f64, Vec<f64>)> {
        self.run(params, true)
    }

    /// Central differences, the fallback gradient mode.
    pub fn finite_difference_gradient(&self, params: &[f64], step: f64) -> Result<Vec<f64>> {
        let mut p = params.to_vec();
        let mut g = Vec::with_capacity(params.len());
        for i in 0..params.len() {
            p[i] = params[i] + step;
            let up = self.value(&p)?;
            p[i] = params[i] - step;
            let down = self.value(&p)?;
            p[i] = params[i];
            g.push((up - down) / (2.0 * step));
        }
        Ok(g)
    }

    /// Register position of chain site `c` given which ancillas are active.
    fn position(&self, active: &[bool], c: usize) -> usize {
        let before = (0..c).filter(|&s| s % 2 == 0 || active[s / 2]).count();
        self.n_ref + before
    }

    fn run(&self, params: &[f64], want_grad: bool) -> Result<(f64, Vec<f64>)> {
        WORKSPACE.with(|ws| self.run_in(params, want_grad, &mut ws.borrow_mut()))
    }

    fn run_in(&self, params: &[f64], want_grad: bool, ws: &mut Workspace) -> Result<(f64, Vec<f64>)> {
        let circuit = &self.circuit;
        circuit.check_params(params)?;
        let gates = circuit.gate_count();
        let factors =
            (0..gates).map(|g| GateFactor::new(circuit.gate_params(params, g))).collect::<Result<Vec<_>>>()?;

        let n_rq = self.n_ref + circuit.l();
        let mut active = vec![false; circuit.ancillas()];
        let Workspace { batch, spare, stored } = ws;
        batch.reset(&self.target, 1, n_rq);
        if want_grad && stored.len() < gates {
            stored.resize_with(gates, Batch::default);
        }
        let mut stored_elems: u128 = 0;

        for g in (0..gates).rev() {
            let c = circuit.gate_site(g);
            let anc = if c % 2 == 1 { c / 2 } else { c.div_ceil(2) };
            let (first, last) = self.span[anc].expect("gate touches its ancilla");
            if g == last {
                active[anc] = true;
                batch.split_into(self.position(&active, 2 * anc + 1), spare);
                std::mem::swap(batch, spare);
            }
            if want_grad {
                stored_elems += batch.data.len() as u128;
                check_alloc(stored_elems, 16)?;
                stored[g].copy_from(batch);
            }
            batch.apply(self.position(&active, c), &factors[g].u.adjoint());
            if g == first {
                batch.project_zero_into(self.position(&active, 2 * anc + 1), spare);
                std::mem::swap(batch, spare);
                active[anc] = false;
            }
        }

        let dim = 1usize << n_rq;
        debug_assert_eq!(batch.n, n_rq);
        let count = batch.count;
        let chi = faer::MatRef::from_column_major_slice(&batch.data, dim, count);
        let m = &self.rho * chi;
        let mut fe = 0.0;
        for k in 0..count {
            for i in 0..dim {
                fe += (batch.data[k * dim + i].conj() * m[(i, k)]).re;
            }
        }
        if !fe.is_finite() {
            return Err(Error::numeric("non-finite entanglement fidelity"));
        }
        if !want_grad {
            return Ok((fe, Vec::new()));
        }

        let fwd = batch;
        fwd.data.clear();
        for k in 0..count {
            fwd.data.extend((0..dim).map(|i| m[(i, k)]));
        }
        let mut grad = vec![0.0; circuit.n_params()];
        for g in 0..gates {
            let c = circuit.gate_site(g);
            let anc = if c % 2 == 1 { c / 2 } else { c.div_ceil(2) };
            let (first, last) = self.span[anc].expect("gate touches its ancilla");
            if g == first {
                active[anc] = true;
                fwd.embed_zero_into(self.position(&active, 2 * anc + 1), spare);
                std::mem::swap(fwd, spare);
            }
            let pos = self.position(&active, c);
            let env = environment(&stored[g], fwd, pos);
            grad[g * GATE_PARAMS..(g + 1) * GATE_PARAMS].copy_from_slice(&factors[g].gradient(&env));
            fwd.apply(pos, &factors[g].u);
            if g == last {
                fwd.merge_into(self.position(&active, 2 * anc + 1), spare);
                std::mem::swap(fwd, spare);
                active[anc] = false;
            }
        }
        if grad.iter().any(|x| !x.is_finite()) {
            return Err(Error::numeric("non-finite gradient"));
        }
        Ok((fe, grad))
    }
}

/// Per-thread buffers reused across evaluations.
#[derive(Default)]
struct Workspace {
    batch: Batch,
    spare: Batch,
    stored: Vec<Batch>,
}

thread_local! {
    static WORKSPACE: std::cell::RefCell<Workspace> = std::cell::RefCell::new(Workspace::default());
}

impl Batch {
    fn dim(&self) -> usize {
        1 << self.n
    }

    fn reset(&mut self, data: &[C64], count: usize, n: usize) {
        self.data.clear();
        self.data.extend_from_slice(data);
        self.count = count;
        self.n = n;
    }

    fn copy_from(&mut self, other: &Batch) {
        self.reset(&other.data, other.count, other.n);
    }

    /// Applies `u` to the adjacent pair `(pos, pos+1)` of every vector.
    fn apply(&mut self, pos: usize, u: &Matrix4<C64>) {
        let block = 1usize << (self.n - 2 - pos);
        let u: [[C64; 4]; 4] = std::array::from_fn(|r| std::array::from_fn(|c| u[(r, c)]));
        for chunk in self.data.chunks_exact_mut(4 * block) {
            let (s0, rest) = chunk.split_at_mut(block);
            let (s1, rest) = rest.split_at_mut(block);
            let (s2, s3) = rest.split_at_mut(block);
            for i in 0..block {
                let a = [s0[i], s1[i], s2[i], s3[i]];
                let row = |r: usize| u[r][0] * a[0] + u[r][1] * a[1] + u[r][2] * a[2] + u[r][3] * a[3];
                s0[i] = row(0);
                s1[i] = row(1);
                s2[i] = row(2);
                s3[i] = row(3);
            }
        }
    }

    /// Inserts a qubit at `pos`; vector `v` becomes `v⊗|0⟩` (index `2v`) and `v⊗|1⟩` (`2v+1`).
    fn split_into(&self, pos: usize, out: &mut Batch) {
        let block = 1usize << (self.n - pos);
        out.data.clear();
        for v in self.data.chunks_exact(self.dim()) {
            for b in 0..2 {
                for lo in v.chunks_exact(block) {
                    if b == 1 {
                        out.data.extend(std::iter::repeat_n(ZERO, block));
                    }
                    out.data.extend_from_slice(lo);
                    if b == 0 {
                        out.data.extend(std::iter::repeat_n(ZERO, block));
                    }
                }
            }
        }
        out.count = 2 * self.count;
        out.n = self.n + 1;
    }

    /// Inserts a qubit in `|0⟩` at `pos`.
    fn embed_zero_into(&self, pos: usize, out: &mut Batch) {
        let block = 1usize << (self.n - pos);
        out.data.clear();
        for lo in self.data.chunks_exact(block) {
            out.data.extend_from_slice(lo);
            out.data.extend(std::iter::repeat_n(ZERO, block));
        }
        out.count = self.count;
        out.n = self.n + 1;
    }

    /// Keeps the `⟨0|` component of the qubit at `pos`.
    fn project_zero_into(&self, pos: usize, out: &mut Batch) {
        let block = 1usize << (self.n - 1 - pos);
        out.data.clear();
        for pair in self.data.chunks_exact(2 * block) {
            out.data.extend_from_slice(&pair[..block]);
        }
        out.count = self.count;
        out.n = self.n - 1;
    }

    /// Inverse bookkeeping of [`Batch::split_into`]: `Σ_b ⟨b|_pos v_{2k+b}`.
    fn merge_into(&self, pos: usize, out: &mut Batch) {
        let dim = self.dim();
        let block = 1usize << (self.n - 1 - pos);
        out.data.clear();
        for pair in self.data.chunks_exact(2 * dim) {
            let (v0, v1) = pair.split_at(dim);
            for (c0, c1) in v0.chunks_exact(2 * block).zip(v1.chunks_exact(2 * block)) {
                out.data.extend(c0[..block].iter().zip(&c1[block..]).map(|(a, b)| a + b));
            }
        }
        out.count = self.count / 2;
        out.n = self.n - 1;
    }
}

/// `E_ij = Σ conj(η_i) m_j` over every vector and spectator index of the pair at `pos`.
fn environment(eta: &Batch, m: &Batch, pos: usize) -> Matrix4<C64> {
    debug_assert_eq!((eta.n, eta.count), (m.n, m.count));
    let block = 1usize << (eta.n - 2 - pos);
    let mut e = [[ZERO; 4]; 4];
    for (ce, cm) in eta.data.chunks_exact(4 * block).zip(m.data.chunks_exact(4 * block)) {
        for i in 0..block {
            let a = [ce[i].conj(), ce[i + block].conj(), ce[i + 2 * block].conj(), ce[i + 3 * block].conj()];
            let b = [cm[i], cm[i + block], cm[i + 2 * block], cm[i + 3 * block]];
            for r in 0..4 {
                for c in 0..4 {
                    e[r][c] += a[r] * b[c];
                }
            }
        }
    }
    Matrix4::from_fn(|r, c| e[r][c])
}
