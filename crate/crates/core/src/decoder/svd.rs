use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::restrict_to_system;
use crate::channels::{dilate, ChannelSpec};
use crate::qcore::{check_alloc, hermitian_eigen, svd, CMatrix, DensityMatrix, StateVector, C64, ZERO};
use crate::{Error, Result};

/// Ancilla dimension of the decoder isometry `W: Q → Q⊗A`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AncillaDim {
    /// `d_A = d_Q`.
    #[default]
    Auto,
    Fixed(usize),
}

impl AncillaDim {
    pub fn resolve(self, d_q: usize) -> usize {
        match self {
            AncillaDim::Auto => d_q,
            AncillaDim::Fixed(d) => d,
        }
    }
}

impl fmt::Display for AncillaDim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AncillaDim::Auto => f.write_str("auto"),
            AncillaDim::Fixed(d) => write!(f, "{d}"),
        }
    }
}

impl FromStr for AncillaDim {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(AncillaDim::Auto);
        }
        match s.parse::<usize>() {
            Ok(d) if d >= 1 => Ok(AncillaDim::Fixed(d)),
            _ => Err(Error::arg(format!("ancilla dimension '{s}' is neither 'auto' nor a positive integer"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvdOptions {
    pub d_a: AncillaDim,
    pub max_iters: usize,
    pub tol: f64,
    pub restarts: usize,
    pub seed: u64,
}

impl Default for SvdOptions {
    fn default() -> Self {
        SvdOptions { d_a: AncillaDim::Auto, max_iters: 50, tol: 1e-8, restarts: 5, seed: 0 }
    }
}

/// Result of the alternating SVD optimization.
///
/// `F_e` only depends on `W` through its compression `Ω = (I_A ⊗ F†)W`, where the
/// columns of `F` span the target's support on `Q`; `Ω` is stored and `W` is
/// rebuilt on demand by [`DecoderState::isometry`].
#[derive(Debug, Clone)]
pub struct DecoderState {
    /// `d_A·k × d_Q`, row `a·k + α`.
    pub omega: CMatrix,
    /// `d_Q × k`, orthonormal columns.
    pub frame: CMatrix,
    pub fe: f64,
    /// `tr S` after each iteration.
    pub trace: Vec<f64>,
    pub d_a: usize,
    pub converged: bool,
    /// Largest excess of `tr S` over 1 removed by clamping.
    pub clamp_drift: f64,
    pub restart: usize,
}

impl DecoderState {
    pub fn iterations(&self) -> usize {
        self.trace.len()
    }

    /// Full isometry `W`, rows indexed `q·d_A + a`.
    pub fn isometry(&self) -> Result<CMatrix> {
        let (dq, k, da) = (self.frame.nrows(), self.frame.ncols(), self.d_a);
        check_alloc((dq * da) as u128 * dq as u128, 16)?;
        let mut w = CMatrix::zeros(dq * da, dq);
        for q in 0..dq {
            for a in 0..da {
                for j in 0..dq {
                    let mut acc = ZERO;
                    for al in 0..k {
                        acc += self.frame[(q, al)] * self.omega[(a * k + al, j)];
                    }
                    w[(q * da + a, j)] = acc;
                }
            }
        }
        if da * k < dq {
            // Ω is a co-isometry; the missing directions are routed into the
            // complement of the frame, where they do not touch F_e.
            let defect = CMatrix::identity(dq, dq) - self.omega.adjoint() * &self.omega;
            let e = hermitian_eigen(&defect)?;
            let missing: Vec<usize> = (0..dq).filter(|&i| e.values[i] > 0.5).collect();
            let comp = hermitian_eigen(&(CMatrix::identity(dq, dq) - &self.frame * self.frame.adjoint()))?;
            let outside: Vec<usize> = (0..dq).filter(|&i| comp.values[i] > 0.5).collect();
            if missing.len() > da * outside.len() {
                return Err(Error::arg("ancilla too small to complete the decoder isometry"));
            }
            for (t, &m) in missing.iter().enumerate() {
                let (c, a) = (outside[t % outside.len()], t / outside.len());
                for q in 0..dq {
                    for j in 0..dq {
                        w[(q * da + a, j)] += comp.vectors[(q, c)] * e.vectors[(j, m)].conj();
                    }
                }
            }
        }
        Ok(w)
    }
}

struct Problem {
    dq: usize,
    frame: CMatrix,
    /// `[Y_0 | Y_1 | …]`, `Y_s = B_s F` with `B_s = Σ_r |ψ_{s,r}⟩⟨φ_r|`.
    y: CMatrix,
    n_branches: usize,
}

impl Problem {
    fn new(target: &[C64], n_reference: usize, branches: &[Vec<C64>]) -> Result<Self> {
        let d = target.len();
        let dr = 1usize << n_reference;
        if d % dr != 0 || d < dr {
            return Err(Error::arg("target dimension incompatible with reference size"));
        }
        let dq = d / dr;
        if let Some(b) = branches.iter().find(|b| b.len() != d) {
            return Err(Error::arg(format!("branch of length {} against target of length {d}", b.len())));
        }
        let phi = CMatrix::from_fn(dr, dq, |r, q| target[r * dq + q]);
        let dec = svd(&phi.transpose())?;
        let smax = dec.s.first().copied().unwrap_or(0.0);
        if smax == 0.0 {
            return Err(Error::arg("target state is zero"));
        }
        let k = dec.s.iter().filter(|&&s| s > 1e-12 * smax).count();
        let frame = dec.u.columns(0, k).into_owned();
        let g = phi.map(|z| z.conj()) * &frame;
        let n_branches = branches.len();
        let mut y = CMatrix::zeros(dq, n_branches * k);
        for (s, b) in branches.iter().enumerate() {
            let psi = CMatrix::from_fn(dr, dq, |r, q| b[r * dq + q]);
            let ys = psi.transpose() * &g;
            y.columns_mut(s * k, k).copy_from(&ys);
        }
        Ok(Problem { dq, frame, y, n_branches })
    }

    fn k(&self) -> usize {
        self.frame.ncols()
    }

    /// `c[a, s] = tr(Ω_a Y_s)`.
    fn coefficients(&self, omega: &CMatrix) -> CMatrix {
        let k = self.k();
        let da = omega.nrows() / k;
        let prod = omega * &self.y;
        CMatrix::from_fn(da, self.n_branches, |a, s| (0..k).map(|al| prod[(a * k + al, s * k + al)]).sum())
    }

    fn value(&self, omega: &CMatrix) -> f64 {
        self.coefficients(omega).iter().map(|z| z.norm_sqr()).sum()
    }

    /// Best `Ω` against a frozen copy, and `tr S` of the linearized problem.
    fn step(&self, prev: &CMatrix) -> Result<(CMatrix, f64)> {
        let k = self.k();
        let da = prev.nrows() / k;
        let c = self.coefficients(prev);
        let mut chat = CMatrix::zeros(self.n_branches * k, da * k);
        for a in 0..da {
            for s in 0..self.n_branches {
                let v = c[(a, s)].conj();
                for b in 0..k {
                    chat[(s * k + b, a * k + b)] = v;
                }
            }
        }
        let n = &self.y * chat;
        let dec = svd(&n)?;
        Ok((&dec.v * dec.u.adjoint(), dec.s.iter().sum()))
    }

    fn random_start(&self, da: usize, rng: &mut ChaCha8Rng) -> CMatrix {
        let rows = da * self.k();
        let mut gauss = |r, c| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            let _ = (r, c);
            C64::new(re, im)
        };
        if rows >= self.dq {
            CMatrix::from_fn(rows, self.dq, &mut gauss).qr().q()
        } else {
            CMatrix::from_fn(self.dq, rows, &mut gauss).qr().q().adjoint()
        }
    }

    fn run(&self, da: usize, opts: &SvdOptions, restart: usize) -> Result<DecoderState> {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        rng.set_stream(restart as u64);
        let mut omega = self.random_start(da, &mut rng);
        let mut prev = self.value(&omega);
        let mut trace = Vec::new();
        let mut converged = false;
        let mut drift: f64 = 0.0;
        for _ in 0..opts.max_iters {
            let (next, f) = self.step(&omega)?;
            if !f.is_finite() {
                return Err(Error::numeric(format!("non-finite fidelity after {} iterations", trace.len())));
            }
            omega = next;
            drift = drift.max(f - 1.0);
            trace.push(f);
            if (f - prev).abs() < opts.tol {
                converged = true;
                break;
            }
            prev = f;
        }
        if drift > 1e-9 {
            log::warn!("tr S exceeded 1 by {drift:.3e} before clamping");
        }
        if !converged {
            log::warn!("SVD decoder restart {restart} not converged after {} iterations: {:?}", opts.max_iters, trace);
        }
        let fe = trace.last().copied().unwrap_or(prev).clamp(0.0, 1.0);
        Ok(DecoderState {
            omega,
            frame: self.frame.clone(),
            fe,
            trace,
            d_a: da,
            converged,
            clamp_drift: drift.max(0.0),
            restart,
        })
    }
}

/// Kraus branches `√w_s (I_R ⊗ K_s)|φ⟩` of the dephased target, read off the
/// environment index of the dilation.
pub fn noisy_branches(phi: &StateVector, n_reference: usize, spec: &ChannelSpec) -> Result<Vec<Vec<C64>>> {
    let spec = restrict_to_system(spec, phi.register(), n_reference)?;
    let dil = dilate(phi, &spec)?;
    let ne = dil.environment.len();
    let amps = dil.state.amplitudes();
    let d = phi.amplitudes().len();
    Ok((0..1usize << ne)
        .map(|e| (0..d).map(|i| amps[(i << ne) | e]).collect::<Vec<_>>())
        .filter(|b| b.iter().map(|z| z.norm_sqr()).sum::<f64>() > 1e-30)
        .collect())
}

/// Optimal `F_e` for a noisy `ρ_RQ` given as pure branches `ρ = Σ_s |ψ_s⟩⟨ψ_s|`.
pub fn optimize_fe_svd_branches(
    branches: &[Vec<C64>],
    target: &StateVector,
    n_reference: usize,
    opts: &SvdOptions,
) -> Result<DecoderState> {
    if opts.restarts == 0 || opts.max_iters == 0 {
        return Err(Error::arg("restarts and max_iters must be positive"));
    }
    let problem = Problem::new(target.amplitudes(), n_reference, branches)?;
    let da = opts.d_a.resolve(problem.dq);
    if da == 0 {
        return Err(Error::arg("ancilla dimension must be at least 1"));
    }
    check_alloc((da * problem.k()) as u128 * (problem.n_branches * problem.k()) as u128, 16)?;
    let runs = (0..opts.restarts).into_par_iter().map(|r| problem.run(da, opts, r)).collect::<Result<Vec<_>>>()?;
    let mut best = None::<DecoderState>;
    for run in runs {
        if best.as_ref().is_none_or(|b| run.fe > b.fe) {
            best = Some(run);
        }
    }
    Ok(best.expect("at least one restart"))
}

/// Optimal `F_e` for an arbitrary noisy state on `R∪Q`, the first `n_reference`
/// qubits being `R`.
pub fn optimize_fe_svd(
    rho_rq: &DensityMatrix,
    target: &StateVector,
    n_reference: usize,
    opts: &SvdOptions,
) -> Result<DecoderState> {
    if rho_rq.register() != target.register() {
        return Err(Error::arg("noisy state and target live on different registers"));
    }
    let e = hermitian_eigen(rho_rq.matrix())?;
    let top = e.values.iter().cloned().fold(0.0, f64::max);
    let branches: Vec<Vec<C64>> = (0..e.values.len())
        .filter(|&i| e.values[i] > 1e-14 * top)
        .map(|i| {
            let w = e.values[i].sqrt();
            e.vectors.column(i).iter().map(|z| z * w).collect()
        })
        .collect();
    optimize_fe_svd_branches(&branches, target, n_reference, opts)
}

/// `⟨φ| tr_A[(I_R⊗W) ρ (I_R⊗W)†] |φ⟩` for an explicit isometry with rows `q·d_A + a`.
pub fn decoder_fidelity(
    w: &CMatrix,
    d_a: usize,
    rho_rq: &DensityMatrix,
    target: &StateVector,
    n_reference: usize,
) -> Result<f64> {
    let d = target.amplitudes().len();
    let dq = d >> n_reference;
    if w.nrows() != dq * d_a || w.ncols() != dq || rho_rq.dim() != d {
        return Err(Error::arg("decoder isometry shape does not match the state"));
    }
    let phi = target.amplitudes();
    let mut total = 0.0;
    for a in 0..d_a {
        // v = (I ⊗ R_a†)|φ⟩
        let v = nalgebra::DVector::from_fn(d, |i, _| {
            let (r, qp) = (i / dq, i % dq);
            (0..dq).map(|q| w[(q * d_a + a, qp)].conj() * phi[r * dq + q]).sum::<C64>()
        });
        total += (v.adjoint() * rho_rq.matrix() * &v)[(0, 0)].re;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{apply_channel_density, Axis, Convention};
    use crate::decoder::CftCode;
    use crate::ising::Boundary;
    use crate::qcore::Register;

    fn code_problem(l: usize, axis: Axis, p: f64) -> (StateVector, Vec<Vec<C64>>, ChannelSpec) {
        let phi = CftCode::ising(l, Boundary::Periodic, 2).unwrap().state().unwrap();
        let spec = ChannelSpec::new(axis, p, Convention::Half).unwrap();
        let br = noisy_branches(&phi, 1, &spec).unwrap();
        (phi, br, spec)
    }

    fn bell() -> StateVector {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let amps = vec![C64::new(s, 0.0), ZERO, ZERO, C64::new(s, 0.0)];
        StateVector::new(amps, Register::new(["R0", "q0"]).unwrap()).unwrap()
    }

    #[test]
    fn noiseless_code_is_perfectly_decodable() {
        let (phi, br, _) = code_problem(4, Axis::Z, 0.0);
        let st = optimize_fe_svd_branches(&br, &phi, 1, &SvdOptions::default()).unwrap();
        assert!((st.fe - 1.0).abs() < 1e-9, "{}", st.fe);
    }

    #[test]
    fn single_qubit_dephasing_matches_one_minus_q() {
        let phi = bell();
        for i in 0..=10 {
            let q = 0.05 * i as f64;
            let spec = ChannelSpec::new(Axis::Z, q, Convention::Full).unwrap();
            let br = noisy_branches(&phi, 1, &spec).unwrap();
            // Linear convergence slows as q → ½; iterate to round-off.
            let opts = SvdOptions { tol: 1e-14, max_iters: 2000, ..Default::default() };
            let st = optimize_fe_svd_branches(&br, &phi, 1, &opts).unwrap();
            assert!((st.fe - (1.0 - q)).abs() < 1e-8, "q={q}: {}", st.fe);
        }
    }

    #[test]
    fn trace_is_monotone_and_isometry_reproduces_fidelity() {
        for axis in [Axis::X, Axis::Z] {
            let (phi, br, spec) = code_problem(3, axis, 0.6);
            let st = optimize_fe_svd_branches(&br, &phi, 1, &SvdOptions::default()).unwrap();
            assert!(st.trace.windows(2).all(|w| w[1] >= w[0] - 1e-12), "{:?}", st.trace);
            let w = st.isometry().unwrap();
            let gram = w.adjoint() * &w;
            assert!((gram - CMatrix::identity(8, 8)).norm() < 1e-9);
            let rho = apply_channel_density(&phi.to_density().unwrap(), &spec.on_sites(["q0", "q1", "q2"])).unwrap();
            let f = decoder_fidelity(&w, st.d_a, &rho, &phi, 1).unwrap();
            assert!((f - st.fe).abs() < 1e-7, "{f} vs {}", st.fe);
        }
    }

    #[test]
    fn density_and_branch_inputs_agree() {
        let (phi, br, spec) = code_problem(3, Axis::Z, 0.5);
        let rho = apply_channel_density(&phi.to_density().unwrap(), &spec.on_sites(["q0", "q1", "q2"])).unwrap();
        let a = optimize_fe_svd_branches(&br, &phi, 1, &SvdOptions::default()).unwrap();
        let b = optimize_fe_svd(&rho, &phi, 1, &SvdOptions::default()).unwrap();
        assert!((a.fe - b.fe).abs() < 1e-8);
    }

    #[test]
    fn doubling_the_ancilla_does_not_help() {
        let (phi, br, _) = code_problem(3, Axis::X, 0.4);
        let base = optimize_fe_svd_branches(&br, &phi, 1, &SvdOptions::default()).unwrap();
        let opts = SvdOptions { d_a: AncillaDim::Fixed(16), ..Default::default() };
        let big = optimize_fe_svd_branches(&br, &phi, 1, &opts).unwrap();
        assert!(big.fe - base.fe < 1e-6);
    }

    #[test]
    fn small_ancilla_still_yields_an_isometry() {
        let (phi, br, spec) = code_problem(3, Axis::Z, 0.3);
        let opts = SvdOptions { d_a: AncillaDim::Fixed(1), ..Default::default() };
        let st = optimize_fe_svd_branches(&br, &phi, 1, &opts).unwrap();
        let w = st.isometry().unwrap();
        assert!((w.adjoint() * &w - CMatrix::identity(8, 8)).norm() < 1e-9);
        let rho = apply_channel_density(&phi.to_density().unwrap(), &spec.on_sites(["q0", "q1", "q2"])).unwrap();
        let f = decoder_fidelity(&w, 1, &rho, &phi, 1).unwrap();
        assert!((f - st.fe).abs() < 1e-7);
    }

    #[test]
    fn ancilla_dim_parses() {
        assert_eq!("auto".parse::<AncillaDim>().unwrap(), AncillaDim::Auto);
        assert_eq!("32".parse::<AncillaDim>().unwrap(), AncillaDim::Fixed(32));
        assert!("0".parse::<AncillaDim>().is_err());
    }
}
