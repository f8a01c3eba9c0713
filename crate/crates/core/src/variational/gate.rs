use nalgebra::Matrix4;

use crate::qcore::{hermitian_eigen, CMatrix, Pauli, C64, ZERO};
use crate::{Error, Result};

/// Real coordinates per two-qubit gate, one per `σ_a ⊗ σ_b` (identity included).
pub const GATE_PARAMS: usize = 16;

/// `σ_{m/4} ⊗ σ_{m%4}` in the order I, X, Y, Z; the first factor acts on the
/// more significant qubit.
pub fn pauli_pair(m: usize) -> Matrix4<C64> {
    let (a, b) = (Pauli::from_index(m / 4).matrix(), Pauli::from_index(m % 4).matrix());
    Matrix4::from_fn(|r, c| a[(r / 2, c / 2)] * b[(r % 2, c % 2)])
}

pub fn generator(params: &[f64]) -> Matrix4<C64> {
    let mut h = Matrix4::zeros();
    for (m, &t) in params.iter().enumerate().take(GATE_PARAMS) {
        if t != 0.0 {
            h += pauli_pair(m) * C64::new(t, 0.0);
        }
    }
    h
}

/// `exp(−i Σ_m θ_m σ_m)`.
pub fn synthesize_gate(params: &[f64]) -> Result<Matrix4<C64>> {
    Ok(GateFactor::new(params)?.u)
}

/// Gate together with the eigenbasis of its generator, for derivatives.
#[derive(Debug, Clone)]
pub(crate) struct GateFactor {
    pub u: Matrix4<C64>,
    v: Matrix4<C64>,
    lambda: [f64; 4],
}

impl GateFactor {
    pub fn new(params: &[f64]) -> Result<Self> {
        if params.len() != GATE_PARAMS {
            return Err(Error::arg(format!("gate takes {GATE_PARAMS} parameters, got {}", params.len())));
        }
        if params.iter().any(|t| !t.is_finite()) {
            return Err(Error::numeric("non-finite gate parameter"));
        }
        let h = generator(params);
        let e = hermitian_eigen(&CMatrix::from_fn(4, 4, |r, c| h[(r, c)]))?;
        let v = Matrix4::from_fn(|r, c| e.vectors[(r, c)]);
        let lambda = [e.values[0], e.values[1], e.values[2], e.values[3]];
        let d = Matrix4::from_diagonal(&nalgebra::Vector4::from_fn(|i, _| C64::from_polar(1.0, -lambda[i])));
        Ok(GateFactor { u: v * d * v.adjoint(), v, lambda })
    }

    /// First divided differences of `x ↦ e^{−ix}` at the eigenvalues.
    fn divided_differences(&self) -> Matrix4<C64> {
        Matrix4::from_fn(|i, j| {
            let (a, b) = (self.lambda[i], self.lambda[j]);
            let half = 0.5 * (a - b);
            let sinc = if half.abs() < 1e-8 { 1.0 - half * half / 6.0 } else { half.sin() / half };
            C64::new(0.0, -1.0) * C64::from_polar(1.0, -0.5 * (a + b)) * sinc
        })
    }

    /// `∂U/∂θ_m`.
    #[cfg(test)]
    pub fn derivative(&self, m: usize) -> Matrix4<C64> {
        let w = self.v.adjoint() * pauli_pair(m) * self.v;
        self.v * w.component_mul(&self.divided_differences()) * self.v.adjoint()
    }

    /// `∂/∂θ_m 2·Re Σ_ij E_ij U_ij` for every coordinate.
    pub fn gradient(&self, env: &Matrix4<C64>) -> [f64; GATE_PARAMS] {
        let p = self.v.adjoint() * env.transpose() * self.v;
        let z = self.v * p.component_mul(&self.divided_differences().transpose()) * self.v.adjoint();
        let mut g = [0.0; GATE_PARAMS];
        for (m, gm) in g.iter_mut().enumerate() {
            let s = pauli_pair(m);
            let mut tr = ZERO;
            for i in 0..4 {
                for k in 0..4 {
                    tr += z[(i, k)] * s[(k, i)];
                }
            }
            *gm = 2.0 * tr.re;
        }
        g
    }
}
