use serde::{Deserialize, Serialize};

use super::MIN_DENOMINATOR;
use crate::qcore::{partial_transpose, CMatrix, DensityMatrix};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NegativityResult {
    pub partition: Vec<String>,
    /// `p_n = tr[(ρ^{T_A})ⁿ]`, indexed by `n − 1` (so `moments[0] = p₁`).
    pub moments: Vec<f64>,
    /// `tr(ρⁿ)` for the same `n`.
    pub powers: Vec<f64>,
    /// Rényi negativity for the largest computed `n`.
    pub negativity: Option<f64>,
    /// Coefficient of a logarithmic fit across sizes, filled in by callers.
    pub alpha: Option<f64>,
}

impl NegativityResult {
    pub fn p(&self, n: usize) -> Option<f64> {
        self.moments.get(n.checked_sub(1)?).copied()
    }
}

fn trace_product(a: &CMatrix, b: &CMatrix) -> f64 {
    // tr(AB) = Σ_ij A_ij B_ji
    let d = a.nrows();
    let mut acc = 0.0;
    for i in 0..d {
        for j in 0..d {
            acc += (a[(i, j)] * b[(j, i)]).re;
        }
    }
    acc
}

fn moments_of(m: &CMatrix, n_max: usize) -> Vec<f64> {
    let mut out = vec![m.trace().re, trace_product(m, m)];
    if n_max >= 3 {
        let m2 = m * m;
        out.push(trace_product(&m2, m));
    }
    out.truncate(n_max);
    out
}

/// PT moments `p₁..p_{n_max}` for `n_max ∈ {2, 3}`.
pub fn pt_moments<S: AsRef<str>>(rho: &DensityMatrix, part: &[S], n_max: usize) -> Result<NegativityResult> {
    if !(2..=3).contains(&n_max) {
        return Err(Error::arg(format!("PT moments supported for n_max in {{2, 3}}, got {n_max}")));
    }
    let pt = partial_transpose(rho, part)?;
    Ok(NegativityResult {
        partition: part.iter().map(|s| s.as_ref().to_string()).collect(),
        moments: moments_of(&pt, n_max),
        powers: moments_of(rho.matrix(), n_max),
        negativity: None,
        alpha: None,
    })
}

/// `N^(n) = ln(p_n / tr ρⁿ) / (1 − n)`.
pub fn renyi_negativity<S: AsRef<str>>(rho: &DensityMatrix, part: &[S], n: usize) -> Result<NegativityResult> {
    let mut res = pt_moments(rho, part, n)?;
    res.negativity = Some(negativity_from_moments(res.moments[n - 1], res.powers[n - 1], n)?);
    Ok(res)
}

pub fn negativity_from_moments(p_n: f64, tr_n: f64, n: usize) -> Result<f64> {
    if tr_n <= MIN_DENOMINATOR {
        return Err(Error::numeric(format!("tr(rho^{n}) = {tr_n:.3e} vanishes")));
    }
    let ratio = p_n / tr_n;
    if ratio <= 0.0 {
        return Err(Error::numeric(format!("PT moment ratio {ratio:.3e} is not positive")));
    }
    Ok(ratio.ln() / (1.0 - n as f64))
}
