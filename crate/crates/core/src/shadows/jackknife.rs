use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JackknifeResult {
    /// Estimator on the full sample.
    pub estimate: f64,
    /// Mean of the delete-one values.
    pub mean: f64,
    /// `√[(M−1)/M · Σ(θ₍ᵢ₎ − θ̄)²]`.
    pub stderr: f64,
}

/// Delete-one jackknife of `estimator`, called with `None` for the full sample
/// and `Some(i)` with snapshot `i` left out.
pub fn jackknife<F: Fn(Option<usize>) -> f64>(m: usize, estimator: F) -> Result<JackknifeResult> {
    if m < 2 {
        return Err(Error::arg(format!("jackknife needs at least 2 samples, got {m}")));
    }
    let values: Vec<f64> = (0..m).map(|i| estimator(Some(i))).collect();
    jackknife_weighted(estimator(None), &values, &vec![1; m])
}

/// Jackknife from delete-one values shared by groups of identical samples.
pub fn jackknife_weighted(estimate: f64, values: &[f64], weights: &[usize]) -> Result<JackknifeResult> {
    let m: usize = weights.iter().sum();
    if m < 2 || values.len() != weights.len() {
        return Err(Error::arg("jackknife needs at least 2 samples and one weight per value"));
    }
    let mf = m as f64;
    let mean = values.iter().zip(weights).map(|(v, &w)| v * w as f64).sum::<f64>() / mf;
    let ss: f64 = values.iter().zip(weights).map(|(v, &w)| w as f64 * (v - mean).powi(2)).sum();
    Ok(JackknifeResult { estimate, mean, stderr: ((mf - 1.0) / mf * ss).sqrt() })
}
