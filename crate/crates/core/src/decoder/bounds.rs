use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const SANDWICH_SLACK: f64 = 1e-6;
/// Gap below which a bound counts as saturated.
pub const SATURATION_GAP: f64 = 0.02;

/// `½d_ρ ≤ √(1−√F_e) ≤ d_ρ`, evaluated with slack.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub fe: f64,
    pub d_rho: f64,
    /// `√(1−√F_e)`.
    pub middle: f64,
    pub lower_ok: bool,
    pub upper_ok: bool,
    pub lower_gap: f64,
    pub upper_gap: f64,
    pub lower_saturated: bool,
    pub upper_saturated: bool,
}

impl BoundReport {
    pub fn holds(&self) -> bool {
        self.lower_ok && self.upper_ok
    }
}

pub fn check_bound_sandwich(fe: f64, d_rho: f64) -> Result<BoundReport> {
    for (name, v) in [("F_e", fe), ("d_rho", d_rho)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::arg(format!("{name} = {v} outside [0, 1]")));
        }
    }
    let middle = (1.0 - fe.sqrt()).max(0.0).sqrt();
    let lower_gap = middle - 0.5 * d_rho;
    let upper_gap = d_rho - middle;
    Ok(BoundReport {
        fe,
        d_rho,
        middle,
        lower_ok: lower_gap >= -SANDWICH_SLACK,
        upper_ok: upper_gap >= -SANDWICH_SLACK,
        lower_gap,
        upper_gap,
        lower_saturated: lower_gap.abs() < SATURATION_GAP,
        upper_saturated: upper_gap.abs() < SATURATION_GAP,
    })
}
