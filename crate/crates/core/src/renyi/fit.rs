use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Conformal distance `(L/π)·sin(πl/L)` on a ring of `L` sites.
pub fn chord_distance(l: usize, system_size: usize) -> f64 {
    let n = system_size as f64;
    n / std::f64::consts::PI * (std::f64::consts::PI * l as f64 / n).sin()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "mode", content = "a")]
pub enum FitMode {
    /// `C = B·d^(−η)`.
    NoConstant,
    /// `C = A + B·d^(−η)` with `A ∈ [0, min C)` chosen to minimize the residual.
    FitConstant,
    /// `C = A + B·d^(−η)` with `A` supplied.
    SubtractGiven(f64),
}

/// `C(l) ≈ A + B·d(l)^(−η)` with `d` the chord distance (or `l` itself).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub a: f64,
    pub b: f64,
    pub eta: f64,
    pub l_min: usize,
    pub l_max: usize,
    /// RMS of the log-space residuals.
    pub residual: f64,
    pub chord: bool,
}

/// Default window `[2, L/2 − 1]`.
pub fn default_window(system_size: usize) -> (usize, usize) {
    (2, (system_size / 2).saturating_sub(1))
}

struct Line {
    slope: f64,
    intercept: f64,
    rms: f64,
}

fn linear_fit(x: &[f64], y: &[f64]) -> Line {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rms = (x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum::<f64>() / n).sqrt();
    Line { slope, intercept, rms }
}

fn fit_with_constant(l: &[usize], x: &[f64], c: &[f64], a: f64) -> Result<Line> {
    let mut y = Vec::with_capacity(c.len());
    for (&li, &ci) in l.iter().zip(c) {
        let v = ci - a;
        if v <= 0.0 || !v.is_finite() {
            return Err(Error::Fit { l: li, reason: format!("C(l) - A = {v:.3e} is not positive") });
        }
        y.push(v.ln());
    }
    Ok(linear_fit(x, &y))
}

/// Least-squares line of `log(C − A)` against `log d(l)` over the window.
/// `use_chord = false` uses `l` directly as the abscissa.
pub fn fit_power_law(
    curve: &[(usize, f64)],
    system_size: usize,
    mode: FitMode,
    window: Option<(usize, usize)>,
    use_chord: bool,
) -> Result<PowerLawFit> {
    let (lo, hi) = window.unwrap_or_else(|| default_window(system_size));
    let pts: Vec<(usize, f64)> = curve.iter().copied().filter(|&(l, _)| l >= lo && l <= hi).collect();
    if pts.len() < 4 {
        return Err(Error::arg(format!("fit window [{lo}, {hi}] holds {} points; at least 4 needed", pts.len())));
    }
    let l: Vec<usize> = pts.iter().map(|p| p.0).collect();
    let c: Vec<f64> = pts.iter().map(|p| p.1).collect();
    let x: Vec<f64> =
        l.iter().map(|&li| if use_chord { chord_distance(li, system_size).ln() } else { (li as f64).ln() }).collect();
    let a = match mode {
        FitMode::NoConstant => 0.0,
        FitMode::SubtractGiven(a) => a,
        FitMode::FitConstant => best_constant(&l, &x, &c)?,
    };
    let line = fit_with_constant(&l, &x, &c, a)?;
    if !line.slope.is_finite() {
        return Err(Error::Fit { l: lo, reason: "non-finite slope".into() });
    }
    Ok(PowerLawFit {
        a,
        b: line.intercept.exp(),
        eta: -line.slope,
        l_min: lo,
        l_max: hi,
        residual: line.rms,
        chord: use_chord,
    })
}

/// Grid scan of `A ∈ [0, min C)` followed by golden-section refinement.
fn best_constant(l: &[usize], x: &[f64], c: &[f64]) -> Result<f64> {
    let (imin, &cmin) = c.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).expect("non-empty");
    if cmin <= 0.0 {
        return Err(Error::Fit { l: l[imin], reason: format!("C(l) = {cmin:.3e} leaves no room for A >= 0") });
    }
    let cost = |a: f64| fit_with_constant(l, x, c, a).map(|f| f.rms).unwrap_or(f64::INFINITY);
    const GRID: usize = 400;
    let top = cmin * (1.0 - 1e-12);
    let grid: Vec<f64> = (0..GRID).map(|k| top * k as f64 / GRID as f64).collect();
    let (k, _) = grid.iter().map(|&a| cost(a)).enumerate().min_by(|a, b| a.1.total_cmp(&b.1)).expect("non-empty grid");
    let mut lo = if k == 0 { 0.0 } else { grid[k - 1] };
    let mut hi = if k + 1 < GRID { grid[k + 1] } else { top };
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut a1 = hi - g * (hi - lo);
    let mut a2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (cost(a1), cost(a2));
    for _ in 0..200 {
        if hi - lo <= 1e-14 * cmin.max(1e-300) {
            break;
        }
        if f1 <= f2 {
            hi = a2;
            a2 = a1;
            f2 = f1;
            a1 = hi - g * (hi - lo);
            f1 = cost(a1);
        } else {
            lo = a1;
            a1 = a2;
            f1 = f2;
            a2 = lo + g * (hi - lo);
            f2 = cost(a2);
        }
    }
    let mid = 0.5 * (lo + hi);
    Ok([grid[k], mid].into_iter().min_by(|a, b| cost(*a).total_cmp(&cost(*b))).expect("two candidates"))
}

/// Slope `α` and intercept of `y = α·ln x + c` by least squares.
pub fn fit_log_coefficient(points: &[(f64, f64)]) -> Result<(f64, f64)> {
    if points.len() < 2 || points.iter().any(|p| p.0 <= 0.0) {
        return Err(Error::arg("log fit needs at least two points with positive abscissa"));
    }
    let x: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let y: Vec<f64> = points.iter().map(|p| p.1).collect();
    let line = linear_fit(&x, &y);
    Ok((line.slope, line.intercept))
}
