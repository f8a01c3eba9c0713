use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::channels::{Axis, Convention};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ExperimentId {
    #[serde(rename = "fig2a")]
    Fig2a,
    #[serde(rename = "fig2b-sim")]
    Fig2bSim,
    #[serde(rename = "fig3")]
    Fig3,
    #[serde(rename = "fig4")]
    Fig4,
    #[serde(rename = "fig5-sim")]
    Fig5Sim,
    #[serde(rename = "figFeX")]
    FigFeX,
    #[serde(rename = "neg-appendix")]
    NegAppendix,
}

impl ExperimentId {
    pub const ALL: [ExperimentId; 7] = [
        ExperimentId::Fig2a,
        ExperimentId::Fig2bSim,
        ExperimentId::Fig3,
        ExperimentId::Fig4,
        ExperimentId::Fig5Sim,
        ExperimentId::FigFeX,
        ExperimentId::NegAppendix,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentId::Fig2a => "fig2a",
            ExperimentId::Fig2bSim => "fig2b-sim",
            ExperimentId::Fig3 => "fig3",
            ExperimentId::Fig4 => "fig4",
            ExperimentId::Fig5Sim => "fig5-sim",
            ExperimentId::FigFeX => "figFeX",
            ExperimentId::NegAppendix => "neg-appendix",
        }
    }
}

impl fmt::Display for ExperimentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        ExperimentId::ALL
            .into_iter()
            .find(|e| e.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::arg(format!("unknown experiment {s:?}")))
    }
}

/// Parameter grid. With `scaled` set, each `L` uses `p = s / L^ν` for every
/// `s ∈ scaled` and `ν ∈ nu`; otherwise `p` is used as given.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    #[serde(rename = "L", default)]
    pub l: Vec<usize>,
    #[serde(default)]
    pub axes: Vec<Axis>,
    #[serde(default)]
    pub p: Vec<f64>,
    #[serde(default)]
    pub scaled: Vec<f64>,
    #[serde(default)]
    pub nu: Vec<f64>,
    #[serde(default)]
    pub convention: Convention,
}

/// Experiment knobs; unset ones take per-experiment defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    /// Rényi index.
    pub n: Option<u32>,
    /// Two-site observables such as `"xx"`.
    pub observables: Option<Vec<String>>,
    /// Snapshots per dataset.
    pub shots: Option<usize>,
    pub scheme: Option<crate::shadows::BasisScheme>,
    /// Decoder depth (warm-start target for `fig4`).
    pub tau: Option<usize>,
    pub restarts: Option<usize>,
    pub svd_iters: Option<usize>,
    pub max_steps: Option<usize>,
    /// Code dimension.
    pub d: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentId,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub grid: Grid,
    #[serde(default)]
    pub settings: Settings,
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

/// One grid point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub l: usize,
    pub axis: Axis,
    pub p: f64,
    pub nu: Option<f64>,
    pub scaled: Option<f64>,
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Format(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Format(format!("config: {e}")))
    }

    /// Every grid point in a fixed order: `L`, then axis, then `ν`, then rate, then seed.
    pub fn cells(&self) -> Result<Vec<Cell>> {
        let g = &self.grid;
        if g.scaled.is_empty() != g.nu.is_empty() {
            return Err(Error::arg("scaled rates need at least one exponent nu and vice versa"));
        }
        let mut out = Vec::new();
        for &l in &g.l {
            for &axis in &g.axes {
                let mut rates: Vec<(f64, Option<f64>, Option<f64>)> = g.p.iter().map(|&p| (p, None, None)).collect();
                for &nu in &g.nu {
                    for &s in &g.scaled {
                        rates.push((s / (l as f64).powf(nu), Some(nu), Some(s)));
                    }
                }
                for (p, nu, scaled) in rates {
                    if !(0.0..=1.0).contains(&p) {
                        return Err(Error::arg(format!("rate {p} at L = {l} lies outside [0, 1]")));
                    }
                    for &seed in &self.seeds {
                        out.push(Cell { l, axis, p, nu, scaled, seed });
                    }
                }
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_expands_scaled_grid() {
        let cfg = ExperimentConfig::from_toml(
            r#"
            experiment = "figFeX"
            [grid]
            L = [4, 16]
            axes = ["x"]
            scaled = [0.5]
            nu = [0.5, 0.75]
            "#,
        )
        .unwrap();
        let cells = cfg.cells().unwrap();
        assert_eq!(cells.len(), 4);
        assert!((cells[0].p - 0.25).abs() < 1e-15);
        assert!((cells[3].p - 0.5 / 8.0).abs() < 1e-15);
        assert_eq!(cells[1].nu, Some(0.75));
    }

    #[test]
    fn roundtrips_through_text() {
        let cfg = ExperimentConfig::from_toml(
            "experiment = \"fig3\"\nseeds = [1, 2]\n[grid]\nL = [3]\naxes = [\"z\"]\np = [0.1]\n",
        )
        .unwrap();
        assert_eq!(ExperimentConfig::from_toml(&cfg.to_toml().unwrap()).unwrap(), cfg);
        assert_eq!(cfg.cells().unwrap().len(), 2);
    }

    #[test]
    fn rejects_unknown_keys_and_experiments() {
        assert!(ExperimentConfig::from_toml("experiment = \"fig9\"").is_err());
        assert!(ExperimentConfig::from_toml("experiment = \"fig3\"\nbogus = 1").is_err());
    }

    #[test]
    fn empty_grid_has_no_cells() {
        let cfg = ExperimentConfig::from_toml("experiment = \"fig4\"").unwrap();
        assert!(cfg.cells().unwrap().is_empty());
    }
}
