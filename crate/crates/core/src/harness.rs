//! Experiment orchestration: configs, grid scheduling, artifacts and comparison.

mod compare;
mod config;
mod experiments;
mod table;

use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use compare::{compare, CellDelta, CompareReport, Tolerances};
pub use config::{Cell, ExperimentConfig, ExperimentId, Grid, Settings};
pub use experiments::Check;
pub use table::{num, opt, Table};

use crate::Result;

/// Environment variable naming the root under which experiment outputs land.
pub const OUTPUT_ENV: &str = "MPLAB_OUT";

/// A grid cell that failed; the rest of the run carries on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellError {
    pub cell: Cell,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellTiming {
    pub cell: Cell,
    pub seconds: f64,
}

/// Everything written to `<name>.json` next to the CSV tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub version: String,
    pub timestamp_unix: u64,
    pub config: ExperimentConfig,
    pub checks: Vec<Check>,
    pub errors: Vec<CellError>,
    pub timings: Vec<CellTiming>,
    pub artifacts: Vec<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub output_dir: PathBuf,
    /// Written files; empty for an empty grid.
    pub artifacts: Vec<PathBuf>,
    pub checks: Vec<Check>,
    pub errors: Vec<CellError>,
}

impl RunSummary {
    /// No cell errored and every invariant check held.
    pub fn success(&self) -> bool {
        self.errors.is_empty() && self.checks.iter().all(|c| c.ok)
    }

    pub fn failed_checks(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.ok)
    }
}

/// Where `run` writes: the config's directory, else `$MPLAB_OUT/<name>`, else `out/<name>`.
pub fn output_dir(cfg: &ExperimentConfig) -> PathBuf {
    if let Some(d) = &cfg.output_dir {
        return d.clone();
    }
    let root = std::env::var_os(OUTPUT_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("out"));
    root.join(cfg.experiment.name())
}

/// Runs every grid cell on the rayon pool and writes the artifacts.
pub fn run(cfg: &ExperimentConfig) -> Result<RunSummary> {
    let cells = cfg.cells()?;
    let dir = output_dir(cfg);
    if cells.is_empty() {
        return Ok(RunSummary { output_dir: dir, artifacts: vec![], checks: vec![], errors: vec![] });
    }
    let results: Vec<(Cell, Result<experiments::CellOutput>, f64)> = cells
        .par_iter()
        .map(|cell| {
            let t0 = Instant::now();
            let r = experiments::run_cell(cfg, cell);
            (*cell, r, t0.elapsed().as_secs_f64())
        })
        .collect();

    let mut tables: Vec<(&'static str, Table)> = Vec::new();
    let mut checks = Vec::new();
    let mut errors = Vec::new();
    let mut timings = Vec::new();
    for (cell, r, seconds) in results {
        timings.push(CellTiming { cell, seconds });
        match r {
            Ok(out) => {
                for (suffix, t) in out.tables {
                    match tables.iter_mut().find(|(s, _)| *s == suffix) {
                        Some((_, acc)) => acc.extend(t),
                        None => tables.push((suffix, t)),
                    }
                }
                checks.extend(out.checks);
            }
            Err(e) => errors.push(CellError { cell, error: e.to_string() }),
        }
    }
    if cfg.experiment == ExperimentId::Fig5Sim {
        if let Some(cross) = tables.iter().find(|(s, _)| s.is_empty()).and_then(|(_, t)| experiments::crossing_table(t))
        {
            tables.push(("crossing", cross));
        }
    }

    std::fs::create_dir_all(&dir)?;
    let name = cfg.experiment.name();
    let mut artifacts = Vec::new();
    for (suffix, t) in &tables {
        let file = if suffix.is_empty() { format!("{name}.csv") } else { format!("{name}-{suffix}.csv") };
        let path = dir.join(file);
        t.write(&path)?;
        artifacts.push(path);
    }
    let meta_path = dir.join(format!("{name}.json"));
    artifacts.push(meta_path.clone());
    let meta = RunMetadata {
        version: crate::VERSION.to_string(),
        timestamp_unix: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
        config: cfg.clone(),
        checks: checks.clone(),
        errors: errors.clone(),
        timings,
        artifacts: artifacts.clone(),
    };
    std::fs::write(&meta_path, serde_json::to_string_pretty(&meta)?)?;
    Ok(RunSummary { output_dir: dir, artifacts, checks, errors })
}

/// Loads and runs a config file.
pub fn run_file(path: &Path) -> Result<RunSummary> {
    run(&ExperimentConfig::load(path)?)
}
