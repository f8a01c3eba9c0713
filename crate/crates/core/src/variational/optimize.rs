use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::engine::FidelityEngine;
use super::gate::GATE_PARAMS;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum GradientMode {
    #[default]
    Adjoint,
    FiniteDifference,
}

/// Adaptive-moment ascent on `F_e`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamOptions {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub max_steps: usize,
    /// Stop once the best value gained less than `min_improvement` over this many steps.
    pub window: usize,
    pub min_improvement: f64,
    pub gradient: GradientMode,
}

impl Default for AdamOptions {
    fn default() -> Self {
        AdamOptions {
            lr: 0.01,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            max_steps: 2000,
            window: 50,
            min_improvement: 1e-7,
            gradient: GradientMode::Adjoint,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Up,
    Down,
    Single,
}

/// One optimization at a fixed depth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepthRecord {
    pub tau: usize,
    pub phase: Phase,
    pub fe: f64,
    pub steps: usize,
    pub wallclock_s: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OptRun {
    pub hyper: AdamOptions,
    /// `F_e` at every evaluated parameter point, in order.
    pub history: Vec<f64>,
    /// Parameters attaining `best_fe`.
    pub params: Vec<f64>,
    pub best_fe: f64,
    pub seed: u64,
    pub schedule: Vec<DepthRecord>,
}

impl OptRun {
    fn absorb(&mut self, other: OptRun) {
        self.history.extend(other.history);
        self.schedule.extend(other.schedule);
    }
}

/// Standard-normal generator coordinates, reproducible from `seed`.
pub fn random_params(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

/// Maximizes `F_e` from `init` at the engine's depth.
pub fn optimize(engine: &FidelityEngine, init: &[f64], hyper: &AdamOptions, seed: u64) -> Result<OptRun> {
    let start = Instant::now();
    let n = init.len();
    let mut theta = init.to_vec();
    let (mut m1, mut m2) = (vec![0.0; n], vec![0.0; n]);
    let mut run = OptRun {
        hyper: *hyper,
        history: Vec::new(),
        params: theta.clone(),
        best_fe: f64::NEG_INFINITY,
        seed,
        schedule: Vec::new(),
    };
    let mut best_trace = Vec::new();
    let mut steps = 0;
    loop {
        let (fe, grad) = evaluate(engine, &theta, hyper.gradient).map_err(|e| {
            Error::numeric(format!("optimizer aborted after {steps} steps (last F_e {:?}): {e}", run.history.last()))
        })?;
        run.history.push(fe);
        if fe > run.best_fe {
            run.best_fe = fe;
            run.params.clone_from(&theta);
        }
        // Progress is judged on the optimizer's own iterates: a warm start may
        // first dip below its starting value before climbing past it.
        if steps > 0 {
            let prev = best_trace.last().copied().unwrap_or(f64::NEG_INFINITY);
            best_trace.push(prev.max(fe));
        }
        let stalled = best_trace.len() > hyper.window
            && best_trace[best_trace.len() - 1] - best_trace[best_trace.len() - 1 - hyper.window]
                < hyper.min_improvement;
        if steps >= hyper.max_steps || stalled || n == 0 {
            break;
        }
        steps += 1;
        let (c1, c2) = (1.0 - hyper.beta1.powi(steps as i32), 1.0 - hyper.beta2.powi(steps as i32));
        for i in 0..n {
            m1[i] = hyper.beta1 * m1[i] + (1.0 - hyper.beta1) * grad[i];
            m2[i] = hyper.beta2 * m2[i] + (1.0 - hyper.beta2) * grad[i] * grad[i];
            theta[i] += hyper.lr * (m1[i] / c1) / ((m2[i] / c2).sqrt() + hyper.eps);
        }
    }
    run.schedule.push(DepthRecord {
        tau: engine.circuit().tau(),
        phase: Phase::Single,
        fe: run.best_fe,
        steps,
        wallclock_s: start.elapsed().as_secs_f64(),
    });
    Ok(run)
}

fn evaluate(engine: &FidelityEngine, theta: &[f64], mode: GradientMode) -> Result<(f64, Vec<f64>)> {
    match mode {
        GradientMode::Adjoint => engine.value_and_gradient(theta),
        GradientMode::FiniteDifference => Ok((engine.value(theta)?, engine.finite_difference_gradient(theta, 1e-5)?)),
    }
}

/// Best `F_e` found at one depth of a warm-start schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepthBest {
    pub tau: usize,
    pub fe_best: f64,
    pub steps: usize,
    pub wallclock_s: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WarmStartReport {
    pub run: OptRun,
    pub depths: Vec<DepthBest>,
    /// Parameters attaining `depths[i].fe_best`, at depth `depths[i].tau`.
    pub depth_params: Vec<Vec<f64>>,
}

/// Grows the ladder from one layer to `tau_target`, new layers starting at the
/// identity, then scans back down to one layer dropping the last layer each time.
///
/// A depth-`τ` solution padded with an identity layer is a depth-`τ+1` solution,
/// so the reported best is carried upward and is non-decreasing in depth.
pub fn optimize_warmstart(
    engine: &FidelityEngine,
    tau_target: usize,
    hyper: &AdamOptions,
    seed: u64,
) -> Result<WarmStartReport> {
    if tau_target == 0 {
        return Err(Error::arg("warm start needs a target depth of at least one layer"));
    }
    let base = engine.circuit().clone();
    let per_layer = base.gates_per_layer() * GATE_PARAMS;
    let mut best: Vec<Option<(f64, Vec<f64>)>> = vec![None; tau_target + 1];
    let mut steps = vec![0usize; tau_target + 1];
    let mut clock = vec![0.0f64; tau_target + 1];
    let mut total = OptRun {
        hyper: *hyper,
        history: Vec::new(),
        params: Vec::new(),
        best_fe: f64::NEG_INFINITY,
        seed,
        schedule: Vec::new(),
    };

    let mut record = |tau: usize, phase: Phase, run: OptRun, total: &mut OptRun| -> Vec<f64> {
        let params = run.params.clone();
        if best[tau].as_ref().is_none_or(|(fe, _)| run.best_fe > *fe) {
            best[tau] = Some((run.best_fe, params.clone()));
        }
        let mut run = run;
        for r in run.schedule.iter_mut() {
            r.phase = phase;
            steps[tau] += r.steps;
            clock[tau] += r.wallclock_s;
        }
        total.absorb(run);
        params
    };

    let mut theta = random_params(per_layer, seed);
    for tau in 1..=tau_target {
        let eng = engine.with_circuit(&base.with_tau(tau))?;
        let run = optimize(&eng, &theta, hyper, seed)?;
        theta = record(tau, Phase::Up, run, &mut total);
        theta.extend(std::iter::repeat_n(0.0, per_layer));
    }
    theta.truncate(tau_target * per_layer);
    for tau in (1..=tau_target).rev() {
        let eng = engine.with_circuit(&base.with_tau(tau))?;
        let run = optimize(&eng, &theta, hyper, seed)?;
        theta = record(tau, Phase::Down, run, &mut total);
        theta.truncate((tau - 1) * per_layer);
    }

    let mut depths = Vec::with_capacity(tau_target);
    let mut depth_params = Vec::with_capacity(tau_target);
    let mut carried: Option<(f64, Vec<f64>)> = None;
    for tau in 1..=tau_target {
        let (fe, params) = best[tau].clone().expect("every depth optimized");
        carried = match carried {
            Some((cf, mut cp)) if cf > fe => {
                cp.extend(std::iter::repeat_n(0.0, per_layer));
                Some((cf, cp))
            }
            _ => Some((fe, params)),
        };
        let (fe, params) = carried.clone().expect("set above");
        depths.push(DepthBest { tau, fe_best: fe, steps: steps[tau], wallclock_s: clock[tau] });
        depth_params.push(params);
    }
    let (fe, params) = carried.expect("at least one depth");
    total.best_fe = fe;
    total.params = params;
    Ok(WarmStartReport { run: total, depths, depth_params })
}
