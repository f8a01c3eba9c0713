use serde::{Deserialize, Serialize};

use super::config::{Cell, ExperimentConfig, ExperimentId};
use super::table::{num, opt, Table};
use crate::channels::{apply_channel_density, ChannelSpec};
use crate::decoder::{channel_distance, check_bound_sandwich, optimize_fe_svd, CftCode, NoisyCode, SvdOptions};
use crate::ising::{ising_lowest, Boundary};
use crate::qcore::{Pauli, StateVector};
use crate::renyi::{correlator_curve, fit_power_law, one_point, renyi_negativity, FitMode, Method, RenyiEvaluator};
use crate::shadows::{estimate_negativity3, estimate_renyi2_translated, sample_snapshots, Engine};
use crate::variational::{optimize_warmstart, AdamOptions, FidelityEngine, LadderCircuit};
use crate::{Error, Result};

/// Outcome of one invariant check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub ok: bool,
    pub detail: String,
}

/// Rows for the main table and any side tables, keyed by artifact suffix.
#[derive(Debug, Default)]
pub(crate) struct CellOutput {
    pub tables: Vec<(&'static str, Table)>,
    pub checks: Vec<Check>,
}

impl CellOutput {
    fn table(&mut self, suffix: &'static str, headers: &[&str]) -> &mut Table {
        if let Some(i) = self.tables.iter().position(|(s, _)| *s == suffix) {
            return &mut self.tables[i].1;
        }
        self.tables.push((suffix, Table::new(headers.iter().copied())));
        &mut self.tables.last_mut().expect("just pushed").1
    }
}

fn spec(cfg: &ExperimentConfig, cell: &Cell) -> Result<ChannelSpec> {
    ChannelSpec::new(cell.axis, cell.p, cfg.grid.convention)
}

fn ground_state(l: usize) -> Result<StateVector> {
    Ok(ising_lowest(l, Boundary::Periodic, 1)?.states.remove(0))
}

fn pauli_pair(name: &str) -> Result<(Pauli, Pauli)> {
    let letters: Vec<char> = name.trim().to_ascii_uppercase().chars().collect();
    let one = |c: char| match c {
        'I' => Ok(Pauli::I),
        'X' => Ok(Pauli::X),
        'Y' => Ok(Pauli::Y),
        'Z' => Ok(Pauli::Z),
        o => Err(Error::arg(format!("unknown Pauli letter {o:?} in {name:?}"))),
    };
    match letters.as_slice() {
        [a, b] => Ok((one(*a)?, one(*b)?)),
        _ => Err(Error::arg(format!("observable {name:?} must name two Paulis"))),
    }
}

fn base(cfg: &ExperimentConfig, cell: &Cell) -> Vec<String> {
    vec![cell.l.to_string(), cell.axis.to_string(), num(cell.p), cfg.grid.convention.to_string(), cell.seed.to_string()]
}

const BASE: [&str; 5] = ["L", "axis", "p", "convention", "seed"];

fn headers(extra: &[&'static str]) -> Vec<&'static str> {
    BASE.iter().copied().chain(extra.iter().copied()).collect()
}

pub(crate) fn run_cell(cfg: &ExperimentConfig, cell: &Cell) -> Result<CellOutput> {
    match cfg.experiment {
        ExperimentId::Fig2a => fig2a(cfg, cell),
        ExperimentId::Fig2bSim => fig2b(cfg, cell),
        ExperimentId::NegAppendix => negativity(cfg, cell),
        ExperimentId::Fig3 => fig3(cfg, cell),
        ExperimentId::FigFeX => fig_fex(cfg, cell),
        ExperimentId::Fig4 => fig4(cfg, cell),
        ExperimentId::Fig5Sim => fig5(cfg, cell),
    }
}

fn fig2a(cfg: &ExperimentConfig, cell: &Cell) -> Result<CellOutput> {
    let n = cfg.settings.n.unwrap_or(2);
    let method = if n <= 2 { Method::Doubled } else { Method::Dense };
    let ev = RenyiEvaluator::new(&ground_state(cell.l)?, &spec(cfg, cell)?, n, method)?;
    let observables = cfg.settings.observables.clone().unwrap_or_else(|| vec!["xx".into(), "zz".into()]);
    let mut out = CellOutput::default();
    for obs in &observables {
        let (o1, o2) = pauli_pair(obs)?;
        let curve = correlator_curve(&ev, o1, o2, true)?;
        let t = out.table("", &headers(&["n", "obs", "l", "chord", "value", "method", "log_base"]));
        for pt in &curve {
            let mut row = base(cfg, cell);
            row.extend([
                n.to_string(),
                obs.clone(),
                pt.l.to_string(),
                num(pt.chord),
                num(pt.value),
                pt.method.to_string(),
                "e".into(),
            ]);
            t.push(row);
        }
        let pts: Vec<(usize, f64)> = curve.iter().map(|c| (c.l, c.value)).collect();
        let modes: Vec<(&str, FitMode)> = if o1 == Pauli::Z && o2 == Pauli::Z {
            let cz = one_point(&ev, Pauli::Z)?;
            vec![("subtract-given", FitMode::SubtractGiven(cz * cz))]
        } else {
            vec![("no-constant", FitMode::NoConstant), ("fit-constant", FitMode::FitConstant)]
        };
        let fits =
            out.table("fits", &headers(&["n", "obs", "mode", "eta", "A", "B", "l_min", "l_max", "residual", "error"]));
        for (name, mode) in modes {
            let mut row = base(cfg, cell);
            row.extend([n.to_string(), obs.clone(), name.to_string()]);
            match fit_power_law(&pts, cell.l, mode, None, true) {
                Ok(f) => row.extend([
                    num(f.eta),
                    num(f.a),
                    num(f.b),
                    f.l_min.to_string(),
                    f.l_max.to_string(),
                    num(f.residual),
                    String::new(),
                ]),
                Err(e) => row.extend(["", "", "", "", "", ""].map(String::from).into_iter().chain([e.to_string()])),
            }
            fits.push(row);
        }
    }
    Ok(out)
}

fn shots(cfg: &ExperimentConfig, default: usize) -> usize {
    cfg.settings.shots.unwrap_or(default)
}

fn fig2b(cfg: &ExperimentConfig, cell: &Cell) -> Result<CellOutput> {
    let m = shots(cfg, 40_000);
    let psi = ground_state(cell.l)?;
    let sp = spec(cfg, cell)?;
    let scheme = cfg.settings.scheme.unwrap_or_default();
    let ds = sample_snapshots(&psi, &sp, m, cell.seed, scheme)?;
    let ev = RenyiEvaluator::new(&psi, &sp, 2, Method::Doubled)?;
    let observables = cfg.settings.observables.clone().unwrap_or_else(|| vec!["xx".into()]);
    let mut out = CellOutput::default();
    for obs in &observables {
        let (o1, o2) = pauli_pair(obs)?;
        let exact = correlator_curve(&ev, o1, o2, true)?;
        let t = out.table("", &headers(&["M", "scheme", "obs", "l", "estimate", "stderr", "exact", "rel_err"]));
        for pt in &exact {
            let est = estimate_renyi2_translated(&ds, o1, o2, pt.l, Engine::Auto)?;
            let stderr = est.jackknife.as_ref().map(|j| j.stderr);
            let mut row = base(cfg, cell);
            row.extend([
                m.to_string(),
                scheme.to_string(),
                obs.clone(),
                pt.l.to_string(),
                num(est.value),
                opt(stderr),
                num(pt.value),
                num((est.value - pt.value).abs() / pt.value.abs()),
            ]);
            t.push(row);
        }
    }
    Ok(out)
}

fn negativity(cfg: &ExperimentConfig, cell: &Cell) -> Result<CellOutput> {
    let m = shots(cfg, 40_000);
    let psi = ground_state(cell.l)?;
    let sp = spec(cfg, cell)?;
    let part: Vec<usize> = (0..cell.l / 2).collect();
    let labels: Vec<String> = part.iter().map(|&i| psi.register().labels()[i].clone()).collect();
    let rho = apply_channel_density(&psi.to_density()?, &sp)?;
    let exact =
        renyi_negativity(&rho, &labels, 3)?.negativity.ok_or_else(|| Error::numeric("negativity unavailable"))?;
    let ds = sample_snapshots(&psi, &sp, m, cell.seed, cfg.settings.scheme.unwrap_or_default())?;
    let est = estimate_negativity3(&ds, &part)?;
    let mut out = CellOutput::default();
    let t = out.table("", &headers(&["M", "part", "exact", "estimate", "stderr", "p3", "trace_cube", "rel_err"]));
    let mut row = base(cfg, cell);
    row.extend([
        m.to_string(),
        labels.join(" "),
        num(exact),
        num(est.value),
        opt(est.jackknife.as_ref().map(|j| j.stderr)),
        num(est.p3),
        num(est.trace_cube),
        num((est.value - exact).abs() / exact.abs()),
    ]);
    t.push(row);
    Ok(out)
}

fn noisy_code(cfg: &ExperimentConfig, cell: &Cell) -> Result<NoisyCode> {
    let code = CftCode::ising(cell.l, Boundary::Periodic, cfg.settings.d.unwrap_or(2))?;
    NoisyCode::new(&code, &spec(cfg, cell)?)
}

fn svd_options(cfg: &ExperimentConfig, cell: &Cell) -> SvdOptions {
    let d = SvdOptions::default();
    SvdOptions {
        restarts: cfg.settings.restarts.unwrap_or(d.restarts),
        max_iters: cfg.settings.svd_iters.unwrap_or(d.max_iters),
        seed: cell.seed,
        ..d
    }
}

fn fig3(cfg: &ExperimentConfig, cell: &Cell) -> Result<CellOutput> {
    let nc = noisy_code(cfg, cell)?;
    let st = optimize_fe_svd(&nc.rho, &nc.target, nc.n_reference, &svd_options(cfg, cell))?;
    let dist = channel_distance(&nc.target, nc.n_reference, &spec(cfg, cell)?)?;
    let rep = check_bound_sandwich(st.fe, dist.d_rho)?;
    let mut out = CellOutput::default();
    let t = out.table("", &headers(&["F_e", "d_rho", "middle", "lower_ok", "upper_ok", "upper_gap", "iters"]));
    let mut row = base(cfg, cell);
    row.extend([
        num(st.fe),
        num(dist.d_rho),
        num(rep.middle),
        rep.lower_ok.to_string(),
        rep.upper_ok.to_string(),
        num(rep.upper_gap),
        st.iterations().to_string(),
    ]);
    t.push(row);
    out.checks.push(Check {
        name: "bound sandwich".into(),
        ok: rep.holds(),
        detail: format!(
            "L={} axis={} p={}: d/2={} <= {} <= d={}",
            cell.l,
            cell.axis,
            cell.p,
            dist.d_rho / 2.0,
            rep.middle,
            dist.d_rho
        ),
    });
    Ok(out)
}

fn fig_fex(cfg: &ExperimentConfig, cell: &Cell) -> Result<CellOutput> {
    let nc = noisy_code(cfg, cell)?;
    let st = optimize_fe_svd(&nc.rho, &nc.target, nc.n_reference, &svd_options(cfg, cell))?;
    let mut out = CellOutput::default();
    let t = out.table("", &headers(&["nu", "p_scaled", "F_e", "iters"]));
    let mut row = base(cfg, cell);
    row.extend([opt(cell.nu), opt(cell.scaled), num(st.fe), st.iterations().to_string()]);
    t.push(row);
    Ok(out)
}

fn adam(cfg: &ExperimentConfig) -> AdamOptions {
    let d = AdamOptions::default();
    AdamOptions { max_steps: cfg.settings.max_steps.unwrap_or(d.max_steps), ..d }
}

fn fig4(cfg: &ExperimentConfig, cell: &Cell) -> Result<CellOutput> {
    let tau = cfg.settings.tau.unwrap_or(17);
    let nc = noisy_code(cfg, cell)?;
    let engine = FidelityEngine::for_code(&LadderCircuit::ladder(cell.l, 1)?, &nc)?;
    let rep = optimize_warmstart(&engine, tau, &adam(cfg), cell.seed)?;
    let mut out = CellOutput::default();
    let t = out.table("", &headers(&["tau", "Fe_best", "steps"]));
    for d in &rep.depths {
        let mut row = base(cfg, cell);
        row.extend([d.tau.to_string(), num(d.fe_best), d.steps.to_string()]);
        t.push(row);
    }
    let monotone = rep.depths.windows(2).all(|w| w[1].fe_best >= w[0].fe_best - 1e-9);
    out.checks.push(Check {
        name: "depth monotonicity".into(),
        ok: monotone,
        detail: format!("L={} axis={} p={} seed={}", cell.l, cell.axis, cell.p, cell.seed),
    });
    Ok(out)
}

fn fig5(cfg: &ExperimentConfig, cell: &Cell) -> Result<CellOutput> {
    let tau = cfg.settings.tau.unwrap_or(1);
    let nc = noisy_code(cfg, cell)?;
    let engine = FidelityEngine::for_code(&LadderCircuit::ladder(cell.l, 1)?, &nc)?;
    let rep = optimize_warmstart(&engine, tau, &adam(cfg), cell.seed)?;
    let last = rep.depths.last().expect("at least one depth");
    let mut out = CellOutput::default();
    let t = out.table("", &headers(&["nu", "p_scaled", "tau", "Fe_best", "steps"]));
    let mut row = base(cfg, cell);
    row.extend([opt(cell.nu), opt(cell.scaled), last.tau.to_string(), num(last.fe_best), last.steps.to_string()]);
    t.push(row);
    Ok(out)
}

/// For two sizes: per axis and scaled rate, the best `F_e` at each size and which is larger.
pub(crate) fn crossing_table(main: &Table) -> Option<Table> {
    let col = |n: &str| main.column(n);
    let (li, ai, si, fi) = (col("L")?, col("axis")?, col("p_scaled")?, col("Fe_best")?);
    let mut sizes: Vec<usize> = main.rows.iter().filter_map(|r| r[li].parse().ok()).collect();
    sizes.sort_unstable();
    sizes.dedup();
    let [small, large] = sizes[..] else { return None };
    let mut keys: Vec<(String, String)> = Vec::new();
    for r in &main.rows {
        let k = (r[ai].clone(), r[si].clone());
        if !keys.contains(&k) {
            keys.push(k);
        }
    }
    let best = |axis: &str, s: &str, l: usize| -> Option<f64> {
        main.rows
            .iter()
            .filter(|r| r[ai] == axis && r[si] == s && r[li] == l.to_string())
            .filter_map(|r| r[fi].parse::<f64>().ok())
            .reduce(f64::max)
    };
    let mut t = Table::new(["axis", "p_scaled", &format!("Fe_L{small}"), &format!("Fe_L{large}"), "larger_L"]);
    for (axis, s) in keys {
        let (a, b) = (best(&axis, &s, small)?, best(&axis, &s, large)?);
        let larger = if b > a {
            large.to_string()
        } else if a > b {
            small.to_string()
        } else {
            "tie".into()
        };
        t.push(vec![axis, s, num(a), num(b), larger]);
    }
    Some(t)
}
