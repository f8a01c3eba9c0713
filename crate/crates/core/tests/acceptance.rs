//! Exit gate: one PASS/FAIL line per criterion; the process fails if any line fails.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use mplab::channels::{gadget_probabilities, Axis, ChannelSpec, Convention};
use mplab::decoder::{check_bound_sandwich, optimize_fe_svd, CftCode, NoisyCode, SvdOptions};
use mplab::harness::{self, ExperimentConfig, ExperimentId, Grid, Settings, Table};
use mplab::ising::{ising_lowest, Boundary};
use mplab::qcore::{Pauli, PauliString, Register, StateVector, C64};
use mplab::renyi::{correlator_curve, fit_power_law, pair_string, renyi_negativity, FitMode, Method, RenyiEvaluator};
use mplab::shadows::{
    estimate_negativity3, estimate_p3, estimate_p3_brute_force, estimate_renyi2_observable, estimate_renyi2_translated,
    sample_snapshots, BasisScheme, Engine, ShadowDataset, ShadowHeader,
};
use mplab::variational::{random_params, FidelityEngine, LadderCircuit};

type Outcome = Result<(bool, String), Box<dyn std::error::Error>>;
type Criterion<'a> = (&'static str, Duration, Box<dyn FnOnce() -> Outcome + 'a>);

const DEPTH_SEEDS: [u64; 3] = [0, 1, 2];
const CROSSING_SEEDS: [u64; 3] = [0, 1, 2];

fn spec(axis: Axis, p: f64) -> ChannelSpec {
    ChannelSpec::new(axis, p, Convention::Half).expect("valid channel")
}

fn ground(l: usize) -> StateVector {
    ising_lowest(l, Boundary::Periodic, 1).expect("ground state").states.remove(0)
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn run_config(cfg: &ExperimentConfig) -> Result<Table, Box<dyn std::error::Error>> {
    let s = harness::run(cfg)?;
    if let Some(e) = s.errors.first() {
        return Err(format!("cell {:?} failed: {}", e.cell, e.error).into());
    }
    let csv = s.output_dir.join(format!("{}.csv", cfg.experiment.name()));
    Ok(Table::read(&csv)?)
}

fn config(exp: ExperimentId, dir: &Path, seeds: &[u64], grid: Grid, settings: Settings) -> ExperimentConfig {
    ExperimentConfig { experiment: exp, seeds: seeds.to_vec(), output_dir: Some(dir.join(exp.name())), grid, settings }
}

fn col<'a>(t: &Table, row: &'a [String], name: &str) -> &'a str {
    &row[t.column(name).unwrap_or_else(|| panic!("column {name} missing"))]
}

fn fnum(t: &Table, row: &[String], name: &str) -> f64 {
    col(t, row, name).parse().unwrap_or(f64::NAN)
}

fn doubled_matches_dense() -> Outcome {
    let mut worst: f64 = 0.0;
    for l in 3..=6 {
        let psi = ground(l);
        for axis in [Axis::X, Axis::Y, Axis::Z] {
            for p in [0.0, 0.3, 0.8] {
                let sp = spec(axis, p);
                let dbl = RenyiEvaluator::new(&psi, &sp, 2, Method::Doubled)?;
                let dense = RenyiEvaluator::new(&psi, &sp, 2, Method::Dense)?;
                for sep in 1..=l / 2 {
                    for (o1, o2) in [(Pauli::X, Pauli::X), (Pauli::Z, Pauli::Z), (Pauli::Y, Pauli::Y)] {
                        let s = pair_string(l, 0, o1, o2, sep)?;
                        worst = worst.max((dbl.value(&s)? - dense.value(&s)?).abs());
                    }
                }
            }
        }
    }
    Ok((worst < 1e-10, format!("max |doubled - dense| = {worst:.2e}")))
}

fn exponent_ordering() -> Outcome {
    let l = 12;
    let psi = ground(l);
    let curve = |axis| -> Result<Vec<(usize, f64)>, Box<dyn std::error::Error>> {
        let ev = RenyiEvaluator::new(&psi, &spec(axis, 0.3), 2, Method::Doubled)?;
        Ok(correlator_curve(&ev, Pauli::X, Pauli::X, true)?.into_iter().map(|c| (c.l, c.value)).collect())
    };
    let eta = |c: &[(usize, f64)], mode| fit_power_law(c, l, mode, None, true);
    let ci = curve(Axis::I)?;
    let cz = curve(Axis::Z)?;
    let cx = curve(Axis::X)?;
    let ei = eta(&ci, FitMode::NoConstant)?.eta;
    let ez = eta(&cz, FitMode::NoConstant)?.eta;
    let ex = eta(&cx, FitMode::NoConstant)?.eta;
    let ax = eta(&cx, FitMode::FitConstant)?.a;
    let ok = (0.20..=0.30).contains(&ei) && ez > ei && ex < ei && ax > 0.0;
    Ok((ok, format!("eta(I) = {ei:.4}, eta(Z) = {ez:.4}, slope(X) = {ex:.4}, A(X) = {ax:.4}")))
}

fn shadow_unbiasedness() -> Outcome {
    let l = 3;
    let psi = ground(l);
    let sp = spec(Axis::Z, 0.3);
    let dense = RenyiEvaluator::new(&psi, &sp, 2, Method::Dense)?;
    let obs = [("X0X2", PauliString::pair(0, Pauli::X, 2, Pauli::X)?), ("I", PauliString::identity())];
    let mut samples = vec![Vec::with_capacity(200); obs.len()];
    for seed in 0..200u64 {
        let ds = sample_snapshots(&psi, &sp, 2000, seed, BasisScheme::Uniform)?;
        for (k, (_, o)) in obs.iter().enumerate() {
            samples[k].push(estimate_renyi2_observable(&ds, o, Engine::Auto)?.numerator);
        }
    }
    let mut ok = true;
    let mut detail = Vec::new();
    for (k, (name, o)) in obs.iter().enumerate() {
        let xs = &samples[k];
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let se = (var / n).sqrt();
        let exact = dense.numerator(o)?;
        let z = (mean - exact).abs() / se;
        ok &= z <= 3.0;
        detail.push(format!("{name}: mean {mean:.5} vs exact {exact:.5} ({z:.2} SE)"));
    }
    Ok((ok, detail.join("; ")))
}

fn shadow_correlators() -> Outcome {
    let l = 6;
    let m = 40_000;
    let psi = ground(l);
    let mut ok = true;
    let mut worst_rel: f64 = 0.0;
    let mut worst_jk: f64 = 0.0;
    for axis in [Axis::I, Axis::X, Axis::Z] {
        let sp = spec(axis, 0.3);
        let ds = sample_snapshots(&psi, &sp, m, 0, BasisScheme::Uniform)?;
        let exact = RenyiEvaluator::new(&psi, &sp, 2, Method::Doubled)?;
        for pt in correlator_curve(&exact, Pauli::X, Pauli::X, true)? {
            let est = estimate_renyi2_translated(&ds, Pauli::X, Pauli::X, pt.l, Engine::Auto)?;
            let r = rel(est.value, pt.value);
            worst_rel = worst_rel.max(r);
            ok &= r <= 0.10;
            if axis == Axis::I {
                let jk = est.jackknife.ok_or("jackknife missing")?.stderr / est.value.abs();
                worst_jk = worst_jk.max(jk);
                ok &= jk < 0.01;
            }
        }
    }
    Ok((
        ok,
        format!(
            "max relative error {:.2}% (limit 10%), identity-channel jackknife {:.2}% (limit 1%)",
            100.0 * worst_rel,
            100.0 * worst_jk
        ),
    ))
}

fn third_moment() -> Outcome {
    // Grouped estimator vs brute force on random snapshots.
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (l, m) = (4, 30);
    let header = ShadowHeader {
        l,
        channel: Axis::I,
        p: 0.0,
        convention: Convention::Half,
        scheme: BasisScheme::Uniform,
        seed: 5,
        m,
    };
    let codes: Vec<u8> = (0..l * m).map(|_| rng.gen_range(0..6)).collect();
    let ds = ShadowDataset::from_codes(header, codes)?;
    let part = [0usize, 1];
    let grouped = estimate_p3(&ds, &part)?.value;
    let brute = estimate_p3_brute_force(&ds, &part)?;
    let d_brute = (grouped - brute).abs();

    let s = std::f64::consts::FRAC_1_SQRT_2;
    let z = C64::new(0.0, 0.0);
    let bell = StateVector::new(vec![C64::new(s, 0.0), z, z, C64::new(s, 0.0)], Register::numbered("q", 2))?;
    let bds = sample_snapshots(&bell, &ChannelSpec::identity(), 100_000, 0, BasisScheme::Uniform)?;
    let p3_bell = estimate_p3(&bds, &[0])?.value;

    let l = 6;
    let psi = ground(l);
    let half: Vec<usize> = (0..l / 2).collect();
    let labels: Vec<String> = half.iter().map(|&i| psi.register().labels()[i].clone()).collect();
    let mut worst_neg: f64 = 0.0;
    let mut neg = Vec::new();
    for axis in [Axis::X, Axis::Z] {
        let sp = spec(axis, 0.3);
        let rho = mplab::channels::apply_channel_density(&psi.to_density()?, &sp)?;
        let exact = renyi_negativity(&rho, &labels, 3)?.negativity.ok_or("negativity missing")?;
        let ds = sample_snapshots(&psi, &sp, 1_000_000, 0, BasisScheme::Uniform)?;
        let est = estimate_negativity3(&ds, &half)?.value;
        worst_neg = worst_neg.max(rel(est, exact));
        neg.push(format!("{axis}: {est:.4} vs {exact:.4}"));
    }
    let ok = d_brute < 1e-12 && rel(p3_bell, 0.25) <= 0.05 && worst_neg <= 0.15;
    Ok((
        ok,
        format!(
            "grouped - brute = {d_brute:.1e}; Bell p3 = {p3_bell:.4}; half-cut N3 {} (max {:.1}%)",
            neg.join(", "),
            100.0 * worst_neg
        ),
    ))
}

fn svd_decoder() -> Outcome {
    let noiseless = NoisyCode::ising(4, &spec(Axis::Z, 0.0))?;
    let f0 = optimize_fe_svd(&noiseless.rho, &noiseless.target, 1, &SvdOptions::default())?.fe;

    let bench = NoisyCode::ising(4, &spec(Axis::Z, 0.4))?;
    let short = SvdOptions { restarts: 1, max_iters: 5, tol: 0.0, seed: 0, ..SvdOptions::default() };
    let long = SvdOptions { max_iters: 500, tol: 1e-14, ..short };
    let f5 = optimize_fe_svd(&bench.rho, &bench.target, 1, &short)?.fe;
    let f_inf = optimize_fe_svd(&bench.rho, &bench.target, 1, &long)?.fe;
    let conv = rel(f5, f_inf);

    let one = Register::numbered("q", 1);
    let code = CftCode::from_codewords(vec![StateVector::basis(one.clone(), 0)?, StateVector::basis(one, 1)?])?;
    let mut worst: f64 = 0.0;
    for p in [0.1, 0.3, 0.5, 0.9] {
        let sp = spec(Axis::Z, p);
        let nc = NoisyCode::new(&code, &sp)?;
        let opts = SvdOptions { max_iters: 2000, tol: 1e-14, ..SvdOptions::default() };
        let fe = optimize_fe_svd(&nc.rho, &nc.target, nc.n_reference, &opts)?.fe;
        worst = worst.max((fe - (1.0 - sp.flip_probability())).abs());
    }
    let ok = (f0 - 1.0).abs() <= 1e-9 && conv <= 1e-5 && worst <= 1e-8;
    Ok((
        ok,
        format!(
            "F_e(p=0) - 1 = {:.1e}; 5-iteration relative gap {conv:.1e}; single-qubit |F_e - (1-q)| = {worst:.1e}",
            f0 - 1.0
        ),
    ))
}

fn bound_sandwich(dir: &Path) -> Outcome {
    let grid = Grid {
        l: vec![3, 4, 5, 6],
        axes: vec![Axis::X, Axis::Z],
        p: (1..=9).map(|k| k as f64 / 10.0).collect(),
        ..Grid::default()
    };
    let t = run_config(&config(ExperimentId::Fig3, dir, &[0], grid, Settings::default()))?;
    let mut ok = true;
    let mut violations = 0;
    let mut sat = Vec::new();
    for r in &t.rows {
        let (fe, d) = (fnum(&t, r, "F_e"), fnum(&t, r, "d_rho"));
        let rep = check_bound_sandwich(fe, d)?;
        let mid = (1.0 - fe.sqrt()).sqrt();
        let holds = d / 2.0 <= mid + 1e-6 && mid <= d + 1e-6;
        if !holds || !rep.holds() {
            violations += 1;
        }
        let (axis, p) = (col(&t, r, "axis"), fnum(&t, r, "p"));
        let edge = (axis == "Z" && (p - 0.1).abs() < 1e-12) || (axis == "X" && (p - 0.9).abs() < 1e-12);
        if edge {
            let gap = d - mid;
            ok &= gap < 0.02;
            sat.push(format!("L{} {axis}: {gap:.4}", col(&t, r, "L")));
        }
    }
    ok &= violations == 0 && t.rows.len() == 72;
    Ok((ok, format!("{} cells, {violations} violations; upper gaps {}", t.rows.len(), sat.join(", "))))
}

fn size_trends() -> Outcome {
    let mut out = Vec::new();
    let mut ok = true;
    for (axis, increasing) in [(Axis::Z, true), (Axis::X, false)] {
        let mut fes = Vec::new();
        for l in [4, 6, 8] {
            let nc = NoisyCode::ising(l, &spec(axis, 0.4))?;
            fes.push(optimize_fe_svd(&nc.rho, &nc.target, 1, &SvdOptions::default())?.fe);
        }
        let mono = fes.windows(2).all(|w| if increasing { w[1] > w[0] } else { w[1] < w[0] });
        ok &= mono;
        out.push(format!("{axis}: {}", fes.iter().map(|f| format!("{f:.5}")).collect::<Vec<_>>().join(" ")));
    }
    Ok((ok, out.join("; ")))
}

/// `(plateau, saturation depth)` of the per-depth best over seeds.
fn plateau(curve: &BTreeMap<usize, f64>) -> (f64, usize) {
    let top = *curve.values().last().expect("non-empty curve");
    let sat = curve.iter().find(|(_, &f)| f >= top - 1e-3).map(|(&t, _)| t).expect("last depth qualifies");
    (top, sat)
}

fn depth_curves(dir: &Path) -> Outcome {
    let grid = Grid { l: vec![3, 4, 5], axes: vec![Axis::X, Axis::Z], p: vec![0.5], ..Grid::default() };
    let settings = Settings { tau: Some(17), ..Settings::default() };
    let t = run_config(&config(ExperimentId::Fig4, dir, &DEPTH_SEEDS, grid, settings))?;
    let mut curves: BTreeMap<(String, usize), BTreeMap<usize, f64>> = BTreeMap::new();
    for r in &t.rows {
        let key = (col(&t, r, "axis").to_string(), col(&t, r, "L").parse::<usize>()?);
        let tau: usize = col(&t, r, "tau").parse()?;
        let e = curves.entry(key).or_default().entry(tau).or_insert(f64::NEG_INFINITY);
        *e = e.max(fnum(&t, r, "Fe_best"));
    }
    let get = |axis: &str, l: usize| plateau(&curves[&(axis.to_string(), l)]);
    let mut ok = true;
    let mut detail = Vec::new();
    for (l, want) in [(3, 5), (4, 7), (5, 11)] {
        let (fx, sx) = get("X", l);
        let (fz, sz) = get("Z", l);
        ok &= sx <= 5 && sz.abs_diff(want) <= 2;
        detail.push(format!("L{l}: X {fx:.4}@{sx}, Z {fz:.4}@{sz}"));
    }
    ok &= get("Z", 5).0 > get("Z", 3).0;
    ok &= get("X", 3).0 > get("X", 4).0 && get("X", 4).0 > get("X", 5).0;
    Ok((ok, detail.join("; ")))
}

fn depth_one_crossing(dir: &Path) -> Outcome {
    let grid = Grid {
        l: vec![4, 8],
        axes: vec![Axis::X, Axis::Z],
        nu: vec![0.5],
        scaled: (0..=8).map(|k| 0.2 * k as f64).collect(),
        ..Grid::default()
    };
    let settings = Settings { tau: Some(1), ..Settings::default() };
    let t = run_config(&config(ExperimentId::Fig5Sim, dir, &CROSSING_SEEDS, grid, settings))?;
    let mut best: BTreeMap<(String, usize, i64), f64> = BTreeMap::new();
    for r in &t.rows {
        let s = (fnum(&t, r, "p_scaled") * 10.0).round() as i64;
        let key = (col(&t, r, "axis").to_string(), col(&t, r, "L").parse::<usize>()?, s);
        let e = best.entry(key).or_insert(f64::NEG_INFINITY);
        *e = e.max(fnum(&t, r, "Fe_best"));
    }
    let f = |axis: &str, l: usize, s: i64| best[&(axis.to_string(), l, s)];
    let z_cross: Vec<i64> = (10..=16).step_by(2).filter(|&s| f("Z", 8, s) > f("Z", 4, s)).collect();
    let x_bad: Vec<i64> = (2..=16).step_by(2).filter(|&s| f("X", 4, s) <= f("X", 8, s)).collect();
    let ok = !z_cross.is_empty() && x_bad.is_empty();
    Ok((
        ok,
        format!(
            "Z: L=8 ahead at pL^1/2 in {:?}; X: L=4 not ahead at {:?}",
            z_cross.iter().map(|s| *s as f64 / 10.0).collect::<Vec<_>>(),
            x_bad.iter().map(|s| *s as f64 / 10.0).collect::<Vec<_>>()
        ),
    ))
}

fn fex_trends(dir: &Path) -> Outcome {
    let grid = Grid {
        l: vec![4, 6, 8],
        axes: vec![Axis::X],
        nu: vec![0.5, 0.75],
        scaled: vec![0.2, 0.4, 0.6, 0.8],
        ..Grid::default()
    };
    let t = run_config(&config(ExperimentId::FigFeX, dir, &[0], grid, Settings::default()))?;
    let mut series: BTreeMap<(String, String), Vec<(usize, f64)>> = BTreeMap::new();
    for r in &t.rows {
        series
            .entry((col(&t, r, "nu").to_string(), col(&t, r, "p_scaled").to_string()))
            .or_default()
            .push((col(&t, r, "L").parse()?, fnum(&t, r, "F_e")));
    }
    let mut ok = true;
    let mut detail = Vec::new();
    for ((nu, s), mut pts) in series {
        pts.sort_by_key(|p| p.0);
        let fes: Vec<f64> = pts.iter().map(|p| p.1).collect();
        let good = if nu.parse::<f64>()? > 0.6 {
            fes.windows(2).all(|w| w[1] >= w[0] - 1e-7)
        } else {
            fes.windows(2).all(|w| w[1] < w[0])
        };
        ok &= good;
        if !good {
            detail.push(format!("nu={nu} s={s}: {fes:?}"));
        }
    }
    Ok((ok, if detail.is_empty() { format!("{} series in order", t.rows.len() / 3) } else { detail.join("; ") }))
}

fn gadget() -> Outcome {
    let g = gadget_probabilities(0.5)?;
    let want = [1.0 / 6.0, 1.0 / 6.0, 1.0 / 3.0, 1.0 / 3.0];
    let dtheta = (g.theta - std::f64::consts::FRAC_PI_3).abs();
    let dprob = g.basis_probs.iter().zip(want).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    Ok((dtheta <= 1e-15 && dprob <= 1e-15, format!("|theta - pi/3| = {dtheta:.1e}, max probability error {dprob:.1e}")))
}

fn gradient_contract() -> Outcome {
    let nc = NoisyCode::ising(3, &spec(Axis::Z, 0.5))?;
    let circuit = LadderCircuit::ladder(3, 3)?;
    let engine = FidelityEngine::for_code(&circuit, &nc)?;
    let mut worst: f64 = 0.0;
    for k in 0..20u64 {
        let theta = random_params(circuit.n_params(), 100 + k);
        let (_, g) = engine.value_and_gradient(&theta)?;
        let fd = engine.finite_difference_gradient(&theta, 1e-5)?;
        for (a, b) in g.iter().zip(&fd) {
            worst = worst.max((a - b).abs() / 1e-6f64.max(1e-4 * a.abs()));
        }
    }
    Ok((worst <= 1.0, format!("worst |analytic - fd| / max(1e-6, 1e-4|g|) = {worst:.1e}")))
}

fn main() {
    let dir = tempfile::tempdir().expect("temp dir");
    let d = dir.path();
    let criteria: Vec<Criterion<'_>> = vec![
        ("doubled-state and dense Renyi-2 correlators agree", Duration::from_secs(60), Box::new(doubled_matches_dense)),
        ("exponent ordering at L=12, p=0.3", Duration::from_secs(600), Box::new(exponent_ordering)),
        ("shadow estimator is unbiased", Duration::from_secs(600), Box::new(shadow_unbiasedness)),
        ("shadow correlators at L=6, M=40000", Duration::from_secs(1800), Box::new(shadow_correlators)),
        ("third partial-transpose moment and negativity", Duration::from_secs(1800), Box::new(third_moment)),
        ("SVD decoder", Duration::from_secs(60), Box::new(svd_decoder)),
        ("channel-distance sandwich", Duration::from_secs(600), Box::new(move || bound_sandwich(d))),
        ("SVD fidelity size trends at p=0.4", Duration::from_secs(1800), Box::new(size_trends)),
        ("warm-start depth curves", Duration::from_secs(7200), Box::new(move || depth_curves(d))),
        ("depth-one decoding at p ~ L^-1/2", Duration::from_secs(3600), Box::new(move || depth_one_crossing(d))),
        ("sub-extensive rate trends", Duration::from_secs(1800), Box::new(move || fex_trends(d))),
        ("randomness gadget", Duration::from_secs(1), Box::new(gadget)),
        ("adjoint gradient matches finite differences", Duration::from_secs(300), Box::new(gradient_contract)),
    ];
    let mut failed = 0;
    for (i, (name, budget, f)) in criteria.into_iter().enumerate() {
        let t0 = Instant::now();
        let res = f();
        let dt = t0.elapsed();
        let (ok, detail) = match res {
            Ok((ok, detail)) => (ok && dt <= budget, detail),
            Err(e) => (false, format!("error: {e}")),
        };
        if !ok {
            failed += 1;
        }
        println!(
            "{} [{:>2}] {name}: {detail} ({:.1} s of {} s)",
            if ok { "PASS" } else { "FAIL" },
            i + 1,
            dt.as_secs_f64(),
            budget.as_secs()
        );
    }
    println!("acceptance: {} passed, {failed} failed", 13 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
