use super::*;
use crate::channels::{Axis, ChannelSpec, Convention};
use crate::decoder::{optimize_fe_svd, NoisyCode, SvdOptions};
use crate::qcore::{hermitian_eigen, CMatrix, C64};

fn code(l: usize, axis: Axis, p: f64) -> NoisyCode {
    NoisyCode::ising(l, &ChannelSpec::new(axis, p, Convention::Half).unwrap()).unwrap()
}

fn open_pair(axis: Axis, p: f64) -> NoisyCode {
    let c = crate::decoder::CftCode::ising(2, crate::ising::Boundary::Open, 2).unwrap();
    NoisyCode::new(&c, &ChannelSpec::new(axis, p, Convention::Half).unwrap()).unwrap()
}

fn oracle_fe(c: &LadderCircuit, params: &[f64], nc: &NoisyCode) -> f64 {
    let out = apply_decoder(c, params, &nc.rho, nc.n_reference).unwrap();
    let v = nalgebra::DVector::from_column_slice(nc.target.amplitudes());
    (v.adjoint() * out.matrix() * &v)[(0, 0)].re
}

#[test]
fn engine_matches_full_register_simulation() {
    let nc = code(3, Axis::Z, 0.4);
    for (tau, layer, seed) in [(1, None, 1), (2, None, 2), (3, None, 3), (2, Some(vec![1, 0, 3, 2, 1]), 4)] {
        let c = match layer {
            None => LadderCircuit::ladder(3, tau).unwrap(),
            Some(l) => LadderCircuit::with_layer(3, tau, l).unwrap(),
        };
        let params = random_params(c.n_params(), seed);
        let engine = FidelityEngine::for_code(&c, &nc).unwrap();
        let fe = engine.value(&params).unwrap();
        assert!((fe - oracle_fe(&c, &params, &nc)).abs() < 1e-12, "tau {tau}");
        assert!((0.0..=1.0).contains(&fe));
    }
}

#[test]
fn empty_and_identity_circuits_act_trivially() {
    let nc = code(3, Axis::X, 0.3);
    for tau in [0, 2] {
        let c = LadderCircuit::ladder(3, tau).unwrap();
        let out = apply_decoder(&c, &vec![0.0; c.n_params()], &nc.rho, 1).unwrap();
        assert!((out.matrix() - nc.rho.matrix()).norm() < 1e-12);
    }
    let clean = code(3, Axis::Z, 0.0);
    let c = LadderCircuit::ladder(3, 2).unwrap();
    assert!((evaluate_fe(&c, &vec![0.0; c.n_params()], &clean.rho, &clean.target, 1).unwrap() - 1.0).abs() < 1e-12);
    let fe = evaluate_fe(&c, &random_params(c.n_params(), 9), &clean.rho, &clean.target, 1).unwrap();
    assert!(fe <= 1.0);
}

#[test]
fn swap_into_ancilla_discards_the_qubit() {
    let nc = code(3, Axis::Z, 0.3);
    let c = LadderCircuit::with_layer(3, 1, vec![0]).unwrap();
    let q = std::f64::consts::FRAC_PI_4;
    let mut params = vec![0.0; 16];
    params[0] = -q;
    params[5] = q;
    params[10] = q;
    params[15] = q;
    // Reset q0 (register position 1) to |0⟩ after tracing it out.
    let bit = 1usize << 2;
    let rho = nc.rho.matrix();
    let reset = CMatrix::from_fn(16, 16, |i, j| {
        if i & bit != 0 || j & bit != 0 {
            C64::new(0.0, 0.0)
        } else {
            rho[(i, j)] + rho[(i | bit, j | bit)]
        }
    });
    let v = nalgebra::DVector::from_column_slice(nc.target.amplitudes());
    let want = (v.adjoint() * reset * &v)[(0, 0)].re;
    let fe = evaluate_fe(&c, &params, &nc.rho, &nc.target, 1).unwrap();
    assert!((fe - want).abs() < 1e-12);
    assert!((oracle_fe(&c, &params, &nc) - want).abs() < 1e-12);
}

#[test]
fn decoder_output_is_a_density_matrix() {
    let nc = code(3, Axis::X, 0.5);
    let c = LadderCircuit::ladder(3, 2).unwrap();
    for seed in 0..5 {
        let out = apply_decoder(&c, &random_params(c.n_params(), seed), &nc.rho, 1).unwrap();
        assert!((out.trace() - C64::new(1.0, 0.0)).norm() < 1e-10);
        let e = hermitian_eigen(out.matrix()).unwrap();
        assert!(e.values.iter().all(|&x| x > -1e-9));
    }
}

fn assert_gradient_contract(engine: &FidelityEngine, params: &[f64]) {
    let (_, g) = engine.value_and_gradient(params).unwrap();
    let fd = engine.finite_difference_gradient(params, 1e-5).unwrap();
    for (i, (a, b)) in g.iter().zip(&fd).enumerate() {
        assert!((a - b).abs() <= 1e-6f64.max(1e-4 * a.abs()), "component {i}: {a} vs {b}");
    }
}

#[test]
fn adjoint_gradient_matches_finite_differences() {
    let nc = code(3, Axis::Z, 0.5);
    let c = LadderCircuit::ladder(3, 2).unwrap();
    let engine = FidelityEngine::for_code(&c, &nc).unwrap();
    for seed in 10..13 {
        assert_gradient_contract(&engine, &random_params(c.n_params(), seed));
    }
    let odd = LadderCircuit::with_layer(3, 2, vec![2, 0, 1]).unwrap();
    let engine = FidelityEngine::for_code(&odd, &code(3, Axis::X, 0.2)).unwrap();
    assert_gradient_contract(&engine, &random_params(odd.n_params(), 5));
}

#[test]
fn gradient_vanishes_at_a_perfect_decoder() {
    let nc = open_pair(Axis::Z, 0.0);
    let c = LadderCircuit::ladder(2, 1).unwrap();
    let (fe, g) = FidelityEngine::for_code(&c, &nc).unwrap().value_and_gradient(&vec![0.0; c.n_params()]).unwrap();
    assert!((fe - 1.0).abs() < 1e-12);
    assert!(g.iter().map(|x| x * x).sum::<f64>().sqrt() < 1e-6);
}

#[test]
fn gradient_vanishes_along_commuting_directions() {
    let nc = code(3, Axis::Z, 0.5);
    let c = LadderCircuit::ladder(3, 2).unwrap();
    let mut params = random_params(c.n_params(), 21);
    let last = c.gate_count() - 1;
    params[last * 16..].iter_mut().for_each(|x| *x = 0.0);
    let (_, g) = FidelityEngine::for_code(&c, &nc).unwrap().value_and_gradient(&params).unwrap();
    // Z on the final gate's ancilla commutes with the target projector.
    assert!(g[last * 16 + 12].abs() < 1e-12);
    for gate in 0..c.gate_count() {
        assert!(g[gate * 16].abs() < 1e-12);
    }
}

#[test]
fn global_phase_coordinate_is_irrelevant() {
    let nc = code(3, Axis::X, 0.4);
    let c = LadderCircuit::ladder(3, 2).unwrap();
    let engine = FidelityEngine::for_code(&c, &nc).unwrap();
    let mut params = random_params(c.n_params(), 8);
    let before = engine.value(&params).unwrap();
    for gate in 0..c.gate_count() {
        params[gate * 16] += 0.7 * gate as f64 - 1.3;
    }
    assert!((engine.value(&params).unwrap() - before).abs() < 1e-12);
}

#[test]
fn best_value_is_the_history_maximum() {
    let nc = code(3, Axis::Z, 0.5);
    let c = LadderCircuit::ladder(3, 1).unwrap();
    let engine = FidelityEngine::for_code(&c, &nc).unwrap();
    let hyper = AdamOptions { max_steps: 60, ..Default::default() };
    let run = optimize(&engine, &random_params(c.n_params(), 2), &hyper, 2).unwrap();
    let max = run.history.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    assert!((run.best_fe - max).abs() < 1e-12);
    assert!((engine.value(&run.params).unwrap() - run.best_fe).abs() < 1e-12);
    assert!(run.history.last().unwrap() > &run.history[0]);
}

#[test]
fn finite_difference_mode_also_ascends() {
    let nc = open_pair(Axis::Z, 0.5);
    let c = LadderCircuit::ladder(2, 1).unwrap();
    let engine = FidelityEngine::for_code(&c, &nc).unwrap();
    let hyper = AdamOptions { max_steps: 30, gradient: GradientMode::FiniteDifference, ..Default::default() };
    let fd = optimize(&engine, &random_params(c.n_params(), 4), &hyper, 4).unwrap();
    let adj =
        optimize(&engine, &random_params(c.n_params(), 4), &AdamOptions { max_steps: 30, ..Default::default() }, 4)
            .unwrap();
    assert!((fd.best_fe - adj.best_fe).abs() < 1e-6);
}

#[test]
fn noiseless_warm_start_is_perfect_at_every_depth() {
    let nc = open_pair(Axis::Z, 0.0);
    let c = LadderCircuit::ladder(2, 1).unwrap();
    let report =
        optimize_warmstart(&FidelityEngine::for_code(&c, &nc).unwrap(), 3, &AdamOptions::default(), 0).unwrap();
    assert_eq!(report.depths.len(), 3);
    for d in &report.depths {
        assert!((d.fe_best - 1.0).abs() < 1e-4, "{d:?}");
    }
}

#[test]
fn warm_start_reaches_the_svd_optimum() {
    let nc = code(3, Axis::Z, 0.5);
    let svd = optimize_fe_svd(&nc.rho, &nc.target, 1, &SvdOptions::default()).unwrap().fe;
    let c = LadderCircuit::ladder(3, 1).unwrap();
    let report =
        optimize_warmstart(&FidelityEngine::for_code(&c, &nc).unwrap(), 8, &AdamOptions::default(), 0).unwrap();
    for w in report.depths.windows(2) {
        assert!(w[1].fe_best >= w[0].fe_best - 1e-9);
    }
    let top = report.depths[7].fe_best;
    assert!((svd - top).abs() < 0.03, "svd {svd} vs ladder {top}");
    for (d, p) in report.depths.iter().zip(&report.depth_params) {
        let e = FidelityEngine::for_code(&c.with_tau(d.tau), &nc).unwrap();
        assert!((e.value(p).unwrap() - d.fe_best).abs() < 1e-12);
    }
}
