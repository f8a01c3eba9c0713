use nalgebra::Matrix2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{site_code, Basis, BasisScheme, ShadowDataset, ShadowHeader};
use crate::channels::ChannelSpec;
use crate::qcore::{apply_1q, check_alloc, StateVector, C64};
use crate::Result;

/// Rotation `u` with `u†|k⟩` the eigenbasis of the measured Pauli.
fn basis_rotation(b: Basis) -> Matrix2<C64> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let h = Matrix2::new(C64::new(s, 0.0), C64::new(s, 0.0), C64::new(s, 0.0), C64::new(-s, 0.0));
    match b {
        Basis::X => h,
        // H·S†
        Basis::Y => h * Matrix2::new(C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, -1.0)),
        Basis::Z => Matrix2::identity(),
    }
}

fn draw_basis(rng: &mut ChaCha8Rng, scheme: BasisScheme) -> Basis {
    match scheme {
        BasisScheme::Uniform => Basis::ALL[rng.gen_range(0..3)],
        BasisScheme::Gadget => {
            // First ancilla reads 1 with probability 2/3, second with 1/2.
            let first = rng.gen::<f64>() < 2.0 / 3.0;
            let second = rng.gen::<bool>();
            match (first, second) {
                (false, _) => Basis::Z,
                (true, false) => Basis::X,
                (true, true) => Basis::Y,
            }
        }
    }
}

fn pauli_flip(amps: &mut [C64], n: usize, site: usize, p: crate::qcore::Pauli) {
    apply_1q(amps, n, site, &p.matrix());
}

/// Simulates `M` shots: per-site Pauli flips with probability `q`, random bases,
/// then Born sampling. Shot `r` draws from its own ChaCha stream `(seed, r)`.
pub fn sample_snapshots(
    psi: &StateVector,
    spec: &ChannelSpec,
    m: usize,
    seed: u64,
    scheme: BasisScheme,
) -> Result<ShadowDataset> {
    let n = psi.n_qubits();
    check_alloc((m as u128) * (n as u128), 1)?;
    let sites = spec.positions(psi.register())?;
    let q = spec.flip_probability();
    let pauli = spec.axis.pauli();
    let rotations: Vec<Matrix2<C64>> = Basis::ALL.iter().map(|&b| basis_rotation(b)).collect();
    let rows: Vec<Vec<u8>> = (0..m)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(r as u64);
            let mut amps = psi.amplitudes().to_vec();
            for &s in &sites {
                if rng.gen::<f64>() < q {
                    pauli_flip(&mut amps, n, s, pauli);
                }
            }
            let bases: Vec<Basis> = (0..n).map(|_| draw_basis(&mut rng, scheme)).collect();
            for (s, b) in bases.iter().enumerate() {
                if *b != Basis::Z {
                    apply_1q(&mut amps, n, s, &rotations[*b as usize]);
                }
            }
            let total: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
            let target = rng.gen::<f64>() * total;
            let mut acc = 0.0;
            let mut idx = amps.len() - 1;
            for (i, a) in amps.iter().enumerate() {
                acc += a.norm_sqr();
                if acc > target {
                    idx = i;
                    break;
                }
            }
            bases.iter().enumerate().map(|(s, &b)| site_code(b, ((idx >> (n - 1 - s)) & 1) as u8)).collect()
        })
        .collect();
    let header = ShadowHeader { l: n, channel: spec.axis, p: spec.p, convention: spec.convention, scheme, seed, m };
    ShadowDataset::from_codes(header, rows.concat())
}
