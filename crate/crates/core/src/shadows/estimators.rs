use serde::{Deserialize, Serialize};

use super::engine::{pair_statistics, triple_statistic, Classes, Engine, PauliSum};
use super::jackknife::{jackknife_weighted, JackknifeResult};
use super::{local_estimator, ShadowDataset};
use crate::qcore::{Pauli, PauliString, C64};
use crate::renyi::pair_string;
use crate::{Error, Result};

/// Rényi-2 observable `tr(ρ²O)/tr(ρ²)` from pair U-statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Renyi2Estimate {
    pub value: f64,
    /// `Σ_{r≠s} tr(ρ̂⁽ʳ⁾ρ̂⁽ˢ⁾O) / (M(M−1))`.
    pub numerator: f64,
    /// Same with `O = I` (the purity).
    pub denominator: f64,
    /// Set when the purity estimate is not positive; `value` is then meaningless.
    pub flagged: bool,
    /// Delete-one jackknife, available for `M ≥ 10`.
    pub jackknife: Option<JackknifeResult>,
}

fn require_m(ds: &ShadowDataset, min: usize, what: &str) -> Result<()> {
    if ds.m() < min {
        return Err(Error::arg(format!("{what} needs M >= {min}, got {}", ds.m())));
    }
    Ok(())
}

/// Estimates several observables sharing one purity denominator.
pub fn estimate_renyi2_observables(
    ds: &ShadowDataset,
    observables: &[PauliSum],
    engine: Engine,
) -> Result<Vec<Renyi2Estimate>> {
    require_m(ds, 2, "pair estimator")?;
    let classes = Classes::new(ds);
    let mut all = vec![PauliSum::identity()];
    all.extend(observables.iter().cloned());
    let stats = pair_statistics(ds, &classes, &all, engine)?;
    let m = ds.m() as f64;
    let norm = m * (m - 1.0);
    let den_stat = &stats[0];
    let denominator = den_stat.total / norm;
    Ok(stats[1..]
        .iter()
        .map(|st| {
            let numerator = st.total / norm;
            let flagged = denominator <= 0.0;
            let jackknife = (ds.m() >= 10 && !flagged)
                .then(|| {
                    let vals: Vec<f64> = st
                        .rows
                        .iter()
                        .zip(&den_stat.rows)
                        .map(|(rn, rd)| (st.total - 2.0 * rn) / (den_stat.total - 2.0 * rd))
                        .collect();
                    jackknife_weighted(numerator / denominator, &vals, &classes.weights).ok()
                })
                .flatten();
            Renyi2Estimate { value: numerator / denominator, numerator, denominator, flagged, jackknife }
        })
        .collect())
}

pub fn estimate_renyi2_observable(ds: &ShadowDataset, obs: &PauliString, engine: Engine) -> Result<Renyi2Estimate> {
    Ok(estimate_renyi2_observables(ds, &[PauliSum::single(obs.clone())], engine)?.remove(0))
}

/// `O1[b] O2[b+l]` averaged over all base sites `b` of a ring.
pub fn translation_sum(l_sys: usize, o1: Pauli, o2: Pauli, l: usize) -> Result<PauliSum> {
    let w = 1.0 / l_sys as f64;
    Ok(PauliSum((0..l_sys).map(|b| pair_string(l_sys, b, o1, o2, l).map(|p| (w, p))).collect::<Result<_>>()?))
}

/// Translation-averaged Rényi-2 correlator at separation `l`.
pub fn estimate_renyi2_translated(
    ds: &ShadowDataset,
    o1: Pauli,
    o2: Pauli,
    l: usize,
    engine: Engine,
) -> Result<Renyi2Estimate> {
    let obs = translation_sum(ds.l(), o1, o2, l)?;
    Ok(estimate_renyi2_observables(ds, &[obs], engine)?.remove(0))
}

/// Purity `tr(ρ²)` with its jackknife error.
pub fn estimate_purity(ds: &ShadowDataset, engine: Engine) -> Result<JackknifeResult> {
    require_m(ds, 2, "purity estimator")?;
    let classes = Classes::new(ds);
    let st = pair_statistics(ds, &classes, &[PauliSum::identity()], engine)?.remove(0);
    let m = ds.m() as f64;
    let value = st.total / (m * (m - 1.0));
    if ds.m() < 3 {
        return Ok(JackknifeResult { estimate: value, mean: value, stderr: f64::NAN });
    }
    let vals: Vec<f64> = st.rows.iter().map(|r| (st.total - 2.0 * r) / ((m - 1.0) * (m - 2.0))).collect();
    jackknife_weighted(value, &vals, &classes.weights)
}

/// Third-moment U-statistic with jackknife error (`M ≥ 4` for the error).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThirdMoment {
    pub value: f64,
    pub jackknife: Option<JackknifeResult>,
    #[serde(skip)]
    delete_one: Vec<f64>,
    #[serde(skip)]
    weights: Vec<usize>,
}

fn part_mask(l: usize, part: &[usize]) -> Result<Vec<bool>> {
    let mut mask = vec![false; l];
    for &s in part {
        *mask.get_mut(s).ok_or_else(|| Error::arg(format!("site {s} outside L = {l}")))? = true;
    }
    Ok(mask)
}

/// PT moment `p₃ = tr[(ρ^{T_A})³]` via the grouped power-sum identity
/// `[tr S₁³ − 3 tr(S₁S₂) + 2 tr S₃] / (M(M−1)(M−2))`, `S_k = Σ_r (ρ̂⁽ʳ⁾^{T_A})^k`.
pub fn estimate_p3(ds: &ShadowDataset, part: &[usize]) -> Result<ThirdMoment> {
    require_m(ds, 3, "third-moment estimator")?;
    let mask = part_mask(ds.l(), part)?;
    let classes = Classes::new(ds);
    let st = triple_statistic(ds.l(), &classes, &mask)?;
    let m = ds.m() as f64;
    let value = st.total / (m * (m - 1.0) * (m - 2.0));
    let (delete_one, jackknife) = if ds.m() >= 4 {
        let vals: Vec<f64> = st.delete_one.iter().map(|t| t / ((m - 1.0) * (m - 2.0) * (m - 3.0))).collect();
        let jk = jackknife_weighted(value, &vals, &classes.weights).ok();
        (vals, jk)
    } else {
        (Vec::new(), None)
    };
    Ok(ThirdMoment { value, jackknife, delete_one, weights: classes.weights })
}

/// `tr(ρ³)` by the same estimator without partial transpose.
pub fn estimate_trace_cube(ds: &ShadowDataset) -> Result<ThirdMoment> {
    estimate_p3(ds, &[])
}

/// `O(M³·L)` reference: explicit sum over ordered distinct triples.
pub fn estimate_p3_brute_force(ds: &ShadowDataset, part: &[usize]) -> Result<f64> {
    require_m(ds, 3, "third-moment estimator")?;
    let mask = part_mask(ds.l(), part)?;
    let m = ds.m();
    let mats: Vec<Vec<nalgebra::Matrix2<C64>>> = (0..m)
        .map(|r| {
            ds.row(r)
                .iter()
                .enumerate()
                .map(|(s, &c)| if mask[s] { local_estimator(c).transpose() } else { local_estimator(c) })
                .collect()
        })
        .collect();
    let mut acc = C64::new(0.0, 0.0);
    for a in 0..m {
        for b in 0..m {
            if b == a {
                continue;
            }
            for c in 0..m {
                if c == a || c == b {
                    continue;
                }
                let mut prod = C64::new(1.0, 0.0);
                for ((ma, mb), mc) in mats[a].iter().zip(&mats[b]).zip(&mats[c]) {
                    prod *= (ma * mb * mc).trace();
                }
                acc += prod;
            }
        }
    }
    Ok(acc.re / (m * (m - 1) * (m - 2)) as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NegativityEstimate {
    /// `N⁽³⁾ = −½ ln(p₃ / tr ρ³)`.
    pub value: f64,
    pub p3: f64,
    pub trace_cube: f64,
    pub jackknife: Option<JackknifeResult>,
}

pub fn estimate_negativity3(ds: &ShadowDataset, part: &[usize]) -> Result<NegativityEstimate> {
    let p3 = estimate_p3(ds, part)?;
    let r3 = estimate_trace_cube(ds)?;
    let value = crate::renyi::negativity_from_moments(p3.value, r3.value, 3)?;
    let jackknife = if p3.delete_one.is_empty() {
        None
    } else {
        let vals: Vec<f64> = p3
            .delete_one
            .iter()
            .zip(&r3.delete_one)
            .map(|(a, b)| if a / b > 0.0 { -0.5 * (a / b).ln() } else { f64::NAN })
            .collect();
        jackknife_weighted(value, &vals, &p3.weights).ok()
    };
    Ok(NegativityEstimate { value, p3: p3.value, trace_cube: r3.value, jackknife })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{Axis, ChannelSpec, Convention};
    use crate::qcore::{Register, StateVector};
    use crate::shadows::{sample_snapshots, BasisScheme, ShadowHeader};

    fn header(l: usize, m: usize) -> ShadowHeader {
        ShadowHeader {
            l,
            channel: Axis::I,
            p: 0.0,
            convention: Convention::Half,
            scheme: BasisScheme::Uniform,
            seed: 0,
            m,
        }
    }

    #[test]
    fn two_identical_z_snapshots() {
        let ds = ShadowDataset::from_codes(header(1, 2), vec![4, 4]).unwrap();
        for engine in [Engine::Factorized, Engine::Accumulated] {
            let e = estimate_renyi2_observable(&ds, &PauliString::single(0, Pauli::Z), engine).unwrap();
            assert!((e.numerator - 3.0).abs() < 1e-14);
            assert!((e.denominator - 5.0).abs() < 1e-14);
        }
    }

    #[test]
    fn engines_agree_and_are_permutation_invariant() {
        let psi = StateVector::zero(Register::numbered("q", 4)).unwrap();
        let spec = ChannelSpec::new(Axis::X, 0.2, Convention::Half).unwrap();
        let ds = sample_snapshots(&psi, &spec, 200, 3, BasisScheme::Uniform).unwrap();
        let obs = vec![
            PauliSum::single(PauliString::pair(0, Pauli::X, 2, Pauli::X).unwrap()),
            translation_sum(4, Pauli::Z, Pauli::Z, 1).unwrap(),
        ];
        let a = estimate_renyi2_observables(&ds, &obs, Engine::Factorized).unwrap();
        let b = estimate_renyi2_observables(&ds, &obs, Engine::Accumulated).unwrap();
        let perm: Vec<usize> = (0..200).rev().collect();
        let c = estimate_renyi2_observables(&ds.permuted(&perm).unwrap(), &obs, Engine::Auto).unwrap();
        for ((x, y), z) in a.iter().zip(&b).zip(&c) {
            assert!((x.numerator - y.numerator).abs() < 1e-10);
            assert!((x.denominator - y.denominator).abs() < 1e-10);
            assert_eq!(x.flagged, y.flagged);
            if let (Some(jx), Some(jy)) = (x.jackknife, y.jackknife) {
                assert!((jx.stderr - jy.stderr).abs() < 1e-10);
            }
            assert!((x.value - z.value).abs() < 1e-10);
        }
    }

    #[test]
    fn grouped_p3_equals_brute_force() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let zero = C64::new(0.0, 0.0);
        let bell =
            StateVector::new(vec![C64::new(s, 0.0), zero, zero, C64::new(s, 0.0)], Register::numbered("q", 2)).unwrap();
        let ds = sample_snapshots(&bell, &ChannelSpec::identity(), 30, 1, BasisScheme::Uniform).unwrap();
        for part in [vec![0usize], vec![], vec![0, 1]] {
            let fast = estimate_p3(&ds, &part).unwrap().value;
            let slow = estimate_p3_brute_force(&ds, &part).unwrap();
            assert!((fast - slow).abs() < 1e-12, "{fast} vs {slow}");
        }
    }

    #[test]
    fn p3_jackknife_matches_explicit_deletion() {
        let psi = StateVector::zero(Register::numbered("q", 2)).unwrap();
        let ds = sample_snapshots(&psi, &ChannelSpec::identity(), 12, 9, BasisScheme::Uniform).unwrap();
        let full = estimate_p3(&ds, &[0]).unwrap();
        let explicit: Vec<f64> = (0..12)
            .map(|i| {
                let keep: Vec<usize> = (0..12).filter(|&k| k != i).collect();
                let sub =
                    ShadowDataset::from_codes(header(2, 11), keep.iter().flat_map(|&k| ds.row(k).to_vec()).collect())
                        .unwrap();
                estimate_p3(&sub, &[0]).unwrap().value
            })
            .collect();
        let jk = crate::shadows::jackknife_weighted(full.value, &explicit, &[1; 12]).unwrap();
        assert!((jk.stderr - full.jackknife.unwrap().stderr).abs() < 1e-9);
    }

    #[test]
    fn too_few_snapshots_rejected() {
        let ds = ShadowDataset::from_codes(header(1, 2), vec![4, 4]).unwrap();
        assert!(estimate_p3(&ds, &[0]).is_err());
        let one = ShadowDataset::from_codes(header(1, 1), vec![4]).unwrap();
        assert!(estimate_purity(&one, Engine::Auto).is_err());
    }
}
