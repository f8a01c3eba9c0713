//! Simulated randomized single-qubit Pauli measurements ("classical shadows")
//! and their U-statistic post-processing.
//!
//! A snapshot stores one code per site, `code = 2·basis + outcome` with bases
//! ordered X, Y, Z. The per-site estimator is `ρ̂ = 3u†|k⟩⟨k|u − I`, which equals
//! `I/2 + (3/2)·(−1)^k·σ_basis`.

mod engine;
mod estimators;
mod jackknife;
mod sampling;
mod store;

pub use engine::{Engine, PairStatistic, PauliSum};
pub use estimators::{
    estimate_negativity3, estimate_p3, estimate_p3_brute_force, estimate_purity, estimate_renyi2_observable,
    estimate_renyi2_observables, estimate_renyi2_translated, estimate_trace_cube, translation_sum, NegativityEstimate,
    Renyi2Estimate, ThirdMoment,
};
pub use jackknife::{jackknife, jackknife_weighted, JackknifeResult};
pub use sampling::sample_snapshots;
pub use store::{read_dataset, write_dataset, DatasetFormat};

use std::fmt;
use std::str::FromStr;

use nalgebra::Matrix2;
use serde::{Deserialize, Serialize};

use crate::channels::{Axis, Convention};
use crate::qcore::{Pauli, C64};
use crate::{Error, Result};

/// Measurement basis of one site.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Basis {
    X = 0,
    Y = 1,
    Z = 2,
}

impl Basis {
    pub const ALL: [Basis; 3] = [Basis::X, Basis::Y, Basis::Z];

    pub fn pauli(self) -> Pauli {
        match self {
            Basis::X => Pauli::X,
            Basis::Y => Pauli::Y,
            Basis::Z => Pauli::Z,
        }
    }

    pub fn from_index(i: u8) -> Result<Basis> {
        Basis::ALL.get(i as usize).copied().ok_or_else(|| Error::Format(format!("basis index {i} out of range")))
    }

    pub fn letter(self) -> char {
        match self {
            Basis::X => 'X',
            Basis::Y => 'Y',
            Basis::Z => 'Z',
        }
    }

    pub fn from_letter(c: char) -> Result<Basis> {
        match c {
            'X' | 'x' => Ok(Basis::X),
            'Y' | 'y' => Ok(Basis::Y),
            'Z' | 'z' => Ok(Basis::Z),
            o => Err(Error::Format(format!("unknown basis letter {o:?}"))),
        }
    }
}

/// How bases are drawn per site.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum BasisScheme {
    /// Each axis with probability 1/3.
    #[default]
    Uniform,
    /// Two ancilla bits with probabilities (1/6, 1/6, 1/3, 1/3) mapped to Z, Z, X, Y.
    Gadget,
}

impl fmt::Display for BasisScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BasisScheme::Uniform => "uniform",
            BasisScheme::Gadget => "gadget",
        })
    }
}

impl FromStr for BasisScheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "uniform" => Ok(BasisScheme::Uniform),
            "gadget" => Ok(BasisScheme::Gadget),
            o => Err(Error::arg(format!("unknown basis scheme {o:?}"))),
        }
    }
}

/// `code = 2·basis + outcome`.
pub fn site_code(basis: Basis, outcome: u8) -> u8 {
    2 * basis as u8 + (outcome & 1)
}

/// One measured shot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShadowSnapshot {
    pub index: usize,
    pub bases: Vec<Basis>,
    pub outcomes: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShadowHeader {
    #[serde(rename = "L")]
    pub l: usize,
    pub channel: Axis,
    pub p: f64,
    pub convention: Convention,
    pub scheme: BasisScheme,
    pub seed: u64,
    #[serde(rename = "M")]
    pub m: usize,
}

/// Header plus `M × L` site codes, snapshot-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ShadowDataset {
    pub header: ShadowHeader,
    codes: Vec<u8>,
}

impl ShadowDataset {
    pub fn from_codes(header: ShadowHeader, codes: Vec<u8>) -> Result<Self> {
        if header.l == 0 || codes.len() != header.m * header.l {
            return Err(Error::Format(format!(
                "{} codes do not match M = {} snapshots of L = {} sites",
                codes.len(),
                header.m,
                header.l
            )));
        }
        if let Some(c) = codes.iter().find(|&&c| c > 5) {
            return Err(Error::Format(format!("site code {c} out of range")));
        }
        Ok(ShadowDataset { header, codes })
    }

    pub fn from_snapshots(mut header: ShadowHeader, snaps: &[ShadowSnapshot]) -> Result<Self> {
        let mut codes = Vec::with_capacity(snaps.len() * header.l);
        for s in snaps {
            if s.bases.len() != header.l || s.outcomes.len() != header.l {
                return Err(Error::Format(format!("snapshot {} does not have {} sites", s.index, header.l)));
            }
            codes.extend(s.bases.iter().zip(&s.outcomes).map(|(&b, &k)| site_code(b, k)));
        }
        header.m = snaps.len();
        ShadowDataset::from_codes(header, codes)
    }

    pub fn l(&self) -> usize {
        self.header.l
    }

    pub fn m(&self) -> usize {
        self.header.m
    }

    pub fn codes(&self) -> &[u8] {
        &self.codes
    }

    pub fn row(&self, r: usize) -> &[u8] {
        &self.codes[r * self.header.l..(r + 1) * self.header.l]
    }

    pub fn snapshot(&self, r: usize) -> ShadowSnapshot {
        let row = self.row(r);
        ShadowSnapshot {
            index: r,
            bases: row.iter().map(|&c| Basis::ALL[(c >> 1) as usize]).collect(),
            outcomes: row.iter().map(|&c| c & 1).collect(),
        }
    }

    /// Same dataset with snapshots reordered by `perm`.
    pub fn permuted(&self, perm: &[usize]) -> Result<ShadowDataset> {
        if perm.len() != self.m() {
            return Err(Error::arg("permutation length differs from M"));
        }
        let mut codes = Vec::with_capacity(self.codes.len());
        for &r in perm {
            codes.extend_from_slice(self.row(r));
        }
        ShadowDataset::from_codes(self.header.clone(), codes)
    }

    /// Keeps the listed sites (in the given order).
    pub fn restrict(&self, sites: &[usize]) -> Result<ShadowDataset> {
        if let Some(&s) = sites.iter().find(|&&s| s >= self.l()) {
            return Err(Error::arg(format!("site {s} outside L = {}", self.l())));
        }
        let mut codes = Vec::with_capacity(self.m() * sites.len());
        for r in 0..self.m() {
            let row = self.row(r);
            codes.extend(sites.iter().map(|&s| row[s]));
        }
        let mut header = self.header.clone();
        header.l = sites.len();
        ShadowDataset::from_codes(header, codes)
    }
}

/// `3u†|k⟩⟨k|u − I` for a site code.
pub fn local_estimator(code: u8) -> Matrix2<C64> {
    let basis = Basis::ALL[(code >> 1) as usize % 3];
    let sign = if code & 1 == 0 { 1.5 } else { -1.5 };
    Matrix2::identity() * C64::new(0.5, 0.0) + basis.pauli().matrix() * C64::new(sign, 0.0)
}

/// Estimator of one recorded site.
pub fn local_estimator_of(snapshot: &ShadowSnapshot, site: usize) -> Result<Matrix2<C64>> {
    let b = *snapshot
        .bases
        .get(site)
        .ok_or_else(|| Error::arg(format!("site {site} outside snapshot of {} sites", snapshot.bases.len())))?;
    Ok(local_estimator(site_code(b, snapshot.outcomes[site])))
}
