use std::fmt;
use std::str::FromStr;

use nalgebra::Matrix2;
use serde::{Deserialize, Serialize};

use super::{CMatrix, C64, ONE, ZERO};
use crate::{Error, Result};

/// Single-qubit Pauli operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

    pub fn matrix(self) -> Matrix2<C64> {
        let i = C64::new(0.0, 1.0);
        match self {
            Pauli::I => Matrix2::new(ONE, ZERO, ZERO, ONE),
            Pauli::X => Matrix2::new(ZERO, ONE, ONE, ZERO),
            Pauli::Y => Matrix2::new(ZERO, -i, i, ZERO),
            Pauli::Z => Matrix2::new(ONE, ZERO, ZERO, -ONE),
        }
    }

    pub fn dmatrix(self) -> CMatrix {
        let m = self.matrix();
        CMatrix::from_fn(2, 2, |r, c| m[(r, c)])
    }

    /// Index in the order I, X, Y, Z.
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Pauli {
        Pauli::ALL[i & 3]
    }
}

impl fmt::Display for Pauli {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        };
        write!(f, "{c}")
    }
}

impl FromStr for Pauli {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "I" => Ok(Pauli::I),
            "X" => Ok(Pauli::X),
            "Y" => Ok(Pauli::Y),
            "Z" => Ok(Pauli::Z),
            other => Err(Error::arg(format!("unknown Pauli {other:?}"))),
        }
    }
}

/// Tensor product of single-site Paulis, addressed by register position.
/// Sites not listed carry the identity.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PauliString {
    terms: Vec<(usize, Pauli)>,
}

impl PauliString {
    pub fn identity() -> Self {
        PauliString { terms: Vec::new() }
    }

    /// Builds a string; identity factors are dropped and repeated sites rejected.
    pub fn new(terms: impl IntoIterator<Item = (usize, Pauli)>) -> Result<Self> {
        let mut out: Vec<(usize, Pauli)> = Vec::new();
        for (site, p) in terms {
            if out.iter().any(|&(s, _)| s == site) {
                return Err(Error::arg(format!("site {site} repeated in Pauli string")));
            }
            if p != Pauli::I {
                out.push((site, p));
            }
        }
        out.sort_by_key(|&(s, _)| s);
        Ok(PauliString { terms: out })
    }

    pub fn single(site: usize, p: Pauli) -> Self {
        PauliString::new([(site, p)]).expect("single site")
    }

    /// `o1` on `site1` times `o2` on `site2`; equal sites multiply the Paulis
    /// (only allowed when the product is again ± a Pauli without phase issues,
    /// i.e. equal operators giving the identity).
    pub fn pair(site1: usize, o1: Pauli, site2: usize, o2: Pauli) -> Result<Self> {
        if site1 == site2 {
            if o1 == o2 || o1 == Pauli::I || o2 == Pauli::I {
                let p = if o1 == o2 {
                    Pauli::I
                } else if o1 == Pauli::I {
                    o2
                } else {
                    o1
                };
                return PauliString::new([(site1, p)]);
            }
            return Err(Error::arg("distinct Paulis on the same site are not Hermitian-closed"));
        }
        PauliString::new([(site1, o1), (site2, o2)])
    }

    pub fn terms(&self) -> &[(usize, Pauli)] {
        &self.terms
    }

    pub fn weight(&self) -> usize {
        self.terms.len()
    }

    /// Pauli acting on `site` (identity when absent).
    pub fn at(&self, site: usize) -> Pauli {
        self.terms.iter().find(|&&(s, _)| s == site).map(|&(_, p)| p).unwrap_or(Pauli::I)
    }

    pub fn max_site(&self) -> Option<usize> {
        self.terms.last().map(|&(s, _)| s)
    }

    /// `(x_mask, z_mask, phase)` such that `P|i⟩ = phase·(−1)^{|i ∧ z|}·|i ⊕ x⟩`
    /// on an `n`-qubit register.
    pub fn masks(&self, n: usize) -> (usize, usize, C64) {
        let mut x = 0usize;
        let mut z = 0usize;
        let mut ny = 0usize;
        for &(s, p) in &self.terms {
            let bit = 1usize << (n - 1 - s);
            match p {
                Pauli::I => {}
                Pauli::X => x |= bit,
                Pauli::Z => z |= bit,
                Pauli::Y => {
                    x |= bit;
                    z |= bit;
                    ny += 1;
                }
            }
        }
        // Y = i·X·Z, so Y|b⟩ = i·(−1)^b |b⊕1⟩.
        let phase = match ny % 4 {
            0 => C64::new(1.0, 0.0),
            1 => C64::new(0.0, 1.0),
            2 => C64::new(-1.0, 0.0),
            _ => C64::new(0.0, -1.0),
        };
        (x, z, phase)
    }

    /// Returns `P|ψ⟩` for amplitudes on an `n`-qubit register.
    pub fn apply(&self, amps: &[C64], n: usize) -> Vec<C64> {
        let (x, z, phase) = self.masks(n);
        let mut out = vec![ZERO; amps.len()];
        for (i, &a) in amps.iter().enumerate() {
            let sign = if (i & z).count_ones() % 2 == 1 { -1.0 } else { 1.0 };
            out[i ^ x] = a * phase * sign;
        }
        out
    }

    /// `⟨ψ|P|ψ⟩` without allocating.
    pub fn expectation(&self, amps: &[C64], n: usize) -> C64 {
        let (x, z, phase) = self.masks(n);
        let mut acc = ZERO;
        for (i, &a) in amps.iter().enumerate() {
            let sign = if (i & z).count_ones() % 2 == 1 { -1.0 } else { 1.0 };
            acc += amps[i ^ x].conj() * a * sign;
        }
        acc * phase
    }

    /// Dense `2ⁿ × 2ⁿ` matrix.
    pub fn to_matrix(&self, n: usize) -> CMatrix {
        let dim = 1usize << n;
        let (x, z, phase) = self.masks(n);
        let mut m = CMatrix::zeros(dim, dim);
        for i in 0..dim {
            let sign = if (i & z).count_ones() % 2 == 1 { -1.0 } else { 1.0 };
            m[(i ^ x, i)] = phase * sign;
        }
        m
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "I");
        }
        let parts: Vec<String> = self.terms.iter().map(|(s, p)| format!("{p}{s}")).collect();
        write!(f, "{}", parts.join("·"))
    }
}
