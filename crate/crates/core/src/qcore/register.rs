use std::fmt;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Ordered list of distinct qubit labels.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Register(Vec<String>);

impl Register {
    pub fn new<S: Into<String>>(labels: impl IntoIterator<Item = S>) -> Result<Self> {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        for (i, a) in labels.iter().enumerate() {
            if labels[..i].contains(a) {
                return Err(Error::arg(format!("duplicate qubit label {a:?}")));
            }
        }
        Ok(Register(labels))
    }

    /// `prefix0, prefix1, …` for `n` qubits.
    pub fn numbered(prefix: &str, n: usize) -> Self {
        Register((0..n).map(|i| format!("{prefix}{i}")).collect())
    }

    pub fn empty() -> Self {
        Register(Vec::new())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.0
    }

    pub fn position(&self, label: &str) -> Option<usize> {
        self.0.iter().position(|l| l == label)
    }

    /// Resolves labels to register positions, rejecting unknown labels.
    pub fn positions<S: AsRef<str>>(&self, labels: &[S]) -> Result<Vec<usize>> {
        labels
            .iter()
            .map(|l| {
                let l = l.as_ref();
                self.position(l).ok_or_else(|| Error::arg(format!("unknown qubit label {l:?} in register {self}")))
            })
            .collect()
    }

    /// Bit mask of the given positions within an amplitude index.
    pub fn mask(&self, positions: &[usize]) -> usize {
        let n = self.len();
        positions.iter().fold(0, |m, &p| m | (1 << (n - 1 - p)))
    }

    pub fn concat(&self, other: &Register) -> Result<Register> {
        Register::new(self.0.iter().chain(other.0.iter()).cloned())
    }

    pub fn select(&self, positions: &[usize]) -> Register {
        Register(positions.iter().map(|&p| self.0[p].clone()).collect())
    }
}

impl fmt::Display for Register {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}]", self.0.join(","))
    }
}
