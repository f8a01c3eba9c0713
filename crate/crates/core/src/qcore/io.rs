//! Binary state files: one or more records, each a little-endian header
//! (`MPLB`, version u32, qubit count u32, kind u8) followed by complex128 data.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{check_alloc, CMatrix, DensityMatrix, Register, StateVector, C64};
use crate::{Error, Result};

pub const MAGIC: &[u8; 4] = b"MPLB";
const VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StateKind {
    StateVector = 0,
    Density = 1,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateRecord {
    pub kind: StateKind,
    pub n_qubits: u32,
    /// Amplitudes, or the density matrix in row-major order.
    pub data: Vec<C64>,
}

impl From<&StateVector> for StateRecord {
    fn from(s: &StateVector) -> Self {
        StateRecord { kind: StateKind::StateVector, n_qubits: s.n_qubits() as u32, data: s.amplitudes().to_vec() }
    }
}

impl From<&DensityMatrix> for StateRecord {
    fn from(r: &DensityMatrix) -> Self {
        let m = r.matrix();
        let d = m.nrows();
        let data = (0..d * d).map(|k| m[(k / d, k % d)]).collect();
        StateRecord { kind: StateKind::Density, n_qubits: r.n_qubits() as u32, data }
    }
}

impl StateRecord {
    pub fn to_state_vector(&self, register: Register) -> Result<StateVector> {
        if self.kind != StateKind::StateVector {
            return Err(Error::Format("record holds a density matrix".into()));
        }
        StateVector::new(self.data.clone(), register)
    }

    pub fn to_density(&self, register: Register) -> Result<DensityMatrix> {
        if self.kind != StateKind::Density {
            return Err(Error::Format("record holds a state vector".into()));
        }
        let d = 1usize << self.n_qubits;
        DensityMatrix::new(CMatrix::from_fn(d, d, |i, j| self.data[i * d + j]), register)
    }
}

pub fn write_state_file(path: &Path, records: &[StateRecord]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for rec in records {
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(&rec.n_qubits.to_le_bytes())?;
        w.write_all(&[rec.kind as u8])?;
        for z in &rec.data {
            w.write_all(&z.re.to_le_bytes())?;
            w.write_all(&z.im.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_state_file(path: &Path) -> Result<Vec<StateRecord>> {
    let mut r = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    loop {
        let mut magic = [0u8; 4];
        match r.read(&mut magic[..1])? {
            0 => break,
            _ => r.read_exact(&mut magic[1..]).map_err(truncated)?,
        }
        if &magic != MAGIC {
            return Err(Error::Format(format!("bad magic {magic:?} in state file")));
        }
        let mut word = [0u8; 4];
        r.read_exact(&mut word).map_err(truncated)?;
        let version = u32::from_le_bytes(word);
        if version != VERSION {
            return Err(Error::Format(format!("unsupported state file version {version}")));
        }
        r.read_exact(&mut word).map_err(truncated)?;
        let n = u32::from_le_bytes(word);
        let mut kind = [0u8; 1];
        r.read_exact(&mut kind).map_err(truncated)?;
        let kind = match kind[0] {
            0 => StateKind::StateVector,
            1 => StateKind::Density,
            k => return Err(Error::Format(format!("unknown state kind {k}"))),
        };
        if n > 40 {
            return Err(Error::Format(format!("implausible qubit count {n}")));
        }
        let len: u128 = match kind {
            StateKind::StateVector => 1u128 << n,
            StateKind::Density => 1u128 << (2 * n),
        };
        check_alloc(len, 16)?;
        let mut data = Vec::with_capacity(len as usize);
        let mut buf = [0u8; 16];
        for _ in 0..len {
            r.read_exact(&mut buf).map_err(truncated)?;
            let re = f64::from_le_bytes(buf[..8].try_into().expect("8 bytes"));
            let im = f64::from_le_bytes(buf[8..].try_into().expect("8 bytes"));
            data.push(C64::new(re, im));
        }
        out.push(StateRecord { kind, n_qubits: n, data });
    }
    Ok(out)
}

fn truncated(e: std::io::Error) -> Error {
    Error::Format(format!("truncated state file: {e}"))
}
