//! Dataset files: JSON lines (header object, then one record per snapshot) or a
//! packed binary form with 3 bits per site.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{site_code, Basis, ShadowDataset, ShadowHeader};
use crate::{Error, Result};

const PACKED_MAGIC: &[u8; 4] = b"MPLS";
const PACKED_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatasetFormat {
    JsonLines,
    Packed,
}

impl DatasetFormat {
    /// `.jsonl`/`.json` select JSON lines; anything else is packed.
    pub fn from_path(path: &Path) -> DatasetFormat {
        match path.extension().and_then(|e| e.to_str()) {
            Some("jsonl") | Some("json") => DatasetFormat::JsonLines,
            _ => DatasetFormat::Packed,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct Record {
    r: usize,
    bases: String,
    outcomes: String,
}

pub fn write_dataset(ds: &ShadowDataset, path: &Path, format: DatasetFormat) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    match format {
        DatasetFormat::JsonLines => {
            serde_json::to_writer(&mut w, &ds.header)?;
            writeln!(w)?;
            for r in 0..ds.m() {
                let row = ds.row(r);
                let rec = Record {
                    r,
                    bases: row.iter().map(|&c| Basis::ALL[(c >> 1) as usize].letter()).collect(),
                    outcomes: row.iter().map(|&c| if c & 1 == 1 { '1' } else { '0' }).collect(),
                };
                serde_json::to_writer(&mut w, &rec)?;
                writeln!(w)?;
            }
        }
        DatasetFormat::Packed => {
            let header = serde_json::to_vec(&ds.header)?;
            w.write_all(PACKED_MAGIC)?;
            w.write_all(&PACKED_VERSION.to_le_bytes())?;
            w.write_all(&(header.len() as u32).to_le_bytes())?;
            w.write_all(&header)?;
            w.write_all(&pack(ds.codes()))?;
        }
    }
    w.flush()?;
    Ok(())
}

fn pack(codes: &[u8]) -> Vec<u8> {
    let mut out = vec![0u8; (codes.len() * 3).div_ceil(8)];
    for (i, &c) in codes.iter().enumerate() {
        for b in 0..3 {
            if (c >> b) & 1 == 1 {
                let bit = 3 * i + b;
                out[bit / 8] |= 1 << (bit % 8);
            }
        }
    }
    out
}

fn unpack(bytes: &[u8], n: usize) -> Result<Vec<u8>> {
    if bytes.len() < (n * 3).div_ceil(8) {
        return Err(Error::Format("packed dataset is truncated".into()));
    }
    Ok((0..n)
        .map(|i| (0..3).fold(0u8, |acc, b| acc | (((bytes[(3 * i + b) / 8] >> ((3 * i + b) % 8)) & 1) << b)))
        .collect())
}

pub fn read_dataset(path: &Path) -> Result<ShadowDataset> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    let n = r.read(&mut magic)?;
    if n == 4 && &magic == PACKED_MAGIC {
        let mut word = [0u8; 4];
        r.read_exact(&mut word)?;
        let version = u32::from_le_bytes(word);
        if version != PACKED_VERSION {
            return Err(Error::Format(format!("unsupported dataset version {version}")));
        }
        r.read_exact(&mut word)?;
        let mut header = vec![0u8; u32::from_le_bytes(word) as usize];
        r.read_exact(&mut header)?;
        let header: ShadowHeader = serde_json::from_slice(&header)?;
        let mut rest = Vec::new();
        r.read_to_end(&mut rest)?;
        let codes = unpack(&rest, header.m * header.l)?;
        return ShadowDataset::from_codes(header, codes);
    }
    let mut text = String::from_utf8_lossy(&magic[..n]).into_owned();
    r.read_to_string(&mut text)?;
    let mut lines = text.as_bytes().lines();
    let first = lines.next().ok_or_else(|| Error::Format("empty dataset file".into()))??;
    let header: ShadowHeader = serde_json::from_str(&first)?;
    let mut codes = Vec::with_capacity(header.m * header.l);
    let mut count = 0;
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: Record = serde_json::from_str(&line)?;
        if rec.bases.len() != header.l || rec.outcomes.len() != header.l {
            return Err(Error::Format(format!("record {} does not have {} sites", rec.r, header.l)));
        }
        for (b, k) in rec.bases.chars().zip(rec.outcomes.chars()) {
            let k = match k {
                '0' => 0,
                '1' => 1,
                o => return Err(Error::Format(format!("outcome {o:?} is not a bit"))),
            };
            codes.push(site_code(Basis::from_letter(b)?, k));
        }
        count += 1;
    }
    if count != header.m {
        return Err(Error::Format(format!("header announces M = {} but {count} records follow", header.m)));
    }
    ShadowDataset::from_codes(header, codes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{Axis, ChannelSpec, Convention};
    use crate::qcore::{Register, StateVector};
    use crate::shadows::{sample_snapshots, BasisScheme};

    #[test]
    fn both_formats_round_trip() {
        let psi = StateVector::zero(Register::numbered("q", 5)).unwrap();
        let spec = ChannelSpec::new(Axis::Z, 0.3, Convention::Half).unwrap();
        let ds = sample_snapshots(&psi, &spec, 77, 4, BasisScheme::Gadget).unwrap();
        let dir = tempfile::tempdir().unwrap();
        for (name, fmt) in [("a.jsonl", DatasetFormat::JsonLines), ("a.mpls", DatasetFormat::Packed)] {
            let path = dir.path().join(name);
            assert_eq!(DatasetFormat::from_path(&path), fmt);
            write_dataset(&ds, &path, fmt).unwrap();
            assert_eq!(read_dataset(&path).unwrap(), ds);
        }
        let packed = std::fs::metadata(dir.path().join("a.mpls")).unwrap().len();
        assert!(packed < 77 * 5);
    }

    #[test]
    fn record_count_mismatch_is_format_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.jsonl");
        std::fs::write(
            &path,
            "{\"L\":1,\"channel\":\"z\",\"p\":0.1,\"convention\":\"half\",\"scheme\":\"uniform\",\"seed\":1,\"M\":2}\n{\"r\":0,\"bases\":\"Z\",\"outcomes\":\"0\"}\n",
        )
        .unwrap();
        assert!(matches!(read_dataset(&path), Err(Error::Format(_))));
    }
}
