use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::table::Table;
use crate::{Error, Result};

/// Absolute tolerances per column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub default_abs: f64,
    pub columns: BTreeMap<String, f64>,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { default_abs: 1e-9, columns: BTreeMap::new() }
    }
}

impl Tolerances {
    fn for_column(&self, c: &str) -> f64 {
        self.columns.get(c).copied().unwrap_or(self.default_abs)
    }

    /// Parses `column=tolerance`.
    pub fn set(&mut self, spec: &str) -> Result<()> {
        let (k, v) =
            spec.split_once('=').ok_or_else(|| Error::arg(format!("tolerance {spec:?} is not column=value")))?;
        let v: f64 = v.trim().parse().map_err(|_| Error::arg(format!("tolerance {v:?} is not a number")))?;
        if k.trim() == "default" {
            self.default_abs = v;
        } else {
            self.columns.insert(k.trim().to_string(), v);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellDelta {
    pub row: usize,
    pub column: String,
    pub artifact: String,
    pub reference: String,
    /// Absolute difference for numeric cells, `None` for text.
    pub delta: Option<f64>,
    pub ok: bool,
}

impl std::fmt::Display for CellDelta {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "row {} column {}: {} vs {}", self.row, self.column, self.artifact, self.reference)?;
        match self.delta {
            Some(d) => write!(f, " (delta {d:e})"),
            None => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub pass: bool,
    pub cells: Vec<CellDelta>,
}

impl CompareReport {
    pub fn failures(&self) -> impl Iterator<Item = &CellDelta> {
        self.cells.iter().filter(|c| !c.ok)
    }
}

/// Row-by-row comparison over the reference's columns.
///
/// Missing columns or a differing row count are schema errors.
pub fn compare(artifact: &Table, reference: &Table, tol: &Tolerances) -> Result<CompareReport> {
    let mut idx = Vec::with_capacity(reference.headers.len());
    for h in &reference.headers {
        let i = artifact.column(h).ok_or_else(|| Error::Schema(format!("artifact lacks column {h:?}")))?;
        idx.push(i);
    }
    if artifact.rows.len() != reference.rows.len() {
        return Err(Error::Schema(format!(
            "artifact has {} rows, reference {}",
            artifact.rows.len(),
            reference.rows.len()
        )));
    }
    let mut cells = Vec::new();
    for (r, (arow, rrow)) in artifact.rows.iter().zip(&reference.rows).enumerate() {
        for ((h, &ai), rv) in reference.headers.iter().zip(&idx).zip(rrow) {
            let av = arow.get(ai).ok_or_else(|| Error::Schema(format!("row {r} is short")))?;
            let (delta, ok) = match (av.trim().parse::<f64>(), rv.trim().parse::<f64>()) {
                (Ok(a), Ok(b)) if a.is_nan() && b.is_nan() => (Some(0.0), true),
                (Ok(a), Ok(b)) => {
                    let d = (a - b).abs();
                    (Some(d), d <= tol.for_column(h) || a == b)
                }
                _ => (None, av == rv),
            };
            cells.push(CellDelta { row: r, column: h.clone(), artifact: av.clone(), reference: rv.clone(), delta, ok });
        }
    }
    Ok(CompareReport { pass: cells.iter().all(|c| c.ok), cells })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(rows: &[[&str; 3]]) -> Table {
        let mut t = Table::new(["L", "axis", "F_e"]);
        for r in rows {
            t.push(r.iter().map(|s| s.to_string()).collect());
        }
        t
    }

    #[test]
    fn identical_tables_pass_with_zero_deltas() {
        let t = table(&[["3", "Z", "0.81"], ["4", "X", "0.7"]]);
        let rep = compare(&t, &t, &Tolerances::default()).unwrap();
        assert!(rep.pass);
        assert!(rep.cells.iter().all(|c| c.delta.is_none_or(|d| d == 0.0)));
    }

    #[test]
    fn single_cell_out_of_tolerance_is_named() {
        let a = table(&[["3", "Z", "0.81"], ["4", "X", "0.7"]]);
        let b = table(&[["3", "Z", "0.81"], ["4", "X", "0.71"]]);
        let mut tol = Tolerances::default();
        let rep = compare(&a, &b, &tol).unwrap();
        assert!(!rep.pass);
        let bad: Vec<_> = rep.failures().collect();
        assert_eq!(bad.len(), 1);
        assert_eq!((bad[0].row, bad[0].column.as_str()), (1, "F_e"));
        tol.set("F_e=0.02").unwrap();
        assert!(compare(&a, &b, &tol).unwrap().pass);
    }

    #[test]
    fn missing_column_is_a_schema_error() {
        let a = Table { headers: vec!["L".into(), "axis".into()], rows: vec![vec!["3".into(), "Z".into()]] };
        let b = table(&[["3", "Z", "0.81"]]);
        assert!(matches!(compare(&a, &b, &Tolerances::default()), Err(Error::Schema(_))));
    }
}
