//! Multi-seed aggregation of metrics CSVs.

use crate::error::{BenchError, Result};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    /// Columns of the inputs; `batch_index` is carried through as the key.
    pub columns: Vec<String>,
    pub batch_index: Vec<String>,
    /// Per row, per non-key column: (mean, standard error).
    pub rows: Vec<Vec<(f64, f64)>>,
}

struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

fn read_table(path: &Path) -> Result<Table> {
    let mut reader = csv::Reader::from_path(path)?;
    let header = reader.headers()?.iter().map(str::to_string).collect();
    let rows = reader
        .records()
        .map(|r| r.map(|rec| rec.iter().map(str::to_string).collect()))
        .collect::<std::result::Result<_, _>>()?;
    Ok(Table { header, rows })
}

fn parse(path: &Path, row: usize, col: &str, field: &str) -> Result<f64> {
    field.parse().map_err(|_| {
        BenchError::Invalid(format!("{}: row {} column `{col}` is not numeric: `{field}`", path.display(), row + 1))
    })
}

/// Mean and standard error (sample std / sqrt(k)) of every numeric column,
/// row by row. All inputs must share header and row count.
pub fn aggregate(paths: &[PathBuf]) -> Result<Summary> {
    let Some(first) = paths.first() else {
        return Err(BenchError::Invalid("no metrics files to aggregate".into()));
    };
    let tables = paths.iter().map(|p| read_table(p)).collect::<Result<Vec<_>>>()?;
    let reference = &tables[0];
    if reference.header.first().map(String::as_str) != Some("batch_index") {
        return Err(BenchError::Invalid(format!("{}: first column must be batch_index", first.display())));
    }
    for (path, t) in paths.iter().zip(&tables).skip(1) {
        if t.header != reference.header {
            return Err(BenchError::Invalid(format!(
                "schema mismatch: {} has columns [{}], {} has [{}]",
                first.display(),
                reference.header.join(","),
                path.display(),
                t.header.join(",")
            )));
        }
        if t.rows.len() != reference.rows.len() {
            return Err(BenchError::Invalid(format!(
                "row count mismatch: {} has {}, {} has {}",
                first.display(),
                reference.rows.len(),
                path.display(),
                t.rows.len()
            )));
        }
    }
    let k = tables.len() as f64;
    let mut batch_index = Vec::with_capacity(reference.rows.len());
    let mut rows = Vec::with_capacity(reference.rows.len());
    for r in 0..reference.rows.len() {
        let key = &reference.rows[r][0];
        for (path, t) in paths.iter().zip(&tables) {
            if t.rows[r].len() != reference.header.len() {
                return Err(BenchError::Invalid(format!("{}: row {} has the wrong width", path.display(), r + 1)));
            }
            if &t.rows[r][0] != key {
                return Err(BenchError::Invalid(format!(
                    "{}: row {} has batch_index {}, expected {key}",
                    path.display(),
                    r + 1,
                    t.rows[r][0]
                )));
            }
        }
        batch_index.push(key.clone());
        let mut stats = Vec::with_capacity(reference.header.len() - 1);
        for c in 1..reference.header.len() {
            let col = &reference.header[c];
            let xs = paths
                .iter()
                .zip(&tables)
                .map(|(p, t)| parse(p, r, col, &t.rows[r][c]))
                .collect::<Result<Vec<f64>>>()?;
            // Identical inputs are reproduced exactly; summing would leave round-off.
            if xs.iter().all(|&x| x == xs[0]) {
                stats.push((xs[0], 0.0));
                continue;
            }
            let mean = xs.iter().sum::<f64>() / k;
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1.0);
            stats.push((mean, (var / k).sqrt()));
        }
        rows.push(stats);
    }
    Ok(Summary { columns: reference.header.clone(), batch_index, rows })
}

/// Every `*.csv` in `dir`, sorted by file name.
pub fn metrics_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let entries = std::fs::read_dir(dir).map_err(|e| BenchError::io(dir, e))?;
    let mut paths = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| BenchError::io(dir, e))?.path();
        if path.extension().is_some_and(|e| e == "csv") {
            paths.push(path);
        }
    }
    paths.sort();
    Ok(paths)
}

impl Summary {
    pub fn header(&self) -> Vec<String> {
        let mut h = vec!["batch_index".to_string()];
        for c in &self.columns[1..] {
            h.push(format!("{c}_mean"));
            h.push(format!("{c}_se"));
        }
        h
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(self.header())?;
        for (key, stats) in self.batch_index.iter().zip(&self.rows) {
            let mut rec = vec![key.clone()];
            for (m, se) in stats {
                rec.push(m.to_string());
                rec.push(se.to_string());
            }
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| BenchError::io(path, e))
    }

    /// Mean of `column` at every row.
    pub fn means(&self, column: &str) -> Option<Vec<f64>> {
        let c = self.columns.iter().position(|x| x == column)?.checked_sub(1)?;
        Some(self.rows.iter().map(|r| r[c].0).collect())
    }

    pub fn standard_errors(&self, column: &str) -> Option<Vec<f64>> {
        let c = self.columns.iter().position(|x| x == column)?.checked_sub(1)?;
        Some(self.rows.iter().map(|r| r[c].1).collect())
    }
}
