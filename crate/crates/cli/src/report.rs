//! CSV/JSON emission: atomic writes, 17-significant-digit floats, content
//! hashing for the manifest.

use anyhow::{bail, Context, Result};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

/// Column unit kinds for the optional physical-J rescaling. Internally
/// everything is in units J = 1; on output rates are multiplied by J and
/// times divided by it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Unit {
    Time,
    Rate,
    Dimensionless,
}

#[derive(Debug, Clone, Copy)]
pub struct Scale {
    pub j: f64,
}

impl Scale {
    pub fn apply(&self, unit: Unit, value: f64) -> f64 {
        match unit {
            Unit::Time => value / self.j,
            Unit::Rate => value * self.j,
            Unit::Dimensionless => value,
        }
    }
}

/// 17 significant digits; round-trips every f64 exactly.
pub fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

/// One data table on its way to a CSV file.
pub struct Table {
    pub header: Vec<&'static str>,
    pub units: Vec<Unit>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(columns: &[(&'static str, Unit)]) -> Self {
        Table {
            header: columns.iter().map(|c| c.0).collect(),
            units: columns.iter().map(|c| c.1).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self, scale: Scale) -> Result<String> {
        if self.rows.is_empty() {
            bail!("refusing to write an empty table");
        }
        let mut out = String::new();
        out.push_str(&self.header.join(","));
        out.push('\n');
        for row in &self.rows {
            let line: Vec<String> = row
                .iter()
                .zip(self.units.iter())
                .map(|(&v, &u)| fmt_float(scale.apply(u, v)))
                .collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        Ok(out)
    }
}

/// Write via a temp file in the same directory plus rename, so a crash never
/// leaves a half-written data file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    std::fs::create_dir_all(dir)
        .with_context(|| format!("cannot create output dir {}", dir.display()))?;
    let tmp = dir.join(format!(
        ".{}.tmp",
        path.file_name().and_then(|n| n.to_str()).unwrap_or("out")
    ));
    std::fs::write(&tmp, bytes).with_context(|| format!("cannot write {}", tmp.display()))?;
    std::fs::rename(&tmp, path)
        .with_context(|| format!("cannot move {} into place", path.display()))?;
    Ok(())
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct OutputRecord {
    pub path: String,
    pub sha256: String,
    pub bytes: usize,
}

/// Write one output file and record its content hash.
pub fn emit(dir: &Path, name: &str, content: &str, outputs: &mut Vec<OutputRecord>) -> Result<PathBuf> {
    let path = dir.join(name);
    write_atomic(&path, content.as_bytes())?;
    let mut hasher = Sha256::new();
    hasher.update(content.as_bytes());
    outputs.push(OutputRecord {
        path: name.to_string(),
        sha256: hex::encode(hasher.finalize()),
        bytes: content.len(),
    });
    Ok(path)
}

/// Minimal CSV reader for our own numeric tables: a header row followed by
/// float rows.
pub fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))?;
    let mut lines = text.lines();
    let header: Vec<String> = lines
        .next()
        .with_context(|| format!("{} is empty", path.display()))?
        .split(',')
        .map(|s| s.trim().to_string())
        .collect();
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row: Vec<f64> = line
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .with_context(|| format!("{}:{}: bad float {s:?}", path.display(), i + 2))
            })
            .collect::<Result<_>>()?;
        if row.len() != header.len() {
            bail!("{}:{}: expected {} columns, got {}", path.display(), i + 2, header.len(), row.len());
        }
        rows.push(row);
    }
    Ok((header, rows))
}

pub fn column<'a>(
    header: &[String],
    rows: &'a [Vec<f64>],
    name: &str,
) -> Result<impl Iterator<Item = f64> + 'a> {
    let idx = header
        .iter()
        .position(|h| h == name)
        .with_context(|| format!("missing column {name:?} (have {})", header.join(", ")))?;
    Ok(rows.iter().map(move |r| r[idx]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_roundtrip() {
        for v in [1.0 / 3.0, -2.7e-15, 6.0221e23, 0.1 + 0.2] {
            let s = fmt_float(v);
            assert_eq!(s.parse::<f64>().unwrap(), v, "{s}");
        }
    }

    #[test]
    fn empty_table_is_an_error() {
        let t = Table::new(&[("x", Unit::Dimensionless)]);
        assert!(t.to_csv(Scale { j: 1.0 }).is_err());
    }

    #[test]
    fn csv_roundtrip_and_scaling() {
        let mut t = Table::new(&[("t", Unit::Time), ("bx", Unit::Rate), ("v", Unit::Dimensionless)]);
        t.push(vec![1.5, 0.25, 7.0]);
        let csv = t.to_csv(Scale { j: 2.0 }).unwrap();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "t,bx,v");
        let row: Vec<f64> = lines.next().unwrap().split(',').map(|s| s.parse().unwrap()).collect();
        assert_eq!(row, vec![0.75, 0.5, 7.0]);
    }
}
