//! Bit-stable result files: CSV tables, the observable series, and the
//! run manifest.
//!
//! Every CSV starts with a schema comment `# schema <name> <version>`
//! followed by a header row and data rows. Values are printed with 12
//! significant digits (`{:.11e}`), absent values as empty cells, line
//! endings are LF. Identical runs produce byte-identical files, which is
//! what the determinism checks compare.

use anyhow::{bail, ensure, Context, Result};
use pendular_core::observables::{ObservablePoint, ObservableSeries};
use sha2::{Digest, Sha256};
use std::fs;
use std::path::Path;

/// Version written into (and required from) every file of this build.
pub const SCHEMA_VERSION: u32 = 1;

/// Fixed-width scientific formatting with 12 significant digits.
pub fn format_value(v: f64) -> String {
    format!("{v:.11e}")
}

fn format_cell(v: Option<f64>) -> String {
    v.map(format_value).unwrap_or_default()
}

/// A generic numeric table with optional (absent) cells.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    /// Schema name after `# schema `, e.g. `series`.
    pub schema: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Option<f64>>>,
}

impl Table {
    pub fn new(schema: &str, columns: Vec<String>) -> Self {
        Self {
            schema: schema.to_string(),
            columns,
            rows: Vec::new(),
        }
    }

    pub fn push_row(&mut self, row: Vec<Option<f64>>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// Column index by name.
    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// All present values of a named column.
    pub fn column_values(&self, name: &str) -> Option<Vec<f64>> {
        let idx = self.column(name)?;
        Some(self.rows.iter().filter_map(|r| r[idx]).collect())
    }

    fn render(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("# schema {} {}\n", self.schema, SCHEMA_VERSION));
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| format_cell(*v)).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

/// Writes a table; rejects empty tables.
pub fn write_table(path: &Path, table: &Table) -> Result<()> {
    ensure!(
        !table.rows.is_empty(),
        "refusing to write empty table {}",
        path.display()
    );
    fs::write(path, table.render())
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// Reads a table back, checking the schema name and version.
pub fn read_table(path: &Path, expected_schema: &str) -> Result<Table> {
    let text =
        fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut lines = text.lines();
    let schema_line = lines.next().context("empty file")?;
    let Some(rest) = schema_line.strip_prefix("# schema ") else {
        bail!("{}: missing schema line", path.display());
    };
    let mut parts = rest.split_whitespace();
    let name = parts.next().context("schema line missing name")?;
    let version: u32 = parts
        .next()
        .context("schema line missing version")?
        .parse()
        .context("schema version is not an integer")?;
    if name != expected_schema {
        bail!(
            "{}: schema {name:?} where {expected_schema:?} was expected",
            path.display()
        );
    }
    if version != SCHEMA_VERSION {
        bail!(
            "{}: unsupported schema version {version} (this build reads {SCHEMA_VERSION})",
            path.display()
        );
    }
    let header = lines.next().context("missing header row")?;
    let columns: Vec<String> = header.split(',').map(str::to_string).collect();
    let mut rows = Vec::new();
    for (idx, line) in lines.enumerate() {
        let cells: Vec<Option<f64>> = line
            .split(',')
            .map(|cell| {
                if cell.is_empty() {
                    Ok(None)
                } else {
                    cell.parse::<f64>().map(Some).with_context(|| {
                        format!("{}: data row {}: bad cell {cell:?}", path.display(), idx + 1)
                    })
                }
            })
            .collect::<Result<_>>()?;
        ensure!(
            cells.len() == columns.len(),
            "{}: data row {} has {} cells, header has {}",
            path.display(),
            idx + 1,
            cells.len(),
            columns.len()
        );
        rows.push(cells);
    }
    Ok(Table {
        schema: name.to_string(),
        columns,
        rows,
    })
}

/// Series CSV columns: `time_s`, then every observable in lexicographic
/// order, each followed by its `_se` companion.
pub fn series_columns() -> Vec<String> {
    let mut columns = vec!["time_s".to_string()];
    for (name, _) in ObservablePoint::COLUMNS.iter() {
        columns.push((*name).to_string());
        columns.push(format!("{name}_se"));
    }
    columns
}

/// Converts an observable series into its table form.
pub fn series_table(series: &ObservableSeries) -> Table {
    let mut table = Table::new("series", series_columns());
    for point in &series.points {
        let mut row = Vec::with_capacity(table.columns.len());
        row.push(Some(point.time_s));
        for (_, accessor) in ObservablePoint::COLUMNS.iter() {
            let est = accessor(point);
            row.push(est.value);
            row.push(est.se);
        }
        table.push_row(row);
    }
    table
}

/// Writes the observable series; rejects an empty series.
pub fn write_series(path: &Path, series: &ObservableSeries) -> Result<()> {
    ensure!(!series.points.is_empty(), "series has no points");
    write_table(path, &series_table(series))
}

/// Reads a series CSV produced by [`write_series`].
pub fn read_series(path: &Path) -> Result<Table> {
    read_table(path, "series")
}

/// Writes `manifest.txt`: `key = value` lines followed by a `[files]`
/// section of `sha256 name` pairs.
pub fn write_manifest(
    path: &Path,
    entries: &[(String, String)],
    files: &[(String, String)],
) -> Result<()> {
    let mut out = String::from("# run manifest\n");
    for (key, value) in entries {
        out.push_str(&format!("{key} = {value}\n"));
    }
    out.push_str("\n[files]\n");
    for (name, digest) in files {
        out.push_str(&format!("{digest}  {name}\n"));
    }
    fs::write(path, out).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// Hex SHA-256 of a file's bytes.
pub fn file_sha256(path: &Path) -> Result<String> {
    let bytes =
        fs::read(path).with_context(|| format!("hashing {}", path.display()))?;
    let mut hasher = Sha256::new();
    hasher.update(&bytes);
    Ok(hex::encode(hasher.finalize()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use pendular_core::observables::{Estimate, ObservablePoint, ObservableSeries};
    use tempfile::tempdir;

    fn one_point_series() -> ObservableSeries {
        let mut point = ObservablePoint {
            time_s: 1.25e-6,
            ..ObservablePoint::default()
        };
        point.mean_x = Estimate {
            value: Some(3.14159265358979e-14),
            se: Some(2.5e-16),
        };
        point.v_xa = Estimate {
            value: Some(1.0),
            se: None,
        };
        ObservableSeries {
            points: vec![point],
            hermitian_imag_max: 0.0,
            completed: 10,
            diverged: 0,
            degraded: false,
        }
    }

    #[test]
    fn series_round_trips_to_identical_values() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("series.csv");
        let series = one_point_series();
        write_series(&path, &series).unwrap();
        let table = read_series(&path).unwrap();
        assert_eq!(table.columns, series_columns());
        assert_eq!(table.rows.len(), 1);
        let row = &table.rows[0];
        let mean_x = row[table.column("mean_x").unwrap()].unwrap();
        // Identical after the writer's own rounding.
        assert_eq!(format_value(mean_x), format_value(3.14159265358979e-14));
        assert!((mean_x - 3.14159265358979e-14).abs() < 1e-25);
        assert_eq!(row[table.column("fano").unwrap()], None);
        assert_eq!(row[table.column("v_xa").unwrap()], Some(1.0));
    }

    #[test]
    fn column_count_is_one_plus_twice_observables() {
        assert_eq!(series_columns().len(), 1 + 2 * ObservablePoint::COLUMNS.len());
        // Observables appear in sorted order, each followed by its _se.
        let cols = series_columns();
        for pair in cols[1..].chunks(2) {
            assert_eq!(pair[1], format!("{}_se", pair[0]));
        }
    }

    #[test]
    fn empty_series_is_rejected() {
        let dir = tempdir().unwrap();
        let series = ObservableSeries {
            points: vec![],
            hermitian_imag_max: 0.0,
            completed: 0,
            diverged: 0,
            degraded: false,
        };
        assert!(write_series(&dir.path().join("x.csv"), &series).is_err());
    }

    #[test]
    fn reader_rejects_unknown_versions_and_schemas() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("series.csv");
        write_series(&path, &one_point_series()).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let bumped = text.replace("# schema series 1", "# schema series 2");
        std::fs::write(&path, bumped).unwrap();
        let err = read_series(&path).unwrap_err().to_string();
        assert!(err.contains("unsupported schema version"), "{err}");
        let renamed = text.replace("# schema series 1", "# schema spectra 1");
        std::fs::write(&path, renamed).unwrap();
        let err = read_series(&path).unwrap_err().to_string();
        assert!(err.contains("spectra"), "{err}");
    }

    #[test]
    fn writes_are_byte_identical_across_calls() {
        let dir = tempdir().unwrap();
        let a = dir.path().join("a.csv");
        let b = dir.path().join("b.csv");
        let series = one_point_series();
        write_series(&a, &series).unwrap();
        write_series(&b, &series).unwrap();
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
        assert_eq!(file_sha256(&a).unwrap(), file_sha256(&b).unwrap());
        // LF endings only.
        let text = std::fs::read_to_string(&a).unwrap();
        assert!(!text.contains('\r'));
    }

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(format_value(1.0 / 3.0), "3.33333333333e-1");
        assert_eq!(format_value(0.0), "0.00000000000e0");
        assert_eq!(format_value(-2.5e-16), "-2.50000000000e-16");
    }
}
