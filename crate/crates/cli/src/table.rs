//! Numeric CSV tables: writing with round-trip precision, parsing, and
//! column comparison on a shared time grid.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::CliError;

/// `{:.16e}` keeps 17 significant digits, enough to round-trip an `f64`.
pub fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

/// A header row followed by rows of numbers; the first column is the
/// abscissa (time or position).
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new<S: AsRef<str>>(columns: &[S]) -> Self {
        Self { columns: columns.iter().map(|c| c.as_ref().to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        assert_eq!(row.len(), self.columns.len(), "row width does not match header");
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column_index(&self, name: &str) -> Result<usize, CliError> {
        self.columns.iter().position(|c| c == name).ok_or_else(|| CliError::ColumnMissing(name.to_string()))
    }

    pub fn column(&self, name: &str) -> Result<Vec<f64>, CliError> {
        let k = self.column_index(name)?;
        Ok(self.rows.iter().map(|r| r[k]).collect())
    }

    pub fn abscissa(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r[0]).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row.iter().map(|&v| fmt_float(v))).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii output")
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        let mut f = fs::File::create(path).map_err(|e| CliError::io(path, e))?;
        f.write_all(self.to_csv().as_bytes()).map_err(|e| CliError::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        parse_table(&text)
    }
}

/// Parses a CSV table with a header and finite numeric fields.
pub fn parse_table(text: &str) -> Result<Table, CliError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| table_error(&e, 1))?.clone();
    if header.is_empty() || header.iter().any(str::is_empty) {
        return Err(CliError::Table { line: 1, message: "header has empty column names".into() });
    }
    let columns: Vec<String> = header.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| table_error(&e, 0))?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() != columns.len() {
            return Err(CliError::Table {
                line,
                message: format!("expected {} fields, found {}", columns.len(), record.len()),
            });
        }
        let row = record
            .iter()
            .zip(&columns)
            .map(|(field, name)| match field.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(CliError::Table { line, message: format!("column `{name}`: `{field}` is not a finite number") }),
            })
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(row);
    }
    Ok(Table { columns, rows })
}

fn table_error(e: &csv::Error, fallback_line: usize) -> CliError {
    let line = e.position().map_or(fallback_line, |p| p.line() as usize);
    CliError::Table { line, message: e.to_string() }
}

/// Difference of one column between two tables.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Comparison {
    pub column: String,
    pub rows: usize,
    pub max_abs: f64,
    /// Trapezoid rule for `∫|a − b|` over the abscissa.
    pub l1: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Abscissae must agree to `1e-12` relative.
pub fn compare_columns(a: &Table, b: &Table, column: &str, tolerance: f64) -> Result<Comparison, CliError> {
    let (ta, tb) = (a.abscissa(), b.abscissa());
    if ta.len() != tb.len() {
        return Err(CliError::GridMismatch(format!("{} rows against {} rows", ta.len(), tb.len())));
    }
    if let Some((k, (x, y))) =
        ta.iter().zip(&tb).enumerate().find(|(_, (x, y))| (*x - *y).abs() > 1e-12 * x.abs().max(y.abs()).max(1.0))
    {
        return Err(CliError::GridMismatch(format!("row {k}: {} = {x} against {y}", a.columns[0])));
    }
    let (va, vb) = (a.column(column)?, b.column(column)?);
    let diff: Vec<f64> = va.iter().zip(&vb).map(|(x, y)| (x - y).abs()).collect();
    let max_abs = diff.iter().copied().fold(0.0, f64::max);
    let l1 = ta.windows(2).zip(diff.windows(2)).map(|(t, d)| 0.5 * (t[1] - t[0]).abs() * (d[0] + d[1])).sum();
    Ok(Comparison { column: column.to_string(), rows: ta.len(), max_abs, l1, tolerance, pass: max_abs <= tolerance })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        // the written text parses back to the same bits
        #[test]
        fn csv_round_trip(rows in prop::collection::vec(prop::array::uniform3(prop::num::f64::NORMAL | prop::num::f64::ZERO), 0..20)) {
            let mut t = Table::new(&["t", "a", "b"]);
            for r in &rows {
                t.push(r.to_vec());
            }
            let back = parse_table(&t.to_csv()).unwrap();
            prop_assert_eq!(back.columns, t.columns);
            prop_assert_eq!(back.rows, t.rows);
        }

        #[test]
        fn parser_never_panics(text in "\\PC{0,200}") {
            let _ = parse_table(&text);
        }
    }

    fn sample() -> Table {
        let mut t = Table::new(&["t", "P1"]);
        for k in 0..=10 {
            let x = k as f64 / 10.0;
            t.push(vec![x, (x * 3.0).sin()]);
        }
        t
    }

    #[test]
    fn round_trip_is_exact() {
        let t = sample();
        let parsed = parse_table(&t.to_csv()).unwrap();
        assert_eq!(parsed, t);
        assert_eq!(fmt_float(0.1), "1.0000000000000001e-1");
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let e = parse_table("t,P1\n0,1\n0.5,abc\n").unwrap_err();
        assert!(matches!(e, CliError::Table { line: 3, .. }), "{e}");
        let e = parse_table("t,P1\n0,1,2\n").unwrap_err();
        assert!(matches!(e, CliError::Table { .. }), "{e}");
        assert!(parse_table("t,P1\n0,NaN\n").is_err());
        assert!(parse_table("t,\n").is_err());
    }

    #[test]
    fn compare_identical_and_shifted() {
        let a = sample();
        let c = compare_columns(&a, &a, "P1", 0.0).unwrap();
        assert_eq!((c.max_abs, c.l1, c.pass), (0.0, 0.0, true));
        let mut b = a.clone();
        for r in &mut b.rows {
            r[1] += 0.25;
        }
        let c = compare_columns(&a, &b, "P1", 0.1).unwrap();
        assert!((c.max_abs - 0.25).abs() < 1e-15 && (c.l1 - 0.25).abs() < 1e-14 && !c.pass);
    }

    #[test]
    fn compare_rejects_mismatched_grids() {
        let a = sample();
        let mut b = a.clone();
        b.rows[3][0] += 1e-6;
        assert!(matches!(compare_columns(&a, &b, "P1", 1.0), Err(CliError::GridMismatch(_))));
        b.rows.pop();
        assert!(matches!(compare_columns(&a, &b, "P1", 1.0), Err(CliError::GridMismatch(_))));
        assert!(matches!(compare_columns(&a, &a, "P9", 1.0), Err(CliError::ColumnMissing(_))));
    }
}
