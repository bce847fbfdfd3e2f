//! Result tables and atomic file writes.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::CliError;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Real(f64),
    Int(i64),
    Text(String),
    Bool(bool),
}

impl Cell {
    /// Reals carry 17 significant digits so they round-trip exactly.
    pub fn render(&self) -> String {
        match self {
            Cell::Real(x) => format_real(*x),
            Cell::Int(i) => i.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
        }
    }
}

pub fn format_real(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Real(x)
    }
}

impl From<usize> for Cell {
    fn from(n: usize) -> Self {
        Cell::Int(n as i64)
    }
}

impl From<u64> for Cell {
    fn from(n: u64) -> Self {
        Cell::Int(n as i64)
    }
}

impl From<i64> for Cell {
    fn from(n: i64) -> Self {
        Cell::Int(n)
    }
}

impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Cell::Bool(b)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Self {
            name: name.to_string(),
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(
            row.len(),
            self.header.len(),
            "row width in table {}",
            self.name
        );
        self.rows.push(row);
    }

    /// Comment line with the config hash, header, then rows; LF endings.
    pub fn to_csv(&self, config_hash: &str) -> Result<Vec<u8>, CliError> {
        let mut buf = format!("# config_hash={config_hash}\n").into_bytes();
        {
            let mut w = csv::WriterBuilder::new()
                .terminator(csv::Terminator::Any(b'\n'))
                .from_writer(&mut buf);
            w.write_record(&self.header).map_err(internal)?;
            for row in &self.rows {
                w.write_record(row.iter().map(Cell::render))
                    .map_err(internal)?;
            }
            w.flush().map_err(internal)?;
        }
        Ok(buf)
    }
}

fn internal(e: impl std::fmt::Display) -> CliError {
    CliError::Internal(e.to_string())
}

/// Writes `bytes` to a sibling temp file and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let name = path
        .file_name()
        .ok_or_else(|| internal(format!("no file name in {}", path.display())))?;
    let tmp = path.with_file_name(format!(".{}.tmp", name.to_string_lossy()));
    let mut f = fs::File::create(&tmp).map_err(|e| internal(format!("{}: {e}", tmp.display())))?;
    f.write_all(bytes).map_err(internal)?;
    f.sync_all().map_err(internal)?;
    drop(f);
    fs::rename(&tmp, path).map_err(|e| internal(format!("{}: {e}", path.display())))
}

/// Reads a result CSV back as header plus string rows.
pub fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>), CliError> {
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    let header = r
        .headers()
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?
        .iter()
        .map(str::to_string)
        .collect();
    let rows = r
        .records()
        .map(|rec| {
            rec.map(|r| r.iter().map(str::to_string).collect())
                .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
        })
        .collect::<Result<_, _>>()?;
    Ok((header, rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reals_round_trip_with_seventeen_digits() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.0] {
            let s = format_real(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
            let digits = s
                .split('e')
                .next()
                .unwrap()
                .chars()
                .filter(char::is_ascii_digit)
                .count();
            assert_eq!(digits, 17, "{s}");
        }
        assert_eq!(format_real(f64::NAN), "NaN");
    }

    #[test]
    fn csv_layout() {
        let mut t = Table::new("t", &["n", "x", "label"]);
        t.push(vec![3usize.into(), 0.5.into(), "a,b".into()]);
        let bytes = t.to_csv("abc").unwrap();
        let text = String::from_utf8(bytes).unwrap();
        assert_eq!(
            text,
            "# config_hash=abc\nn,x,label\n3,5.0000000000000000e-1,\"a,b\"\n"
        );
    }

    #[test]
    fn atomic_write_and_read_back() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        let mut t = Table::new("t", &["a", "b"]);
        t.push(vec![1usize.into(), true.into()]);
        write_atomic(&path, &t.to_csv("h").unwrap()).unwrap();
        write_atomic(&path, &t.to_csv("h").unwrap()).unwrap();
        let (header, rows) = read_csv(&path).unwrap();
        assert_eq!(header, ["a", "b"]);
        assert_eq!(rows, [["1", "true"]]);
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
