//! Summaries of a finished results directory.

use std::collections::HashMap;
use std::path::Path;

use crate::config::ExperimentKind;
use crate::manifest::RunManifest;
use crate::output::{read_csv, write_atomic, Cell, Table};
use crate::CliError;

pub const SUMMARY_FILE: &str = "summary.csv";

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub manifest: RunManifest,
    pub summary: Table,
}

impl Report {
    pub fn render(&self) -> String {
        let m = &self.manifest;
        let mut s = format!(
            "{} run, status {:?}, seed {}, config {}\n\n",
            m.kind,
            m.status,
            m.seed,
            &m.config_hash[..12.min(m.config_hash.len())]
        );
        s.push_str(&render_table(&self.summary));
        for t in m.tasks.iter().filter(|t| t.detail.is_some()) {
            s.push_str(&format!(
                "\n{}: {}",
                t.name,
                t.detail.as_deref().unwrap_or_default()
            ));
        }
        if m.tasks.iter().any(|t| t.detail.is_some()) {
            s.push('\n');
        }
        s
    }
}

fn render_table(t: &Table) -> String {
    let cells: Vec<Vec<String>> = t
        .rows
        .iter()
        .map(|r| r.iter().map(short).collect())
        .collect();
    let widths: Vec<usize> = (0..t.header.len())
        .map(|j| {
            cells
                .iter()
                .map(|r| r[j].len())
                .chain([t.header[j].len()])
                .max()
                .unwrap_or(0)
        })
        .collect();
    let line = |row: &[String]| {
        row.iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:>w$}"))
            .collect::<Vec<_>>()
            .join("  ")
            .trim_end()
            .to_string()
            + "\n"
    };
    let mut s = line(&t.header);
    for r in &cells {
        s.push_str(&line(r));
    }
    s
}

/// Compact rendering for the text table; the CSV keeps full precision.
fn short(c: &Cell) -> String {
    match c {
        Cell::Real(x) if x.is_finite() && x.abs() >= 1e-3 && x.abs() < 1e6 => format!("{x:.6}"),
        Cell::Real(x) if *x == 0.0 => "0".into(),
        Cell::Real(x) if x.is_finite() => format!("{x:.4e}"),
        other => other.render(),
    }
}

struct Csv {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Csv {
    fn load(dir: &Path, name: &str) -> Result<Self, CliError> {
        let (header, rows) = read_csv(&dir.join(format!("{name}.csv")))?;
        Ok(Self { header, rows })
    }

    fn col(&self, name: &str) -> Result<usize, CliError> {
        self.header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::Validation(format!("result table lacks column {name}")))
    }

    fn select(&self, columns: &[&str]) -> Result<Vec<Vec<Cell>>, CliError> {
        let idx = columns
            .iter()
            .map(|c| self.col(c))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(self
            .rows
            .iter()
            .map(|r| idx.iter().map(|&i| parse_cell(&r[i])).collect())
            .collect())
    }
}

fn parse_cell(s: &str) -> Cell {
    if let Ok(i) = s.parse::<i64>() {
        Cell::Int(i)
    } else if let Ok(b) = s.parse::<bool>() {
        Cell::Bool(b)
    } else if s.contains(['e', '.']) || s == "NaN" || s.ends_with("inf") {
        s.parse::<f64>()
            .map(Cell::Real)
            .unwrap_or_else(|_| Cell::Text(s.into()))
    } else {
        Cell::Text(s.into())
    }
}

const MSD_COLUMNS: [&str; 6] = [
    "beta",
    "n",
    "msd_over_n",
    "msd_over_n_se",
    "msd_over_n2",
    "msd_over_n2_se",
];
const FIT_COLUMNS: [&str; 5] = ["gamma_hat", "gamma_se", "ci_low", "ci_high", "regime"];

/// MSD rows joined with the fit of their inverse temperature.
fn msd_with_fit(dir: &Path, with_fit: bool) -> Result<Table, CliError> {
    let msd = Csv::load(dir, "msd")?;
    let mut header: Vec<&str> = MSD_COLUMNS.to_vec();
    let rows = msd.select(&MSD_COLUMNS)?;
    let beta_col = msd.col("beta")?;
    let fits: HashMap<String, Vec<Cell>> = if with_fit {
        header.extend(FIT_COLUMNS);
        let fit = Csv::load(dir, "fit")?;
        let b = fit.col("beta")?;
        fit.rows
            .iter()
            .map(|r| r[b].clone())
            .zip(fit.select(&FIT_COLUMNS)?)
            .collect()
    } else {
        HashMap::new()
    };
    let mut t = Table::new("summary", &header);
    for (raw, mut row) in msd.rows.iter().zip(rows) {
        if with_fit {
            let fit = fits.get(&raw[beta_col]).ok_or_else(|| {
                CliError::Validation(format!("no fit for beta {}", raw[beta_col]))
            })?;
            row.extend(fit.iter().cloned());
        }
        t.push(row);
    }
    Ok(t)
}

fn selected(dir: &Path, file: &str, columns: &[&str]) -> Result<Table, CliError> {
    let mut t = Table::new("summary", columns);
    for row in Csv::load(dir, file)?.select(columns)? {
        t.push(row);
    }
    Ok(t)
}

fn kind_of(manifest: &RunManifest) -> Result<ExperimentKind, CliError> {
    serde_json::from_value(serde_json::Value::String(manifest.kind.clone()))
        .map_err(|_| CliError::Validation(format!("unknown experiment kind {}", manifest.kind)))
}

/// Builds the summary of `dir` and writes it to `summary.csv` there.
pub fn report(dir: &Path) -> Result<Report, CliError> {
    let manifest = RunManifest::read(dir)?;
    let summary = match kind_of(&manifest)? {
        ExperimentKind::Enumerate => selected(
            dir,
            "enumerate",
            &["beta", "n", "ln_z", "msd", "msd_over_n", "msd_over_n2"],
        )?,
        ExperimentKind::MsdScan => msd_with_fit(dir, false)?,
        ExperimentKind::GammaFit | ExperimentKind::BallisticCheck => msd_with_fit(dir, true)?,
        ExperimentKind::CltTest => selected(
            dir,
            "clt",
            &[
                "beta",
                "n",
                "hypotheses",
                "ks_statistic",
                "p_value",
                "target_variance",
                "sample_variance",
                "target_source",
            ],
        )?,
        ExperimentKind::PressureScan => selected(
            dir,
            "curvature",
            &[
                "beta",
                "n",
                "psi_second_at_zero",
                "min_second_difference",
                "convex",
            ],
        )?,
        ExperimentKind::OracleSuite => selected(
            dir,
            "oracle",
            &["check", "beta", "n", "error", "tolerance", "pass"],
        )?,
    };
    write_atomic(
        &dir.join(SUMMARY_FILE),
        &summary.to_csv(&manifest.config_hash)?,
    )?;
    Ok(Report { manifest, summary })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cells_parse_back() {
        assert_eq!(parse_cell("12"), Cell::Int(12));
        assert_eq!(parse_cell("2.5000000000000000e-1"), Cell::Real(0.25));
        assert!(matches!(parse_cell("NaN"), Cell::Real(x) if x.is_nan()));
        assert_eq!(parse_cell("true"), Cell::Bool(true));
        assert_eq!(parse_cell("ballistic"), Cell::Text("ballistic".into()));
        assert_eq!(parse_cell("inf"), Cell::Real(f64::INFINITY));
    }

    #[test]
    fn empty_directory_is_a_validation_error() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(report(dir.path()), Err(CliError::Validation(_))));
    }

    #[test]
    fn corrupt_manifest_is_a_validation_error() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("manifest.json"), "{ not json").unwrap();
        assert!(matches!(report(dir.path()), Err(CliError::Validation(_))));
    }

    #[test]
    fn text_table_aligns() {
        let mut t = Table::new("x", &["a", "long_name"]);
        t.push(vec![1usize.into(), 0.5.into()]);
        assert_eq!(render_table(&t), "a  long_name\n1   0.500000\n");
    }
}
