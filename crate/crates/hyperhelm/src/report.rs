//! Shared report schema and CSV artifact writers.
//!
//! Every experiment emits one JSON report (stable key order: struct field
//! order for objects, sorted keys for the config echo) plus CSV artifacts
//! with a mandatory header row, comma separators and '.' decimals.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};

/// One verdict in the shared report schema.
#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub check: String,
    pub pass: bool,
    pub worst_location: f64,
    pub worst_value: f64,
    pub tolerance: f64,
}

impl CheckResult {
    pub fn new(
        check: &str,
        pass: bool,
        worst_value: f64,
        tolerance: f64,
        worst_location: f64,
    ) -> Self {
        CheckResult {
            check: check.to_string(),
            pass,
            worst_location,
            worst_value,
            tolerance,
        }
    }

    /// Check that a measured value stays at or below a tolerance.
    pub fn le(check: &str, value: f64, tolerance: f64, location: f64) -> Self {
        Self::new(check, value <= tolerance, value, tolerance, location)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub experiment: String,
    pub config: BTreeMap<String, String>,
    pub checks: Vec<CheckResult>,
    pub artifacts: Vec<String>,
    pub wall_clock_s: f64,
    pub seed: u64,
}

impl Report {
    pub fn new(experiment: &str, config: BTreeMap<String, String>, seed: u64) -> Self {
        Report {
            experiment: experiment.to_string(),
            config,
            checks: Vec::new(),
            artifacts: Vec::new(),
            wall_clock_s: 0.0,
            seed,
        }
    }

    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    /// Exit code contract: 0 all-pass, 1 check failure (errors map to 2 at
    /// the call site).
    pub fn exit_code(&self) -> i32 {
        if self.all_pass() {
            0
        } else {
            1
        }
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        let mut w = std::io::BufWriter::new(file);
        serde_json::to_writer_pretty(&mut w, self)
            .map_err(|e| Error::Solver(format!("report serialization: {e}")))?;
        w.write_all(b"\n")?;
        Ok(())
    }
}

/// Write aligned numeric columns as CSV.  Floats use the shortest
/// round-trip representation, so identical runs produce identical bytes.
pub fn write_csv(path: &Path, header: &[&str], columns: &[&[f64]]) -> Result<()> {
    assert_eq!(header.len(), columns.len());
    let rows = columns.first().map(|c| c.len()).unwrap_or(0);
    assert!(columns.iter().all(|c| c.len() == rows));
    let file = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(file);
    writeln!(w, "{}", header.join(","))?;
    for i in 0..rows {
        let mut line = String::new();
        for (j, col) in columns.iter().enumerate() {
            if j > 0 {
                line.push(',');
            }
            line.push_str(&format_float(col[i]));
        }
        writeln!(w, "{line}")?;
    }
    Ok(())
}

fn format_float(v: f64) -> String {
    if v == v.trunc() && v.abs() < 1e15 {
        // keep integral values readable but unambiguous
        format!("{v:.1}")
    } else {
        format!("{v}")
    }
}

/// Read a CSV produced by `write_csv` back into (header, columns).
pub fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header: Vec<String> = lines
        .next()
        .ok_or_else(|| Error::MissingArtifact(format!("{path:?}: empty file")))?
        .split(',')
        .map(|s| s.trim().to_string())
        .collect();
    let mut columns = vec![Vec::new(); header.len()];
    for (lineno, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != header.len() {
            return Err(Error::config(
                lineno + 2,
                format!("expected {} fields, found {}", header.len(), fields.len()),
            ));
        }
        for (j, field) in fields.iter().enumerate() {
            let v: f64 = field.trim().parse().map_err(|_| {
                Error::config(lineno + 2, format!("not a number: {field:?}"))
            })?;
            columns[j].push(v);
        }
    }
    Ok((header, columns))
}

/// Extract named columns from a CSV artifact into a new aligned CSV
/// (plot-ready, no rendering here).
pub fn emit_plot_data(artifact: &Path, series: &[&str], out: &Path) -> Result<PathBuf> {
    if !artifact.exists() {
        return Err(Error::MissingArtifact(format!("{}", artifact.display())));
    }
    let (header, columns) = read_csv(artifact)?;
    let mut selected: Vec<&[f64]> = Vec::new();
    for name in series {
        let idx = header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingArtifact(format!("column {name:?} not in {header:?}")))?;
        selected.push(&columns[idx]);
    }
    write_csv(out, series, &selected)?;
    Ok(out.to_path_buf())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_roundtrip_and_selection() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("trace.csv");
        let r = [0.0, 0.5, 1.0];
        let u = [1.0, 0.25, -0.125];
        let du = [0.0, -1.5, 0.75];
        write_csv(&path, &["r", "u", "du"], &[&r, &u, &du]).unwrap();
        let (header, cols) = read_csv(&path).unwrap();
        assert_eq!(header, vec!["r", "u", "du"]);
        assert_eq!(cols[1], u.to_vec());

        let out = dir.path().join("plot.csv");
        emit_plot_data(&path, &["r", "du"], &out).unwrap();
        let (h2, c2) = read_csv(&out).unwrap();
        assert_eq!(h2, vec!["r", "du"]);
        assert_eq!(c2[1], du.to_vec());

        assert!(matches!(
            emit_plot_data(&path, &["r", "nope"], &out),
            Err(Error::MissingArtifact(_))
        ));
        assert!(matches!(
            emit_plot_data(Path::new("/definitely/missing.csv"), &["r"], &out),
            Err(Error::MissingArtifact(_))
        ));
    }

    #[test]
    fn report_json_has_stable_key_order() {
        let mut cfg = BTreeMap::new();
        cfg.insert("geometry".to_string(), "hyperbolic".to_string());
        cfg.insert("dim".to_string(), "3".to_string());
        let mut rep = Report::new("solve", cfg, 7);
        rep.checks.push(CheckResult::le("residual", 1e-9, 1e-7, 2.5));
        let json = serde_json::to_string(&rep).unwrap();
        let exp_pos = json.find("\"experiment\"").unwrap();
        let cfg_pos = json.find("\"config\"").unwrap();
        let checks_pos = json.find("\"checks\"").unwrap();
        assert!(exp_pos < cfg_pos && cfg_pos < checks_pos);
        assert!(rep.all_pass());
        assert_eq!(rep.exit_code(), 0);
    }
}
