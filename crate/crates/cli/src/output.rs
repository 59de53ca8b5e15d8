//! Result files of a run.
//!
//! ```text
//! <out>/report.jsonl        one ScalingReport per line
//! <out>/summary.txt         verdict table
//! <out>/samples/N=<n>.csv   replica,N,value,statistic
//! <out>/calibration.csv     ℓ̂* table, written by `rtrw calibrate`
//! ```
//!
//! A run records its ℓ̂* table inside the report.

use std::fs;
use std::fmt::Write as _;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use rtrw_core::verify::{CalibrationRow, ScalingReport};
use serde::Serialize;

use crate::calibration::write_csv;

pub const REPORT_FILE: &str = "report.jsonl";
pub const SUMMARY_FILE: &str = "summary.txt";
pub const CALIBRATION_FILE: &str = "calibration.csv";
pub const SAMPLES_DIR: &str = "samples";

#[derive(Debug, thiserror::Error)]
pub enum OutputError {
    #[error("{0} already exists; pass --overwrite to replace it")]
    Exists(PathBuf),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot write {path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> OutputError + '_ {
    move |source| OutputError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Files written by `rtrw run`.
pub const RESULT_FILES: [&str; 3] = [REPORT_FILE, SUMMARY_FILE, SAMPLES_DIR];

/// Fails if any of `names` exists under `out`.
pub fn ensure_absent(out: &Path, names: &[&str]) -> Result<(), OutputError> {
    match names.iter().map(|n| out.join(n)).find(|p| p.exists()) {
        Some(path) => Err(OutputError::Exists(path)),
        None => Ok(()),
    }
}

/// Refuses to touch existing results unless `overwrite` is set, in which
/// case they are removed first.
pub fn prepare(out: &Path, names: &[&str], overwrite: bool) -> Result<(), OutputError> {
    for name in names {
        let path = out.join(name);
        if !path.exists() {
            continue;
        }
        if !overwrite {
            return Err(OutputError::Exists(path));
        }
        if path.is_dir() {
            fs::remove_dir_all(&path).map_err(io_err(&path))?;
        } else {
            fs::remove_file(&path).map_err(io_err(&path))?;
        }
    }
    fs::create_dir_all(out).map_err(io_err(out))
}

fn write_file(path: &Path, contents: &[u8]) -> Result<(), OutputError> {
    fs::write(path, contents).map_err(io_err(path))
}

pub fn write_calibration(path: &Path, rows: &[CalibrationRow]) -> Result<(), OutputError> {
    let file = fs::File::create(path).map_err(io_err(path))?;
    write_csv(rows, BufWriter::new(file)).map_err(|source| OutputError::Csv {
        path: path.to_path_buf(),
        source,
    })
}

#[derive(Serialize)]
struct SampleRow<'a> {
    replica: usize,
    #[serde(rename = "N")]
    n: u64,
    value: f64,
    statistic: &'a str,
}

fn write_samples(dir: &Path, report: &ScalingReport) -> Result<(), OutputError> {
    let mut scales: Vec<u64> = report.samples.iter().map(|s| s.n).collect();
    scales.dedup();
    if scales.is_empty() {
        return Ok(());
    }
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    for n in scales {
        let path = dir.join(format!("N={n}.csv"));
        let csv_err = |source| OutputError::Csv {
            path: path.clone(),
            source,
        };
        let mut w = csv::Writer::from_path(&path).map_err(csv_err)?;
        for series in report.samples.iter().filter(|s| s.n == n) {
            for (replica, &value) in series.values.iter().enumerate() {
                w.serialize(SampleRow {
                    replica,
                    n,
                    value,
                    statistic: &series.statistic,
                })
                .map_err(csv_err)?;
            }
        }
        w.flush().map_err(io_err(&path))?;
    }
    Ok(())
}

/// Writes every result file of `report` into `out`.
pub fn write_report(out: &Path, report: &ScalingReport, overwrite: bool) -> Result<(), OutputError> {
    prepare(out, &RESULT_FILES, overwrite)?;
    let mut line = report.to_json_line();
    line.push('\n');
    write_file(&out.join(REPORT_FILE), line.as_bytes())?;
    write_file(&out.join(SUMMARY_FILE), report.summary_text().as_bytes())?;
    write_samples(&out.join(SAMPLES_DIR), report)
}

/// Plain-text rendering of a calibration table.
pub fn calibration_table(rows: &[CalibrationRow]) -> String {
    let mut s = format!(
        "{:>10} {:>10} {:>12} {:>12} {:>12}\n",
        "n", "r_n", "s.e.", "ell*(n)", "s.e."
    );
    for r in rows {
        let _ = writeln!(
            s,
            "{:>10} {:>10.6} {:>12.3e} {:>12.6} {:>12.3e}",
            r.n, r.escape, r.escape_std_error, r.ell_star, r.ell_star_std_error
        );
    }
    s
}
