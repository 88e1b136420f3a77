//! Result files: the counting CSV, JSON documents and whitespace-separated
//! plot data.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::counting::ScanResult;
use crate::error::{Error, Result};
use crate::interference::{BeatCurve, BeatPoint};

/// One CSV row; column order is part of the file format.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct CsvRow {
    setting: f64,
    singles_1: u64,
    singles_2: u64,
    coincidences: u64,
    accidentals_est: f64,
    n_gates: u64,
}

pub const CSV_COLUMNS: [&str; 6] = ["setting", "singles_1", "singles_2", "coincidences", "accidentals_est", "n_gates"];

pub fn write_scan_csv<W: Write>(out: W, results: &[ScanResult]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in results {
        w.serialize(CsvRow {
            setting: r.setting,
            singles_1: r.singles_1,
            singles_2: r.singles_2,
            coincidences: r.coincidences,
            accidentals_est: r.accidentals_est,
            n_gates: r.n_gates,
        })?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_scan_csv(path: &Path, results: &[ScanResult]) -> Result<()> {
    write_scan_csv(BufWriter::new(File::create(path)?), results)
}

pub fn read_scan_csv(path: &Path) -> Result<Vec<ScanResult>> {
    let mut r = csv::Reader::from_path(path)?;
    let header: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
    if header != CSV_COLUMNS {
        return Err(Error::Config(format!(
            "{} has columns {header:?}, expected {CSV_COLUMNS:?}",
            path.display()
        )));
    }
    r.deserialize::<CsvRow>()
        .map(|row| {
            let row = row?;
            Ok(ScanResult {
                setting: row.setting,
                singles_1: row.singles_1,
                singles_2: row.singles_2,
                coincidences: row.coincidences,
                accidentals_est: row.accidentals_est,
                n_gates: row.n_gates,
                active_gates_1: row.n_gates,
                active_gates_2: row.n_gates,
            })
        })
        .collect()
}

/// Coincidence counts against the scan setting, for stage scans read back
/// from CSV.
pub fn coincidence_curve(results: &[ScanResult]) -> Result<BeatCurve> {
    BeatCurve::new(
        results
            .iter()
            .map(|r| BeatPoint {
                delta_l_mm: r.setting,
                p2: r.coincidences as f64,
            })
            .collect(),
    )
}

pub fn save_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn load_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    Ok(serde_json::from_reader(std::io::BufReader::new(File::open(path)?))?)
}

/// Analytic expectation next to a simulated scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Overlay {
    /// What the scan varied and in which unit.
    pub setting_label: String,
    pub points: Vec<OverlayPoint>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OverlayPoint {
    pub setting: f64,
    /// Relative coincidence probability of the pair state alone; for stage
    /// scans this is the broadband beat law.
    pub relative: f64,
    /// Expected coincidences including multi-pair, Raman and dark counts,
    /// without dead time.
    pub expected_coincidences: f64,
    pub expected_accidentals: f64,
}

/// Path next to `path` with its extension replaced.
pub fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}{suffix}"))
}

/// Whitespace-separated columns with a `#` header line.
pub fn plot_table(header: &[&str], rows: &[Vec<f64>]) -> String {
    let mut s = format!("# {}\n", header.join(" "));
    for row in rows {
        let line: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
        let _ = writeln!(s, "{}", line.join(" "));
    }
    s
}

pub fn save_plot_table(path: &Path, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    std::fs::write(path, plot_table(header, rows))?;
    Ok(())
}

/// Rows of `setting, coincidences, accidentals_est, true, true_std, singles_1, singles_2`.
pub fn scan_rows(results: &[ScanResult]) -> Vec<Vec<f64>> {
    results
        .iter()
        .map(|r| {
            vec![
                r.setting,
                r.coincidences as f64,
                r.accidentals_est,
                r.true_coincidences(),
                r.true_coincidences_std(),
                r.singles_1 as f64,
                r.singles_2 as f64,
            ]
        })
        .collect()
}

pub const SCAN_ROW_HEADER: [&str; 7] = [
    "setting",
    "coincidences",
    "accidentals_est",
    "true_coincidences",
    "true_std",
    "singles_1",
    "singles_2",
];
