use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use mvcl_core::BenchmarkReport;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedRow {
    pub label: String,
    pub mfetch_mean: f64,
    pub cmc_mean: f64,
    /// `mfetch_mean − cmc_mean`.
    pub diff: f64,
}

pub fn report_csv(report: &BenchmarkReport) -> String {
    let mut out = String::from("label,mean_acc,std_acc\n");
    for r in &report.rows {
        writeln!(out, "{},{},{}", r.label, r.mean, r.std).unwrap();
    }
    out
}

pub fn paired(mfetch: &BenchmarkReport, cmc: &BenchmarkReport) -> Vec<PairedRow> {
    mfetch
        .rows
        .iter()
        .filter_map(|a| {
            cmc.row(&a.label).map(|b| PairedRow { label: a.label.clone(), mfetch_mean: a.mean, cmc_mean: b.mean, diff: a.mean - b.mean })
        })
        .collect()
}

pub fn paired_csv(rows: &[PairedRow]) -> String {
    let mut out = String::from("label,mfetch_mean_acc,cmc_mean_acc,paired_diff\n");
    for r in rows {
        writeln!(out, "{},{},{},{}", r.label, r.mfetch_mean, r.cmc_mean, r.diff).unwrap();
    }
    out
}

/// Human-readable table, one row per view or strategy.
pub fn format_table(report: &BenchmarkReport) -> String {
    let mut out = format!("{} (M = {}, {} repeats)\n", report.label, report.per_class, report.repeats);
    for r in &report.rows {
        writeln!(out, "{:<8} {:>7.2} ± {:<6.2} (d = {})", r.label, r.mean, r.std, r.best_d).unwrap();
    }
    out
}

/// `report.csv` → `report.<suffix>`.
pub fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{}.{}", stem, suffix))
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Writes `out` (CSV) and its JSON sibling; with a baseline also the
/// baseline's CSV/JSON and the paired differences.
pub fn write_reports(out: &Path, report: &BenchmarkReport, baseline: Option<&BenchmarkReport>) -> Result<()> {
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    write(out, &report_csv(report))?;
    io::write_json(&sibling(out, "json"), report)?;
    if let Some(cmc) = baseline {
        write(&sibling(out, "cmc.csv"), &report_csv(cmc))?;
        io::write_json(&sibling(out, "cmc.json"), cmc)?;
        write(&sibling(out, "paired.csv"), &paired_csv(&paired(report, cmc)))?;
    }
    Ok(())
}
