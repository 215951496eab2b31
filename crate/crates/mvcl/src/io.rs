//! CSV matrices and label files. On disk a matrix has one row per sample and
//! one column per feature; in memory views are features × samples.

use std::fs;
use std::path::{Path, PathBuf};

use mvcl_core::{Matrix, MultiViewDataset, SynthSpec};

use crate::error::{Error, Result};

pub const LABELS_FILE: &str = "labels.csv";
pub const SPEC_FILE: &str = "spec.json";

pub fn view_file(m: usize) -> String {
    format!("view{}.csv", m + 1)
}

fn parse_err(path: &Path, line: u64, msg: impl Into<String>) -> Error {
    Error::Parse { path: path.to_path_buf(), line, msg: msg.into() }
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        kind => parse_err(path, line, format!("{:?}", kind)),
    }
}

/// Reads a samples × features CSV and returns it as features × samples.
pub fn read_matrix(path: &Path, header: bool) -> Result<Matrix> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new().has_headers(header).trim(csv::Trim::All).from_reader(file);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let line = rec.position().map_or(0, |p| p.line());
        let row = rec
            .iter()
            .map(|cell| cell.parse::<f64>().map_err(|_| parse_err(path, line, format!("not a number: {:?}", cell))))
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    if rows.is_empty() || rows[0].is_empty() {
        return Err(mvcl_core::Error::EmptyInput(format!("{} has no data rows", path.display())).into());
    }
    let width = rows[0].len();
    Ok(Matrix::from_fn(width, rows.len(), |r, c| rows[c][r]))
}

/// One non-negative integer per line; blank lines are ignored.
pub fn read_labels(path: &Path) -> Result<Vec<usize>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let labels = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| l.trim().parse::<usize>().map_err(|_| parse_err(path, i as u64 + 1, format!("not a class id: {:?}", l))))
        .collect::<Result<Vec<_>>>()?;
    if labels.is_empty() {
        return Err(mvcl_core::Error::EmptyInput(format!("{} has no labels", path.display())).into());
    }
    Ok(labels)
}

pub fn load_views(paths: &[PathBuf], labels: Option<&Path>, header: bool) -> Result<MultiViewDataset> {
    let views = paths.iter().map(|p| read_matrix(p, header)).collect::<Result<Vec<_>>>()?;
    let labels = labels.map(read_labels).transpose()?;
    Ok(MultiViewDataset::new(views, labels)?)
}

/// Loads `view1.csv`, `view2.csv`, … and `labels.csv` from a directory.
pub fn load_dir(dir: &Path, header: bool) -> Result<MultiViewDataset> {
    fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let paths: Vec<PathBuf> = (0..).map(|m| dir.join(view_file(m))).take_while(|p| p.exists()).collect();
    let labels = dir.join(LABELS_FILE);
    load_views(&paths, labels.exists().then_some(labels.as_path()), header)
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Writes a features × samples matrix as samples × features CSV.
pub fn write_matrix(path: &Path, m: &Matrix) -> Result<()> {
    let mut out = String::new();
    for c in 0..m.cols() {
        let row: Vec<String> = m.col(c).iter().map(|x| x.to_string()).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    write_file(path, &out)
}

pub fn write_labels(path: &Path, labels: &[usize]) -> Result<()> {
    let out: String = labels.iter().map(|l| format!("{}\n", l)).collect();
    write_file(path, &out)
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Json { path: path.to_path_buf(), source: e })?;
    text.push('\n');
    write_file(path, &text)
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Json { path: path.to_path_buf(), source: e })
}

/// Per-view CSVs, `labels.csv` and the generating spec.
pub fn export_dataset(dir: &Path, ds: &MultiViewDataset, spec: Option<&SynthSpec>) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for (m, v) in ds.views().iter().enumerate() {
        write_matrix(&dir.join(view_file(m)), v)?;
    }
    if let Some(labels) = ds.labels() {
        write_labels(&dir.join(LABELS_FILE), labels)?;
    }
    if let Some(spec) = spec {
        write_json(&dir.join(SPEC_FILE), spec)?;
    }
    Ok(())
}
