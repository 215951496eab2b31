//! Trained model file. Every float is written with 17 significant digits so
//! a load reproduces the exact `f64`.

use std::path::Path;

use mvcl_core::{Matrix, PreprocessStats, ProjectionSet, RecoverySet, TrainConfig};
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;

use crate::error::{Error, Result};
use crate::io;

pub const MODEL_SCHEMA_VERSION: u32 = 1;

type Rows = Vec<Vec<f64>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub schema_version: u32,
    #[serde(rename = "V")]
    pub views: usize,
    pub d: usize,
    pub dims: Vec<usize>,
    /// Row-major `D_m × d` blocks.
    #[serde(rename = "P", serialize_with = "sig17_mats")]
    pub p: Vec<Rows>,
    /// Row-major `d × D_m` blocks.
    #[serde(rename = "F", serialize_with = "sig17_mats")]
    pub f: Vec<Rows>,
    #[serde(serialize_with = "sig17_stats")]
    pub preprocessing: PreprocessStats,
    pub config: TrainConfig,
}

fn raw(x: f64) -> Box<RawValue> {
    debug_assert!(x.is_finite());
    RawValue::from_string(format!("{:.16e}", x)).expect("exponent notation is valid JSON")
}

fn raw_rows(rows: &[Vec<f64>]) -> Vec<Vec<Box<RawValue>>> {
    rows.iter().map(|r| r.iter().copied().map(raw).collect()).collect()
}

fn sig17_mats<S: Serializer>(mats: &[Rows], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(mats.iter().map(|m| raw_rows(m)))
}

fn sig17_stats<S: Serializer>(stats: &PreprocessStats, s: S) -> std::result::Result<S::Ok, S::Error> {
    #[derive(Serialize)]
    struct Raw<'a> {
        flags: &'a mvcl_core::PreprocessFlags,
        means: Vec<Vec<Box<RawValue>>>,
        stds: Option<Vec<Vec<Box<RawValue>>>>,
    }
    Raw { flags: &stats.flags, means: raw_rows(&stats.means), stds: stats.stds.as_deref().map(raw_rows) }.serialize(s)
}

fn from_rows(rows: &Rows, what: &str) -> Result<Matrix> {
    Matrix::from_rows(rows).map_err(|e| Error::Config(format!("{}: {}", what, e)))
}

impl ModelFile {
    pub fn new(p: &ProjectionSet, f: &RecoverySet, stats: PreprocessStats, config: TrainConfig) -> Self {
        Self {
            schema_version: MODEL_SCHEMA_VERSION,
            views: p.mats().len(),
            d: p.d(),
            dims: p.mats().iter().map(Matrix::rows).collect(),
            p: p.mats().iter().map(Matrix::to_rows).collect(),
            f: f.mats().iter().map(Matrix::to_rows).collect(),
            preprocessing: stats,
            config,
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let model: ModelFile = io::read_json(path)?;
        model.validate()?;
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        io::write_json(path, self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != MODEL_SCHEMA_VERSION {
            return Err(Error::Config(format!("unsupported model schema_version {}", self.schema_version)));
        }
        let (p, f) = self.params()?;
        if self.dims.len() != self.views || p.mats().len() != self.views || f.mats().len() != self.views {
            return Err(Error::Config("model view count is inconsistent".into()));
        }
        for (m, (pm, fm)) in p.mats().iter().zip(f.mats()).enumerate() {
            if pm.shape() != (self.dims[m], self.d) || fm.shape() != (self.d, self.dims[m]) {
                return Err(Error::Config(format!("model block {} has the wrong shape", m + 1)));
            }
        }
        Ok(())
    }

    pub fn params(&self) -> Result<(ProjectionSet, RecoverySet)> {
        let p = self.p.iter().map(|r| from_rows(r, "P")).collect::<Result<Vec<_>>>()?;
        let f = self.f.iter().map(|r| from_rows(r, "F")).collect::<Result<Vec<_>>>()?;
        Ok((ProjectionSet(p), RecoverySet(f)))
    }
}
