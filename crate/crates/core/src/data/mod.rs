//! Multi-view datasets and the transformations applied before training.

mod preprocess;
mod split;
mod synth;

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{dim_err, Error, Result};
use crate::matrix::Matrix;

pub use preprocess::{preprocess, PreprocessFlags, PreprocessStats, STD_FLOOR};
pub use split::{split, split_indices, split_seed, SplitPlan};
pub use synth::{synth_generate, SynthSpec};

/// `V ≥ 2` views of the same `n` samples. `views[m]` is `D_m × n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiViewDataset {
    views: Vec<Matrix>,
    labels: Option<Vec<usize>>,
}

impl MultiViewDataset {
    pub fn new(views: Vec<Matrix>, labels: Option<Vec<usize>>) -> Result<Self> {
        if views.len() < 2 {
            return Err(Error::ViewMismatch(format!("need at least 2 views, got {}", views.len())));
        }
        let n = views[0].cols();
        if n == 0 {
            return Err(Error::EmptyInput("dataset has no samples".into()));
        }
        for (m, v) in views.iter().enumerate() {
            if v.cols() != n {
                return Err(Error::ViewMismatch(format!("view {} has {} samples, view 0 has {}", m, v.cols(), n)));
            }
            if v.rows() == 0 {
                return Err(Error::EmptyInput(format!("view {} has no features", m)));
            }
            if !v.is_finite() {
                return Err(Error::InvalidParam(format!("view {} contains non-finite values", m)));
            }
        }
        if let Some(l) = &labels {
            if l.len() != n {
                return Err(Error::ViewMismatch(format!("{} labels for {} samples", l.len(), n)));
            }
        }
        Ok(Self { views, labels })
    }

    pub fn views(&self) -> &[Matrix] {
        &self.views
    }

    pub fn view(&self, m: usize) -> &Matrix {
        &self.views[m]
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    pub fn n(&self) -> usize {
        self.views[0].cols()
    }

    pub fn num_views(&self) -> usize {
        self.views.len()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.views.iter().map(Matrix::rows).collect()
    }

    pub fn with_labels(mut self, labels: Option<Vec<usize>>) -> Result<Self> {
        self.labels = None;
        Self::new(self.views, labels)
    }

    /// Sample indices grouped by class id, classes in ascending order.
    pub fn class_members(&self) -> Result<BTreeMap<usize, Vec<usize>>> {
        let labels = self.labels.as_ref().ok_or(Error::LabelsRequired)?;
        let mut by_class: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (i, &c) in labels.iter().enumerate() {
            by_class.entry(c).or_default().push(i);
        }
        Ok(by_class)
    }

    /// Keeps the listed sample columns, in order, in every view.
    pub fn select(&self, idx: &[usize]) -> Result<Self> {
        let views = self.views.iter().map(|v| v.select_cols(idx)).collect();
        let labels = self.labels.as_ref().map(|l| idx.iter().map(|&i| l[i]).collect());
        Self::new(views, labels)
    }

    /// Applies one sample permutation to every view (and the labels).
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.n() {
            return Err(dim_err!("permutation of length {} for {} samples", perm.len(), self.n()));
        }
        self.select(perm)
    }

    /// All views stacked into one `D × n` matrix.
    pub fn concatenated(&self) -> Matrix {
        crate::matrix::vstack(&self.views).expect("views share n")
    }
}

/// Each view zero-padded into the full `D = Σ D_m` row space.
#[derive(Debug, Clone, PartialEq)]
pub struct StackedViews {
    padded: Vec<Matrix>,
    block_offsets: Vec<usize>,
    dims: Vec<usize>,
}

impl StackedViews {
    pub fn padded(&self) -> &[Matrix] {
        &self.padded
    }

    pub fn block_offsets(&self) -> &[usize] {
        &self.block_offsets
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn total_dim(&self) -> usize {
        self.dims.iter().sum()
    }

    /// The unpadded view `m`.
    pub fn block(&self, m: usize) -> Matrix {
        self.padded[m].row_block(self.block_offsets[m], self.dims[m])
    }
}

pub fn pad_stack(ds: &MultiViewDataset) -> StackedViews {
    let dims = ds.dims();
    let total: usize = dims.iter().sum();
    let mut block_offsets = Vec::with_capacity(dims.len());
    let mut offset = 0;
    for &d in &dims {
        block_offsets.push(offset);
        offset += d;
    }
    let padded = ds
        .views()
        .iter()
        .zip(&block_offsets)
        .map(|(x, &off)| {
            let mut p = Matrix::zeros(total, x.cols());
            for c in 0..x.cols() {
                p.col_mut(c)[off..off + x.rows()].copy_from_slice(x.col(c));
            }
            p
        })
        .collect();
    StackedViews { padded, block_offsets, dims }
}
