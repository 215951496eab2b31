//! Unsupervised multi-view linear feature extraction driven by three
//! contrastive heads.
//!
//! Given `V` views `X^m` (features × samples) of the same `n` samples, the
//! crate learns one projection `P_m` per view so that the embeddings
//! `Y^m = P_mᵀ X^m` minimize
//!
//! ```text
//! L = L_sample + alpha * L_feature + beta * L_recovery
//! ```
//!
//! * `L_sample`: cross-view InfoNCE over sample embeddings (same sample in
//!   two views is a positive, other samples in other views are negatives).
//! * `L_feature`: InfoNCE over embedding rows; the same subspace dimension
//!   across views is a positive, other dimensions are negatives.
//! * `L_recovery`: InfoNCE matching an original sample `x_i^m` against the
//!   cross-view recovered vectors `F_mᵀ y_j^v`.
//!
//! All heads use temperature-scaled cosine similarity. Gradients are
//! analytic and certified against central finite differences
//! ([`grad::finite_diff_check`]). Training alternates Adam steps on the
//! recovery matrices and on the stacked projections ([`optim::train`]), and
//! [`eval`] carries the 1-NN repeated-split benchmark.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the CLI and
//! wall-clock timing live in the `mvcl` companion crate.
#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod data;
pub mod error;
pub mod eval;
pub mod grad;
pub mod loss;
pub mod matrix;
pub mod optim;

pub use data::{MultiViewDataset, PreprocessFlags, PreprocessStats, SplitPlan, StackedViews, SynthSpec};
pub use error::{Error, Result};
pub use eval::{BenchmarkConfig, BenchmarkReport, BenchmarkRow};
pub use grad::GradientSet;
pub use loss::{EmbeddingSet, HyperParams, ProjectionSet, RecoverySet};
pub use matrix::Matrix;
pub use optim::{AdamParams, AdamState, TrainConfig, TrainReport};
