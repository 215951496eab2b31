//! Temperature-scaled cosine similarity and the three contrastive heads.
//!
//! Expectations are realized as arithmetic means over the anchor index
//! (sample `i` or subspace dimension `k`) and plain sums over view pairs.

use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::data::MultiViewDataset;
use crate::error::{dim_err, Error, Result};
use crate::matrix::{dot, Matrix};

/// Norms below this are clamped inside the cosine similarity.
pub const NORM_FLOOR: f64 = 1e-12;

pub const DEFAULT_TEMPERATURE: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HyperParams {
    /// Subspace dimension.
    pub d: usize,
    /// Weight of the feature-level head.
    pub alpha: f64,
    /// Weight of the recovery-level head.
    pub beta: f64,
    /// Sample-level temperature.
    pub sigma1: f64,
    /// Recovery-level temperature.
    pub sigma2: f64,
    /// Feature-level temperature.
    pub sigma3: f64,
    /// Whether the feature head also contrasts a view with itself (`v = m`).
    #[serde(default = "default_true")]
    pub fea_include_self_view: bool,
}

fn default_true() -> bool {
    true
}

impl HyperParams {
    /// `alpha = beta = 1`, all temperatures `0.1`.
    pub fn new(d: usize) -> Self {
        Self {
            d,
            alpha: 1.0,
            beta: 1.0,
            sigma1: DEFAULT_TEMPERATURE,
            sigma2: DEFAULT_TEMPERATURE,
            sigma3: DEFAULT_TEMPERATURE,
            fea_include_self_view: true,
        }
    }

    /// Sample-level head only.
    pub fn cmc(d: usize) -> Self {
        Self { alpha: 0.0, beta: 0.0, ..Self::new(d) }
    }

    pub fn with_weights(mut self, alpha: f64, beta: f64) -> Self {
        self.alpha = alpha;
        self.beta = beta;
        self
    }

    pub fn with_temperature(mut self, sigma: f64) -> Self {
        self.sigma1 = sigma;
        self.sigma2 = sigma;
        self.sigma3 = sigma;
        self
    }

    pub fn is_cmc_ablation(&self) -> bool {
        self.alpha == 0.0 && self.beta == 0.0
    }

    pub fn validate(&self, dims: &[usize]) -> Result<()> {
        if self.d == 0 {
            return Err(Error::InvalidParam("subspace dimension d must be >= 1".into()));
        }
        if let Some(&min) = dims.iter().min() {
            if self.d >= min {
                return Err(dim_err!("d = {} must be smaller than every view dimension (min {})", self.d, min));
            }
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite() && self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(Error::InvalidParam(format!("alpha, beta must be finite and >= 0 ({}, {})", self.alpha, self.beta)));
        }
        for (name, s) in [("sigma1", self.sigma1), ("sigma2", self.sigma2), ("sigma3", self.sigma3)] {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::InvalidParam(format!("{} must be positive, got {}", name, s)));
            }
        }
        Ok(())
    }
}

/// One `D_m × d` projection per view.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionSet(pub Vec<Matrix>);

/// One `d × D_m` recovery matrix per view.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoverySet(pub Vec<Matrix>);

/// `embs[m] = P_mᵀ X^m`, `d × n`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSet(pub Vec<Matrix>);

impl ProjectionSet {
    pub fn mats(&self) -> &[Matrix] {
        &self.0
    }

    pub fn d(&self) -> usize {
        self.0.first().map_or(0, Matrix::cols)
    }

    /// Shape check against the dataset: `P_m` is `D_m × d` for one common `d`.
    pub fn check(&self, ds: &MultiViewDataset) -> Result<()> {
        if self.0.len() != ds.num_views() {
            return Err(dim_err!("{} projections for {} views", self.0.len(), ds.num_views()));
        }
        let d = self.d();
        for (m, (p, x)) in self.0.iter().zip(ds.views()).enumerate() {
            if p.rows() != x.rows() || p.cols() != d {
                return Err(dim_err!("P_{} is {:?}, expected ({}, {})", m, p.shape(), x.rows(), d));
            }
            if !p.is_finite() {
                return Err(Error::Numeric(format!("P_{} has non-finite entries", m)));
            }
        }
        Ok(())
    }

    pub fn embed(&self, ds: &MultiViewDataset) -> Result<EmbeddingSet> {
        self.check(ds)?;
        self.0.iter().zip(ds.views()).map(|(p, x)| p.t_matmul(x)).collect::<Result<_>>().map(EmbeddingSet)
    }
}

impl RecoverySet {
    pub fn mats(&self) -> &[Matrix] {
        &self.0
    }

    pub fn check(&self, ds: &MultiViewDataset, d: usize) -> Result<()> {
        if self.0.len() != ds.num_views() {
            return Err(dim_err!("{} recovery matrices for {} views", self.0.len(), ds.num_views()));
        }
        for (m, (f, x)) in self.0.iter().zip(ds.views()).enumerate() {
            if f.rows() != d || f.cols() != x.rows() {
                return Err(dim_err!("F_{} is {:?}, expected ({}, {})", m, f.shape(), d, x.rows()));
            }
            if !f.is_finite() {
                return Err(Error::Numeric(format!("F_{} has non-finite entries", m)));
            }
        }
        Ok(())
    }
}

impl EmbeddingSet {
    pub fn mats(&self) -> &[Matrix] {
        &self.0
    }
}

/// `uᵀv / (max(‖u‖, ε) · max(‖v‖, ε) · sigma)`.
pub fn cosine_sim(u: &[f64], v: &[f64], sigma: f64) -> Result<f64> {
    if u.len() != v.len() {
        return Err(dim_err!("cosine_sim: lengths {} and {}", u.len(), v.len()));
    }
    let nu = libm::sqrt(dot(u, u)).max(NORM_FLOOR);
    let nv = libm::sqrt(dot(v, v)).max(NORM_FLOOR);
    Ok(dot(u, v) / (nu * nv * sigma))
}

/// Columns scaled to unit norm (norm floored at [`NORM_FLOOR`]).
pub(crate) struct UnitColumns {
    pub unit: Matrix,
    /// The (floored) norm each column was divided by.
    pub norms: Vec<f64>,
    /// False where the floor was active; the norm is then a constant.
    pub active: Vec<bool>,
}

impl UnitColumns {
    pub fn new(m: &Matrix) -> Self {
        let mut unit = m.clone();
        let mut norms = Vec::with_capacity(m.cols());
        let mut active = Vec::with_capacity(m.cols());
        for c in 0..m.cols() {
            let raw = crate::matrix::norm(m.col(c));
            let n = raw.max(NORM_FLOOR);
            unit.col_mut(c).iter_mut().for_each(|x| *x /= n);
            norms.push(n);
            active.push(raw > NORM_FLOOR);
        }
        Self { unit, norms, active }
    }

    /// Cosine matrix `C[i][j] = cos(a_i, b_j)` (without temperature).
    pub fn cosines(&self, other: &UnitColumns) -> Matrix {
        self.unit.t_matmul(&other.unit).expect("cosine operands share a row space")
    }
}

#[inline]
pub(crate) fn log_sum_exp(xs: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = xs.clone().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + libm::log(xs.map(|x| libm::exp(x - max)).sum::<f64>())
}

/// Cross-view sample-level InfoNCE with CMC pairing on precomputed
/// embeddings.
///
/// For anchor `y_i^m` the positives are `y_i^v` and the negatives `y_j^v`
/// (`j ≠ i`) over every other view `v ≠ m`; positives are pooled in the
/// numerator.
pub fn sample_loss_on(embs: &EmbeddingSet, sigma1: f64) -> f64 {
    let units: Vec<UnitColumns> = embs.0.iter().map(UnitColumns::new).collect();
    let views = units.len();
    let n = embs.0[0].cols();
    let mut total = 0.0;
    for m in 0..views {
        let cos: Vec<Option<Matrix>> =
            (0..views).map(|v| (v != m).then(|| units[m].cosines(&units[v]))).collect();
        let mut acc = 0.0;
        for i in 0..n {
            let others = cos.iter().flatten();
            let all = others.clone().flat_map(|c| (0..n).map(move |j| c[(i, j)] / sigma1));
            let pos = others.map(|c| c[(i, i)] / sigma1);
            acc += log_sum_exp(all) - log_sum_exp(pos);
        }
        total += acc / n as f64;
    }
    total
}

/// Feature-level InfoNCE: embedding row `k` of view `m` against all rows of
/// view `v`, with row `k` of view `v` as the positive.
pub fn feature_loss_on(embs: &EmbeddingSet, sigma3: f64, include_self_view: bool) -> f64 {
    let units: Vec<UnitColumns> = embs.0.iter().map(|y| UnitColumns::new(&y.transpose())).collect();
    let views = units.len();
    let d = embs.0[0].rows();
    let mut total = 0.0;
    for m in 0..views {
        for v in 0..views {
            if v == m && !include_self_view {
                continue;
            }
            let cos = units[m].cosines(&units[v]);
            let mut acc = 0.0;
            for k in 0..d {
                acc += log_sum_exp((0..d).map(|l| cos[(k, l)] / sigma3)) - cos[(k, k)] / sigma3;
            }
            total += acc / d as f64;
        }
    }
    total
}

/// Recovery-level InfoNCE: original `x_i^m` against recovered
/// `z_j = F_mᵀ y_j^v` for every `v ≠ m`, with `z_i` as the positive.
pub fn recovery_loss_on(embs: &EmbeddingSet, recovery: &RecoverySet, views: &[Matrix], sigma2: f64) -> Result<f64> {
    let nviews = views.len();
    let n = views[0].cols();
    let mut total = 0.0;
    for m in 0..nviews {
        let anchors = UnitColumns::new(&views[m]);
        for v in (0..nviews).filter(|&v| v != m) {
            let z = recovery.0[m].t_matmul(&embs.0[v])?;
            let cos = anchors.cosines(&UnitColumns::new(&z));
            let mut acc = 0.0;
            for i in 0..n {
                acc += log_sum_exp((0..n).map(|j| cos[(i, j)] / sigma2)) - cos[(i, i)] / sigma2;
            }
            total += acc / n as f64;
        }
    }
    Ok(total)
}

pub fn sample_level_loss(p: &ProjectionSet, ds: &MultiViewDataset, sigma1: f64) -> Result<f64> {
    Ok(sample_loss_on(&p.embed(ds)?, sigma1))
}

pub fn feature_level_loss(p: &ProjectionSet, ds: &MultiViewDataset, sigma3: f64) -> Result<f64> {
    feature_level_loss_with(p, ds, sigma3, true)
}

pub fn feature_level_loss_with(p: &ProjectionSet, ds: &MultiViewDataset, sigma3: f64, include_self_view: bool) -> Result<f64> {
    Ok(feature_loss_on(&p.embed(ds)?, sigma3, include_self_view))
}

pub fn recovery_level_loss(p: &ProjectionSet, f: &RecoverySet, ds: &MultiViewDataset, sigma2: f64) -> Result<f64> {
    let embs = p.embed(ds)?;
    f.check(ds, p.d())?;
    recovery_loss_on(&embs, f, ds.views(), sigma2)
}

/// `L_sample + alpha · L_feature + beta · L_recovery`. Heads with a zero
/// weight are skipped.
pub fn total_loss(p: &ProjectionSet, f: &RecoverySet, ds: &MultiViewDataset, hp: &HyperParams) -> Result<f64> {
    let embs = p.embed(ds)?;
    f.check(ds, p.d())?;
    let mut loss = sample_loss_on(&embs, hp.sigma1);
    if hp.alpha != 0.0 {
        loss += hp.alpha * feature_loss_on(&embs, hp.sigma3, hp.fea_include_self_view);
    }
    if hp.beta != 0.0 {
        loss += hp.beta * recovery_loss_on(&embs, f, ds.views(), hp.sigma2)?;
    }
    Ok(loss)
}
