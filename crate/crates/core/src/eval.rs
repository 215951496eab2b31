//! Subspace projection, fusion, 1-NN classification and the repeated
//! M-per-class benchmark.
//!
//! Two evaluation strategies are reported:
//!
//! * strategy I: each view's own embedding `P_mᵀ X^m`, plus the average of
//!   the per-view accuracies (the `Mean` row);
//! * strategy II: the fused embedding `Σ_m P_mᵀ X^m` (the `II` row).

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::data::{preprocess, split, MultiViewDataset, PreprocessFlags, SplitPlan};
use crate::error::{dim_err, Error, Result};
use crate::loss::{EmbeddingSet, ProjectionSet};
use crate::matrix::Matrix;
use crate::optim::{train_with_clock, Clock, NoClock, TrainConfig};

pub const MEAN_ROW: &str = "Mean";
pub const FUSED_ROW: &str = "II";

pub fn project_per_view(p: &ProjectionSet, ds: &MultiViewDataset) -> Result<EmbeddingSet> {
    p.embed(ds)
}

/// `Σ_m P_mᵀ X^m`.
pub fn fuse(p: &ProjectionSet, ds: &MultiViewDataset) -> Result<Matrix> {
    let embs = p.embed(ds)?;
    let mut it = embs.0.into_iter();
    let mut acc = it.next().expect("at least two views");
    for e in it {
        acc.add_assign(&e)?;
    }
    Ok(acc)
}

/// Nearest-neighbour labels under Euclidean distance; ties go to the lowest
/// training index. Only `k = 1` is supported.
pub fn knn_classify(train_emb: &Matrix, train_labels: &[usize], test_emb: &Matrix, k: usize) -> Result<Vec<usize>> {
    if k != 1 {
        return Err(Error::InvalidParam(format!("only k = 1 is supported, got {}", k)));
    }
    if train_emb.cols() == 0 {
        return Err(Error::EmptyTrain);
    }
    if train_labels.len() != train_emb.cols() {
        return Err(dim_err!("{} labels for {} training columns", train_labels.len(), train_emb.cols()));
    }
    if train_emb.rows() != test_emb.rows() {
        return Err(dim_err!("train embeddings have {} rows, test {}", train_emb.rows(), test_emb.rows()));
    }
    let preds = (0..test_emb.cols())
        .map(|q| {
            let query = test_emb.col(q);
            let mut best = (f64::INFINITY, 0usize);
            for t in 0..train_emb.cols() {
                let dist: f64 = train_emb.col(t).iter().zip(query).map(|(a, b)| (a - b) * (a - b)).sum();
                if dist < best.0 {
                    best = (dist, t);
                }
            }
            train_labels[best.1]
        })
        .collect();
    Ok(preds)
}

/// Percentage of matching labels.
pub fn accuracy(pred: &[usize], truth: &[usize]) -> f64 {
    if truth.is_empty() {
        return 0.0;
    }
    let hits = pred.iter().zip(truth).filter(|(a, b)| a == b).count();
    100.0 * hits as f64 / truth.len() as f64
}

/// `5, 10, …` up to `min(50, min D_m − 1)`; falls back to `min D_m − 1` for
/// very narrow views.
pub fn default_d_sweep(dims: &[usize]) -> Vec<usize> {
    let min_dim = dims.iter().copied().min().unwrap_or(2);
    let cap = 50.min(min_dim.saturating_sub(1));
    let sweep: Vec<usize> = (1..).map(|k| 5 * k).take_while(|&d| d <= cap).collect();
    if sweep.is_empty() {
        alloc::vec![cap.max(1)]
    } else {
        sweep
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchmarkConfig {
    /// Training configuration; `train.hp.d` is replaced by each sweep value.
    pub train: TrainConfig,
    pub preprocess: PreprocessFlags,
    /// Subspace dimensions to try; empty selects [`default_d_sweep`].
    #[serde(default)]
    pub d_sweep: Vec<usize>,
}

impl BenchmarkConfig {
    pub fn new(train: TrainConfig) -> Self {
        Self { train, preprocess: PreprocessFlags::default(), d_sweep: Vec::new() }
    }

    pub fn resolved_sweep(&self, dims: &[usize]) -> Vec<usize> {
        if self.d_sweep.is_empty() {
            default_d_sweep(dims)
        } else {
            self.d_sweep.clone()
        }
    }
}

/// Accuracies (%) of one repeat, `[sweep index][row]` with rows ordered as
/// the views, then `Mean`, then `II`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepeatOutcome {
    pub repeat: usize,
    pub accuracies: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRow {
    pub label: String,
    /// Mean accuracy (%) over repeats at the best subspace dimension.
    pub mean: f64,
    /// Population standard deviation over repeats.
    pub std: f64,
    pub best_d: usize,
    pub per_repeat: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub label: String,
    pub rows: Vec<BenchmarkRow>,
    pub per_class: usize,
    pub repeats: usize,
    pub d_sweep: Vec<usize>,
    pub std_convention: String,
    pub config: BenchmarkConfig,
    pub plan: SplitPlan,
}

impl BenchmarkReport {
    pub fn row(&self, label: &str) -> Option<&BenchmarkRow> {
        self.rows.iter().find(|r| r.label == label)
    }
}

pub fn row_labels(views: usize) -> Vec<String> {
    (1..=views)
        .map(|m| format!("View{}", m))
        .chain([String::from(MEAN_ROW), String::from(FUSED_ROW)])
        .collect()
}

/// Strategy-I accuracies for every view, their mean, then strategy II.
pub fn evaluate(p: &ProjectionSet, train: &MultiViewDataset, test: &MultiViewDataset) -> Result<Vec<f64>> {
    let train_labels = train.labels().ok_or(Error::LabelsRequired)?;
    let test_labels = test.labels().ok_or(Error::LabelsRequired)?;
    let tr = p.embed(train)?;
    let te = p.embed(test)?;
    let mut accs = Vec::with_capacity(train.num_views() + 2);
    for (a, b) in tr.0.iter().zip(&te.0) {
        accs.push(accuracy(&knn_classify(a, train_labels, b, 1)?, test_labels));
    }
    let mean = accs.iter().sum::<f64>() / accs.len() as f64;
    accs.push(mean);
    let fused = knn_classify(&fuse(p, train)?, train_labels, &fuse(p, test)?, 1)?;
    accs.push(accuracy(&fused, test_labels));
    Ok(accs)
}

/// Split, preprocess with training statistics, train once per sweep value
/// and evaluate.
pub fn run_repeat(ds: &MultiViewDataset, cfg: &BenchmarkConfig, plan: &SplitPlan, repeat: usize, clock: &dyn Clock) -> Result<RepeatOutcome> {
    let inner = || -> Result<RepeatOutcome> {
        let (train, test) = split(ds, plan, repeat)?;
        let (train, stats) = preprocess(&train, cfg.preprocess, None)?;
        let (test, _) = preprocess(&test, cfg.preprocess, Some(&stats))?;
        let mut accuracies = Vec::new();
        for d in cfg.resolved_sweep(&ds.dims()) {
            let mut tc = cfg.train;
            tc.hp.d = d;
            let (p, _, _) = train_with_clock(&train, &tc, clock)?;
            accuracies.push(evaluate(&p, &train, &test)?);
        }
        Ok(RepeatOutcome { repeat, accuracies })
    };
    inner().map_err(|e| Error::Benchmark { repeat, source: alloc::boxed::Box::new(e) })
}

/// Collapses per-repeat outcomes into the report: for every row, the sweep
/// value with the highest mean accuracy is reported with its population
/// standard deviation.
pub fn assemble(ds: &MultiViewDataset, cfg: &BenchmarkConfig, plan: &SplitPlan, mut outcomes: Vec<RepeatOutcome>) -> Result<BenchmarkReport> {
    outcomes.sort_by_key(|o| o.repeat);
    let sweep = cfg.resolved_sweep(&ds.dims());
    let labels = row_labels(ds.num_views());
    if outcomes.is_empty() {
        return Err(Error::InvalidParam("no benchmark repeats".into()));
    }
    if outcomes.iter().any(|o| o.accuracies.len() != sweep.len() || o.accuracies.iter().any(|a| a.len() != labels.len())) {
        return Err(dim_err!("repeat outcomes do not match the sweep/row layout"));
    }
    let reps = outcomes.len() as f64;
    let rows = labels
        .into_iter()
        .enumerate()
        .map(|(r, label)| {
            let mut best: Option<BenchmarkRow> = None;
            for (s, &d) in sweep.iter().enumerate() {
                let per_repeat: Vec<f64> = outcomes.iter().map(|o| o.accuracies[s][r]).collect();
                let mean = per_repeat.iter().sum::<f64>() / reps;
                let var = per_repeat.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / reps;
                if best.as_ref().is_none_or(|b| mean > b.mean) {
                    best = Some(BenchmarkRow { label: label.clone(), mean, std: libm::sqrt(var), best_d: d, per_repeat });
                }
            }
            best.expect("non-empty sweep")
        })
        .collect();
    Ok(BenchmarkReport {
        label: String::from(crate::optim::run_label(&cfg.train.hp)),
        rows,
        per_class: plan.per_class,
        repeats: plan.repeats,
        d_sweep: sweep,
        std_convention: String::from("population"),
        config: cfg.clone(),
        plan: *plan,
    })
}

/// The full protocol, repeats run sequentially.
pub fn benchmark(ds: &MultiViewDataset, cfg: &BenchmarkConfig, plan: &SplitPlan) -> Result<BenchmarkReport> {
    plan.validate()?;
    ds.labels().ok_or(Error::LabelsRequired)?;
    let outcomes = (0..plan.repeats).map(|r| run_repeat(ds, cfg, plan, r, &NoClock)).collect::<Result<Vec<_>>>()?;
    assemble(ds, cfg, plan, outcomes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn coordinate_projection_selects_rows() {
        let x = Matrix::from_fn(4, 3, |r, c| (r * 10 + c) as f64);
        let ds = MultiViewDataset::new(vec![x.clone(), x.clone()], None).unwrap();
        let p = Matrix::from_fn(4, 2, |r, c| if r == c { 1.0 } else { 0.0 });
        let embs = project_per_view(&ProjectionSet(vec![p.clone(), p]), &ds).unwrap();
        assert_eq!(embs.0[0], x.row_block(0, 2));
    }

    #[test]
    fn fuse_with_zero_block_equals_first_view() {
        let a = Matrix::from_fn(3, 4, |r, c| (r + 2 * c) as f64 - 2.5);
        let b = Matrix::from_fn(2, 4, |r, c| (r * c) as f64);
        let ds = MultiViewDataset::new(vec![a, b], None).unwrap();
        let p1 = Matrix::from_fn(3, 2, |r, c| (r as f64) - (c as f64) * 0.5);
        let p = ProjectionSet(vec![p1, Matrix::zeros(2, 2)]);
        assert_eq!(fuse(&p, &ds).unwrap(), project_per_view(&p, &ds).unwrap().0[0]);
    }

    #[test]
    fn fuse_of_identical_views_is_v_times_projection() {
        let a = Matrix::from_fn(3, 4, |r, c| (r as f64) * 0.5 - c as f64);
        let ds = MultiViewDataset::new(vec![a.clone(), a.clone(), a.clone()], None).unwrap();
        let p1 = Matrix::from_fn(3, 2, |r, c| (r + c) as f64);
        let p = ProjectionSet(vec![p1.clone(), p1.clone(), p1.clone()]);
        assert_eq!(fuse(&p, &ds).unwrap(), p1.t_matmul(&a).unwrap().scaled(3.0));
    }

    #[test]
    fn knn_basics() {
        let train = Matrix::from_rows(&[[0.0, 10.0]]).unwrap();
        assert_eq!(knn_classify(&train, &[0, 1], &Matrix::from_rows(&[[9.0, 0.0, 10.0]]).unwrap(), 1).unwrap(), vec![1, 0, 1]);
        // equidistant query resolves to the lowest training index
        assert_eq!(knn_classify(&train, &[7, 3], &Matrix::from_rows(&[[5.0]]).unwrap(), 1).unwrap(), vec![7]);
        assert!(matches!(knn_classify(&Matrix::zeros(1, 0), &[], &train, 1), Err(Error::EmptyTrain)));
        assert!(knn_classify(&train, &[0, 1], &train, 3).is_err());
    }

    #[test]
    fn sweep_defaults() {
        assert_eq!(default_d_sweep(&[256, 256]), vec![5, 10, 15, 20, 25, 30, 35, 40, 45, 50]);
        assert_eq!(default_d_sweep(&[16, 20]), vec![5, 10, 15]);
        assert_eq!(default_d_sweep(&[4, 20]), vec![3]);
    }
}
