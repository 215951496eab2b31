//! Analytic gradients of the combined objective.
//!
//! Each head is a softmax cross-entropy over cosine similarities. The
//! backward pass runs in three stages:
//!
//! 1. `∂L/∂C`: gradient w.r.t. the cosine matrix of every contrasted pair,
//!    `(softmax − target) / (count · sigma)`;
//! 2. `∂L/∂û`: gradient w.r.t. the unit-normalized columns;
//! 3. `∂L/∂u = (I − ûûᵀ) ∂L/∂û / ‖u‖` (plain division where the norm
//!    floor is active, since the floored norm is constant there).
//!
//! Embedding gradients are then pulled back to the projections with
//! `∂L/∂P_m = X^m (∂L/∂Y^m)ᵀ`. The stacked form does the same through the
//! zero-padded views, `∂L/∂P = Σ_m X̃^m (∂L/∂Y^m)ᵀ`.
//!
//! The `F_m` gradient and the combined `P` gradient both carry the
//! `alpha`/`beta` weights, so they are exact derivatives of
//! [`crate::loss::total_loss`]; the finite-difference check below is the
//! arbiter.

use alloc::format;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::{MultiViewDataset, StackedViews};
use crate::error::{dim_err, Error, Result};
use crate::loss::{EmbeddingSet, HyperParams, ProjectionSet, RecoverySet, UnitColumns};
use crate::matrix::{vsplit, Matrix};

/// Default finite-difference step.
pub const DEFAULT_STEP: f64 = 1e-5;

/// Tolerance used when certifying analytic gradients.
pub const GRADCHECK_TOL: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientSet {
    pub dp: Vec<Matrix>,
    pub df: Vec<Matrix>,
}

#[derive(Debug, Clone, Copy)]
struct Heads {
    sample: bool,
    feature: bool,
    recovery: bool,
}

impl Heads {
    fn all(hp: &HyperParams) -> Self {
        Self { sample: true, feature: hp.alpha != 0.0, recovery: hp.beta != 0.0 }
    }

    fn recovery_only(hp: &HyperParams) -> Self {
        Self { sample: false, feature: false, recovery: hp.beta != 0.0 }
    }
}

struct Backward {
    loss: f64,
    /// `∂L/∂Y^m`, `d × n`.
    emb: Vec<Matrix>,
    /// `∂L/∂F_m`, `d × D_m`, already weighted by beta.
    df: Vec<Matrix>,
}

/// `(I − ûûᵀ) g / ‖u‖` column by column.
fn unnormalize(units: &UnitColumns, gh: &Matrix) -> Matrix {
    let mut out = gh.clone();
    for c in 0..out.cols() {
        let u = units.unit.col(c);
        let g = out.col_mut(c);
        if units.active[c] {
            let proj = crate::matrix::dot(u, g);
            g.iter_mut().zip(u).for_each(|(gi, ui)| *gi -= proj * ui);
        }
        let inv = 1.0 / units.norms[c];
        g.iter_mut().for_each(|gi| *gi *= inv);
    }
    out
}

/// Writes `scale · (softmax(logits) − target)` into `out`, returns the
/// cross-entropy `LSE(logits) − LSE(logits[target])`.
fn softmax_grad(logits: &[f64], target: &[bool], scale: f64, out: &mut [f64]) -> f64 {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum_all = 0.0;
    let mut sum_pos = 0.0;
    for ((o, &x), &t) in out.iter_mut().zip(logits).zip(target) {
        let e = libm::exp(x - max);
        *o = e;
        sum_all += e;
        if t {
            sum_pos += e;
        }
    }
    for (o, &t) in out.iter_mut().zip(target) {
        let e = *o;
        *o = scale * (e / sum_all - if t { e / sum_pos } else { 0.0 });
    }
    libm::log(sum_all) - libm::log(sum_pos)
}

fn backward(embs: &EmbeddingSet, recovery: &RecoverySet, anchors: &[Matrix], hp: &HyperParams, heads: Heads) -> Result<Backward> {
    let views = embs.0.len();
    let (d, n) = embs.0[0].shape();
    let mut emb: Vec<Matrix> = (0..views).map(|_| Matrix::zeros(d, n)).collect();
    let mut df: Vec<Matrix> = recovery.0.iter().map(|f| Matrix::zeros(f.rows(), f.cols())).collect();
    let mut loss = 0.0;

    if heads.sample {
        let units: Vec<UnitColumns> = embs.0.iter().map(UnitColumns::new).collect();
        let mut gh: Vec<Matrix> = (0..views).map(|_| Matrix::zeros(d, n)).collect();
        let sigma = hp.sigma1;
        let others = views - 1;
        let mut logits = alloc::vec![0.0; others * n];
        let mut target = alloc::vec![false; others * n];
        let mut grad = alloc::vec![0.0; others * n];
        for m in 0..views {
            let partners: Vec<usize> = (0..views).filter(|&v| v != m).collect();
            let cos: Vec<Matrix> = partners.iter().map(|&v| units[m].cosines(&units[v])).collect();
            let mut dcos: Vec<Matrix> = partners.iter().map(|_| Matrix::zeros(n, n)).collect();
            let mut acc = 0.0;
            for i in 0..n {
                for (b, c) in cos.iter().enumerate() {
                    for j in 0..n {
                        logits[b * n + j] = c[(i, j)] / sigma;
                        target[b * n + j] = j == i;
                    }
                }
                acc += softmax_grad(&logits, &target, 1.0 / (n as f64 * sigma), &mut grad);
                for (b, dc) in dcos.iter_mut().enumerate() {
                    for j in 0..n {
                        dc[(i, j)] = grad[b * n + j];
                    }
                }
            }
            loss += acc / n as f64;
            for (&v, dc) in partners.iter().zip(&dcos) {
                gh[m].add_assign(&units[v].unit.matmul_t(dc)?)?;
                gh[v].add_assign(&units[m].unit.matmul(dc)?)?;
            }
        }
        for (e, (u, g)) in emb.iter_mut().zip(units.iter().zip(&gh)) {
            e.add_assign(&unnormalize(u, g))?;
        }
    }

    if heads.feature {
        let rows: Vec<UnitColumns> = embs.0.iter().map(|y| UnitColumns::new(&y.transpose())).collect();
        let mut gh: Vec<Matrix> = (0..views).map(|_| Matrix::zeros(n, d)).collect();
        let sigma = hp.sigma3;
        let mut logits = alloc::vec![0.0; d];
        let mut target = alloc::vec![false; d];
        let mut grad = alloc::vec![0.0; d];
        let mut head = 0.0;
        for m in 0..views {
            for v in 0..views {
                if v == m && !hp.fea_include_self_view {
                    continue;
                }
                let cos = rows[m].cosines(&rows[v]);
                let mut dcos = Matrix::zeros(d, d);
                let mut acc = 0.0;
                for k in 0..d {
                    for l in 0..d {
                        logits[l] = cos[(k, l)] / sigma;
                        target[l] = l == k;
                    }
                    acc += softmax_grad(&logits, &target, hp.alpha / (d as f64 * sigma), &mut grad);
                    for l in 0..d {
                        dcos[(k, l)] = grad[l];
                    }
                }
                head += acc / d as f64;
                gh[m].add_assign(&rows[v].unit.matmul_t(&dcos)?)?;
                gh[v].add_assign(&rows[m].unit.matmul(&dcos)?)?;
            }
        }
        loss += hp.alpha * head;
        for (e, (u, g)) in emb.iter_mut().zip(rows.iter().zip(&gh)) {
            e.add_assign(&unnormalize(u, g).transpose())?;
        }
    }

    if heads.recovery {
        let sigma = hp.sigma2;
        let mut logits = alloc::vec![0.0; n];
        let mut target = alloc::vec![false; n];
        let mut grad = alloc::vec![0.0; n];
        let mut head = 0.0;
        for m in 0..views {
            let x_units = UnitColumns::new(&anchors[m]);
            for v in (0..views).filter(|&v| v != m) {
                let z = recovery.0[m].t_matmul(&embs.0[v])?;
                let z_units = UnitColumns::new(&z);
                let cos = x_units.cosines(&z_units);
                let mut dcos = Matrix::zeros(n, n);
                let mut acc = 0.0;
                for i in 0..n {
                    for j in 0..n {
                        logits[j] = cos[(i, j)] / sigma;
                        target[j] = j == i;
                    }
                    acc += softmax_grad(&logits, &target, hp.beta / (n as f64 * sigma), &mut grad);
                    for j in 0..n {
                        dcos[(i, j)] = grad[j];
                    }
                }
                head += acc / n as f64;
                let gz = unnormalize(&z_units, &x_units.unit.matmul(&dcos)?);
                df[m].add_assign(&embs.0[v].matmul_t(&gz)?)?;
                emb[v].add_assign(&recovery.0[m].matmul(&gz)?)?;
            }
        }
        loss += hp.beta * head;
    }

    Ok(Backward { loss, emb, df })
}

fn check_finite(loss: f64) -> Result<f64> {
    if loss.is_finite() {
        Ok(loss)
    } else {
        Err(Error::Numeric(format!("objective evaluated to {}", loss)))
    }
}

/// Total loss and its gradients w.r.t. every `P_m` and `F_m`.
pub fn gradients(p: &ProjectionSet, f: &RecoverySet, ds: &MultiViewDataset, hp: &HyperParams) -> Result<(f64, GradientSet)> {
    let embs = p.embed(ds)?;
    f.check(ds, p.d())?;
    let b = backward(&embs, f, ds.views(), hp, Heads::all(hp))?;
    let dp = ds.views().iter().zip(&b.emb).map(|(x, g)| x.matmul_t(g)).collect::<Result<_>>()?;
    Ok((check_finite(b.loss)?, GradientSet { dp, df: b.df }))
}

/// `∂L/∂P_m` for every view, `alpha` and `beta` included.
pub fn grad_wrt_p(p: &ProjectionSet, f: &RecoverySet, ds: &MultiViewDataset, hp: &HyperParams) -> Result<Vec<Matrix>> {
    gradients(p, f, ds, hp).map(|(_, g)| g.dp)
}

/// `beta · ∂L_recovery/∂F_m` for every view (only the recovery head sees `F`).
pub fn grad_wrt_f(p: &ProjectionSet, f: &RecoverySet, ds: &MultiViewDataset, hp: &HyperParams) -> Result<Vec<Matrix>> {
    let embs = p.embed(ds)?;
    f.check(ds, p.d())?;
    Ok(backward(&embs, f, ds.views(), hp, Heads::recovery_only(hp))?.df)
}

/// Gradient w.r.t. the stacked projection `P = [P_1; …; P_V]` (`D × d`),
/// evaluated through the zero-padded views.
pub fn grad_wrt_p_stacked(pstack: &Matrix, f: &RecoverySet, stacked: &StackedViews, hp: &HyperParams) -> Result<Matrix> {
    if pstack.rows() != stacked.total_dim() {
        return Err(dim_err!("stacked P has {} rows, padded views have {}", pstack.rows(), stacked.total_dim()));
    }
    let views = stacked.padded().len();
    if f.0.len() != views {
        return Err(dim_err!("{} recovery matrices for {} views", f.0.len(), views));
    }
    for (m, (fm, &dm)) in f.0.iter().zip(stacked.dims()).enumerate() {
        if fm.shape() != (pstack.cols(), dm) {
            return Err(dim_err!("F_{} is {:?}, expected ({}, {})", m, fm.shape(), pstack.cols(), dm));
        }
    }
    let embs = EmbeddingSet(stacked.padded().iter().map(|x| pstack.t_matmul(x)).collect::<Result<_>>()?);
    let anchors: Vec<Matrix> = (0..views).map(|m| stacked.block(m)).collect();
    let b = backward(&embs, f, &anchors, hp, Heads::all(hp))?;
    let mut out = Matrix::zeros(pstack.rows(), pstack.cols());
    for (x, g) in stacked.padded().iter().zip(&b.emb) {
        out.add_assign(&x.matmul_t(g)?)?;
    }
    Ok(out)
}

/// Splits a stacked gradient back into per-view blocks.
pub fn unstack(grad: &Matrix, stacked: &StackedViews) -> Result<Vec<Matrix>> {
    vsplit(grad, stacked.dims())
}

/// Central-difference gradient of `objective` at `param`.
pub fn numeric_gradient(mut objective: impl FnMut(&Matrix) -> f64, param: &Matrix, h: f64) -> Result<Matrix> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidParam(format!("finite-difference step must be positive, got {}", h)));
    }
    let mut x = param.clone();
    let mut out = Matrix::zeros(param.rows(), param.cols());
    for idx in 0..param.as_slice().len() {
        let orig = x.as_slice()[idx];
        x.as_mut_slice()[idx] = orig + h;
        let plus = check_finite(objective(&x))?;
        x.as_mut_slice()[idx] = orig - h;
        let minus = check_finite(objective(&x))?;
        x.as_mut_slice()[idx] = orig;
        out.as_mut_slice()[idx] = (plus - minus) / (2.0 * h);
    }
    Ok(out)
}

/// `max_e |a_e − n_e| / max(|a_e|, |n_e|, 1e-8)` between an analytic
/// gradient and central differences of `objective`.
pub fn finite_diff_check(objective: impl FnMut(&Matrix) -> f64, param: &Matrix, analytic: &Matrix, h: f64) -> Result<f64> {
    if analytic.shape() != param.shape() {
        return Err(dim_err!("analytic gradient {:?} vs parameter {:?}", analytic.shape(), param.shape()));
    }
    let numeric = numeric_gradient(objective, param, h)?;
    Ok(max_relative_error(analytic, &numeric))
}

pub fn max_relative_error(a: &Matrix, b: &Matrix) -> f64 {
    a.as_slice()
        .iter()
        .zip(b.as_slice())
        .map(|(&x, &y)| libm::fabs(x - y) / libm::fabs(x).max(libm::fabs(y)).max(1e-8))
        .fold(0.0, f64::max)
}

/// Per-block certification report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradCheckReport {
    pub p_errors: Vec<f64>,
    pub f_errors: Vec<f64>,
}

impl GradCheckReport {
    pub fn max_error(&self) -> f64 {
        self.p_errors.iter().chain(&self.f_errors).copied().fold(0.0, f64::max)
    }

    /// Labels (`P1`, `F2`, ...) of blocks whose error exceeds `tol`.
    pub fn failing(&self, tol: f64) -> Vec<alloc::string::String> {
        let p = self.p_errors.iter().enumerate().filter(|(_, &e)| !(e <= tol)).map(|(m, _)| format!("P{}", m + 1));
        let f = self.f_errors.iter().enumerate().filter(|(_, &e)| !(e <= tol)).map(|(m, _)| format!("F{}", m + 1));
        p.chain(f).collect()
    }
}

/// Compares every `P_m` and `F_m` block of the analytic gradient with central
/// differences of [`crate::loss::total_loss`].
pub fn check_all_blocks(p: &ProjectionSet, f: &RecoverySet, ds: &MultiViewDataset, hp: &HyperParams, h: f64) -> Result<GradCheckReport> {
    let (_, g) = gradients(p, f, ds, hp)?;
    let mut p_errors = Vec::with_capacity(p.0.len());
    for m in 0..p.0.len() {
        let objective = |x: &Matrix| {
            let mut q = p.clone();
            q.0[m] = x.clone();
            crate::loss::total_loss(&q, f, ds, hp).unwrap_or(f64::NAN)
        };
        p_errors.push(finite_diff_check(objective, &p.0[m], &g.dp[m], h)?);
    }
    let mut f_errors = Vec::with_capacity(f.0.len());
    for m in 0..f.0.len() {
        let objective = |x: &Matrix| {
            let mut r = f.clone();
            r.0[m] = x.clone();
            crate::loss::total_loss(p, &r, ds, hp).unwrap_or(f64::NAN)
        };
        f_errors.push(finite_diff_check(objective, &f.0[m], &g.df[m], h)?);
    }
    Ok(GradCheckReport { p_errors, f_errors })
}

/// Seeded Gaussian views, projections and recovery matrices for gradient
/// certification.
pub fn random_instance(dims: &[usize], n: usize, d: usize, seed: u64) -> Result<(MultiViewDataset, ProjectionSet, RecoverySet)> {
    if d == 0 {
        return Err(Error::InvalidParam("d must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut gauss = || -> f64 { StandardNormal.sample(&mut rng) };
    let views = dims.iter().map(|&dm| Matrix::from_fn(dm, n, |_, _| gauss())).collect();
    let ds = MultiViewDataset::new(views, None)?;
    let p = ProjectionSet(dims.iter().map(|&dm| Matrix::from_fn(dm, d, |_, _| gauss())).collect());
    let f = RecoverySet(dims.iter().map(|&dm| Matrix::from_fn(d, dm, |_, _| gauss())).collect());
    Ok((ds, p, f))
}
