//! Adam and the alternating training loop.
//!
//! Each outer iteration takes one Adam step on every recovery matrix `F_m`
//! (projections held fixed), then one Adam step on the stacked projection
//! `[P_1; …; P_V]` with the fresh `F`. Training stops once two consecutive
//! total losses differ by at most `tol`.

use alloc::string::String;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::{MultiViewDataset, PreprocessFlags};
use crate::error::{dim_err, Error, Result};
use crate::grad::gradients;
use crate::loss::{HyperParams, ProjectionSet, RecoverySet, NORM_FLOOR};
use crate::matrix::{dot, vsplit, vstack, Matrix};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdamParams {
    /// Learning rate.
    pub gamma: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamParams {
    fn default() -> Self {
        Self { gamma: 0.001, beta1: 0.9, beta2: 0.999, epsilon: 1e-8 }
    }
}

impl AdamParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.gamma > 0.0
            && self.gamma.is_finite()
            && (0.0..1.0).contains(&self.beta1)
            && (0.0..1.0).contains(&self.beta2)
            && self.epsilon > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParam(alloc::format!("invalid Adam parameters {:?}", self)))
        }
    }
}

/// First/second moment accumulators for one parameter matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Matrix,
    pub v: Matrix,
    pub t: u64,
}

impl AdamState {
    pub fn new(rows: usize, cols: usize) -> Self {
        Self { m: Matrix::zeros(rows, cols), v: Matrix::zeros(rows, cols), t: 0 }
    }

    pub fn for_param(param: &Matrix) -> Self {
        Self::new(param.rows(), param.cols())
    }

    /// One bias-corrected Adam update of `param` in place.
    pub fn step(&mut self, grad: &Matrix, param: &mut Matrix, ap: &AdamParams) -> Result<()> {
        if grad.shape() != param.shape() || self.m.shape() != param.shape() {
            return Err(dim_err!("adam: grad {:?}, param {:?}, state {:?}", grad.shape(), param.shape(), self.m.shape()));
        }
        self.t += 1;
        let bc1 = 1.0 - libm::pow(ap.beta1, self.t as f64);
        let bc2 = 1.0 - libm::pow(ap.beta2, self.t as f64);
        let it = param
            .as_mut_slice()
            .iter_mut()
            .zip(grad.as_slice())
            .zip(self.m.as_mut_slice().iter_mut().zip(self.v.as_mut_slice()));
        for ((w, &g), (m, v)) in it {
            *m = ap.beta1 * *m + (1.0 - ap.beta1) * g;
            *v = ap.beta2 * *v + (1.0 - ap.beta2) * g * g;
            let m_hat = *m / bc1;
            let v_hat = *v / bc2;
            *w -= ap.gamma * m_hat / (libm::sqrt(v_hat) + ap.epsilon);
        }
        Ok(())
    }
}

/// Functional form of [`AdamState::step`].
pub fn adam_step(state: &AdamState, grad: &Matrix, param: &Matrix, ap: &AdamParams) -> Result<(AdamState, Matrix)> {
    let mut s = state.clone();
    let mut p = param.clone();
    s.step(grad, &mut p, ap)?;
    Ok((s, p))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub max_iters: usize,
    /// Convergence threshold on `|L(t) − L(t+1)|`.
    pub tol: f64,
    /// Seed for parameter initialization.
    pub seed: u64,
    pub adam: AdamParams,
    pub hp: HyperParams,
}

impl TrainConfig {
    pub const DEFAULT_MAX_ITERS: usize = 1000;
    pub const DEFAULT_TOL: f64 = 1e-3;

    pub fn new(hp: HyperParams) -> Self {
        Self { max_iters: Self::DEFAULT_MAX_ITERS, tol: Self::DEFAULT_TOL, seed: 0, adam: AdamParams::default(), hp }
    }

    pub fn validate(&self, dims: &[usize]) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::InvalidParam("max_iters must be >= 1".into()));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidParam(alloc::format!("tol must be positive, got {}", self.tol)));
        }
        self.adam.validate()?;
        self.hp.validate(dims)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    /// `"MFETCH"` or `"CMC-ablation"` when both extra heads are switched off.
    pub label: String,
    /// Total loss at initialization followed by one entry per iteration.
    pub losses: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub preprocessing: Option<PreprocessFlags>,
    pub wall_ms: u64,
}

/// Millisecond clock used to fill [`TrainReport::wall_ms`].
pub trait Clock {
    fn now_ms(&self) -> u64;
}

/// Always reports zero; the default in `no_std` builds.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoClock;

impl Clock for NoClock {
    fn now_ms(&self) -> u64 {
        0
    }
}

pub fn run_label(hp: &HyperParams) -> &'static str {
    if hp.is_cmc_ablation() {
        "CMC-ablation"
    } else {
        "MFETCH"
    }
}

/// Modified Gram-Schmidt on the columns, in place.
fn orthonormalize(a: &mut Matrix) -> Result<()> {
    for k in 0..a.cols() {
        for j in 0..k {
            let (prev, cur) = split_cols(a, j, k);
            let r = dot(prev, cur);
            cur.iter_mut().zip(prev).for_each(|(c, p)| *c -= r * p);
        }
        let col = a.col_mut(k);
        let nrm = libm::sqrt(dot(col, col));
        if nrm <= NORM_FLOOR {
            return Err(Error::Numeric("rank-deficient initialization".into()));
        }
        col.iter_mut().for_each(|c| *c /= nrm);
    }
    Ok(())
}

fn split_cols(a: &mut Matrix, j: usize, k: usize) -> (&[f64], &mut [f64]) {
    debug_assert!(j < k);
    let rows = a.rows();
    let (lo, hi) = a.as_mut_slice().split_at_mut(k * rows);
    (&lo[j * rows..(j + 1) * rows], &mut hi[..rows])
}

/// Orthonormal Gaussian projections and `N(0, 1/d)` recovery matrices.
pub fn init_params(dims: &[usize], d: usize, seed: u64) -> Result<(ProjectionSet, RecoverySet)> {
    if d == 0 {
        return Err(Error::InvalidParam("d must be >= 1".into()));
    }
    if let Some((m, &dm)) = dims.iter().enumerate().find(|(_, &dm)| d >= dm) {
        return Err(dim_err!("d = {} must be smaller than D_{} = {}", d, m, dm));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut gauss = || -> f64 { StandardNormal.sample(&mut rng) };
    let scale = 1.0 / libm::sqrt(d as f64);
    let mut ps = Vec::with_capacity(dims.len());
    let mut fs = Vec::with_capacity(dims.len());
    for &dm in dims {
        let mut p = Matrix::from_fn(dm, d, |_, _| gauss());
        orthonormalize(&mut p)?;
        ps.push(p);
        fs.push(Matrix::from_fn(d, dm, |_, _| gauss() * scale));
    }
    Ok((ProjectionSet(ps), RecoverySet(fs)))
}

pub fn train(ds: &MultiViewDataset, cfg: &TrainConfig) -> Result<(ProjectionSet, RecoverySet, TrainReport)> {
    train_with_clock(ds, cfg, &NoClock)
}

pub fn train_with_clock(ds: &MultiViewDataset, cfg: &TrainConfig, clock: &dyn Clock) -> Result<(ProjectionSet, RecoverySet, TrainReport)> {
    let start = clock.now_ms();
    let dims = ds.dims();
    cfg.validate(&dims)?;
    let hp = &cfg.hp;
    let (mut p, mut f) = init_params(&dims, hp.d, cfg.seed)?;

    // Each full pass yields the loss at the current parameters together with
    // the F gradient the next iteration starts from.
    let (initial, g0) = gradients(&p, &f, ds, hp).map_err(|_| Error::NumericDivergence { iteration: 0 })?;
    let mut df = g0.df;
    let mut losses = alloc::vec![initial];
    let mut f_states: Vec<AdamState> = f.0.iter().map(AdamState::for_param).collect();
    let mut p_stacked = vstack(&p.0)?;
    let mut p_state = AdamState::for_param(&p_stacked);
    let mut converged = false;

    for iteration in 1..=cfg.max_iters {
        let diverged = |_| Error::NumericDivergence { iteration };
        if hp.beta != 0.0 {
            for ((fm, state), g) in f.0.iter_mut().zip(&mut f_states).zip(&df) {
                state.step(g, fm, &cfg.adam)?;
            }
        }
        let (_, g) = gradients(&p, &f, ds, hp).map_err(diverged)?;
        p_state.step(&vstack(&g.dp)?, &mut p_stacked, &cfg.adam)?;
        p = ProjectionSet(vsplit(&p_stacked, &dims)?);

        let (loss, g) = gradients(&p, &f, ds, hp).map_err(diverged)?;
        df = g.df;
        let prev = *losses.last().expect("initial loss present");
        losses.push(loss);
        if libm::fabs(prev - loss) <= cfg.tol {
            converged = true;
            break;
        }
    }

    let iterations = losses.len() - 1;
    let report = TrainReport {
        label: String::from(run_label(hp)),
        losses,
        iterations,
        converged,
        preprocessing: None,
        wall_ms: clock.now_ms().saturating_sub(start),
    };
    Ok((p, f, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_moves_by_learning_rate() {
        let ap = AdamParams::default();
        let (state, p) = adam_step(&AdamState::new(1, 1), &Matrix::from_rows(&[[2.0]]).unwrap(), &Matrix::zeros(1, 1), &ap).unwrap();
        assert_eq!(state.t, 1);
        assert!((p[(0, 0)] + 0.001).abs() < 1e-10, "{}", p[(0, 0)]);
    }

    #[test]
    fn zero_gradient_is_a_fixed_point() {
        let ap = AdamParams::default();
        let mut state = AdamState::new(2, 2);
        let mut p = Matrix::from_rows(&[[1.0, -2.0], [0.5, 3.0]]).unwrap();
        let orig = p.clone();
        for _ in 0..100 {
            state.step(&Matrix::zeros(2, 2), &mut p, &ap).unwrap();
        }
        assert_eq!(p, orig);
        assert!(state.v.as_slice().iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn adam_defaults() {
        let ap = AdamParams::default();
        assert_eq!((ap.gamma, ap.beta1, ap.beta2, ap.epsilon), (0.001, 0.9, 0.999, 1e-8));
        assert!(AdamParams { beta1: 1.0, ..ap }.validate().is_err());
    }

    #[test]
    fn adam_shape_mismatch() {
        let mut s = AdamState::new(2, 2);
        let mut p = Matrix::zeros(2, 2);
        assert!(s.step(&Matrix::zeros(2, 1), &mut p, &AdamParams::default()).is_err());
    }

    #[test]
    fn init_is_orthonormal_and_deterministic() {
        let (p, f) = init_params(&[6, 5], 3, 42).unwrap();
        for pm in p.mats() {
            let gram = pm.t_matmul(pm).unwrap();
            assert!(gram.max_abs_diff(&Matrix::identity(3)) < 1e-10);
        }
        assert_eq!(f.mats()[1].shape(), (3, 5));
        let (p2, f2) = init_params(&[6, 5], 3, 42).unwrap();
        assert_eq!((p.clone(), f), (p2, f2));
        let (p3, _) = init_params(&[6, 5], 3, 43).unwrap();
        let mut diff = p.mats()[0].clone();
        diff.add_assign(&p3.mats()[0].scaled(-1.0)).unwrap();
        assert!(diff.frobenius() > 0.1);
        assert!(init_params(&[6, 3], 3, 0).is_err());
    }
}
