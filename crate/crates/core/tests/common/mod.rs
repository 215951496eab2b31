//! Brute-force reference implementations, written with nested loops over
//! plain `Vec<Vec<f64>>` so they share no code with the library's
//! matrix-based heads.
#![allow(dead_code)]

use mvcl_core::{Matrix, MultiViewDataset, ProjectionSet, RecoverySet};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Dense = Vec<Vec<f64>>;

pub fn to_dense(m: &Matrix) -> Dense {
    m.to_rows()
}

fn sim(u: &[f64], v: &[f64], sigma: f64) -> f64 {
    let mut uv = 0.0;
    let mut uu = 0.0;
    let mut vv = 0.0;
    for k in 0..u.len() {
        uv += u[k] * v[k];
        uu += u[k] * u[k];
        vv += v[k] * v[k];
    }
    uv / (uu.sqrt().max(1e-12) * vv.sqrt().max(1e-12) * sigma)
}

/// `Pᵀ x_i` for every sample, returned as a list of sample vectors.
fn embed(p: &Dense, x: &Dense) -> Vec<Vec<f64>> {
    let (dm, d, n) = (p.len(), p[0].len(), x[0].len());
    (0..n)
        .map(|i| {
            (0..d)
                .map(|k| {
                    let mut s = 0.0;
                    for r in 0..dm {
                        s += p[r][k] * x[r][i];
                    }
                    s
                })
                .collect()
        })
        .collect()
}

struct Instance {
    views: Vec<Dense>,
    ps: Vec<Dense>,
}

fn instance(p: &ProjectionSet, ds: &MultiViewDataset) -> Instance {
    Instance { views: ds.views().iter().map(to_dense).collect(), ps: p.mats().iter().map(to_dense).collect() }
}

pub fn sample_loss(p: &ProjectionSet, ds: &MultiViewDataset, sigma: f64) -> f64 {
    let inst = instance(p, ds);
    let v_count = inst.views.len();
    let ys: Vec<Vec<Vec<f64>>> = (0..v_count).map(|m| embed(&inst.ps[m], &inst.views[m])).collect();
    let n = ys[0].len();
    let mut total = 0.0;
    for m in 0..v_count {
        let mut per_view = 0.0;
        for i in 0..n {
            let mut a = 0.0;
            let mut b = 0.0;
            for v in 0..v_count {
                if v == m {
                    continue;
                }
                for j in 0..n {
                    let e = sim(&ys[m][i], &ys[v][j], sigma).exp();
                    if j == i {
                        a += e;
                    } else {
                        b += e;
                    }
                }
            }
            per_view += -(a / (a + b)).ln();
        }
        total += per_view / n as f64;
    }
    total
}

pub fn feature_loss(p: &ProjectionSet, ds: &MultiViewDataset, sigma: f64, include_self: bool) -> f64 {
    let inst = instance(p, ds);
    let v_count = inst.views.len();
    let ys: Vec<Vec<Vec<f64>>> = (0..v_count).map(|m| embed(&inst.ps[m], &inst.views[m])).collect();
    let n = ys[0].len();
    let d = ys[0][0].len();
    let row = |m: usize, k: usize| -> Vec<f64> { (0..n).map(|i| ys[m][i][k]).collect() };
    let mut total = 0.0;
    for m in 0..v_count {
        for v in 0..v_count {
            if v == m && !include_self {
                continue;
            }
            let mut acc = 0.0;
            for k in 0..d {
                let num = sim(&row(m, k), &row(v, k), sigma).exp();
                let mut den = 0.0;
                for l in 0..d {
                    den += sim(&row(m, k), &row(v, l), sigma).exp();
                }
                acc += -(num / den).ln();
            }
            total += acc / d as f64;
        }
    }
    total
}

pub fn recovery_loss(p: &ProjectionSet, f: &RecoverySet, ds: &MultiViewDataset, sigma: f64) -> f64 {
    let inst = instance(p, ds);
    let fs: Vec<Dense> = f.mats().iter().map(to_dense).collect();
    let v_count = inst.views.len();
    let ys: Vec<Vec<Vec<f64>>> = (0..v_count).map(|m| embed(&inst.ps[m], &inst.views[m])).collect();
    let n = ys[0].len();
    let mut total = 0.0;
    for m in 0..v_count {
        let dm = inst.views[m].len();
        let d = fs[m].len();
        let x_col = |i: usize| -> Vec<f64> { (0..dm).map(|r| inst.views[m][r][i]).collect() };
        for v in 0..v_count {
            if v == m {
                continue;
            }
            // z_j = F_mᵀ y_j^v
            let z: Vec<Vec<f64>> = (0..n)
                .map(|j| {
                    (0..dm)
                        .map(|r| {
                            let mut s = 0.0;
                            for k in 0..d {
                                s += fs[m][k][r] * ys[v][j][k];
                            }
                            s
                        })
                        .collect()
                })
                .collect();
            let mut acc = 0.0;
            for i in 0..n {
                let xi = x_col(i);
                let num = sim(&xi, &z[i], sigma).exp();
                let mut den = 0.0;
                for zj in &z {
                    den += sim(&xi, zj, sigma).exp();
                }
                acc += -(num / den).ln();
            }
            total += acc / n as f64;
        }
    }
    total
}

pub fn random_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
}

/// Random dataset, projections and recovery matrices.
pub fn random_instance(dims: &[usize], n: usize, d: usize, seed: u64) -> (MultiViewDataset, ProjectionSet, RecoverySet) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let views = dims.iter().map(|&dm| random_matrix(dm, n, &mut rng)).collect();
    let ds = MultiViewDataset::new(views, None).unwrap();
    let p = ProjectionSet(dims.iter().map(|&dm| random_matrix(dm, d, &mut rng)).collect());
    let f = RecoverySet(dims.iter().map(|&dm| random_matrix(d, dm, &mut rng)).collect());
    (ds, p, f)
}
