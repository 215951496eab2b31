mod common;

use mvcl_core::data::pad_stack;
use mvcl_core::grad::{
    check_all_blocks, finite_diff_check, grad_wrt_f, grad_wrt_p, grad_wrt_p_stacked, gradients, unstack, DEFAULT_STEP,
    GRADCHECK_TOL,
};
use mvcl_core::loss::{sample_level_loss, total_loss};
use mvcl_core::matrix::vstack;
use mvcl_core::{HyperParams, Matrix, ProjectionSet};
use proptest::prelude::*;

#[test]
fn analytic_gradients_match_finite_differences() {
    let (ds, p, f) = common::random_instance(&[6, 5], 8, 3, 11);
    let report = check_all_blocks(&p, &f, &ds, &HyperParams::new(3), DEFAULT_STEP).unwrap();
    assert!(report.max_error() <= GRADCHECK_TOL, "{:?}", report);
}

#[test]
fn gradients_certified_on_three_views_and_options() {
    let (ds, p, f) = common::random_instance(&[4, 6, 5], 7, 2, 12);
    for hp in [
        HyperParams::new(2),
        HyperParams::new(2).with_weights(0.3, 2.5),
        HyperParams { fea_include_self_view: false, ..HyperParams::new(2) },
        HyperParams::new(2).with_temperature(0.5),
    ] {
        let report = check_all_blocks(&p, &f, &ds, &hp, DEFAULT_STEP).unwrap();
        assert!(report.max_error() <= GRADCHECK_TOL, "{:?} {:?}", hp, report);
    }
}

#[test]
fn cmc_weights_reduce_to_sample_gradient() {
    let (ds, p, f) = common::random_instance(&[6, 5], 8, 3, 13);
    let dp = grad_wrt_p(&p, &f, &ds, &HyperParams::cmc(3)).unwrap();
    for m in 0..2 {
        let obj = |x: &Matrix| {
            let mut q = p.clone();
            q.0[m] = x.clone();
            sample_level_loss(&q, &ds, 0.1).unwrap()
        };
        assert!(finite_diff_check(obj, &p.mats()[m], &dp[m], DEFAULT_STEP).unwrap() <= GRADCHECK_TOL);
    }
    let df = grad_wrt_f(&p, &f, &ds, &HyperParams::cmc(3)).unwrap();
    assert!(df.iter().all(|m| m.as_slice().iter().all(|&v| v == 0.0)));
}

#[test]
fn f_gradient_matches_full_gradient() {
    let (ds, p, f) = common::random_instance(&[6, 5], 8, 3, 14);
    let hp = HyperParams::new(3);
    let (loss, g) = gradients(&p, &f, &ds, &hp).unwrap();
    assert!((loss - total_loss(&p, &f, &ds, &hp).unwrap()).abs() < 1e-12);
    let df = grad_wrt_f(&p, &f, &ds, &hp).unwrap();
    for (a, b) in df.iter().zip(&g.df) {
        assert!(a.max_abs_diff(b) < 1e-12);
    }
}

#[test]
fn stacked_gradient_matches_blockwise() {
    let (ds, p, f) = common::random_instance(&[6, 5, 4], 8, 3, 15);
    let hp = HyperParams::new(3);
    let blocks = grad_wrt_p(&p, &f, &ds, &hp).unwrap();
    let stacked = pad_stack(&ds);
    let g = grad_wrt_p_stacked(&vstack(p.mats()).unwrap(), &f, &stacked, &hp).unwrap();
    for (a, b) in unstack(&g, &stacked).unwrap().iter().zip(&blocks) {
        assert!(a.max_abs_diff(b) <= 1e-10);
    }
}

#[test]
fn stacked_gradient_matches_finite_differences() {
    let (ds, p, f) = common::random_instance(&[4, 3], 5, 2, 16);
    let hp = HyperParams::new(2);
    let stacked = pad_stack(&ds);
    let pstack = vstack(p.mats()).unwrap();
    let g = grad_wrt_p_stacked(&pstack, &f, &stacked, &hp).unwrap();
    let obj = |x: &Matrix| {
        let q = ProjectionSet(unstack(x, &stacked).unwrap());
        total_loss(&q, &f, &ds, &hp).unwrap()
    };
    assert!(finite_diff_check(obj, &pstack, &g, DEFAULT_STEP).unwrap() <= GRADCHECK_TOL);
}

#[test]
fn stacked_gradient_rejects_misaligned_blocks() {
    let (ds, p, f) = common::random_instance(&[4, 3], 5, 2, 17);
    let stacked = pad_stack(&ds);
    let bad = Matrix::zeros(6, 2);
    assert!(grad_wrt_p_stacked(&bad, &f, &stacked, &HyperParams::new(2)).is_err());
    let _ = p;
}

#[test]
fn gradient_shape_errors() {
    let (ds, p, f) = common::random_instance(&[4, 3], 5, 2, 18);
    let wrong = ProjectionSet(vec![p.mats()[0].clone(), Matrix::zeros(4, 2)]);
    assert!(grad_wrt_p(&wrong, &f, &ds, &HyperParams::new(2)).is_err());
    assert!(grad_wrt_f(&p, &mvcl_core::RecoverySet(vec![]), &ds, &HyperParams::new(2)).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn gradients_are_orthogonal_to_parameters(seed in 0u64..10_000, views in 2usize..4, n in 2usize..10, d in 1usize..4) {
        let dims: Vec<usize> = (0..views).map(|m| d + 2 + m).collect();
        let (ds, p, f) = common::random_instance(&dims, n, d, seed);
        let (_, g) = gradients(&p, &f, &ds, &HyperParams::new(d)).unwrap();
        for m in 0..views {
            prop_assert!(g.dp[m].dot(&p.mats()[m]).abs() <= 1e-9);
            prop_assert!(g.df[m].dot(&f.mats()[m]).abs() <= 1e-9);
        }
    }

    #[test]
    fn p_gradient_ignores_sample_order(seed in 0u64..10_000, perm in Just((0..6usize).collect::<Vec<_>>()).prop_shuffle()) {
        let (ds, p, f) = common::random_instance(&[5, 4], 6, 3, seed);
        let hp = HyperParams::new(3);
        let a = grad_wrt_p(&p, &f, &ds, &hp).unwrap();
        let b = grad_wrt_p(&p, &f, &ds.permuted(&perm).unwrap(), &hp).unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!(x.max_abs_diff(y) <= 1e-9);
        }
    }
}
