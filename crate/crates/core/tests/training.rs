use mvcl_core::data::synth_generate;
use mvcl_core::loss::total_loss;
use mvcl_core::optim::{init_params, train};
use mvcl_core::{HyperParams, MultiViewDataset, SynthSpec, TrainConfig};

fn small_set(seed: u64) -> MultiViewDataset {
    synth_generate(&SynthSpec { classes: 3, per_class: 10, seed, ..SynthSpec::default() }).unwrap()
}

fn config(iters: usize) -> TrainConfig {
    TrainConfig { max_iters: iters, ..TrainConfig::new(HyperParams::new(2)) }
}

#[test]
fn first_recorded_loss_is_the_initial_objective() {
    let ds = small_set(1);
    let cfg = config(3);
    let (_, _, rep) = train(&ds, &cfg).unwrap();
    let (p, f) = init_params(&ds.dims(), 2, cfg.seed).unwrap();
    assert!((rep.losses[0] - total_loss(&p, &f, &ds, &cfg.hp).unwrap()).abs() <= 1e-12);
    assert_eq!(rep.losses.len(), rep.iterations + 1);
}

#[test]
fn huge_tolerance_stops_after_one_iteration() {
    let ds = small_set(2);
    let cfg = TrainConfig { tol: 1e300, ..config(50) };
    let (_, _, rep) = train(&ds, &cfg).unwrap();
    assert_eq!(rep.iterations, 1);
    assert!(rep.converged);
}

#[test]
fn converged_flag_agrees_with_trajectory() {
    let ds = small_set(3);
    let cfg = TrainConfig { tol: 0.05, ..config(400) };
    let (_, _, rep) = train(&ds, &cfg).unwrap();
    let n = rep.losses.len();
    let last_step = (rep.losses[n - 1] - rep.losses[n - 2]).abs();
    assert_eq!(rep.converged, last_step <= cfg.tol);
    if !rep.converged {
        assert_eq!(rep.iterations, cfg.max_iters);
    }
}

#[test]
fn replay_is_bit_identical() {
    let ds = small_set(4);
    let a = train(&ds, &config(60)).unwrap();
    let b = train(&ds, &config(60)).unwrap();
    let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&a.2.losses), bits(&b.2.losses));
    assert_eq!(a.0, b.0);
    assert_eq!(a.1, b.1);
}

#[test]
fn loss_decreases_and_stays_finite() {
    let ds = small_set(0);
    let (p, f, rep) = train(&ds, &config(200)).unwrap();
    assert!(rep.losses.iter().all(|l| l.is_finite()));
    assert!(p.mats().iter().chain(f.mats()).all(|m| m.is_finite()));
    assert!(rep.losses.last().unwrap() < &rep.losses[0], "{:?}", (rep.losses[0], rep.losses.last()));
}

#[test]
fn zero_weights_are_labelled_as_ablation() {
    let ds = small_set(5);
    let cfg = TrainConfig { max_iters: 5, ..TrainConfig::new(HyperParams::cmc(2)) };
    let (_, f, rep) = train(&ds, &cfg).unwrap();
    assert_eq!(rep.label, "CMC-ablation");
    let (_, f0) = init_params(&ds.dims(), 2, cfg.seed).unwrap();
    assert_eq!(f, f0);
}

#[test]
fn invalid_configs_are_rejected() {
    let ds = small_set(6);
    assert!(train(&ds, &TrainConfig { max_iters: 0, ..config(1) }).is_err());
    assert!(train(&ds, &TrainConfig { tol: 0.0, ..config(1) }).is_err());
    assert!(train(&ds, &TrainConfig::new(HyperParams::new(16))).is_err());
}
