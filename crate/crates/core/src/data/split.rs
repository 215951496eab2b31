use alloc::format;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::MultiViewDataset;
use crate::error::{Error, Result};

/// `per_class` training samples drawn at random from every class, the
/// remainder held out, repeated `repeats` times.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitPlan {
    pub per_class: usize,
    pub repeats: usize,
    pub seed: u64,
}

impl SplitPlan {
    pub fn new(per_class: usize, repeats: usize, seed: u64) -> Self {
        Self { per_class, repeats, seed }
    }

    pub fn validate(&self) -> Result<()> {
        if self.per_class == 0 {
            return Err(Error::InvalidParam("training samples per class must be >= 1".into()));
        }
        if self.repeats == 0 {
            return Err(Error::InvalidParam("repeats must be >= 1".into()));
        }
        Ok(())
    }
}

/// Mixes the base seed with the repeat index (splitmix64 finalizer).
pub fn split_seed(seed: u64, repeat_index: usize) -> u64 {
    let mut z = seed ^ (repeat_index as u64).wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Train and test sample indices (each ascending) for one repeat.
pub fn split_indices(ds: &MultiViewDataset, plan: &SplitPlan, repeat_index: usize) -> Result<(Vec<usize>, Vec<usize>)> {
    plan.validate()?;
    if repeat_index >= plan.repeats {
        return Err(Error::InvalidParam(format!("repeat index {} out of range for {} repeats", repeat_index, plan.repeats)));
    }
    let classes = ds.class_members()?;
    if let Some((c, members)) = classes.iter().find(|(_, m)| m.len() <= plan.per_class) {
        return Err(Error::SplitInfeasible(format!(
            "class {} has {} samples, cannot take {} for training and keep a test sample",
            c,
            members.len(),
            plan.per_class
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(split_seed(plan.seed, repeat_index));
    let mut train = Vec::new();
    let mut test = Vec::new();
    for members in classes.values() {
        let mut shuffled = members.clone();
        shuffled.shuffle(&mut rng);
        train.extend_from_slice(&shuffled[..plan.per_class]);
        test.extend_from_slice(&shuffled[plan.per_class..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

pub fn split(ds: &MultiViewDataset, plan: &SplitPlan, repeat_index: usize) -> Result<(MultiViewDataset, MultiViewDataset)> {
    let (train, test) = split_indices(ds, plan, repeat_index)?;
    Ok((ds.select(&train)?, ds.select(&test)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::Matrix;
    use alloc::collections::BTreeSet;
    use alloc::vec;

    fn labelled(classes: usize, per_class: usize) -> MultiViewDataset {
        let n = classes * per_class;
        let a = Matrix::from_fn(2, n, |r, c| (r * n + c) as f64);
        let b = Matrix::from_fn(3, n, |r, c| -((r * n + c) as f64));
        let labels = (0..n).map(|i| i / per_class).collect();
        MultiViewDataset::new(vec![a, b], Some(labels)).unwrap()
    }

    #[test]
    fn yale_shaped_counts() {
        let ds = labelled(15, 11);
        let (train, test) = split(&ds, &SplitPlan::new(4, 5, 7), 0).unwrap();
        assert_eq!(train.n(), 60);
        assert_eq!(test.n(), 105);
    }

    #[test]
    fn one_left_per_class() {
        let ds = labelled(2, 3);
        let (_, test) = split(&ds, &SplitPlan::new(2, 1, 0), 0).unwrap();
        assert_eq!(test.labels().unwrap(), &[0, 1]);
    }

    #[test]
    fn split_is_a_partition_with_same_columns_in_every_view() {
        let ds = labelled(4, 6);
        let plan = SplitPlan::new(3, 3, 11);
        for r in 0..3 {
            let (train, test) = split_indices(&ds, &plan, r).unwrap();
            let all: BTreeSet<usize> = train.iter().chain(&test).copied().collect();
            assert_eq!(all.len(), ds.n());
            assert_eq!(train.len() + test.len(), ds.n());
            let (tr, _) = split(&ds, &plan, r).unwrap();
            for (k, &i) in train.iter().enumerate() {
                assert_eq!(tr.view(0).col(k), ds.view(0).col(i));
                assert_eq!(tr.view(1).col(k), ds.view(1).col(i));
            }
            for c in 0..4 {
                assert_eq!(tr.labels().unwrap().iter().filter(|&&l| l == c).count(), 3);
            }
        }
    }

    #[test]
    fn repeats_differ_and_replay() {
        let ds = labelled(3, 10);
        let mut differing = 0;
        for trial in 0..100u64 {
            let plan = SplitPlan::new(4, 2, trial);
            let a = split_indices(&ds, &plan, 0).unwrap().0;
            let b = split_indices(&ds, &plan, 1).unwrap().0;
            assert_eq!(a, split_indices(&ds, &plan, 0).unwrap().0);
            if a != b {
                differing += 1;
            }
        }
        // P(identical) = (1/C(10,4))^3 per trial.
        assert_eq!(differing, 100);
    }

    #[test]
    fn errors() {
        let ds = labelled(2, 3);
        assert!(matches!(split(&ds, &SplitPlan::new(3, 1, 0), 0), Err(Error::SplitInfeasible(_))));
        let unlabelled = ds.clone().with_labels(None).unwrap();
        assert!(matches!(split(&unlabelled, &SplitPlan::new(1, 1, 0), 0), Err(Error::LabelsRequired)));
        assert!(split(&ds, &SplitPlan::new(1, 1, 0), 1).is_err());
    }
}
