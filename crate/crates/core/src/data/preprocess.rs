use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::MultiViewDataset;
use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Lower bound applied to per-feature standard deviations before dividing.
pub const STD_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PreprocessFlags {
    pub center: bool,
    pub unit_variance: bool,
}

impl Default for PreprocessFlags {
    fn default() -> Self {
        Self { center: true, unit_variance: false }
    }
}

/// Per-view, per-feature statistics. `stds` is present iff unit variance
/// scaling was requested.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PreprocessStats {
    pub flags: PreprocessFlags,
    pub means: Vec<Vec<f64>>,
    pub stds: Option<Vec<Vec<f64>>>,
}

impl PreprocessStats {
    pub fn compute(ds: &MultiViewDataset, flags: PreprocessFlags) -> Self {
        let n = ds.n() as f64;
        let means: Vec<Vec<f64>> = ds
            .views()
            .iter()
            .map(|x| (0..x.rows()).map(|r| (0..x.cols()).fold(0.0, |acc, c| acc + x[(r, c)]) / n).collect())
            .collect();
        let stds = flags.unit_variance.then(|| {
            ds.views()
                .iter()
                .zip(&means)
                .map(|(x, mu)| {
                    (0..x.rows())
                        .map(|r| {
                            let ss = (0..x.cols()).fold(0.0, |acc, c| {
                                let d = x[(r, c)] - mu[r];
                                acc + d * d
                            });
                            libm::sqrt(ss / n).max(STD_FLOOR)
                        })
                        .collect()
                })
                .collect()
        });
        Self { flags, means, stds }
    }

    fn check(&self, ds: &MultiViewDataset) -> Result<()> {
        let dims = ds.dims();
        let mean_dims: Vec<usize> = self.means.iter().map(Vec::len).collect();
        if mean_dims != dims {
            return Err(Error::StatsMismatch(format!("stats for dims {:?}, data has {:?}", mean_dims, dims)));
        }
        if let Some(stds) = &self.stds {
            let std_dims: Vec<usize> = stds.iter().map(Vec::len).collect();
            if std_dims != dims {
                return Err(Error::StatsMismatch(format!("std stats for dims {:?}, data has {:?}", std_dims, dims)));
            }
        }
        if self.flags.unit_variance != self.stds.is_some() {
            return Err(Error::StatsMismatch("unit_variance flag disagrees with stored stds".into()));
        }
        Ok(())
    }

    /// Applies these statistics to `ds`.
    pub fn apply(&self, ds: &MultiViewDataset) -> Result<MultiViewDataset> {
        self.check(ds)?;
        let views = ds
            .views()
            .iter()
            .enumerate()
            .map(|(m, x)| {
                Matrix::from_fn(x.rows(), x.cols(), |r, c| {
                    let mut v = x[(r, c)];
                    if self.flags.center {
                        v -= self.means[m][r];
                    }
                    if let Some(stds) = &self.stds {
                        v /= stds[m][r];
                    }
                    v
                })
            })
            .collect();
        MultiViewDataset::new(views, ds.labels().map(<[usize]>::to_vec))
    }
}

/// Per-feature centering and optional unit-variance scaling.
///
/// Statistics are computed from `ds` when `stats` is `None`, otherwise the
/// given statistics are reused (the held-out path). The statistics actually
/// applied are returned alongside the transformed data. When `stats` is
/// given, its recorded flags take precedence over `flags`.
pub fn preprocess(
    ds: &MultiViewDataset,
    flags: PreprocessFlags,
    stats: Option<&PreprocessStats>,
) -> Result<(MultiViewDataset, PreprocessStats)> {
    let stats = match stats {
        Some(s) => s.clone(),
        None => PreprocessStats::compute(ds, flags),
    };
    let out = stats.apply(ds)?;
    Ok((out, stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ds_of(a: Matrix, b: Matrix) -> MultiViewDataset {
        MultiViewDataset::new(vec![a, b], None).unwrap()
    }

    #[test]
    fn centers_small_matrix() {
        let x = Matrix::from_rows(&[[1.0, 3.0], [2.0, 2.0]]).unwrap();
        let (out, stats) = preprocess(&ds_of(x.clone(), x), PreprocessFlags::default(), None).unwrap();
        assert_eq!(out.view(0), &Matrix::from_rows(&[[-1.0, 1.0], [0.0, 0.0]]).unwrap());
        assert_eq!(stats.means[0], vec![2.0, 2.0]);
        assert!(stats.stds.is_none());
    }

    #[test]
    fn centered_input_is_unchanged() {
        let x = Matrix::from_rows(&[[-1.0, 1.0], [0.5, -0.5]]).unwrap();
        let (out, _) = preprocess(&ds_of(x.clone(), x.clone()), PreprocessFlags::default(), None).unwrap();
        assert_eq!(out.view(0), &x);
    }

    #[test]
    fn centering_twice_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let a = Matrix::from_fn(4, 7, |_, _| rng.random_range(-5.0..5.0));
        let b = Matrix::from_fn(3, 7, |_, _| rng.random_range(-5.0..5.0));
        let flags = PreprocessFlags { center: true, unit_variance: true };
        let (once, _) = preprocess(&ds_of(a, b), flags, None).unwrap();
        let (twice, _) = preprocess(&once, PreprocessFlags::default(), None).unwrap();
        for m in 0..2 {
            assert!(once.view(m).max_abs_diff(twice.view(m)) < 1e-12);
        }
    }

    #[test]
    fn training_stats_applied_to_held_out_data() {
        // Hand-computed: train rows [1,2,3] and [10,20,30] → means 2, 20;
        // population stds sqrt(2/3), 10*sqrt(2/3).
        let train = Matrix::from_rows(&[[1.0, 2.0, 3.0], [10.0, 20.0, 30.0]]).unwrap();
        let test = Matrix::from_rows(&[[4.0, 0.0], [20.0, 50.0]]).unwrap();
        let flags = PreprocessFlags { center: true, unit_variance: true };
        let (_, stats) = preprocess(&ds_of(train.clone(), train), flags, None).unwrap();
        let (out, _) = preprocess(&ds_of(test.clone(), test), flags, Some(&stats)).unwrap();
        let s = libm::sqrt(2.0 / 3.0);
        let expect = [[2.0 / s, -2.0 / s], [0.0, 30.0 / (10.0 * s)]];
        for r in 0..2 {
            for c in 0..2 {
                assert!((out.view(0)[(r, c)] - expect[r][c]).abs() < 1e-12);
            }
        }
        // Held-out feature means are not re-centered.
        let mean_row1 = (out.view(0)[(1, 0)] + out.view(0)[(1, 1)]) / 2.0;
        assert!((mean_row1 - 15.0 / (10.0 * s)).abs() < 1e-12);
    }

    #[test]
    fn zero_variance_feature_uses_floor() {
        let x = Matrix::from_rows(&[[5.0, 5.0, 5.0]]).unwrap();
        let flags = PreprocessFlags { center: true, unit_variance: true };
        let (out, stats) = preprocess(&ds_of(x.clone(), x), flags, None).unwrap();
        assert_eq!(stats.stds.unwrap()[0][0], STD_FLOOR);
        assert!(out.view(0).as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn mismatched_stats_rejected() {
        let a = Matrix::zeros(2, 3);
        let b = Matrix::zeros(3, 3);
        let (_, stats) = preprocess(&ds_of(a.clone(), a.clone()), PreprocessFlags::default(), None).unwrap();
        let other = ds_of(a, b);
        assert!(matches!(preprocess(&other, PreprocessFlags::default(), Some(&stats)), Err(Error::StatsMismatch(_))));
    }
}
