//! Seeded multi-view data with a controlled information layout.
//!
//! Every view is laid out as `[shared | specific | redundant | noise]`:
//!
//! * shared rows carry the same class means in every view, plus a per-sample
//!   latent common to all views;
//! * specific rows carry class means that exist only in that view;
//! * redundant rows copy shared rows (cyclically) with fresh noise;
//! * the rest is isotropic noise.
//!
//! Class means are `N(0, 1) * 3`, independent of `noise_std`, so
//! `noise_std` alone sets the class signal-to-noise ratio.

use alloc::format;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::MultiViewDataset;
use crate::error::{Error, Result};
use crate::matrix::Matrix;

const MEAN_SCALE: f64 = 3.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSpec {
    pub classes: usize,
    pub per_class: usize,
    pub dims: Vec<usize>,
    pub shared_dims: usize,
    pub specific_dims: usize,
    pub redundant_copies: usize,
    pub noise_std: f64,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            classes: 5,
            per_class: 12,
            dims: alloc::vec![16, 16],
            shared_dims: 2,
            specific_dims: 3,
            redundant_copies: 4,
            noise_std: 1.0,
            seed: 0,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.dims.len() < 2 {
            return Err(Error::InvalidSpec(format!("need at least 2 views, got {}", self.dims.len())));
        }
        if self.classes == 0 || self.per_class == 0 {
            return Err(Error::InvalidSpec("classes and per_class must be >= 1".into()));
        }
        if !(self.noise_std > 0.0 && self.noise_std.is_finite()) {
            return Err(Error::InvalidSpec(format!("noise_std must be positive, got {}", self.noise_std)));
        }
        if self.redundant_copies > 0 && self.shared_dims == 0 {
            return Err(Error::InvalidSpec("redundant copies need at least one shared dimension".into()));
        }
        let used = self.shared_dims + self.specific_dims + self.redundant_copies;
        if let Some((m, d)) = self.dims.iter().enumerate().find(|(_, &d)| d < used || d == 0) {
            return Err(Error::InvalidSpec(format!("view {} has {} dims, layout needs {}", m, d, used.max(1))));
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.classes * self.per_class
    }
}

pub fn synth_generate(spec: &SynthSpec) -> Result<MultiViewDataset> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut gauss = move || -> f64 { StandardNormal.sample(&mut rng) };
    let sigma = spec.noise_std;
    let n = spec.n();
    let views_n = spec.dims.len();

    let shared_means: Vec<Vec<f64>> = (0..spec.classes)
        .map(|_| (0..spec.shared_dims).map(|_| gauss() * MEAN_SCALE).collect())
        .collect();
    let specific_means: Vec<Vec<Vec<f64>>> = (0..views_n)
        .map(|_| {
            (0..spec.classes)
                .map(|_| (0..spec.specific_dims).map(|_| gauss() * MEAN_SCALE).collect())
                .collect()
        })
        .collect();

    // Shared rows split the noise budget between a cross-view latent and
    // per-view noise so their marginal variance stays sigma^2.
    let half = sigma * core::f64::consts::FRAC_1_SQRT_2;
    let mut views: Vec<Matrix> = spec.dims.iter().map(|&d| Matrix::zeros(d, n)).collect();
    let labels: Vec<usize> = (0..n).map(|i| i / spec.per_class).collect();
    for (i, &c) in labels.iter().enumerate() {
        let latent: Vec<f64> = (0..spec.shared_dims).map(|_| gauss() * half).collect();
        for (m, view) in views.iter_mut().enumerate() {
            let col = view.col_mut(i);
            let mut r = 0;
            for k in 0..spec.shared_dims {
                col[r] = shared_means[c][k] + latent[k] + gauss() * half;
                r += 1;
            }
            for k in 0..spec.specific_dims {
                col[r] = specific_means[m][c][k] + gauss() * sigma;
                r += 1;
            }
            for k in 0..spec.redundant_copies {
                col[r] = col[k % spec.shared_dims] + gauss() * sigma;
                r += 1;
            }
            for v in col[r..].iter_mut() {
                *v = gauss() * sigma;
            }
        }
    }
    MultiViewDataset::new(views, Some(labels))
}
