#![allow(dead_code)]

use class2simi::model::{LossSettings, Objective};
use class2simi::noise::blob_means;
use class2simi::{ClassPosterior, ClassTransitionMatrix, MlpModel, Result};
use ndarray::{Array2, ArrayView2};
use rand_distr::{Distribution, StandardNormal};

pub const FD_STEP: f64 = 1e-5;
/// Absolute floor on the relative-error denominator, so parameters whose
/// gradient is essentially zero are compared in absolute terms.
pub const FD_FLOOR: f64 = 1e-6;

pub fn normal_matrix(rows: usize, cols: usize, seed: u64) -> Array2<f64> {
    let mut r = class2simi::rng::seeded(seed);
    Array2::from_shape_simple_fn((rows, cols), || StandardNormal.sample(&mut r))
}

/// Central differences on every parameter; returns the largest relative
/// error against the analytic gradient.
pub fn fd_max_rel_error(
    objective: &Objective<'_>,
    model: &MlpModel,
    x: ArrayView2<'_, f64>,
    labels: &[usize],
    settings: LossSettings,
) -> f64 {
    let (_, grads) = objective.loss_and_grad(model, x, labels, settings).unwrap();
    let analytic = grads.flat();
    let base = model.flat_params();
    let mut probe = model.clone();
    let mut params = base.clone();
    let mut eval = |params: &[f64]| {
        probe.set_flat_params(params).unwrap();
        objective
            .loss_with_weights_from(model, &probe, x, labels, settings)
            .unwrap()
    };
    let mut worst: f64 = 0.0;
    for k in 0..base.len() {
        params[k] = base[k] + FD_STEP;
        let up = eval(&params);
        params[k] = base[k] - FD_STEP;
        let down = eval(&params);
        params[k] = base[k];
        let numeric = (up - down) / (2.0 * FD_STEP);
        let denom = numeric.abs().max(analytic[k].abs()).max(FD_FLOOR);
        worst = worst.max((numeric - analytic[k]).abs() / denom);
    }
    worst
}

/// Noisy-label posterior of isotropic Gaussian blobs with equal priors:
/// the exact clean posterior pushed through `tc`.
pub struct GaussianNoisyPosterior {
    pub means: Array2<f64>,
    pub spread: f64,
    pub tc: ClassTransitionMatrix,
}

impl GaussianNoisyPosterior {
    pub fn new(classes: usize, dim: usize, separation: f64, spread: f64, tc: ClassTransitionMatrix) -> Self {
        Self {
            means: blob_means(classes, dim, separation),
            spread,
            tc,
        }
    }
}

impl ClassPosterior for GaussianNoisyPosterior {
    fn num_classes(&self) -> usize {
        self.means.nrows()
    }

    fn posteriors(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        let c = self.num_classes();
        let mut out = Array2::zeros((x.nrows(), c));
        for (i, row) in x.rows().into_iter().enumerate() {
            let logits: Vec<f64> = (0..c)
                .map(|k| {
                    let d2: f64 = row
                        .iter()
                        .zip(self.means.row(k))
                        .map(|(a, b)| (a - b).powi(2))
                        .sum();
                    -d2 / (2.0 * self.spread * self.spread)
                })
                .collect();
            let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let w: Vec<f64> = logits.iter().map(|l| (l - m).exp()).collect();
            let z: f64 = w.iter().sum();
            for j in 0..c {
                out[[i, j]] = (0..c).map(|k| w[k] / z * self.tc.get(k, j)).sum();
            }
        }
        Ok(out)
    }
}
