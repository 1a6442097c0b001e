//! Anchor-point estimation of the class transition matrix.
//!
//! For each class `i` an anchor is picked from the pool: the point whose
//! predicted noisy posterior `P(noisy = i | x)` sits at the requested
//! percentile. If that point truly belongs to class `i`, its noisy posterior
//! is row `i` of the transition matrix.

use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};
use crate::model::MlpModel;
use crate::transition::{class2simi, ClassPrior, ClassTransitionMatrix, SimilarityTransitionMatrix};

pub const DEFAULT_ANCHOR_PERCENTILE: f64 = 97.0;

/// Anything that maps a feature batch to per-row class distributions.
pub trait ClassPosterior {
    fn num_classes(&self) -> usize;
    fn posteriors(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>>;
}

impl ClassPosterior for MlpModel {
    fn num_classes(&self) -> usize {
        MlpModel::num_classes(self)
    }

    fn posteriors(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        self.predict(x)
    }
}

/// Index of the pool point whose score is the nearest-rank `percentile` of
/// `scores` (100 is the maximum). Ties resolve to the lowest index.
fn percentile_index(scores: &[f64], percentile: f64) -> usize {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]).then(b.cmp(&a)));
    let n = scores.len();
    let rank = ((percentile / 100.0) * n as f64).ceil() as usize;
    order[rank.clamp(1, n) - 1]
}

pub fn estimate_tc_anchor<G: ClassPosterior + ?Sized>(
    g: &G,
    pool: ArrayView2<'_, f64>,
    percentile: f64,
) -> Result<ClassTransitionMatrix> {
    if !(percentile > 0.0 && percentile <= 100.0) {
        return Err(Error::arg("percentile", format!("{percentile} is outside (0, 100]")));
    }
    if pool.nrows() == 0 {
        return Err(Error::arg("pool", "empty"));
    }
    let c = g.num_classes();
    let probs = g.posteriors(pool)?;
    if probs.ncols() != c {
        return Err(Error::DimensionMismatch {
            what: "posterior width",
            expected: c,
            actual: probs.ncols(),
        });
    }
    let mut entries = Array2::zeros((c, c));
    for i in 0..c {
        let scores = probs.column(i).to_vec();
        let anchor = percentile_index(&scores, percentile);
        if !(scores[anchor] > 0.0) {
            return Err(Error::NoAnchor(i));
        }
        let row = probs.row(anchor);
        let sum = row.sum();
        if !(sum > 0.0) || !sum.is_finite() {
            return Err(Error::NoAnchor(i));
        }
        entries.row_mut(i).assign(&row.mapv(|v| v.max(0.0) / sum));
        let residue = 1.0 - entries.row(i).sum();
        entries[[i, i]] = (entries[[i, i]] + residue).max(0.0);
    }
    ClassTransitionMatrix::new(entries)
}

/// Similarity transition matrix from an estimated class transition matrix.
pub fn estimate_ts(tc_hat: &ClassTransitionMatrix, prior: &ClassPrior) -> Result<SimilarityTransitionMatrix> {
    class2simi(tc_hat, prior)
}
