//! Pointwise and pairwise losses with exact gradients.
//!
//! Every loss is first computed on the softmax output together with its
//! gradient with respect to those probabilities; [`MlpModel::backward`]
//! carries that gradient the rest of the way. All losses are means over the
//! batch (pointwise) or over the enumerated pairs (pairwise), and every log
//! argument is clamped to `[eps, 1 - eps]` with zero gradient outside.

use ndarray::{Array2, ArrayView1, ArrayView2};

use super::mlp::{Gradients, MlpModel};
use crate::error::{Error, Result};
use crate::pairing::{enumerate_pairs, PairBatch};
use crate::transition::{ClassTransitionMatrix, SimilarityTransitionMatrix};

pub const DEFAULT_PROBABILITY_CLAMP: f64 = 1e-7;
pub const DEFAULT_REWEIGHT_CAP: f64 = 10.0;

/// Clamped value and the derivative of the clamp (1 inside, 0 outside).
#[inline]
fn clamp_prob(v: f64, eps: f64) -> (f64, f64) {
    if v < eps {
        (eps, 0.0)
    } else if v > 1.0 - eps {
        (1.0 - eps, 0.0)
    } else {
        (v, 1.0)
    }
}

/// Loss value plus `d loss / d probs`.
#[derive(Clone, Debug)]
pub struct ProbLoss {
    pub value: f64,
    pub prob_grad: Array2<f64>,
}

/// Predicted clean similarity: the inner product of two class distributions.
pub fn pairwise_similarity(p: ArrayView1<'_, f64>, q: ArrayView1<'_, f64>) -> f64 {
    p.dot(&q)
}

/// Noisy similarity posterior `T01 (1 - s) + T11 s`.
pub fn noisy_similarity(s_hat: f64, ts: &SimilarityTransitionMatrix) -> f64 {
    ts.t01() * (1.0 - s_hat) + ts.t11() * s_hat
}

fn check_labels(probs: ArrayView2<'_, f64>, labels: &[usize]) -> Result<()> {
    if labels.len() != probs.nrows() {
        return Err(Error::DimensionMismatch {
            what: "label count",
            expected: probs.nrows(),
            actual: labels.len(),
        });
    }
    if probs.nrows() == 0 {
        return Err(Error::arg("batch", "empty"));
    }
    let c = probs.ncols();
    if let Some((index, &label)) = labels.iter().enumerate().find(|(_, &l)| l >= c) {
        return Err(Error::LabelOutOfRange {
            index,
            label,
            classes: c,
        });
    }
    Ok(())
}

fn check_matrix(probs: ArrayView2<'_, f64>, tc: &ClassTransitionMatrix) -> Result<()> {
    if tc.num_classes() != probs.ncols() {
        return Err(Error::DimensionMismatch {
            what: "transition matrix",
            expected: probs.ncols(),
            actual: tc.num_classes(),
        });
    }
    Ok(())
}

fn check_pairs(pb: &PairBatch, probs: ArrayView2<'_, f64>) -> Result<()> {
    if pb.is_empty() {
        return Err(Error::arg("pair_batch", "empty"));
    }
    if pb.batch_size() != probs.nrows() {
        return Err(Error::DimensionMismatch {
            what: "pair batch size",
            expected: probs.nrows(),
            actual: pb.batch_size(),
        });
    }
    Ok(())
}

/// Mean categorical cross-entropy.
pub fn ce_on_probs(probs: ArrayView2<'_, f64>, labels: &[usize], eps: f64) -> Result<ProbLoss> {
    check_labels(probs, labels)?;
    let n = labels.len() as f64;
    let mut grad = Array2::zeros(probs.raw_dim());
    let mut value = 0.0;
    for (i, &y) in labels.iter().enumerate() {
        let (p, dp) = clamp_prob(probs[[i, y]], eps);
        value -= p.ln();
        grad[[i, y]] = -dp / (p * n);
    }
    Ok(ProbLoss {
        value: value / n,
        prob_grad: grad,
    })
}

/// Cross-entropy on the forward-corrected posterior `q = T^T p`.
pub fn forward_on_probs(
    probs: ArrayView2<'_, f64>,
    labels: &[usize],
    tc: &ClassTransitionMatrix,
    eps: f64,
) -> Result<ProbLoss> {
    check_labels(probs, labels)?;
    check_matrix(probs, tc)?;
    let n = labels.len() as f64;
    let column = |y: usize| tc.entries().column(y);
    let mut grad = Array2::zeros(probs.raw_dim());
    let mut value = 0.0;
    for (i, &y) in labels.iter().enumerate() {
        let q = probs.row(i).dot(&column(y));
        let (q, dq) = clamp_prob(q, eps);
        value -= q.ln();
        let scale = -dq / (q * n);
        grad.row_mut(i).scaled_add(scale, &column(y));
    }
    Ok(ProbLoss {
        value: value / n,
        prob_grad: grad,
    })
}

/// Importance weights `beta = p_y / (T^T p)_y` for the reweighted
/// cross-entropy, capped at `w_max`.
pub fn reweight_weights(
    probs: ArrayView2<'_, f64>,
    labels: &[usize],
    tc: &ClassTransitionMatrix,
    eps: f64,
    w_max: f64,
) -> Result<Vec<f64>> {
    check_labels(probs, labels)?;
    check_matrix(probs, tc)?;
    Ok(labels
        .iter()
        .enumerate()
        .map(|(i, &y)| {
            let (q, _) = clamp_prob(probs.row(i).dot(&tc.entries().column(y)), eps);
            let (p, _) = clamp_prob(probs[[i, y]], eps);
            reweight_beta(p, q, w_max)
        })
        .collect())
}

/// Cross-entropy with fixed per-point weights.
pub fn weighted_ce_on_probs(
    probs: ArrayView2<'_, f64>,
    labels: &[usize],
    weights: &[f64],
    eps: f64,
) -> Result<ProbLoss> {
    check_labels(probs, labels)?;
    if weights.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            what: "weight count",
            expected: labels.len(),
            actual: weights.len(),
        });
    }
    let n = labels.len() as f64;
    let mut grad = Array2::zeros(probs.raw_dim());
    let mut value = 0.0;
    for ((i, &y), &beta) in labels.iter().enumerate().zip(weights) {
        let (p, dp) = clamp_prob(probs[[i, y]], eps);
        value -= beta * p.ln();
        grad[[i, y]] = -beta * dp / (p * n);
    }
    Ok(ProbLoss {
        value: value / n,
        prob_grad: grad,
    })
}

/// Importance-reweighted cross-entropy: each point's clean-posterior loss is
/// weighted by [`reweight_weights`], held constant for differentiation.
pub fn reweight_on_probs(
    probs: ArrayView2<'_, f64>,
    labels: &[usize],
    tc: &ClassTransitionMatrix,
    eps: f64,
    w_max: f64,
) -> Result<ProbLoss> {
    let weights = reweight_weights(probs, labels, tc, eps, w_max)?;
    weighted_ce_on_probs(probs, labels, &weights, eps)
}

/// Accumulates `d loss / d s_hat` for each pair into the probability
/// gradient: `d s_hat / d p_i = p_j` and vice versa.
fn scatter_pair_grad(grad: &mut Array2<f64>, probs: ArrayView2<'_, f64>, i: usize, j: usize, ds: f64) {
    if ds == 0.0 {
        return;
    }
    grad.row_mut(i).scaled_add(ds, &probs.row(j));
    grad.row_mut(j).scaled_add(ds, &probs.row(i));
}

/// Mean binary cross-entropy between noisy similarity labels and the
/// transition-corrected similarity `T01 (1 - s) + T11 s`.
pub fn c2s_on_probs(
    pb: &PairBatch,
    probs: ArrayView2<'_, f64>,
    ts: &SimilarityTransitionMatrix,
    eps: f64,
) -> Result<ProbLoss> {
    check_pairs(pb, probs)?;
    let m = pb.len() as f64;
    let slope = ts.t11() - ts.t01();
    let mut grad = Array2::zeros(probs.raw_dim());
    let mut value = 0.0;
    for ((i, j), h) in pb.iter() {
        let s = pairwise_similarity(probs.row(i), probs.row(j));
        let (sbar, dclamp) = clamp_prob(noisy_similarity(s, ts), eps);
        let d_sbar = if h == 1 {
            value -= sbar.ln();
            -1.0 / sbar
        } else {
            value -= (1.0 - sbar).ln();
            1.0 / (1.0 - sbar)
        };
        scatter_pair_grad(&mut grad, probs, i, j, d_sbar * dclamp * slope / m);
    }
    Ok(ProbLoss {
        value: value / m,
        prob_grad: grad,
    })
}

/// Per-pair weights `P(H = h) / P(noisy H = h)` from the current model,
/// capped at `w_max`.
pub fn r_c2s_weights(
    pb: &PairBatch,
    probs: ArrayView2<'_, f64>,
    ts: &SimilarityTransitionMatrix,
    eps: f64,
    w_max: f64,
) -> Result<Vec<f64>> {
    check_pairs(pb, probs)?;
    Ok(pb
        .iter()
        .map(|((i, j), h)| {
            let s_raw = pairwise_similarity(probs.row(i), probs.row(j));
            let (s, _) = clamp_prob(s_raw, eps);
            let (sbar, _) = clamp_prob(noisy_similarity(s_raw, ts), eps);
            if h == 1 {
                reweight_beta(s, sbar, w_max)
            } else {
                reweight_beta(1.0 - s, 1.0 - sbar, w_max)
            }
        })
        .collect())
}

/// Binary cross-entropy on the clean similarity `s` with fixed per-pair
/// weights.
pub fn weighted_pair_bce_on_probs(
    pb: &PairBatch,
    probs: ArrayView2<'_, f64>,
    weights: &[f64],
    eps: f64,
) -> Result<ProbLoss> {
    check_pairs(pb, probs)?;
    if weights.len() != pb.len() {
        return Err(Error::DimensionMismatch {
            what: "weight count",
            expected: pb.len(),
            actual: weights.len(),
        });
    }
    let m = pb.len() as f64;
    let mut grad = Array2::zeros(probs.raw_dim());
    let mut value = 0.0;
    for (((i, j), h), &beta) in pb.iter().zip(weights) {
        let (s, ds_clamp) = clamp_prob(pairwise_similarity(probs.row(i), probs.row(j)), eps);
        let (nll, d_s) = if h == 1 {
            (-s.ln(), -1.0 / s)
        } else {
            (-(1.0 - s).ln(), 1.0 / (1.0 - s))
        };
        value += beta * nll;
        scatter_pair_grad(&mut grad, probs, i, j, beta * d_s * ds_clamp / m);
    }
    Ok(ProbLoss {
        value: value / m,
        prob_grad: grad,
    })
}

/// Reweighted pairwise loss on the clean similarity head: each pair's
/// `BCE(s, h)` is weighted by [`r_c2s_weights`], held constant for
/// differentiation.
pub fn r_c2s_on_probs(
    pb: &PairBatch,
    probs: ArrayView2<'_, f64>,
    ts: &SimilarityTransitionMatrix,
    eps: f64,
    w_max: f64,
) -> Result<ProbLoss> {
    let weights = r_c2s_weights(pb, probs, ts, eps, w_max)?;
    weighted_pair_bce_on_probs(pb, probs, &weights, eps)
}

fn reweight_beta(clean: f64, noisy: f64, w_max: f64) -> f64 {
    (clean / noisy).clamp(0.0, w_max)
}

/// Which loss a training run minimizes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    Ce,
    ForwardPointwise,
    ReweightPointwise,
    FClass2simi,
    RClass2simi,
}

impl LossKind {
    pub fn is_pairwise(self) -> bool {
        matches!(self, LossKind::FClass2simi | LossKind::RClass2simi)
    }
}

/// A loss bound to the transition matrix it needs.
#[derive(Clone, Copy, Debug)]
pub enum Objective<'a> {
    CrossEntropy,
    Forward(&'a ClassTransitionMatrix),
    Reweight(&'a ClassTransitionMatrix),
    FClass2Simi(&'a SimilarityTransitionMatrix),
    RClass2Simi(&'a SimilarityTransitionMatrix),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossSettings {
    pub eps: f64,
    pub w_max: f64,
}

impl Default for LossSettings {
    fn default() -> Self {
        Self {
            eps: DEFAULT_PROBABILITY_CLAMP,
            w_max: DEFAULT_REWEIGHT_CAP,
        }
    }
}

impl Objective<'_> {
    pub fn kind(&self) -> LossKind {
        match self {
            Objective::CrossEntropy => LossKind::Ce,
            Objective::Forward(_) => LossKind::ForwardPointwise,
            Objective::Reweight(_) => LossKind::ReweightPointwise,
            Objective::FClass2Simi(_) => LossKind::FClass2simi,
            Objective::RClass2Simi(_) => LossKind::RClass2simi,
        }
    }

    /// Loss on softmax outputs given the batch's noisy class labels; pairwise
    /// objectives enumerate the batch's pairs first.
    pub fn on_probs(
        &self,
        probs: ArrayView2<'_, f64>,
        labels: &[usize],
        settings: LossSettings,
    ) -> Result<ProbLoss> {
        let LossSettings { eps, w_max } = settings;
        match *self {
            Objective::CrossEntropy => ce_on_probs(probs, labels, eps),
            Objective::Forward(tc) => forward_on_probs(probs, labels, tc, eps),
            Objective::Reweight(tc) => reweight_on_probs(probs, labels, tc, eps, w_max),
            Objective::FClass2Simi(ts) => {
                check_labels(probs, labels)?;
                c2s_on_probs(&enumerate_pairs(labels)?, probs, ts, eps)
            }
            Objective::RClass2Simi(ts) => {
                check_labels(probs, labels)?;
                r_c2s_on_probs(&enumerate_pairs(labels)?, probs, ts, eps, w_max)
            }
        }
    }

    pub fn loss(
        &self,
        model: &MlpModel,
        x: ArrayView2<'_, f64>,
        labels: &[usize],
        settings: LossSettings,
    ) -> Result<f64> {
        let probs = model.predict(x)?;
        Ok(self.on_probs(probs.view(), labels, settings)?.value)
    }

    /// Loss at `model` with importance weights taken from `anchor` and held
    /// fixed. This is the function whose gradient at `model == anchor` is
    /// [`Objective::loss_and_grad`]; for unweighted objectives it equals
    /// [`Objective::loss`].
    pub fn loss_with_weights_from(
        &self,
        anchor: &MlpModel,
        model: &MlpModel,
        x: ArrayView2<'_, f64>,
        labels: &[usize],
        settings: LossSettings,
    ) -> Result<f64> {
        let LossSettings { eps, w_max } = settings;
        match *self {
            Objective::Reweight(tc) => {
                let weights = reweight_weights(anchor.predict(x)?.view(), labels, tc, eps, w_max)?;
                Ok(weighted_ce_on_probs(model.predict(x)?.view(), labels, &weights, eps)?.value)
            }
            Objective::RClass2Simi(ts) => {
                let pb = enumerate_pairs(labels)?;
                let weights = r_c2s_weights(&pb, anchor.predict(x)?.view(), ts, eps, w_max)?;
                Ok(weighted_pair_bce_on_probs(&pb, model.predict(x)?.view(), &weights, eps)?.value)
            }
            _ => self.loss(model, x, labels, settings),
        }
    }

    pub fn loss_and_grad(
        &self,
        model: &MlpModel,
        x: ArrayView2<'_, f64>,
        labels: &[usize],
        settings: LossSettings,
    ) -> Result<(f64, Gradients)> {
        let (probs, cache) = model.forward(x)?;
        let out = self.on_probs(probs.view(), labels, settings)?;
        Ok((out.value, model.backward(&cache, &out.prob_grad)?))
    }
}

pub fn loss_ce(model: &MlpModel, x: ArrayView2<'_, f64>, labels: &[usize], eps: f64) -> Result<f64> {
    let s = LossSettings { eps, ..Default::default() };
    Objective::CrossEntropy.loss(model, x, labels, s)
}

pub fn grad_ce(model: &MlpModel, x: ArrayView2<'_, f64>, labels: &[usize], eps: f64) -> Result<Gradients> {
    let s = LossSettings { eps, ..Default::default() };
    Ok(Objective::CrossEntropy.loss_and_grad(model, x, labels, s)?.1)
}

pub fn loss_forward_pointwise(
    model: &MlpModel,
    x: ArrayView2<'_, f64>,
    labels: &[usize],
    tc: &ClassTransitionMatrix,
    eps: f64,
) -> Result<f64> {
    let s = LossSettings { eps, ..Default::default() };
    Objective::Forward(tc).loss(model, x, labels, s)
}

pub fn grad_forward_pointwise(
    model: &MlpModel,
    x: ArrayView2<'_, f64>,
    labels: &[usize],
    tc: &ClassTransitionMatrix,
    eps: f64,
) -> Result<Gradients> {
    let s = LossSettings { eps, ..Default::default() };
    Ok(Objective::Forward(tc).loss_and_grad(model, x, labels, s)?.1)
}

pub fn loss_c2s(
    pb: &PairBatch,
    probs: ArrayView2<'_, f64>,
    ts: &SimilarityTransitionMatrix,
    eps: f64,
) -> Result<f64> {
    Ok(c2s_on_probs(pb, probs, ts, eps)?.value)
}

pub fn grad_c2s(
    pb: &PairBatch,
    model: &MlpModel,
    x: ArrayView2<'_, f64>,
    ts: &SimilarityTransitionMatrix,
    eps: f64,
) -> Result<Gradients> {
    let (probs, cache) = model.forward(x)?;
    let out = c2s_on_probs(pb, probs.view(), ts, eps)?;
    model.backward(&cache, &out.prob_grad)
}

pub fn loss_r_class2simi(
    pb: &PairBatch,
    probs: ArrayView2<'_, f64>,
    ts: &SimilarityTransitionMatrix,
    eps: f64,
    w_max: f64,
) -> Result<f64> {
    Ok(r_c2s_on_probs(pb, probs, ts, eps, w_max)?.value)
}

pub fn grad_r_class2simi(
    pb: &PairBatch,
    model: &MlpModel,
    x: ArrayView2<'_, f64>,
    ts: &SimilarityTransitionMatrix,
    eps: f64,
    w_max: f64,
) -> Result<Gradients> {
    let (probs, cache) = model.forward(x)?;
    let out = r_c2s_on_probs(pb, probs.view(), ts, eps, w_max)?;
    model.backward(&cache, &out.prob_grad)
}
