//! The classifier, its losses, and the optimizer.

mod loss;
mod mlp;
mod optim;

use serde::{Deserialize, Serialize};

pub use loss::*;
pub use mlp::{accuracy, argmax_rows, softmax_rows, ForwardCache, Gradients, Layer, MlpModel};
pub use optim::Sgd;

use crate::error::{Error, Result};

/// Optimizer and loss settings for one training stage.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub momentum: f64,
    pub weight_decay: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    pub loss_kind: LossKind,
    pub probability_clamp: f64,
    /// Cap on importance weights of the reweighting losses.
    pub reweight_cap: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.05,
            momentum: 0.9,
            weight_decay: 1e-3,
            batch_size: 64,
            epochs: 40,
            seed: 0,
            loss_kind: LossKind::Ce,
            probability_clamp: DEFAULT_PROBABILITY_CLAMP,
            reweight_cap: DEFAULT_REWEIGHT_CAP,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, reason: &str| {
            Err(Error::Config {
                field: format!("train.{field}"),
                reason: reason.into(),
            })
        };
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return bad("learning_rate", "must be positive");
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return bad("momentum", "must lie in [0, 1)");
        }
        if !(self.weight_decay >= 0.0) {
            return bad("weight_decay", "must be non-negative");
        }
        if self.batch_size < 2 {
            return bad("batch_size", "must be at least 2");
        }
        if self.epochs == 0 {
            return bad("epochs", "must be positive");
        }
        if !(self.probability_clamp > 0.0 && self.probability_clamp < 0.1) {
            return bad("probability_clamp", "must lie in (0, 0.1)");
        }
        if !(self.reweight_cap > 0.0) {
            return bad("reweight_cap", "must be positive");
        }
        Ok(())
    }

    pub fn loss_settings(&self) -> LossSettings {
        LossSettings {
            eps: self.probability_clamp,
            w_max: self.reweight_cap,
        }
    }
}
