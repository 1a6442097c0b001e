use super::mlp::{Gradients, MlpModel};
use crate::error::{Error, Result};

/// Classical momentum SGD with decoupled weight decay:
/// `v <- momentum * v + g`, `w <- w - lr * v - lr * weight_decay * w`.
#[derive(Clone, Debug)]
pub struct Sgd {
    pub learning_rate: f64,
    pub momentum: f64,
    pub weight_decay: f64,
    velocity: Option<Gradients>,
}

impl Sgd {
    pub fn new(learning_rate: f64, momentum: f64, weight_decay: f64) -> Self {
        Self {
            learning_rate,
            momentum,
            weight_decay,
            velocity: None,
        }
    }

    pub fn step(&mut self, model: &mut MlpModel, grads: &Gradients) -> Result<()> {
        let zeros = Gradients::zeros_like(model);
        if grads.layers.len() != zeros.layers.len()
            || grads
                .layers
                .iter()
                .zip(&zeros.layers)
                .any(|(g, z)| g.weights.dim() != z.weights.dim() || g.bias.len() != z.bias.len())
        {
            return Err(Error::DimensionMismatch {
                what: "gradient layers",
                expected: model.param_count(),
                actual: grads.flat().len(),
            });
        }
        if !grads.is_finite() {
            return Err(Error::NonFinite("gradient passed to SGD".into()));
        }
        let velocity = self.velocity.get_or_insert(zeros);
        let (lr, mu, wd) = (self.learning_rate, self.momentum, self.weight_decay);
        for ((layer, g), v) in model
            .layers_mut()
            .iter_mut()
            .zip(&grads.layers)
            .zip(&mut velocity.layers)
        {
            v.weights.zip_mut_with(&g.weights, |v, &g| *v = mu * *v + g);
            v.bias.zip_mut_with(&g.bias, |v, &g| *v = mu * *v + g);
            layer
                .weights
                .zip_mut_with(&v.weights, |w, &v| *w -= lr * v + lr * wd * *w);
            layer
                .bias
                .zip_mut_with(&v.bias, |w, &v| *w -= lr * v + lr * wd * *w);
        }
        if model.layers().iter().any(|l| l.weights.iter().chain(l.bias.iter()).any(|v| !v.is_finite())) {
            return Err(Error::NonFinite("parameters after SGD step".into()));
        }
        Ok(())
    }
}
