use std::path::Path;

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// One affine map `z = W a + b`, `W` stored `out x in`.
#[derive(Clone, Debug, PartialEq)]
pub struct Layer {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

impl Layer {
    fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            weights: Array2::zeros((outputs, inputs)),
            bias: Array1::zeros(outputs),
        }
    }

    pub fn inputs(&self) -> usize {
        self.weights.ncols()
    }

    pub fn outputs(&self) -> usize {
        self.weights.nrows()
    }

    fn param_count(&self) -> usize {
        self.weights.len() + self.bias.len()
    }

    fn params(&self) -> impl Iterator<Item = &f64> {
        self.weights.iter().chain(self.bias.iter())
    }

    fn params_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.weights.iter_mut().chain(self.bias.iter_mut())
    }
}

/// Feedforward network with ReLU hidden layers and a softmax output.
#[derive(Clone, Debug, PartialEq)]
pub struct MlpModel {
    layers: Vec<Layer>,
}

/// Activations kept from a forward pass for the backward pass.
#[derive(Clone, Debug)]
pub struct ForwardCache {
    /// Input to each layer (the batch itself for layer 0).
    inputs: Vec<Array2<f64>>,
    /// Hidden-layer pre-activations, one per non-final layer.
    hidden_pre: Vec<Array2<f64>>,
    probs: Array2<f64>,
}

impl ForwardCache {
    pub fn probs(&self) -> &Array2<f64> {
        &self.probs
    }
}

/// Parameter gradients, congruent with [`MlpModel`] layer by layer.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub layers: Vec<Layer>,
}

impl Gradients {
    pub fn zeros_like(model: &MlpModel) -> Self {
        Self {
            layers: model
                .layers
                .iter()
                .map(|l| Layer::zeros(l.inputs(), l.outputs()))
                .collect(),
        }
    }

    /// Parameters in the same order as [`MlpModel::flat_params`].
    pub fn flat(&self) -> Vec<f64> {
        self.layers.iter().flat_map(|l| l.params().copied()).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.layers.iter().all(|l| l.params().all(|v| v.is_finite()))
    }

    pub fn max_abs(&self) -> f64 {
        self.layers
            .iter()
            .flat_map(|l| l.params())
            .fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn scale(&mut self, factor: f64) {
        for l in &mut self.layers {
            l.params_mut().for_each(|v| *v *= factor);
        }
    }
}

impl MlpModel {
    /// He-initialized weights (`N(0, 2 / fan_in)`), zero biases.
    /// `sizes` lists the input width, hidden widths and class count.
    pub fn new(sizes: &[usize], seed: u64) -> Result<Self> {
        Self::validate_sizes(sizes)?;
        let mut rng = rng::stream(seed, rng::streams::INIT);
        let layers = sizes
            .windows(2)
            .map(|w| {
                let std = (2.0 / w[0] as f64).sqrt();
                let mut layer = Layer::zeros(w[0], w[1]);
                layer.weights.iter_mut().for_each(|v| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    *v = std * z;
                });
                layer
            })
            .collect();
        Ok(Self { layers })
    }

    pub fn zeros(sizes: &[usize]) -> Result<Self> {
        Self::validate_sizes(sizes)?;
        Ok(Self {
            layers: sizes.windows(2).map(|w| Layer::zeros(w[0], w[1])).collect(),
        })
    }

    pub fn from_layers(layers: Vec<Layer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::arg("layers", "need at least one layer"));
        }
        for (k, l) in layers.iter().enumerate() {
            if l.bias.len() != l.outputs() {
                return Err(Error::DimensionMismatch {
                    what: "layer bias",
                    expected: l.outputs(),
                    actual: l.bias.len(),
                });
            }
            if k > 0 && layers[k - 1].outputs() != l.inputs() {
                return Err(Error::DimensionMismatch {
                    what: "layer input",
                    expected: layers[k - 1].outputs(),
                    actual: l.inputs(),
                });
            }
        }
        if layers.last().unwrap().outputs() < 2 {
            return Err(Error::arg("layers", "output layer needs at least 2 classes"));
        }
        Ok(Self { layers })
    }

    fn validate_sizes(sizes: &[usize]) -> Result<()> {
        if sizes.len() < 2 {
            return Err(Error::arg("sizes", "need an input and an output size"));
        }
        if sizes.contains(&0) {
            return Err(Error::arg("sizes", "layer widths must be positive"));
        }
        if *sizes.last().unwrap() < 2 {
            return Err(Error::arg("sizes", "need at least 2 output classes"));
        }
        Ok(())
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs()
    }

    pub fn num_classes(&self) -> usize {
        self.layers.last().unwrap().outputs()
    }

    pub fn sizes(&self) -> Vec<usize> {
        std::iter::once(self.input_dim())
            .chain(self.layers.iter().map(|l| l.outputs()))
            .collect()
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(Layer::param_count).sum()
    }

    pub fn flat_params(&self) -> Vec<f64> {
        self.layers.iter().flat_map(|l| l.params().copied()).collect()
    }

    pub fn set_flat_params(&mut self, values: &[f64]) -> Result<()> {
        if values.len() != self.param_count() {
            return Err(Error::DimensionMismatch {
                what: "flat parameter vector",
                expected: self.param_count(),
                actual: values.len(),
            });
        }
        let mut it = values.iter();
        for l in &mut self.layers {
            l.params_mut().for_each(|v| *v = *it.next().unwrap());
        }
        Ok(())
    }

    pub fn forward(&self, x: ArrayView2<'_, f64>) -> Result<(Array2<f64>, ForwardCache)> {
        if x.ncols() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                what: "feature dimension",
                expected: self.input_dim(),
                actual: x.ncols(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("model input".into()));
        }
        let last = self.layers.len() - 1;
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut hidden_pre = Vec::with_capacity(last);
        let mut a = x.to_owned();
        for (k, layer) in self.layers.iter().enumerate() {
            let z = a.dot(&layer.weights.t()) + &layer.bias;
            inputs.push(a);
            if k == last {
                let probs = softmax_rows(z);
                if probs.iter().any(|v| !v.is_finite()) {
                    return Err(Error::NonFinite(format!("softmax output (layer {k})")));
                }
                return Ok((
                    probs.clone(),
                    ForwardCache {
                        inputs,
                        hidden_pre,
                        probs,
                    },
                ));
            }
            a = z.mapv(|v| v.max(0.0));
            hidden_pre.push(z);
        }
        unreachable!("model has at least one layer")
    }

    pub fn predict(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        Ok(self.forward(x)?.0)
    }

    pub fn predict_labels(&self, x: ArrayView2<'_, f64>) -> Result<Vec<usize>> {
        Ok(argmax_rows(&self.predict(x)?))
    }

    /// Backpropagates `d loss / d probs` through the softmax and every layer.
    pub fn backward(&self, cache: &ForwardCache, prob_grad: &Array2<f64>) -> Result<Gradients> {
        if prob_grad.dim() != cache.probs.dim() {
            return Err(Error::DimensionMismatch {
                what: "probability gradient rows",
                expected: cache.probs.nrows(),
                actual: prob_grad.nrows(),
            });
        }
        // softmax Jacobian-vector product: p * (g - <g, p>)
        let p = &cache.probs;
        let inner = (prob_grad * p).sum_axis(Axis(1)).insert_axis(Axis(1));
        let mut dz = p * &(prob_grad - &inner);

        let mut grads = Gradients::zeros_like(self);
        for k in (0..self.layers.len()).rev() {
            let g = &mut grads.layers[k];
            g.weights = dz.t().dot(&cache.inputs[k]);
            g.bias = dz.sum_axis(Axis(0));
            if g.weights.iter().chain(g.bias.iter()).any(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!("gradient of layer {k}")));
            }
            if k > 0 {
                let da = dz.dot(&self.layers[k].weights);
                let pre = &cache.hidden_pre[k - 1];
                dz = ndarray::Zip::from(&da)
                    .and(pre)
                    .map_collect(|&d, &z| if z > 0.0 { d } else { 0.0 });
            }
        }
        Ok(grads)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let json = serde_json::to_string(&Checkpoint::from(self))?;
        std::fs::write(path, json).map_err(|e| Error::file(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
        Self::from_checkpoint_json(&text)
    }

    pub fn to_checkpoint_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&Checkpoint::from(self))?)
    }

    pub fn from_checkpoint_json(text: &str) -> Result<Self> {
        let ckpt: Checkpoint = serde_json::from_str(text)?;
        ckpt.into_model()
    }
}

pub fn softmax_rows(mut z: Array2<f64>) -> Array2<f64> {
    for mut row in z.rows_mut() {
        let max = row.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        row.mapv_inplace(|v| (v - max).exp());
        let sum = row.sum();
        row.mapv_inplace(|v| v / sum);
    }
    z
}

/// Index of the largest entry per row; ties go to the lower index.
pub fn argmax_rows(m: &Array2<f64>) -> Vec<usize> {
    m.rows()
        .into_iter()
        .map(|row| {
            row.iter()
                .enumerate()
                .fold(0, |best, (k, &v)| if v > row[best] { k } else { best })
        })
        .collect()
}

pub fn accuracy(predicted: &[usize], labels: &[usize]) -> f64 {
    if labels.is_empty() {
        return 0.0;
    }
    let hits = predicted.iter().zip(labels).filter(|(a, b)| a == b).count();
    hits as f64 / labels.len() as f64
}

const CHECKPOINT_FORMAT: &str = "class2simi-mlp";
const CHECKPOINT_VERSION: u32 = 1;

/// On-disk JSON container: layer shapes plus row-major parameter arrays.
#[derive(Serialize, Deserialize)]
struct Checkpoint {
    format: String,
    version: u32,
    activation: String,
    layers: Vec<CheckpointLayer>,
}

#[derive(Serialize, Deserialize)]
struct CheckpointLayer {
    outputs: usize,
    inputs: usize,
    weights: Vec<f64>,
    bias: Vec<f64>,
}

impl From<&MlpModel> for Checkpoint {
    fn from(model: &MlpModel) -> Self {
        Checkpoint {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION,
            activation: "relu".into(),
            layers: model
                .layers
                .iter()
                .map(|l| CheckpointLayer {
                    outputs: l.outputs(),
                    inputs: l.inputs(),
                    weights: l.weights.iter().copied().collect(),
                    bias: l.bias.to_vec(),
                })
                .collect(),
        }
    }
}

impl Checkpoint {
    fn into_model(self) -> Result<MlpModel> {
        if self.format != CHECKPOINT_FORMAT {
            return Err(Error::Checkpoint(format!("unknown format `{}`", self.format)));
        }
        if self.version != CHECKPOINT_VERSION {
            return Err(Error::Checkpoint(format!("unsupported version {}", self.version)));
        }
        if self.activation != "relu" {
            return Err(Error::Checkpoint(format!(
                "unsupported activation `{}`",
                self.activation
            )));
        }
        let layers = self
            .layers
            .into_iter()
            .enumerate()
            .map(|(k, l)| {
                let weights = Array2::from_shape_vec((l.outputs, l.inputs), l.weights)
                    .map_err(|e| Error::Checkpoint(format!("layer {k}: {e}")))?;
                Ok(Layer {
                    weights,
                    bias: Array1::from(l.bias),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        MlpModel::from_layers(layers)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn zero_model_is_uniform() {
        let m = MlpModel::zeros(&[3, 5, 4]).unwrap();
        let x = array![[1.0, -2.0, 3.0], [0.5, 0.0, 0.0]];
        let p = m.predict(x.view()).unwrap();
        for v in p.iter() {
            assert_eq!(*v, 0.25);
        }
    }

    #[test]
    fn single_layer_toy_picks_the_larger_coordinate() {
        // logits = x, so class k wins when x_k is largest
        let layer = Layer {
            weights: array![[1.0, 0.0], [0.0, 1.0]],
            bias: array![0.0, 0.0],
        };
        let m = MlpModel::from_layers(vec![layer]).unwrap();
        let x = array![[2.0, 0.0], [0.0, 1.0]];
        let p = m.predict(x.view()).unwrap();
        assert_eq!(argmax_rows(&p), vec![0, 1]);
        let expect = 1.0 / (1.0 + (-2.0f64).exp());
        assert!((p[[0, 0]] - expect).abs() < 1e-15);
    }

    #[test]
    fn rows_sum_to_one() {
        let m = MlpModel::new(&[4, 16, 7], 3).unwrap();
        let x = Array2::from_shape_fn((9, 4), |(i, j)| (i * 4 + j) as f64 * 0.37 - 3.0);
        let p = m.predict(x.view()).unwrap();
        for row in p.rows() {
            assert!((row.sum() - 1.0).abs() < 1e-9);
            assert!(row.iter().all(|&v| v > 0.0));
        }
    }

    #[test]
    fn forward_rejects_bad_input() {
        let m = MlpModel::new(&[2, 3], 0).unwrap();
        assert!(m.predict(array![[1.0, 2.0, 3.0]].view()).is_err());
        assert!(matches!(
            m.predict(array![[f64::NAN, 0.0]].view()),
            Err(Error::NonFinite(_))
        ));
    }

    #[test]
    fn initialization_is_seeded() {
        let a = MlpModel::new(&[8, 32, 10], 1).unwrap();
        assert_eq!(a, MlpModel::new(&[8, 32, 10], 1).unwrap());
        assert_ne!(a, MlpModel::new(&[8, 32, 10], 2).unwrap());
        assert!(a.layers().iter().all(|l| l.bias.iter().all(|&b| b == 0.0)));
        assert_eq!(a.sizes(), vec![8, 32, 10]);
        assert_eq!(a.param_count(), 8 * 32 + 32 + 32 * 10 + 10);
    }

    #[test]
    fn checkpoint_round_trip_is_bit_exact() {
        let m = MlpModel::new(&[5, 13, 11, 3], 77).unwrap();
        let back = MlpModel::from_checkpoint_json(&m.to_checkpoint_json().unwrap()).unwrap();
        let a: Vec<u64> = m.flat_params().iter().map(|v| v.to_bits()).collect();
        let b: Vec<u64> = back.flat_params().iter().map(|v| v.to_bits()).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn checkpoint_rejects_mismatched_shapes() {
        let m = MlpModel::new(&[2, 3], 0).unwrap();
        let json = m.to_checkpoint_json().unwrap().replace("\"inputs\":2", "\"inputs\":4");
        assert!(matches!(
            MlpModel::from_checkpoint_json(&json),
            Err(Error::Checkpoint(_))
        ));
        let json = m.to_checkpoint_json().unwrap().replace("\"version\":1", "\"version\":9");
        assert!(MlpModel::from_checkpoint_json(&json).is_err());
    }

    #[test]
    fn flat_params_round_trip() {
        let mut m = MlpModel::new(&[3, 4, 2], 5).unwrap();
        let mut p = m.flat_params();
        p[0] += 1.0;
        m.set_flat_params(&p).unwrap();
        assert_eq!(m.flat_params(), p);
        assert!(m.set_flat_params(&p[1..]).is_err());
    }
}
