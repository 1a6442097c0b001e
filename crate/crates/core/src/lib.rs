//! Learning a multi-class classifier from noisy class labels by way of
//! pairwise similarity labels.
//!
//! Noisy class labels are turned into noisy similarity labels ("do these two
//! points share a class?") inside every minibatch. Class-dependent label noise
//! described by a `c x c` transition matrix induces similarity noise described
//! by a `2 x 2` matrix, which is usually much less noisy. The classifier's
//! softmax output is paired up by inner products, pushed through the 2x2
//! matrix, and fitted with binary cross-entropy.
//!
//! Module map:
//!
//! - [`transition`]: class/similarity transition matrices, the class-to-
//!   similarity transform, noise rates, learnability and perturbation.
//! - [`noise`]: synthetic blobs, label corruption, CSV ingestion and
//!   empirical noise rates.
//! - [`pairing`]: minibatch pair enumeration.
//! - [`model`]: the MLP, pointwise and pairwise losses with exact gradients,
//!   momentum SGD and checkpoints.
//! - [`estimation`]: anchor-point estimation of the class transition matrix.
//! - [`pipeline`]: the two-stage training procedure, baselines, the matrix
//!   perturbation experiment and the numerical verification suite.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod estimation;
pub mod model;
pub mod noise;
pub mod pairing;
pub mod pipeline;
pub mod rng;
pub mod transition;

pub use error::{Error, Result};
pub use estimation::{estimate_tc_anchor, estimate_ts, ClassPosterior};
pub use model::{Gradients, LossKind, MlpModel, Objective, Sgd, TrainConfig};
pub use noise::{BlobSpec, CsvSchema, LabeledDataset};
pub use pairing::PairBatch;
pub use transition::{ClassPrior, ClassTransitionMatrix, SimilarityTransitionMatrix};
