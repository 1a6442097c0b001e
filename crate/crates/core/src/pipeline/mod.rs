//! Experiment pipeline: data preparation, the two-stage procedure, the
//! pointwise baselines, the perturbation study and the numerical verification checks.

mod config;
mod robustness;
mod train;
mod verify;

pub use config::*;
pub use robustness::*;
pub use train::*;
pub use verify::*;
