//! Accuracy of Forward and F-Class2Simi when both are handed a perturbed
//! copy of the true class transition matrix.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, Method};
use super::train::{derived_seed, perturbed_matrix, prepare_data, prior_for, run_pointwise, run_stage1, run_stage2};
use crate::error::{Error, Result};
use crate::rng;
use crate::transition::class2simi;

/// Perturbation levels the study accepts.
pub const ALLOWED_LEVELS: [f64; 5] = [0.0, 0.1, 0.2, 0.3, 0.4];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RobustnessRow {
    pub level: f64,
    pub method: Method,
    pub accuracy: f64,
}

/// Runs stage 1 once, then for every level perturbs the true matrix and
/// trains pointwise Forward and warm-started F-Class2Simi with it. Rows come
/// out level by level, Forward first.
pub fn run_matrix_robustness(config: &ExperimentConfig, levels: &[f64]) -> Result<Vec<RobustnessRow>> {
    if levels.is_empty() {
        return Err(Error::arg("levels", "empty"));
    }
    if let Some(bad) = levels.iter().find(|l| !ALLOWED_LEVELS.contains(l)) {
        return Err(Error::arg(
            "levels",
            format!("{bad} is not one of 0, 0.1, 0.2, 0.3, 0.4"),
        ));
    }
    let data = prepare_data(config)?;
    let true_tc = data.true_tc.clone().ok_or_else(|| Error::Config {
        field: "noise".into(),
        reason: "the robustness study needs a known noise matrix".into(),
    })?;
    let stage1 = run_stage1(config, &data)?;
    let prior = prior_for(config, &data)?;
    let perturb_seed = derived_seed(config.seed, rng::streams::PERTURB);
    let mut rows = Vec::with_capacity(levels.len() * 2);
    for &level in levels {
        let (tc, _) = perturbed_matrix(&true_tc, level, perturb_seed)?;
        let (_, forward) = run_pointwise(config, &data, Method::Forward, &tc)?;
        let ts = class2simi(&tc, &prior)?;
        let mut c2s_config = config.clone();
        c2s_config.method = Method::FClass2simi;
        let (_, c2s) = run_stage2(&c2s_config, &data, &stage1.model, &ts)?;
        rows.push(RobustnessRow {
            level,
            method: Method::Forward,
            accuracy: forward.clean_test_accuracy,
        });
        rows.push(RobustnessRow {
            level,
            method: Method::FClass2simi,
            accuracy: c2s.clean_test_accuracy,
        });
    }
    Ok(rows)
}

pub fn write_robustness_csv<W: Write>(rows: &[RobustnessRow], writer: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(writer);
    w.write_record(["level", "method", "accuracy"])?;
    for r in rows {
        w.write_record([r.level.to_string(), r.method.name().to_string(), r.accuracy.to_string()])?;
    }
    w.flush()?;
    Ok(())
}
