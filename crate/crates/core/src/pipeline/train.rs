//! Data preparation, the minibatch training loop, and the two-stage
//! procedure with its pointwise baselines.

use std::time::Instant;

use ndarray::{Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::config::{DatasetSpec, ExperimentConfig, Method, NoiseSpec, PriorSource, TcSource};
use crate::error::{Error, Result};
use crate::estimation::{estimate_tc_anchor, estimate_ts};
use crate::model::{accuracy, LossKind, MlpModel, Objective, Sgd, TrainConfig};
use crate::noise::{
    corrupt_labels, empirical_class_noise_rate, empirical_simi_noise_rate, generate_blobs, load_csv,
    CsvSchema, LabeledDataset,
};
use crate::rng;
use crate::transition::{
    class2simi, class_noise_rate, make_asymmetric, make_symmetric, perturb_tc, simi_noise_rate,
    ClassPrior, ClassTransitionMatrix, SimilarityTransitionMatrix,
};

/// Attempts at drawing a perturbation that leaves no row empty.
const PERTURB_ATTEMPTS: u64 = 64;

/// Pairs sampled when measuring the empirical similarity noise rate.
const EMPIRICAL_PAIRS: usize = 200_000;

/// Train/validation/test split of one experiment.
#[derive(Clone, Debug)]
pub struct PreparedData {
    /// Training points with noisy labels (clean labels kept when known, for
    /// reporting only).
    pub train: LabeledDataset,
    /// Held-out part of the noisy training data, used for model selection.
    pub validation: LabeledDataset,
    /// Clean-labelled evaluation set.
    pub test: LabeledDataset,
    /// The matrix that generated the noise, when known.
    pub true_tc: Option<ClassTransitionMatrix>,
}

impl PreparedData {
    pub fn num_classes(&self) -> usize {
        self.train.num_classes()
    }

    pub fn dim(&self) -> usize {
        self.train.dim()
    }
}

pub(crate) fn derived_seed(seed: u64, stream: u64) -> u64 {
    rng::stream(seed, stream).random()
}

fn true_matrix(noise: &NoiseSpec, c: usize) -> Result<Option<ClassTransitionMatrix>> {
    Ok(match noise {
        NoiseSpec::None => Some(ClassTransitionMatrix::identity(c)?),
        NoiseSpec::Symmetric { rate } => Some(make_symmetric(c, *rate)?),
        NoiseSpec::Asymmetric { rate } => Some(make_asymmetric(c, *rate)?),
        NoiseSpec::MatrixFile { path } => {
            let m = ClassTransitionMatrix::read(path)?;
            if m.num_classes() != c {
                return Err(Error::DimensionMismatch {
                    what: "noise matrix file",
                    expected: c,
                    actual: m.num_classes(),
                });
            }
            Some(m)
        }
        NoiseSpec::Provided => None,
    })
}

fn split_indices(n: usize, fraction: f64, seed: u64, stream: u64) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut rng::stream(seed, stream));
    let k = ((n as f64) * fraction).round().clamp(1.0, (n - 1) as f64) as usize;
    let held = idx[..k].to_vec();
    let rest = idx[k..].to_vec();
    (held, rest)
}

/// Builds the datasets, corrupts the training labels and splits off the
/// noisy validation set.
pub fn prepare_data(config: &ExperimentConfig) -> Result<PreparedData> {
    config.validate()?;
    let seed = config.seed;
    let (pool, test) = match &config.dataset {
        spec @ DatasetSpec::Blobs { test_per_class, .. } => {
            let blobs = spec.blob_spec().expect("blob dataset");
            let pool = generate_blobs(&blobs, seed)?;
            let test_spec = crate::noise::BlobSpec {
                per_class: *test_per_class,
                ..blobs
            };
            let test = generate_blobs(&test_spec, derived_seed(seed, rng::streams::TEST_SET))?;
            (pool, test)
        }
        spec @ DatasetSpec::Csv {
            path,
            test_path,
            test_fraction,
            ..
        } => {
            let schema = spec.csv_schema().expect("csv dataset");
            let all = load_csv(path, &schema)?;
            match test_path {
                Some(tp) => {
                    let test_schema = CsvSchema {
                        noisy_label_column: None,
                        num_classes: Some(all.num_classes()),
                        ..schema
                    };
                    (all, load_csv(tp, &test_schema)?)
                }
                None => {
                    let (held, rest) =
                        split_indices(all.len(), *test_fraction, seed, rng::streams::TEST_SET);
                    (all.subset(&rest), all.subset(&held))
                }
            }
        }
    };
    if test.dim() != pool.dim() {
        return Err(Error::DimensionMismatch {
            what: "test set features",
            expected: pool.dim(),
            actual: test.dim(),
        });
    }
    test.require_clean()?;
    let c = pool.num_classes();
    let true_tc = true_matrix(&config.noise, c)?;
    let noisy_pool = match (&config.noise, &true_tc) {
        (NoiseSpec::Provided, _) => {
            pool.require_noisy()?;
            pool
        }
        (_, Some(tc)) => corrupt_labels(&pool, tc, seed)?,
        (_, None) => unreachable!("only provided noise lacks a matrix"),
    };
    if noisy_pool.len() < 4 {
        return Err(Error::arg("dataset", "need at least 4 training points"));
    }
    let (val_idx, train_idx) =
        split_indices(noisy_pool.len(), config.validation_fraction, seed, rng::streams::SPLIT);
    Ok(PreparedData {
        train: noisy_pool.subset(&train_idx),
        validation: noisy_pool.subset(&val_idx),
        test,
        true_tc,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub noisy_validation_accuracy: f64,
    pub clean_test_accuracy: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageReport {
    pub loss_kind: LossKind,
    pub learning_rate: f64,
    pub warm_start: bool,
    pub epochs: Vec<EpochRecord>,
    /// 1-based epoch whose model was kept.
    pub selected_epoch: usize,
    pub clean_test_accuracy: f64,
}

/// Result of [`fit`]: the model from the epoch with the best noisy
/// validation accuracy and the per-epoch history.
#[derive(Clone, Debug)]
pub struct FitOutcome {
    pub model: MlpModel,
    pub history: Vec<EpochRecord>,
    pub selected_epoch: usize,
}

/// A feature matrix with one label per row.
#[derive(Clone, Copy, Debug)]
pub struct LabeledView<'a> {
    pub features: ArrayView2<'a, f64>,
    pub labels: &'a [usize],
}

impl<'a> LabeledView<'a> {
    pub fn noisy(ds: &'a LabeledDataset) -> Result<Self> {
        Ok(Self {
            features: ds.features(),
            labels: ds.require_noisy()?,
        })
    }

    pub fn clean(ds: &'a LabeledDataset) -> Result<Self> {
        Ok(Self {
            features: ds.features(),
            labels: ds.require_clean()?,
        })
    }
}

pub fn evaluate_accuracy(model: &MlpModel, data: LabeledView<'_>) -> Result<f64> {
    Ok(accuracy(&model.predict_labels(data.features)?, data.labels))
}

/// Balanced pair accuracy: the mean of the accuracy on similar pairs and on
/// dissimilar pairs, where a pair is predicted similar when both points get
/// the same predicted class. Invariant to relabelling the predicted classes.
pub fn balanced_pair_accuracy(model: &MlpModel, data: LabeledView<'_>) -> Result<f64> {
    let pred = model.predict_labels(data.features)?;
    let mut correct = [0usize; 2];
    let mut total = [0usize; 2];
    for i in 0..pred.len() {
        for j in i + 1..pred.len() {
            let h = usize::from(data.labels[i] == data.labels[j]);
            total[h] += 1;
            correct[h] += usize::from((pred[i] == pred[j]) == (h == 1));
        }
    }
    let rate = |h: usize| if total[h] == 0 { 1.0 } else { correct[h] as f64 / total[h] as f64 };
    Ok(0.5 * (rate(0) + rate(1)))
}

/// Minibatch SGD over shuffled epochs. Pairwise objectives enumerate pairs
/// inside each minibatch; batches with fewer than two points are skipped for
/// them. Model selection keeps the earliest epoch with the best noisy
/// validation accuracy.
pub fn fit(
    mut model: MlpModel,
    objective: Objective<'_>,
    train: LabeledView<'_>,
    validation: LabeledView<'_>,
    test: Option<LabeledView<'_>>,
    config: &TrainConfig,
) -> Result<FitOutcome> {
    config.validate()?;
    let n = train.labels.len();
    if n < 2 {
        return Err(Error::arg("train", "need at least 2 points"));
    }
    let settings = config.loss_settings();
    let pairwise = objective.kind().is_pairwise();
    let mut sgd = Sgd::new(config.learning_rate, config.momentum, config.weight_decay);
    let mut shuffle_rng = rng::stream(config.seed, rng::streams::SHUFFLE);
    let mut order: Vec<usize> = (0..n).collect();
    let mut history = Vec::with_capacity(config.epochs);
    let mut best: Option<(f64, usize, MlpModel)> = None;

    for epoch in 1..=config.epochs {
        order.shuffle(&mut shuffle_rng);
        let mut loss_sum = 0.0;
        let mut batches = 0usize;
        for chunk in order.chunks(config.batch_size) {
            if pairwise && chunk.len() < 2 {
                continue;
            }
            let x: Array2<f64> = train.features.select(Axis(0), chunk);
            let y: Vec<usize> = chunk.iter().map(|&i| train.labels[i]).collect();
            let (loss, grads) = objective.loss_and_grad(&model, x.view(), &y, settings)?;
            sgd.step(&mut model, &grads)?;
            loss_sum += loss;
            batches += 1;
        }
        let val_acc = evaluate_accuracy(&model, validation)?;
        let test_acc = match test {
            Some(t) => evaluate_accuracy(&model, t)?,
            None => f64::NAN,
        };
        history.push(EpochRecord {
            epoch,
            train_loss: loss_sum / batches.max(1) as f64,
            noisy_validation_accuracy: val_acc,
            clean_test_accuracy: test_acc,
        });
        if best.as_ref().is_none_or(|(acc, _, _)| val_acc > *acc) {
            best = Some((val_acc, epoch, model.clone()));
        }
    }
    let (_, selected_epoch, model) = best.expect("at least one epoch");
    Ok(FitOutcome {
        model,
        history,
        selected_epoch,
    })
}

fn stage_report(
    outcome: &FitOutcome,
    kind: LossKind,
    learning_rate: f64,
    warm_start: bool,
    test: LabeledView<'_>,
) -> Result<StageReport> {
    Ok(StageReport {
        loss_kind: kind,
        learning_rate,
        warm_start,
        epochs: outcome.history.clone(),
        selected_epoch: outcome.selected_epoch,
        clean_test_accuracy: evaluate_accuracy(&outcome.model, test)?,
    })
}

fn model_sizes(config: &ExperimentConfig, data: &PreparedData) -> Vec<usize> {
    std::iter::once(data.dim())
        .chain(config.hidden_layers.iter().copied())
        .chain(std::iter::once(data.num_classes()))
        .collect()
}

fn seeded_train_config(config: &ExperimentConfig, kind: LossKind) -> TrainConfig {
    TrainConfig {
        seed: config.seed,
        loss_kind: kind,
        ..config.train.clone()
    }
}

pub fn prior_for(config: &ExperimentConfig, data: &PreparedData) -> Result<ClassPrior> {
    match config.prior {
        PriorSource::Uniform => ClassPrior::uniform(data.num_classes()),
        PriorSource::NoisyFrequencies => data.train.noisy_prior(),
    }
}

/// Stage 1: a cross-entropy model on the noisy labels, the anchor-point
/// estimate of the class transition matrix, and its 2x2 transform.
#[derive(Clone, Debug)]
pub struct Stage1Output {
    pub model: MlpModel,
    pub tc_hat: ClassTransitionMatrix,
    pub ts_hat: SimilarityTransitionMatrix,
    pub report: StageReport,
}

pub fn run_stage1(config: &ExperimentConfig, data: &PreparedData) -> Result<Stage1Output> {
    let sizes = model_sizes(config, data);
    let init = MlpModel::new(&sizes, config.seed)?;
    let train_cfg = seeded_train_config(config, LossKind::Ce);
    let test = LabeledView::clean(&data.test)?;
    let outcome = fit(
        init,
        Objective::CrossEntropy,
        LabeledView::noisy(&data.train)?,
        LabeledView::noisy(&data.validation)?,
        Some(test),
        &train_cfg,
    )?;
    let tc_hat = estimate_tc_anchor(&outcome.model, data.train.features(), config.anchor_percentile)?;
    let ts_hat = estimate_ts(&tc_hat, &prior_for(config, data)?)?;
    let report = stage_report(&outcome, LossKind::Ce, train_cfg.learning_rate, false, test)?;
    Ok(Stage1Output {
        model: outcome.model,
        tc_hat,
        ts_hat,
        report,
    })
}

/// Stage 2: pairwise training through the 2x2 matrix, from the stage-1
/// model (warm start) or from a fresh initialization.
pub fn run_stage2(
    config: &ExperimentConfig,
    data: &PreparedData,
    stage1_model: &MlpModel,
    ts: &SimilarityTransitionMatrix,
) -> Result<(MlpModel, StageReport)> {
    if !ts.is_learnable() {
        return Err(Error::NotLearnable(ts.t00() + ts.t11()));
    }
    let method = match config.method {
        m @ (Method::FClass2simi | Method::RClass2simi) => m,
        _ => Method::FClass2simi,
    };
    let objective = match method {
        Method::RClass2simi => Objective::RClass2Simi(ts),
        _ => Objective::FClass2Simi(ts),
    };
    let sizes = model_sizes(config, data);
    if stage1_model.sizes() != sizes {
        return Err(Error::Checkpoint(format!(
            "checkpoint layer sizes {:?} do not match the configured {:?}",
            stage1_model.sizes(),
            sizes
        )));
    }
    let init = if config.stage2.warm_start {
        stage1_model.clone()
    } else {
        MlpModel::new(&sizes, derived_seed(config.seed, rng::streams::INIT))?
    };
    let train_cfg = TrainConfig {
        learning_rate: config.stage2_learning_rate(),
        epochs: config.stage2_epochs(),
        ..seeded_train_config(config, method.loss_kind())
    };
    let test = LabeledView::clean(&data.test)?;
    let outcome = fit(
        init,
        objective,
        LabeledView::noisy(&data.train)?,
        LabeledView::noisy(&data.validation)?,
        Some(test),
        &train_cfg,
    )?;
    let report = stage_report(
        &outcome,
        method.loss_kind(),
        train_cfg.learning_rate,
        config.stage2.warm_start,
        test,
    )?;
    Ok((outcome.model, report))
}

/// Pointwise loss-correction baseline (forward or reweight) trained from a
/// fresh initialization with the given class transition matrix.
pub fn run_pointwise(
    config: &ExperimentConfig,
    data: &PreparedData,
    method: Method,
    tc: &ClassTransitionMatrix,
) -> Result<(MlpModel, StageReport)> {
    let objective = match method {
        Method::Forward => Objective::Forward(tc),
        Method::Reweight => Objective::Reweight(tc),
        Method::Ce => Objective::CrossEntropy,
        _ => return Err(Error::arg("method", format!("{} is not pointwise", method.name()))),
    };
    let sizes = model_sizes(config, data);
    let init = MlpModel::new(&sizes, config.seed)?;
    let train_cfg = seeded_train_config(config, method.loss_kind());
    let test = LabeledView::clean(&data.test)?;
    let outcome = fit(
        init,
        objective,
        LabeledView::noisy(&data.train)?,
        LabeledView::noisy(&data.validation)?,
        Some(test),
        &train_cfg,
    )?;
    let report = stage_report(&outcome, method.loss_kind(), train_cfg.learning_rate, false, test)?;
    Ok((outcome.model, report))
}

/// Perturbs `tc` at `level` (0 returns it unchanged). Draws that empty a row
/// are retried with the next seed; the seed actually used is returned.
pub fn perturbed_matrix(
    tc: &ClassTransitionMatrix,
    level: f64,
    seed: u64,
) -> Result<(ClassTransitionMatrix, Option<u64>)> {
    if level == 0.0 {
        return Ok((tc.clone(), None));
    }
    let mut last = None;
    for attempt in 0..PERTURB_ATTEMPTS {
        let s = seed.wrapping_add(attempt);
        match perturb_tc(tc, level, s) {
            Ok(m) => return Ok((m, Some(s))),
            Err(e @ Error::ZeroRow(_)) => last = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last.expect("at least one attempt"))
}

/// Class transition matrix handed to the corrected losses.
pub fn resolve_tc(
    config: &ExperimentConfig,
    data: &PreparedData,
    stage1: &Stage1Output,
) -> Result<ClassTransitionMatrix> {
    let need_true = || {
        data.true_tc.clone().ok_or_else(|| Error::Config {
            field: "tc_source".into(),
            reason: "the true transition matrix is unknown".into(),
        })
    };
    Ok(match config.tc_source {
        TcSource::True => need_true()?,
        TcSource::Estimated => stage1.tc_hat.clone(),
        TcSource::Perturbed(level) => {
            perturbed_matrix(&need_true()?, level, derived_seed(config.seed, rng::streams::PERTURB))?.0
        }
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseRates {
    pub analytic_class: Option<f64>,
    pub analytic_similarity: Option<f64>,
    pub empirical_class: Option<f64>,
    pub empirical_similarity: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config: ExperimentConfig,
    pub seed: u64,
    pub method: Method,
    pub stage1: StageReport,
    /// Training of the chosen method; absent for plain cross-entropy, whose
    /// result is stage 1 itself.
    pub stage2: Option<StageReport>,
    pub final_test_accuracy: f64,
    /// Mean clean test accuracy over the last five epochs of the final stage.
    pub last_epochs_mean_test_accuracy: f64,
    pub tc_true: Option<ClassTransitionMatrix>,
    pub tc_estimated: ClassTransitionMatrix,
    pub tc_used: Option<ClassTransitionMatrix>,
    pub ts_used: Option<SimilarityTransitionMatrix>,
    pub noise_rates: NoiseRates,
    pub wall_clock_seconds: f64,
}

impl RunReport {
    /// JSON with the wall-clock field zeroed, for reproducibility checks.
    pub fn to_json_without_timing(&self) -> Result<String> {
        let mut copy = self.clone();
        copy.wall_clock_seconds = 0.0;
        Ok(serde_json::to_string_pretty(&copy)?)
    }

    pub fn summary_line(&self) -> String {
        format!(
            "method={} seed={} stage1_acc={:.4} final_acc={:.4}",
            self.method.name(),
            self.seed,
            self.stage1.clean_test_accuracy,
            self.final_test_accuracy
        )
    }
}

fn noise_rates(config: &ExperimentConfig, data: &PreparedData) -> Result<NoiseRates> {
    let mut rates = NoiseRates {
        analytic_class: None,
        analytic_similarity: None,
        empirical_class: None,
        empirical_similarity: None,
    };
    if let Some(tc) = &data.true_tc {
        let prior = match data.train.clean_labels() {
            Some(_) => data.train.clean_prior()?,
            None => prior_for(config, data)?,
        };
        rates.analytic_class = Some(class_noise_rate(tc, &prior)?);
        if let Ok(ts) = class2simi(tc, &prior) {
            rates.analytic_similarity = Some(simi_noise_rate(&ts, prior.pair_similar_prior())?);
        }
    }
    if data.train.clean_labels().is_some() {
        rates.empirical_class = Some(empirical_class_noise_rate(&data.train)?);
        rates.empirical_similarity = Some(empirical_simi_noise_rate(
            &data.train,
            EMPIRICAL_PAIRS,
            derived_seed(config.seed, rng::streams::PAIR_SAMPLING),
        )?);
    }
    Ok(rates)
}

/// Everything a run produces, including models for persistence.
#[derive(Clone, Debug)]
pub struct RunArtifacts {
    pub report: RunReport,
    pub stage1: Stage1Output,
    pub final_model: MlpModel,
}

/// The full experiment for `config.method`: stage 1 always runs (it supplies
/// the estimated matrix and the warm start), then the method's own training.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunArtifacts> {
    let started = Instant::now();
    let data = prepare_data(config)?;
    let stage1 = run_stage1(config, &data)?;
    let (final_model, stage2, tc_used, ts_used) = match config.method {
        Method::Ce => (stage1.model.clone(), None, None, None),
        m @ (Method::Forward | Method::Reweight) => {
            let tc = resolve_tc(config, &data, &stage1)?;
            let (model, report) = run_pointwise(config, &data, m, &tc)?;
            (model, Some(report), Some(tc), None)
        }
        Method::FClass2simi | Method::RClass2simi => {
            let tc = resolve_tc(config, &data, &stage1)?;
            let ts = class2simi(&tc, &prior_for(config, &data)?)?;
            let (model, report) = run_stage2(config, &data, &stage1.model, &ts)?;
            (model, Some(report), Some(tc), Some(ts))
        }
    };
    let last = stage2.as_ref().unwrap_or(&stage1.report);
    let tail = &last.epochs[last.epochs.len().saturating_sub(5)..];
    let last_mean = tail.iter().map(|e| e.clean_test_accuracy).sum::<f64>() / tail.len() as f64;
    let report = RunReport {
        config: config.clone(),
        seed: config.seed,
        method: config.method,
        final_test_accuracy: last.clean_test_accuracy,
        last_epochs_mean_test_accuracy: last_mean,
        stage1: stage1.report.clone(),
        stage2,
        tc_true: data.true_tc.clone(),
        tc_estimated: stage1.tc_hat.clone(),
        tc_used,
        ts_used,
        noise_rates: noise_rates(config, &data)?,
        wall_clock_seconds: started.elapsed().as_secs_f64(),
    };
    Ok(RunArtifacts {
        report,
        stage1,
        final_model,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config() -> ExperimentConfig {
        let mut cfg = ExperimentConfig::blobs_default();
        cfg.dataset = DatasetSpec::Blobs {
            classes: 3,
            per_class: 40,
            dim: 2,
            separation: 4.0,
            spread: 0.8,
            test_per_class: 20,
        };
        cfg.noise = NoiseSpec::Symmetric { rate: 0.2 };
        cfg.train.epochs = 3;
        cfg.train.batch_size = 16;
        cfg.hidden_layers = vec![8];
        cfg
    }

    #[test]
    fn prepared_splits_are_disjoint_and_sized() {
        let cfg = small_config();
        let data = prepare_data(&cfg).unwrap();
        assert_eq!(data.train.len() + data.validation.len(), 120);
        assert_eq!(data.validation.len(), 12);
        assert_eq!(data.test.len(), 60);
        assert!(data.train.noisy_labels().is_some());
        assert!(data.test.noisy_labels().is_none());
    }

    #[test]
    fn split_keeps_both_sides_nonempty() {
        let (a, b) = split_indices(5, 0.01, 0, 1);
        assert_eq!((a.len(), b.len()), (1, 4));
        let (a, b) = split_indices(5, 0.99, 0, 1);
        assert_eq!((a.len(), b.len()), (4, 1));
    }

    #[test]
    fn stage2_refuses_unlearnable_matrix() {
        let cfg = small_config();
        let data = prepare_data(&cfg).unwrap();
        let model = MlpModel::new(&[2, 8, 3], 0).unwrap();
        let ts = SimilarityTransitionMatrix::new([[0.5, 0.5], [0.5, 0.5]]).unwrap();
        assert!(matches!(
            run_stage2(&cfg, &data, &model, &ts),
            Err(Error::NotLearnable(_))
        ));
    }

    #[test]
    fn stage2_rejects_mismatched_checkpoint() {
        let cfg = small_config();
        let data = prepare_data(&cfg).unwrap();
        let model = MlpModel::new(&[2, 5, 3], 0).unwrap();
        let ts = SimilarityTransitionMatrix::identity();
        assert!(matches!(
            run_stage2(&cfg, &data, &model, &ts),
            Err(Error::Checkpoint(_))
        ));
    }

    #[test]
    fn level_zero_is_unperturbed() {
        let tc = make_symmetric(4, 0.3).unwrap();
        let (m, seed) = perturbed_matrix(&tc, 0.0, 1).unwrap();
        assert_eq!(m, tc);
        assert!(seed.is_none());
        let (m, seed) = perturbed_matrix(&tc, 0.2, 1).unwrap();
        assert_ne!(m, tc);
        assert!(seed.is_some());
    }

    #[test]
    fn every_method_runs() {
        for method in [
            Method::Ce,
            Method::Forward,
            Method::Reweight,
            Method::FClass2simi,
            Method::RClass2simi,
        ] {
            let mut cfg = small_config();
            cfg.method = method;
            let run = run_experiment(&cfg).unwrap();
            let r = &run.report;
            assert!((0.0..=1.0).contains(&r.final_test_accuracy), "{method:?}");
            assert_eq!(r.stage2.is_some(), method != Method::Ce);
            assert_eq!(r.ts_used.is_some(), method.is_pairwise());
        }
    }
}
