use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::DEFAULT_ANCHOR_PERCENTILE;
use crate::model::{LossKind, TrainConfig};
use crate::noise::{BlobSpec, CsvSchema};

/// Where the data comes from. Exactly one source per experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DatasetSpec {
    /// Gaussian blobs; the clean test set is drawn separately with
    /// `test_per_class` points per class.
    Blobs {
        classes: usize,
        per_class: usize,
        dim: usize,
        separation: f64,
        spread: f64,
        #[serde(default = "default_test_per_class")]
        test_per_class: usize,
    },
    /// A CSV file. Without `test_path`, `test_fraction` of the rows are held
    /// out (with their clean labels) as the test set.
    Csv {
        path: PathBuf,
        label_column: usize,
        #[serde(default = "default_true")]
        has_header: bool,
        #[serde(default)]
        noisy_label_column: Option<usize>,
        #[serde(default)]
        num_classes: Option<usize>,
        #[serde(default)]
        test_path: Option<PathBuf>,
        #[serde(default = "default_test_fraction")]
        test_fraction: f64,
    },
}

fn default_test_per_class() -> usize {
    100
}

fn default_true() -> bool {
    true
}

fn default_test_fraction() -> f64 {
    0.2
}

impl DatasetSpec {
    pub fn blob_spec(&self) -> Option<BlobSpec> {
        match *self {
            DatasetSpec::Blobs {
                classes,
                per_class,
                dim,
                separation,
                spread,
                ..
            } => Some(BlobSpec {
                classes,
                per_class,
                dim,
                separation,
                spread,
            }),
            DatasetSpec::Csv { .. } => None,
        }
    }

    pub fn csv_schema(&self) -> Option<CsvSchema> {
        match self {
            DatasetSpec::Csv {
                label_column,
                has_header,
                noisy_label_column,
                num_classes,
                ..
            } => Some(CsvSchema {
                label_column: *label_column,
                has_header: *has_header,
                noisy_label_column: *noisy_label_column,
                num_classes: *num_classes,
            }),
            DatasetSpec::Blobs { .. } => None,
        }
    }
}

/// How training labels are corrupted. Exactly one source per experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NoiseSpec {
    /// Clean labels are used as-is.
    None,
    Symmetric { rate: f64 },
    /// Pair-flip noise `i -> i + 1 mod c`.
    Asymmetric { rate: f64 },
    /// An explicit transition matrix in the plain-text matrix format.
    MatrixFile { path: PathBuf },
    /// The CSV already carries noisy labels (`noisy_label_column`); the true
    /// transition matrix is unknown.
    Provided,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Ce,
    Forward,
    Reweight,
    FClass2simi,
    RClass2simi,
}

impl Method {
    pub fn loss_kind(self) -> LossKind {
        match self {
            Method::Ce => LossKind::Ce,
            Method::Forward => LossKind::ForwardPointwise,
            Method::Reweight => LossKind::ReweightPointwise,
            Method::FClass2simi => LossKind::FClass2simi,
            Method::RClass2simi => LossKind::RClass2simi,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Method::Ce => "ce",
            Method::Forward => "forward",
            Method::Reweight => "reweight",
            Method::FClass2simi => "f_class2simi",
            Method::RClass2simi => "r_class2simi",
        }
    }

    pub fn is_pairwise(self) -> bool {
        self.loss_kind().is_pairwise()
    }
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(s.to_string())).map_err(|_| Error::Config {
            field: "method".into(),
            reason: format!(
                "unknown method `{s}` (expected ce, forward, reweight, f_class2simi, r_class2simi)"
            ),
        })
    }
}

/// Which class transition matrix the corrected losses use.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TcSource {
    /// The matrix that generated the noise.
    True,
    /// Anchor-point estimate from the stage-1 model.
    Estimated,
    /// The true matrix perturbed at this level; level 0 means unperturbed.
    Perturbed(f64),
}

/// `true`, `estimated` or `perturbed:<level>`.
impl std::str::FromStr for TcSource {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let bad = || field_err("tc_source", format!("`{s}` is not true, estimated or perturbed:<level>"));
        match s {
            "true" => Ok(TcSource::True),
            "estimated" => Ok(TcSource::Estimated),
            _ => {
                let level = s.strip_prefix("perturbed:").ok_or_else(bad)?;
                level.parse().map(TcSource::Perturbed).map_err(|_| bad())
            }
        }
    }
}

/// Class prior used when turning the class matrix into the 2x2 matrix.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PriorSource {
    Uniform,
    NoisyFrequencies,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Stage2Config {
    /// Defaults to a tenth of the stage-1 learning rate for a warm start and
    /// the stage-1 rate for a cold start.
    pub learning_rate: Option<f64>,
    /// Defaults to the stage-1 epoch count.
    pub epochs: Option<usize>,
    /// Start from the stage-1 model. A cold start learns clusters without
    /// their class identities.
    pub warm_start: bool,
}

impl Default for Stage2Config {
    fn default() -> Self {
        Self {
            learning_rate: None,
            epochs: None,
            warm_start: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: DatasetSpec,
    pub noise: NoiseSpec,
    #[serde(default = "default_method")]
    pub method: Method,
    /// `train.seed` is ignored; the experiment `seed` drives everything.
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default = "default_tc_source")]
    pub tc_source: TcSource,
    #[serde(default = "default_prior")]
    pub prior: PriorSource,
    #[serde(default = "default_validation_fraction")]
    pub validation_fraction: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_hidden")]
    pub hidden_layers: Vec<usize>,
    #[serde(default = "default_percentile")]
    pub anchor_percentile: f64,
    #[serde(default)]
    pub stage2: Stage2Config,
}

fn default_method() -> Method {
    Method::FClass2simi
}

fn default_tc_source() -> TcSource {
    TcSource::Estimated
}

fn default_prior() -> PriorSource {
    PriorSource::Uniform
}

fn default_validation_fraction() -> f64 {
    0.1
}

fn default_hidden() -> Vec<usize> {
    vec![32]
}

fn default_percentile() -> f64 {
    DEFAULT_ANCHOR_PERCENTILE
}

fn field_err(field: &str, reason: impl Into<String>) -> Error {
    Error::Config {
        field: field.into(),
        reason: reason.into(),
    }
}

impl ExperimentConfig {
    /// Desk-scale default: ten 8-dimensional blobs under 40% symmetric noise.
    pub fn blobs_default() -> Self {
        Self {
            dataset: DatasetSpec::Blobs {
                classes: 10,
                per_class: 200,
                dim: 8,
                separation: 5.0,
                spread: 1.5,
                test_per_class: default_test_per_class(),
            },
            noise: NoiseSpec::Symmetric { rate: 0.4 },
            method: default_method(),
            train: TrainConfig::default(),
            tc_source: default_tc_source(),
            prior: default_prior(),
            validation_fraction: default_validation_fraction(),
            seed: 0,
            hidden_layers: default_hidden(),
            anchor_percentile: default_percentile(),
            stage2: Stage2Config::default(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| field_err("config", e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        self.train.validate()?;
        if !(self.validation_fraction > 0.0 && self.validation_fraction < 1.0) {
            return Err(field_err("validation_fraction", "must lie in (0, 1)"));
        }
        if !(self.anchor_percentile > 0.0 && self.anchor_percentile <= 100.0) {
            return Err(field_err("anchor_percentile", "must lie in (0, 100]"));
        }
        if self.hidden_layers.contains(&0) {
            return Err(field_err("hidden_layers", "widths must be positive"));
        }
        match &self.dataset {
            DatasetSpec::Blobs {
                classes,
                per_class,
                dim,
                separation,
                spread,
                test_per_class,
            } => {
                if *classes < 2 {
                    return Err(field_err("dataset.classes", "need at least 2"));
                }
                if *per_class < 1 || *test_per_class < 1 {
                    return Err(field_err("dataset.per_class", "need at least 1"));
                }
                if *dim < 2 {
                    return Err(field_err("dataset.dim", "need at least 2"));
                }
                if !(*separation > 0.0 && *spread > 0.0) {
                    return Err(field_err("dataset.separation", "separation and spread must be positive"));
                }
            }
            DatasetSpec::Csv {
                path,
                test_path,
                test_fraction,
                noisy_label_column,
                ..
            } => {
                if path.as_os_str().is_empty() {
                    return Err(field_err("dataset.path", "missing dataset path"));
                }
                if !path.exists() {
                    return Err(field_err(
                        "dataset.path",
                        format!("{} does not exist", path.display()),
                    ));
                }
                if let Some(t) = test_path {
                    if !t.exists() {
                        return Err(field_err(
                            "dataset.test_path",
                            format!("{} does not exist", t.display()),
                        ));
                    }
                } else if !(*test_fraction > 0.0 && *test_fraction < 1.0) {
                    return Err(field_err("dataset.test_fraction", "must lie in (0, 1)"));
                }
                if matches!(self.noise, NoiseSpec::Provided) && noisy_label_column.is_none() {
                    return Err(field_err(
                        "dataset.noisy_label_column",
                        "required when noise.kind is `provided`",
                    ));
                }
            }
        }
        match &self.noise {
            NoiseSpec::Symmetric { rate } | NoiseSpec::Asymmetric { rate } => {
                if !(0.0..1.0).contains(rate) {
                    return Err(field_err("noise.rate", "must lie in [0, 1)"));
                }
            }
            NoiseSpec::MatrixFile { path } => {
                if !path.exists() {
                    return Err(field_err("noise.path", format!("{} does not exist", path.display())));
                }
            }
            NoiseSpec::Provided => {
                if matches!(self.dataset, DatasetSpec::Blobs { .. }) {
                    return Err(field_err("noise", "`provided` noise needs a CSV dataset"));
                }
                if !matches!(self.tc_source, TcSource::Estimated) {
                    return Err(field_err(
                        "tc_source",
                        "the true matrix is unknown for provided noisy labels; use `estimated`",
                    ));
                }
            }
            NoiseSpec::None => {}
        }
        if let TcSource::Perturbed(level) = self.tc_source {
            if !(level >= 0.0 && level.is_finite()) {
                return Err(field_err("tc_source.perturbed", "level must be >= 0"));
            }
        }
        Ok(())
    }

    pub fn stage2_learning_rate(&self) -> f64 {
        let default = if self.stage2.warm_start {
            self.train.learning_rate / 10.0
        } else {
            self.train.learning_rate
        };
        self.stage2.learning_rate.unwrap_or(default)
    }

    pub fn stage2_epochs(&self) -> usize {
        self.stage2.epochs.unwrap_or(self.train.epochs)
    }
}
