//! Datasets, synthetic blobs, label corruption and empirical noise rates.

use std::io::{Read, Write};
use std::path::Path;

use ndarray::{Array2, ArrayView2, Axis};
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;
use crate::transition::{ClassPrior, ClassTransitionMatrix};

/// Features plus clean and/or noisy integer labels.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledDataset {
    features: Array2<f64>,
    clean_labels: Option<Vec<usize>>,
    noisy_labels: Option<Vec<usize>>,
    num_classes: usize,
}

impl LabeledDataset {
    pub fn new(
        features: Array2<f64>,
        clean_labels: Option<Vec<usize>>,
        noisy_labels: Option<Vec<usize>>,
        num_classes: usize,
    ) -> Result<Self> {
        let (n, d) = features.dim();
        if d < 1 {
            return Err(Error::arg("features", "need at least one feature column"));
        }
        if num_classes < 2 {
            return Err(Error::arg("num_classes", format!("need at least 2, got {num_classes}")));
        }
        if clean_labels.is_none() && noisy_labels.is_none() {
            return Err(Error::MissingLabels("clean or noisy"));
        }
        for labels in [&clean_labels, &noisy_labels].into_iter().flatten() {
            if labels.len() != n {
                return Err(Error::DimensionMismatch {
                    what: "label vector",
                    expected: n,
                    actual: labels.len(),
                });
            }
            if let Some((index, &label)) = labels.iter().enumerate().find(|(_, &l)| l >= num_classes) {
                return Err(Error::LabelOutOfRange {
                    index,
                    label,
                    classes: num_classes,
                });
            }
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("dataset features".into()));
        }
        Ok(Self {
            features,
            clean_labels,
            noisy_labels,
            num_classes,
        })
    }

    pub fn len(&self) -> usize {
        self.features.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        self.features.ncols()
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn features(&self) -> ArrayView2<'_, f64> {
        self.features.view()
    }

    pub fn clean_labels(&self) -> Option<&[usize]> {
        self.clean_labels.as_deref()
    }

    pub fn noisy_labels(&self) -> Option<&[usize]> {
        self.noisy_labels.as_deref()
    }

    pub fn require_clean(&self) -> Result<&[usize]> {
        self.clean_labels().ok_or(Error::MissingLabels("clean"))
    }

    pub fn require_noisy(&self) -> Result<&[usize]> {
        self.noisy_labels().ok_or(Error::MissingLabels("noisy"))
    }

    pub fn with_noisy_labels(mut self, noisy: Vec<usize>) -> Result<Self> {
        self.noisy_labels = Some(noisy);
        Self::new(self.features, self.clean_labels, self.noisy_labels, self.num_classes)
    }

    /// Rows selected by `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Self {
        let pick = |labels: &Option<Vec<usize>>| {
            labels
                .as_ref()
                .map(|l| indices.iter().map(|&i| l[i]).collect::<Vec<_>>())
        };
        Self {
            features: self.features.select(Axis(0), indices),
            clean_labels: pick(&self.clean_labels),
            noisy_labels: pick(&self.noisy_labels),
            num_classes: self.num_classes,
        }
    }

    pub fn class_counts(labels: &[usize], num_classes: usize) -> Vec<usize> {
        let mut counts = vec![0; num_classes];
        for &l in labels {
            counts[l] += 1;
        }
        counts
    }

    /// Prior from clean label frequencies.
    pub fn clean_prior(&self) -> Result<ClassPrior> {
        ClassPrior::from_counts(&Self::class_counts(self.require_clean()?, self.num_classes))
    }

    /// Prior from noisy label frequencies; the only one available when clean
    /// labels are unknown.
    pub fn noisy_prior(&self) -> Result<ClassPrior> {
        ClassPrior::from_counts(&Self::class_counts(self.require_noisy()?, self.num_classes))
    }

    /// CSV with header `x0,..,x{d-1},label[,noisy_label]`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(writer);
        let mut header: Vec<String> = (0..self.dim()).map(|k| format!("x{k}")).collect();
        let label_cols: Vec<(&str, &Vec<usize>)> = [
            ("label", self.clean_labels.as_ref()),
            ("noisy_label", self.noisy_labels.as_ref()),
        ]
        .into_iter()
        .filter_map(|(name, l)| l.map(|l| (name, l)))
        .collect();
        header.extend(label_cols.iter().map(|(name, _)| name.to_string()));
        w.write_record(&header)?;
        for (i, row) in self.features.rows().into_iter().enumerate() {
            let mut record: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
            record.extend(label_cols.iter().map(|(_, l)| l[i].to_string()));
            w.write_record(&record)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::file(path, e))?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}

/// Parameters of the Gaussian blob generator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlobSpec {
    pub classes: usize,
    pub per_class: usize,
    pub dim: usize,
    pub separation: f64,
    pub spread: f64,
}

/// Class means: on a circle of radius `separation` for `dim == 2`; for
/// higher dimensions class `k` sits on axis `k mod dim`, alternating sign
/// for each wrap-around and growing by `separation / 2` every two wraps.
pub fn blob_means(classes: usize, dim: usize, separation: f64) -> Array2<f64> {
    let mut means = Array2::zeros((classes, dim));
    if dim == 2 {
        for k in 0..classes {
            let angle = 2.0 * std::f64::consts::PI * k as f64 / classes as f64;
            means[[k, 0]] = separation * angle.cos();
            means[[k, 1]] = separation * angle.sin();
        }
    } else {
        for k in 0..classes {
            let wrap = k / dim;
            let sign = if wrap.is_multiple_of(2) { 1.0 } else { -1.0 };
            let scale = 1.0 + (wrap / 2) as f64 * 0.5;
            means[[k, k % dim]] = sign * separation * scale;
        }
    }
    means
}

pub fn generate_blobs(spec: &BlobSpec, seed: u64) -> Result<LabeledDataset> {
    if spec.classes < 2 {
        return Err(Error::arg("classes", "need at least 2"));
    }
    if spec.per_class < 1 {
        return Err(Error::arg("per_class", "need at least 1"));
    }
    if spec.dim < 2 {
        return Err(Error::arg("dim", "need at least 2"));
    }
    if !(spec.separation > 0.0) || !(spec.spread > 0.0) {
        return Err(Error::arg("separation/spread", "must be positive"));
    }
    let means = blob_means(spec.classes, spec.dim, spec.separation);
    let n = spec.classes * spec.per_class;
    let mut rng = rng::seeded(seed);
    let mut features = Array2::zeros((n, spec.dim));
    let mut labels = Vec::with_capacity(n);
    for (i, mut row) in features.rows_mut().into_iter().enumerate() {
        let k = i / spec.per_class;
        for (j, v) in row.iter_mut().enumerate() {
            let z: f64 = StandardNormal.sample(&mut rng);
            *v = means[[k, j]] + spec.spread * z;
        }
        labels.push(k);
    }
    LabeledDataset::new(features, Some(labels), None, spec.classes)
}

/// Draws each noisy label from row `clean_label` of `tc`.
pub fn corrupt_labels(
    ds: &LabeledDataset,
    tc: &ClassTransitionMatrix,
    seed: u64,
) -> Result<LabeledDataset> {
    let clean = ds.require_clean()?;
    if tc.num_classes() != ds.num_classes() {
        return Err(Error::DimensionMismatch {
            what: "transition matrix",
            expected: ds.num_classes(),
            actual: tc.num_classes(),
        });
    }
    let rows = tc.to_rows();
    let mut rng = rng::stream(seed, rng::streams::CORRUPTION);
    let noisy = clean
        .iter()
        .map(|&y| rng::sample_categorical(&rows[y], rng.random::<f64>()))
        .collect();
    ds.clone().with_noisy_labels(noisy)
}

fn both_labels(ds: &LabeledDataset) -> Result<(&[usize], &[usize])> {
    Ok((ds.require_clean()?, ds.require_noisy()?))
}

pub fn empirical_class_noise_rate(ds: &LabeledDataset) -> Result<f64> {
    let (clean, noisy) = both_labels(ds)?;
    if clean.is_empty() {
        return Err(Error::arg("dataset", "empty"));
    }
    let flipped = clean.iter().zip(noisy).filter(|(a, b)| a != b).count();
    Ok(flipped as f64 / clean.len() as f64)
}

/// Fraction of unordered pairs `i < j` whose similarity flips under the
/// noise. Every pair is enumerated when there are at most `max_pairs` of
/// them; otherwise `max_pairs` pairs are sampled uniformly with replacement.
pub fn empirical_simi_noise_rate(ds: &LabeledDataset, max_pairs: usize, seed: u64) -> Result<f64> {
    let (clean, noisy) = both_labels(ds)?;
    let n = clean.len();
    if n < 2 {
        return Err(Error::arg("dataset", format!("need at least 2 points, got {n}")));
    }
    if max_pairs == 0 {
        return Err(Error::arg("max_pairs", "must be positive"));
    }
    let flips = |i: usize, j: usize| (clean[i] == clean[j]) != (noisy[i] == noisy[j]);
    let total = n * (n - 1) / 2;
    if total <= max_pairs {
        let mut flipped = 0usize;
        for i in 0..n {
            for j in i + 1..n {
                flipped += usize::from(flips(i, j));
            }
        }
        return Ok(flipped as f64 / total as f64);
    }
    let mut rng = rng::stream(seed, rng::streams::PAIR_SAMPLING);
    let mut flipped = 0usize;
    for _ in 0..max_pairs {
        let i = rng.random_range(0..n);
        let mut j = rng.random_range(0..n - 1);
        if j >= i {
            j += 1;
        }
        flipped += usize::from(flips(i, j));
    }
    Ok(flipped as f64 / max_pairs as f64)
}

/// Standard error of [`empirical_simi_noise_rate`] as an estimate of the
/// expected similarity noise rate. Pairs share points, so the flip indicators
/// are correlated: the all-pairs rate is a U-statistic with variance about
/// `4 Var(g) / n`, where `g(i)` is the flip rate of point `i` against all
/// others. Sampling `max_pairs` pairs adds binomial variance on top.
pub fn empirical_simi_noise_std_error(ds: &LabeledDataset, max_pairs: usize) -> Result<f64> {
    let (clean, noisy) = both_labels(ds)?;
    let n = clean.len();
    if n < 2 {
        return Err(Error::arg("dataset", format!("need at least 2 points, got {n}")));
    }
    let c = ds.num_classes();
    let mut counts = vec![0usize; c * c];
    for (&a, &b) in clean.iter().zip(noisy) {
        counts[a * c + b] += 1;
    }
    let flips = |a: usize, an: usize, b: usize, bn: usize| (a == b) != (an == bn);
    // g for each occupied (clean, noisy) cell, excluding the point itself
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for a in 0..c {
        for an in 0..c {
            let k = counts[a * c + an];
            if k == 0 {
                continue;
            }
            let mut hits = 0usize;
            for b in 0..c {
                for bn in 0..c {
                    if flips(a, an, b, bn) {
                        hits += counts[b * c + bn];
                    }
                }
            }
            let g = hits as f64 / (n - 1) as f64;
            sum += k as f64 * g;
            sum_sq += k as f64 * g * g;
        }
    }
    let mean = sum / n as f64;
    let var_g = (sum_sq / n as f64 - mean * mean).max(0.0);
    let mut var = 4.0 * var_g / n as f64;
    let total = n * (n - 1) / 2;
    if total > max_pairs {
        var += mean * (1.0 - mean) / max_pairs as f64;
    }
    Ok(var.sqrt())
}

/// Column layout of a CSV dataset. Every column that is not a label column
/// is a feature.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CsvSchema {
    pub label_column: usize,
    #[serde(default = "default_true")]
    pub has_header: bool,
    #[serde(default)]
    pub noisy_label_column: Option<usize>,
    /// Overrides the class count inferred from the largest label.
    #[serde(default)]
    pub num_classes: Option<usize>,
}

fn default_true() -> bool {
    true
}

impl CsvSchema {
    pub fn new(label_column: usize, has_header: bool) -> Self {
        Self {
            label_column,
            has_header,
            noisy_label_column: None,
            num_classes: None,
        }
    }
}

pub fn load_csv(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<LabeledDataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::file(path, e))?;
    read_csv(std::io::BufReader::new(file), schema)
}

fn parse_label(row: usize, cell: &str) -> Result<usize> {
    let cell = cell.trim();
    match cell.parse::<i64>() {
        Ok(v) if v < 0 => Err(Error::NegativeLabel { row, value: v }),
        Ok(v) => Ok(v as usize),
        Err(_) => Err(Error::InvalidLabel {
            row,
            value: cell.to_string(),
        }),
    }
}

/// Row numbers in errors are 1-based physical lines, header included.
pub fn read_csv<R: Read>(reader: R, schema: &CsvSchema) -> Result<LabeledDataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(reader);
    let mut width = None;
    let mut features = Vec::new();
    let mut clean = Vec::new();
    let mut noisy = Vec::new();
    let mut rows = 0usize;
    for (idx, record) in rdr.records().enumerate() {
        let record = record?;
        let line = idx + 1;
        if idx == 0 && schema.has_header {
            continue;
        }
        if record.len() == 1 && record[0].trim().is_empty() {
            continue;
        }
        let expected = *width.get_or_insert(record.len());
        if record.len() != expected {
            return Err(Error::RaggedRow {
                row: line,
                expected,
                found: record.len(),
            });
        }
        if schema.label_column >= expected {
            return Err(Error::arg(
                "label_column",
                format!("column {} does not exist in a {expected}-column file", schema.label_column),
            ));
        }
        for (col, cell) in record.iter().enumerate() {
            if col == schema.label_column {
                clean.push(parse_label(line, cell)?);
            } else if Some(col) == schema.noisy_label_column {
                noisy.push(parse_label(line, cell)?);
            } else {
                let v: f64 = cell.trim().parse().map_err(|_| Error::NonNumericCell {
                    row: line,
                    column: col,
                    value: cell.to_string(),
                })?;
                features.push(v);
            }
        }
        rows += 1;
    }
    if rows == 0 {
        return Err(Error::arg("csv", "no data rows"));
    }
    let d = features.len() / rows;
    let inferred = clean.iter().chain(&noisy).max().copied().unwrap_or(0) + 1;
    let classes = schema.num_classes.unwrap_or(inferred);
    let features = Array2::from_shape_vec((rows, d), features)
        .map_err(|e| Error::arg("csv", e.to_string()))?;
    let noisy = schema.noisy_label_column.map(|_| noisy);
    LabeledDataset::new(features, Some(clean), noisy, classes)
}
