//! Transition-matrix algebra.
//!
//! A [`ClassTransitionMatrix`] `T` holds `T[i][j] = P(noisy = j | clean = i)`
//! for `c` classes. Pairing two independently corrupted points turns it into a
//! [`SimilarityTransitionMatrix`] `S` with `S[m][n] = P(noisy sim = n | clean
//! sim = m)`, where similarity 1 means "same class". [`class2simi`] computes
//! the 2x2 matrix in closed form; [`simi_transition_oracle`] computes the same
//! thing by brute-force summation and exists to cross-check it.

use std::fmt;
use std::path::Path;

use nalgebra::DMatrix;
use ndarray::{Array2, ArrayView1};
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// Absolute tolerance for row sums of any transition matrix or prior.
pub const ROW_SUM_TOLERANCE: f64 = 1e-9;

/// Reciprocal condition number below which a class transition matrix is
/// treated as singular.
pub const SINGULARITY_THRESHOLD: f64 = 1e-9;

fn check_probability(value: f64, what: impl FnOnce() -> String) -> Result<()> {
    if !value.is_finite() || !(0.0..=1.0).contains(&value) {
        return Err(Error::InvalidMatrix(format!(
            "{} = {value} is not a probability",
            what()
        )));
    }
    Ok(())
}

/// Row-stochastic `c x c` matrix of class flip probabilities.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassTransitionMatrix {
    entries: Array2<f64>,
}

impl ClassTransitionMatrix {
    pub fn new(entries: Array2<f64>) -> Result<Self> {
        let (rows, cols) = entries.dim();
        if rows != cols {
            return Err(Error::InvalidMatrix(format!(
                "matrix is {rows}x{cols}, expected square"
            )));
        }
        if rows < 2 {
            return Err(Error::InvalidMatrix(format!(
                "need at least 2 classes, got {rows}"
            )));
        }
        for ((i, j), &v) in entries.indexed_iter() {
            check_probability(v, || format!("entry ({i}, {j})"))?;
        }
        for (i, row) in entries.rows().into_iter().enumerate() {
            let sum = row.sum();
            if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                return Err(Error::InvalidMatrix(format!(
                    "row {i} sums to {sum}, expected 1"
                )));
            }
        }
        Ok(Self { entries })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let c = rows.len();
        let mut entries = Array2::zeros((c, c));
        for (i, row) in rows.iter().enumerate() {
            if row.len() != c {
                return Err(Error::InvalidMatrix(format!(
                    "row {i} has {} entries, expected {c}",
                    row.len()
                )));
            }
            for (j, &v) in row.iter().enumerate() {
                entries[[i, j]] = v;
            }
        }
        Self::new(entries)
    }

    pub fn identity(c: usize) -> Result<Self> {
        Self::new(Array2::eye(c))
    }

    pub fn num_classes(&self) -> usize {
        self.entries.nrows()
    }

    pub fn get(&self, clean: usize, noisy: usize) -> f64 {
        self.entries[[clean, noisy]]
    }

    pub fn entries(&self) -> &Array2<f64> {
        &self.entries
    }

    pub fn row(&self, clean: usize) -> ArrayView1<'_, f64> {
        self.entries.row(clean)
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.entries.rows().into_iter().map(|r| r.to_vec()).collect()
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.entries.iter().map(|v| v * v).sum()
    }

    pub fn column_sums(&self) -> Vec<f64> {
        self.entries.columns().into_iter().map(|c| c.sum()).collect()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.entries
            .iter()
            .zip(other.entries.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Parses the plain-text matrix format: the class count on the first line
    /// followed by `c` lines of `c` whitespace-separated decimals.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty());
        let (first, header) = lines.next().ok_or(Error::MatrixFormat {
            line: 1,
            reason: "empty input".into(),
        })?;
        let c: usize = header.trim().parse().map_err(|_| Error::MatrixFormat {
            line: first + 1,
            reason: format!("expected class count, found `{}`", header.trim()),
        })?;
        let mut rows = Vec::with_capacity(c);
        for (idx, line) in lines {
            if rows.len() == c {
                return Err(Error::MatrixFormat {
                    line: idx + 1,
                    reason: format!("more than {c} matrix rows"),
                });
            }
            let row = line
                .split_whitespace()
                .map(|tok| {
                    tok.parse::<f64>().map_err(|_| Error::MatrixFormat {
                        line: idx + 1,
                        reason: format!("cannot parse `{tok}`"),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            if row.len() != c {
                return Err(Error::MatrixFormat {
                    line: idx + 1,
                    reason: format!("expected {c} values, found {}", row.len()),
                });
            }
            rows.push(row);
        }
        if rows.len() != c {
            return Err(Error::MatrixFormat {
                line: text.lines().count(),
                reason: format!("expected {c} matrix rows, found {}", rows.len()),
            });
        }
        Self::from_rows(&rows)
    }

    pub fn to_text(&self) -> String {
        self.to_string()
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
        Self::from_text(&text)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_text()).map_err(|e| Error::file(path, e))
    }
}

impl fmt::Display for ClassTransitionMatrix {
    /// Shortest round-trip decimal representation, so text written here
    /// parses back to identical bits.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}", self.num_classes())?;
        for row in self.entries.rows() {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
            writeln!(f, "{}", cells.join(" "))?;
        }
        Ok(())
    }
}

impl Serialize for ClassTransitionMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_rows().serialize(s)
    }
}

impl<'de> Deserialize<'de> for ClassTransitionMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(d)?;
        Self::from_rows(&rows).map_err(serde::de::Error::custom)
    }
}

/// Row-stochastic 2x2 matrix; index 0 is "dissimilar", 1 is "similar".
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(into = "[[f64; 2]; 2]")]
pub struct SimilarityTransitionMatrix {
    entries: [[f64; 2]; 2],
}

impl From<SimilarityTransitionMatrix> for [[f64; 2]; 2] {
    fn from(m: SimilarityTransitionMatrix) -> Self {
        m.entries
    }
}

impl<'de> Deserialize<'de> for SimilarityTransitionMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let entries = <[[f64; 2]; 2]>::deserialize(d)?;
        Self::new(entries).map_err(serde::de::Error::custom)
    }
}

impl SimilarityTransitionMatrix {
    pub fn new(entries: [[f64; 2]; 2]) -> Result<Self> {
        for (m, row) in entries.iter().enumerate() {
            for (n, &v) in row.iter().enumerate() {
                check_probability(v, || format!("similarity entry ({m}, {n})"))?;
            }
            let sum = row[0] + row[1];
            if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                return Err(Error::InvalidMatrix(format!(
                    "similarity row {m} sums to {sum}, expected 1"
                )));
            }
        }
        Ok(Self { entries })
    }

    pub fn identity() -> Self {
        Self {
            entries: [[1.0, 0.0], [0.0, 1.0]],
        }
    }

    pub fn get(&self, clean: usize, noisy: usize) -> f64 {
        self.entries[clean][noisy]
    }

    pub fn entries(&self) -> [[f64; 2]; 2] {
        self.entries
    }

    pub fn t00(&self) -> f64 {
        self.entries[0][0]
    }

    pub fn t01(&self) -> f64 {
        self.entries[0][1]
    }

    pub fn t10(&self) -> f64 {
        self.entries[1][0]
    }

    pub fn t11(&self) -> f64 {
        self.entries[1][1]
    }

    /// Binary learnability under class-conditional noise: `T00 + T11 > 1`.
    pub fn is_learnable(&self) -> bool {
        self.t00() + self.t11() > 1.0
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let mut worst = 0.0f64;
        for m in 0..2 {
            for n in 0..2 {
                worst = worst.max((self.entries[m][n] - other.entries[m][n]).abs());
            }
        }
        worst
    }
}

/// Class probabilities, normalized on construction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ClassPrior {
    probs: Vec<f64>,
}

impl TryFrom<Vec<f64>> for ClassPrior {
    type Error = Error;
    fn try_from(probs: Vec<f64>) -> Result<Self> {
        Self::from_weights(&probs)
    }
}

impl From<ClassPrior> for Vec<f64> {
    fn from(p: ClassPrior) -> Self {
        p.probs
    }
}

impl ClassPrior {
    pub fn uniform(c: usize) -> Result<Self> {
        if c < 2 {
            return Err(Error::InvalidPrior(format!("need at least 2 classes, got {c}")));
        }
        Ok(Self {
            probs: vec![1.0 / c as f64; c],
        })
    }

    /// Accepts probabilities or raw per-class counts; either way the result
    /// is normalized to sum to one.
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        if weights.len() < 2 {
            return Err(Error::InvalidPrior(format!(
                "need at least 2 classes, got {}",
                weights.len()
            )));
        }
        if let Some((k, w)) = weights
            .iter()
            .enumerate()
            .find(|(_, w)| !w.is_finite() || **w < 0.0)
        {
            return Err(Error::InvalidPrior(format!("weight {k} = {w} is negative")));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::InvalidPrior("weights sum to zero".into()));
        }
        Ok(Self {
            probs: weights.iter().map(|w| w / total).collect(),
        })
    }

    pub fn from_counts(counts: &[usize]) -> Result<Self> {
        let weights: Vec<f64> = counts.iter().map(|&n| n as f64).collect();
        Self::from_weights(&weights)
    }

    pub fn num_classes(&self) -> usize {
        self.probs.len()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn is_uniform(&self) -> bool {
        self.probs.iter().all(|&p| p == self.probs[0])
    }

    /// Probability that two i.i.d. draws share a class, `sum_i p_i^2`.
    pub fn pair_similar_prior(&self) -> f64 {
        self.probs.iter().map(|p| p * p).sum()
    }
}

fn check_dims(tc: &ClassTransitionMatrix, prior: &ClassPrior) -> Result<()> {
    if tc.num_classes() != prior.num_classes() {
        return Err(Error::DimensionMismatch {
            what: "class prior",
            expected: tc.num_classes(),
            actual: prior.num_classes(),
        });
    }
    Ok(())
}

/// `1 - sum_i p_i^2`: probability mass of clean pairs from different classes.
fn dissimilar_mass(prior: &ClassPrior) -> Result<f64> {
    let mass = 1.0 - prior.pair_similar_prior();
    if mass <= 1e-12 {
        return Err(Error::DegeneratePrior(
            "all mass on one class, so no dissimilar clean pairs exist".into(),
        ));
    }
    Ok(mass)
}

/// Symmetric noise: keep the label with probability `1 - rho`, otherwise
/// flip uniformly to one of the other `c - 1` classes.
pub fn make_symmetric(c: usize, rho: f64) -> Result<ClassTransitionMatrix> {
    if c < 2 {
        return Err(Error::arg("c", format!("need at least 2 classes, got {c}")));
    }
    let limit = (c as f64 - 1.0) / c as f64;
    if !(0.0..limit).contains(&rho) {
        return Err(Error::arg(
            "rho",
            format!("symmetric noise rate {rho} must lie in [0, {limit})"),
        ));
    }
    let off = rho / (c as f64 - 1.0);
    let entries = Array2::from_shape_fn((c, c), |(i, j)| if i == j { 1.0 - rho } else { off });
    ClassTransitionMatrix::new(entries)
}

/// Pair-flip noise: class `i` flips to `(i + 1) mod c` with probability `rho`.
pub fn make_asymmetric(c: usize, rho: f64) -> Result<ClassTransitionMatrix> {
    if c < 2 {
        return Err(Error::arg("c", format!("need at least 2 classes, got {c}")));
    }
    if !(0.0..1.0).contains(&rho) {
        return Err(Error::arg(
            "rho",
            format!("pair-flip noise rate {rho} must lie in [0, 1)"),
        ));
    }
    let mut entries = Array2::zeros((c, c));
    for i in 0..c {
        entries[[i, i]] = 1.0 - rho;
        entries[[i, (i + 1) % c]] += rho;
    }
    ClassTransitionMatrix::new(entries)
}

/// Similarity transition matrix induced by class-dependent noise `tc` when
/// both points of a pair are drawn i.i.d. from `prior`.
///
/// For a uniform prior this is the closed form
/// `T11 = |T|_F^2 / c` and `T01 = (sum_j colsum_j^2 - |T|_F^2) / (c^2 - c)`.
/// Otherwise every clean pair `(i, i')` is weighted by `p_i p_i'`, giving
/// `T11 = sum_i p_i^2 |T_i|^2 / sum_i p_i^2` and
/// `T01 = (sum_j (sum_i p_i T_ij)^2 - sum_i p_i^2 |T_i|^2) / (1 - sum_i p_i^2)`.
pub fn class2simi(
    tc: &ClassTransitionMatrix,
    prior: &ClassPrior,
) -> Result<SimilarityTransitionMatrix> {
    check_dims(tc, prior)?;
    let (t11, t01) = if prior.is_uniform() {
        let c = tc.num_classes() as f64;
        let fro = tc.frobenius_sq();
        let col: f64 = tc.column_sums().iter().map(|s| s * s).sum();
        (fro / c, (col - fro) / (c * c - c))
    } else {
        let p = prior.probs();
        let same_mass = prior.pair_similar_prior();
        let cross_mass = dissimilar_mass(prior)?;
        let weighted_fro: f64 = tc
            .entries()
            .rows()
            .into_iter()
            .zip(p)
            .map(|(row, &pi)| pi * pi * row.dot(&row))
            .sum();
        let weighted_col: f64 = (0..tc.num_classes())
            .map(|j| {
                let s: f64 = p.iter().enumerate().map(|(i, &pi)| pi * tc.get(i, j)).sum();
                s * s
            })
            .sum();
        (
            weighted_fro / same_mass,
            (weighted_col - weighted_fro) / cross_mass,
        )
    };
    // Clamp rounding residue so the result validates.
    let t11 = t11.clamp(0.0, 1.0);
    let t01 = t01.clamp(0.0, 1.0);
    SimilarityTransitionMatrix::new([[1.0 - t01, t01], [1.0 - t11, t11]])
}

/// Brute-force counterpart of [`class2simi`]: sums the joint probability of
/// every ordered clean pair and every pair of noisy outcomes.
pub fn simi_transition_oracle(
    tc: &ClassTransitionMatrix,
    prior: &ClassPrior,
) -> Result<SimilarityTransitionMatrix> {
    check_dims(tc, prior)?;
    dissimilar_mass(prior)?;
    let c = tc.num_classes();
    let p = prior.probs();
    // joint[h][h_noisy]
    let mut joint = [[0.0f64; 2]; 2];
    for a in 0..c {
        for b in 0..c {
            let w = p[a] * p[b];
            let h = usize::from(a == b);
            for ja in 0..c {
                for jb in 0..c {
                    joint[h][usize::from(ja == jb)] += w * tc.get(a, ja) * tc.get(b, jb);
                }
            }
        }
    }
    let row = |h: usize| {
        let total = joint[h][0] + joint[h][1];
        [joint[h][0] / total, joint[h][1] / total]
    };
    let (r0, r1) = (row(0), row(1));
    SimilarityTransitionMatrix::new([[1.0 - r0[1], r0[1]], [1.0 - r1[1], r1[1]]])
}

/// Expected fraction of flipped class labels, `sum_i p_i (1 - T_ii)`.
pub fn class_noise_rate(tc: &ClassTransitionMatrix, prior: &ClassPrior) -> Result<f64> {
    check_dims(tc, prior)?;
    Ok(prior
        .probs()
        .iter()
        .enumerate()
        .map(|(i, p)| p * (1.0 - tc.get(i, i)))
        .sum())
}

/// Expected fraction of flipped similarity labels given the probability
/// `pair_similar_prior` that a clean pair is similar.
pub fn simi_noise_rate(ts: &SimilarityTransitionMatrix, pair_similar_prior: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&pair_similar_prior) {
        return Err(Error::arg(
            "pair_similar_prior",
            format!("{pair_similar_prior} is not a probability"),
        ));
    }
    Ok(pair_similar_prior * ts.t10() + (1.0 - pair_similar_prior) * ts.t01())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LearnabilityReport {
    pub tc_invertible: bool,
    /// Ratio of largest to smallest singular value (infinite when singular).
    pub tc_condition_estimate: f64,
    pub tc_determinant: f64,
    pub ts_learnable: bool,
}

pub fn learnability_check(
    tc: &ClassTransitionMatrix,
    ts: &SimilarityTransitionMatrix,
) -> LearnabilityReport {
    let c = tc.num_classes();
    let m = DMatrix::from_fn(c, c, |i, j| tc.get(i, j));
    let singular = m.clone().singular_values();
    let s_max = singular.max();
    let s_min = singular.min();
    let condition = if s_min > 0.0 { s_max / s_min } else { f64::INFINITY };
    LearnabilityReport {
        tc_invertible: s_min > SINGULARITY_THRESHOLD * s_max,
        tc_condition_estimate: condition,
        tc_determinant: m.determinant(),
        ts_learnable: ts.is_learnable(),
    }
}

/// Multiplies every entry by a random factor whose magnitude is uniform on
/// `[1 + level, 1.1 + level]` and whose sign is a fair coin. Negative
/// products are clamped to zero and rows are renormalized.
///
/// `level = 0` still perturbs (factors in `[1, 1.1]`). Callers wanting the
/// unperturbed matrix should not call this at all; see
/// [`perturb_tc_or_identity`].
pub fn perturb_tc(
    tc: &ClassTransitionMatrix,
    level: f64,
    seed: u64,
) -> Result<ClassTransitionMatrix> {
    if !level.is_finite() || level < 0.0 {
        return Err(Error::arg("level", format!("{level} must be >= 0")));
    }
    let mut rng = rng::stream(seed, rng::streams::PERTURB);
    let c = tc.num_classes();
    let mut entries = tc.entries().clone();
    for v in entries.iter_mut() {
        let magnitude = rng.random_range(1.0 + level..1.1 + level);
        let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        *v = (*v * magnitude * sign).max(0.0);
    }
    for i in 0..c {
        let mut row = entries.row_mut(i);
        let sum = row.sum();
        if sum <= 0.0 {
            return Err(Error::ZeroRow(i));
        }
        row.mapv_inplace(|v| v / sum);
        // Pin the row sum against accumulated rounding.
        let residue = 1.0 - row.sum();
        let k = row
            .iter()
            .enumerate()
            .fold(0, |best, (k, &v)| if v > row[best] { k } else { best });
        row[k] += residue;
    }
    ClassTransitionMatrix::new(entries)
}

/// `None` leaves the matrix untouched; `Some(level)` applies [`perturb_tc`].
pub fn perturb_tc_or_identity(
    tc: &ClassTransitionMatrix,
    level: Option<f64>,
    seed: u64,
) -> Result<ClassTransitionMatrix> {
    match level {
        None => Ok(tc.clone()),
        Some(level) => perturb_tc(tc, level, seed),
    }
}

/// Random matrix generators used by the verification suite and tests.
pub mod random {
    use super::*;
    use crate::rng::Rng;

    /// Rows drawn uniformly from the simplex.
    pub fn row_stochastic(c: usize, rng: &mut Rng) -> Result<ClassTransitionMatrix> {
        let mut entries = Array2::zeros((c, c));
        for i in 0..c {
            let mut row: Vec<f64> = (0..c).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
            let s: f64 = row.iter().sum();
            row.iter_mut().for_each(|v| *v /= s);
            fix_row(&mut row);
            for (j, v) in row.into_iter().enumerate() {
                entries[[i, j]] = v;
            }
        }
        ClassTransitionMatrix::new(entries)
    }

    /// Strictly diagonally dominant rows: `T_ii` uniform on `(0.5, 1]`, the
    /// remainder spread over off-diagonals by a uniform simplex draw.
    pub fn diagonally_dominant(c: usize, rng: &mut Rng) -> Result<ClassTransitionMatrix> {
        let mut entries = Array2::zeros((c, c));
        for i in 0..c {
            let diag = 0.5 + 0.5 * (1.0 - rng.random::<f64>()) * (1.0 - 1e-9);
            let mut off: Vec<f64> = (0..c - 1)
                .map(|_| -(1.0 - rng.random::<f64>()).ln())
                .collect();
            let s: f64 = off.iter().sum();
            off.iter_mut().for_each(|v| *v *= (1.0 - diag) / s);
            let mut row: Vec<f64> = Vec::with_capacity(c);
            let mut it = off.into_iter();
            for j in 0..c {
                row.push(if j == i { diag } else { it.next().unwrap() });
            }
            fix_row(&mut row);
            for (j, v) in row.into_iter().enumerate() {
                entries[[i, j]] = v;
            }
        }
        ClassTransitionMatrix::new(entries)
    }

    /// Random prior with every class weight in `[0.05, 1)` before normalizing.
    pub fn prior(c: usize, rng: &mut Rng) -> Result<ClassPrior> {
        let w: Vec<f64> = (0..c).map(|_| rng.random_range(0.05..1.0)).collect();
        ClassPrior::from_weights(&w)
    }

    fn fix_row(row: &mut [f64]) {
        let residue = 1.0 - row.iter().sum::<f64>();
        let k = (0..row.len())
            .max_by(|&a, &b| row[a].total_cmp(&row[b]))
            .unwrap();
        row[k] += residue;
    }
}
