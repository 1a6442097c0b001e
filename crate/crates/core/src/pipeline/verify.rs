//! Numerical checks of the class-to-similarity transform: agreement with a
//! brute-force oracle, the noise-rate reduction for many classes,
//! learnability under diagonal dominance, and agreement with sampled
//! corruption.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, sample_categorical};
use crate::transition::{
    class2simi, class_noise_rate, learnability_check, make_asymmetric, make_symmetric, random,
    simi_noise_rate, simi_transition_oracle, ClassPrior, ClassTransitionMatrix,
};

/// Below this many classes the similarity noise rate is not expected to
/// undercut the class noise rate.
pub const MIN_CLASSES_FOR_REDUCTION: usize = 8;

pub const ORACLE_CASES: usize = 100;
pub const LEARNABILITY_CASES: usize = 100;
pub const ORACLE_TOLERANCE: f64 = 1e-10;
pub const MONTE_CARLO_SIGMAS: f64 = 3.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyOptions {
    pub c_min: usize,
    pub c_max: usize,
    pub rhos: Vec<f64>,
    /// Number of Monte-Carlo cases; 0 skips that section.
    pub trials: usize,
    pub monte_carlo_pairs: usize,
    pub seed: u64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            c_min: 2,
            c_max: 50,
            rhos: vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6],
            trials: 5,
            monte_carlo_pairs: 1_000_000,
            seed: 0,
        }
    }
}

impl VerifyOptions {
    pub fn validate(&self) -> Result<()> {
        if self.c_min < 2 || self.c_max < self.c_min {
            return Err(Error::arg(
                "c_range",
                format!("{}..={} needs 2 <= min <= max", self.c_min, self.c_max),
            ));
        }
        if self.rhos.is_empty() {
            return Err(Error::arg("rho_range", "empty"));
        }
        if let Some(r) = self.rhos.iter().find(|r| !(0.0..1.0).contains(*r)) {
            return Err(Error::arg("rho_range", format!("{r} is outside [0, 1)")));
        }
        if self.trials > 0 && self.monte_carlo_pairs == 0 {
            return Err(Error::arg("monte_carlo_pairs", "must be positive"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleSection {
    pub cases: usize,
    pub max_deviation: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateCell {
    pub classes: usize,
    pub rho: f64,
    pub class_noise_rate: f64,
    pub similarity_noise_rate: f64,
    /// Whether the reduction is claimed for this cell.
    pub asserted: bool,
    pub reduced: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateSection {
    pub family: String,
    pub cells: Vec<RateCell>,
    /// Largest `similarity - class` rate over the asserted cells.
    pub worst_margin: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Counterexample {
    pub tc: ClassTransitionMatrix,
    pub ts_diagonal_sum: f64,
    pub tc_invertible: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LearnabilitySection {
    pub cases: usize,
    pub min_ts_diagonal_sum: f64,
    pub counterexamples: Vec<Counterexample>,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloCase {
    pub classes: usize,
    pub pairs: usize,
    pub analytic_t01: f64,
    pub analytic_t11: f64,
    pub sampled_t01: f64,
    pub sampled_t11: f64,
    /// Deviations in units of the sampling standard error.
    pub z_t01: f64,
    pub z_t11: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloSection {
    pub cases: Vec<MonteCarloCase>,
    pub max_abs_z: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub options: VerifyOptions,
    pub oracle: OracleSection,
    pub symmetric: RateSection,
    pub pair_flip: RateSection,
    /// Symmetric noise with two classes at rho 0.4, where the similarity
    /// rate exceeds the class rate.
    pub two_class_cell: RateCell,
    pub learnability: LearnabilitySection,
    pub monte_carlo: MonteCarloSection,
    pub passed: bool,
}

impl VerifyReport {
    pub fn summary_line(&self) -> String {
        let flag = |b: bool| if b { "pass" } else { "FAIL" };
        format!(
            "verify: oracle {} (max dev {:.2e}), symmetric {}, pair-flip {}, learnability {} ({} counterexamples), monte-carlo {} ({} cases, max |z| {:.2})",
            flag(self.oracle.passed),
            self.oracle.max_deviation,
            flag(self.symmetric.passed),
            flag(self.pair_flip.passed),
            flag(self.learnability.passed),
            self.learnability.counterexamples.len(),
            flag(self.monte_carlo.passed),
            self.monte_carlo.cases.len(),
            self.monte_carlo.max_abs_z,
        )
    }
}

fn max_entry_diff(a: [[f64; 2]; 2], b: [[f64; 2]; 2]) -> f64 {
    (0..4).map(|k| (a[k / 2][k % 2] - b[k / 2][k % 2]).abs()).fold(0.0, f64::max)
}

fn oracle_section(opts: &VerifyOptions) -> Result<OracleSection> {
    let mut rng = rng::stream(opts.seed, rng::streams::VERIFY);
    let hi = opts.c_max.min(20).max(opts.c_min);
    let mut max_dev: f64 = 0.0;
    for _ in 0..ORACLE_CASES {
        let c = rng.random_range(opts.c_min..=hi);
        let tc = random::row_stochastic(c, &mut rng)?;
        for prior in [ClassPrior::uniform(c)?, random::prior(c, &mut rng)?] {
            let fast = class2simi(&tc, &prior)?;
            let slow = simi_transition_oracle(&tc, &prior)?;
            max_dev = max_dev.max(max_entry_diff(fast.entries(), slow.entries()));
        }
    }
    Ok(OracleSection {
        cases: ORACLE_CASES,
        max_deviation: max_dev,
        passed: max_dev < ORACLE_TOLERANCE,
    })
}

fn rate_cell(tc: &ClassTransitionMatrix, rho: f64) -> Result<RateCell> {
    let c = tc.num_classes();
    let prior = ClassPrior::uniform(c)?;
    let ts = class2simi(tc, &prior)?;
    let class_rate = class_noise_rate(tc, &prior)?;
    let simi_rate = simi_noise_rate(&ts, prior.pair_similar_prior())?;
    Ok(RateCell {
        classes: c,
        rho,
        class_noise_rate: class_rate,
        similarity_noise_rate: simi_rate,
        asserted: c >= MIN_CLASSES_FOR_REDUCTION && rho > 0.0,
        reduced: simi_rate < class_rate,
    })
}

fn rate_section(
    opts: &VerifyOptions,
    family: &str,
    make: fn(usize, f64) -> Result<ClassTransitionMatrix>,
) -> Result<RateSection> {
    let mut cells = Vec::new();
    for c in opts.c_min..=opts.c_max {
        for &rho in &opts.rhos {
            // Rates outside a family's valid range (symmetric rho >= (c-1)/c)
            // have no matrix to check.
            match make(c, rho) {
                Ok(tc) => cells.push(rate_cell(&tc, rho)?),
                Err(Error::InvalidArgument { .. }) => {}
                Err(e) => return Err(e),
            }
        }
    }
    let asserted: Vec<&RateCell> = cells.iter().filter(|c| c.asserted).collect();
    let worst_margin = asserted
        .iter()
        .map(|c| c.similarity_noise_rate - c.class_noise_rate)
        .fold(f64::NEG_INFINITY, f64::max);
    let passed = asserted.iter().all(|c| c.reduced);
    Ok(RateSection {
        family: family.to_string(),
        cells,
        worst_margin,
        passed,
    })
}

fn learnability_section(opts: &VerifyOptions) -> Result<LearnabilitySection> {
    let mut rng = rng::stream(opts.seed.wrapping_add(1), rng::streams::VERIFY);
    let hi = opts.c_max.min(20).max(opts.c_min);
    let mut min_sum = f64::INFINITY;
    let mut counterexamples = Vec::new();
    for _ in 0..LEARNABILITY_CASES {
        let c = rng.random_range(opts.c_min..=hi);
        let tc = random::diagonally_dominant(c, &mut rng)?;
        let ts = class2simi(&tc, &ClassPrior::uniform(c)?)?;
        let report = learnability_check(&tc, &ts);
        let sum = ts.t00() + ts.t11();
        min_sum = min_sum.min(sum);
        if !report.ts_learnable || !report.tc_invertible {
            counterexamples.push(Counterexample {
                tc,
                ts_diagonal_sum: sum,
                tc_invertible: report.tc_invertible,
            });
        }
    }
    Ok(LearnabilitySection {
        cases: LEARNABILITY_CASES,
        min_ts_diagonal_sum: min_sum,
        passed: counterexamples.is_empty(),
        counterexamples,
    })
}

/// Draws `pairs` clean class pairs from a uniform prior, corrupts both
/// members through `tc`, and tallies how often the noisy similarity is 1
/// given the clean similarity.
pub fn sample_similarity_rates(tc: &ClassTransitionMatrix, pairs: usize, rng: &mut rng::Rng) -> ([u64; 2], [u64; 2]) {
    let c = tc.num_classes();
    let rows: Vec<Vec<f64>> = tc.to_rows();
    let mut totals = [0u64; 2];
    let mut noisy_similar = [0u64; 2];
    for _ in 0..pairs {
        let a = rng.random_range(0..c);
        let b = rng.random_range(0..c);
        let na = sample_categorical(&rows[a], rng.random());
        let nb = sample_categorical(&rows[b], rng.random());
        let h = usize::from(a == b);
        totals[h] += 1;
        noisy_similar[h] += u64::from(na == nb);
    }
    (totals, noisy_similar)
}

fn monte_carlo_section(opts: &VerifyOptions) -> Result<MonteCarloSection> {
    let mut rng = rng::stream(opts.seed.wrapping_add(2), rng::streams::VERIFY);
    let hi = opts.c_max.min(10).max(opts.c_min);
    let mut cases = Vec::with_capacity(opts.trials);
    for _ in 0..opts.trials {
        let c = rng.random_range(opts.c_min..=hi);
        let tc = random::row_stochastic(c, &mut rng)?;
        let ts = class2simi(&tc, &ClassPrior::uniform(c)?)?;
        let (totals, hits) = sample_similarity_rates(&tc, opts.monte_carlo_pairs, &mut rng);
        let z = |h: usize, p: f64| {
            let n = totals[h] as f64;
            if n == 0.0 {
                return 0.0;
            }
            let est = hits[h] as f64 / n;
            let se = (p * (1.0 - p) / n).sqrt();
            if se == 0.0 {
                if est == p { 0.0 } else { f64::INFINITY }
            } else {
                (est - p) / se
            }
        };
        let rate = |h: usize| hits[h] as f64 / (totals[h].max(1)) as f64;
        let (z01, z11) = (z(0, ts.t01()), z(1, ts.t11()));
        cases.push(MonteCarloCase {
            classes: c,
            pairs: opts.monte_carlo_pairs,
            analytic_t01: ts.t01(),
            analytic_t11: ts.t11(),
            sampled_t01: rate(0),
            sampled_t11: rate(1),
            z_t01: z01,
            z_t11: z11,
            passed: z01.abs() <= MONTE_CARLO_SIGMAS && z11.abs() <= MONTE_CARLO_SIGMAS,
        });
    }
    let max_abs_z = cases
        .iter()
        .map(|c| c.z_t01.abs().max(c.z_t11.abs()))
        .fold(0.0, f64::max);
    Ok(MonteCarloSection {
        passed: cases.iter().all(|c| c.passed),
        cases,
        max_abs_z,
    })
}

/// Runs every check. Failed checks are report content, not errors; only
/// invalid options are rejected.
pub fn run_verification(opts: &VerifyOptions) -> Result<VerifyReport> {
    opts.validate()?;
    let oracle = oracle_section(opts)?;
    let symmetric = rate_section(opts, "symmetric", make_symmetric)?;
    let pair_flip = rate_section(opts, "pair_flip", make_asymmetric)?;
    let two_class_cell = rate_cell(&make_symmetric(2, 0.4)?, 0.4)?;
    let learnability = learnability_section(opts)?;
    let monte_carlo = monte_carlo_section(opts)?;
    let passed = oracle.passed
        && symmetric.passed
        && pair_flip.passed
        && !two_class_cell.reduced
        && learnability.passed
        && monte_carlo.passed;
    Ok(VerifyReport {
        options: opts.clone(),
        oracle,
        symmetric,
        pair_flip,
        two_class_cell,
        learnability,
        monte_carlo,
        passed,
    })
}
