//! Acceptance gate: one line per criterion, non-zero exit when any fails.

mod common;

use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use class2simi::model::{LossSettings, Objective};
use class2simi::noise::{
    corrupt_labels, empirical_class_noise_rate, empirical_simi_noise_rate, empirical_simi_noise_std_error,
    generate_blobs,
};
use class2simi::pipeline::{
    prepare_data, prior_for, resolve_tc, run_experiment, run_matrix_robustness, run_pointwise, run_stage1,
    run_stage2, sample_similarity_rates, ExperimentConfig, Method, NoiseSpec, TcSource,
};
use class2simi::rng;
use class2simi::transition::{
    class2simi, class_noise_rate, make_symmetric, random, simi_noise_rate, simi_transition_oracle,
};
use class2simi::{BlobSpec, ClassPrior, MlpModel, Result};
use rand::Rng as _;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Result<Outcome> {
    Ok(Outcome {
        passed,
        detail: detail.into(),
    })
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn oracle_equivalence() -> Result<Outcome> {
    let mut r = rng::stream(2024, rng::streams::VERIFY);
    let mut max_dev: f64 = 0.0;
    for _ in 0..100 {
        let c = r.random_range(2..=20);
        let tc = random::row_stochastic(c, &mut r)?;
        for prior in [ClassPrior::uniform(c)?, random::prior(c, &mut r)?] {
            let fast = class2simi(&tc, &prior)?;
            max_dev = max_dev.max(fast.max_abs_diff(&simi_transition_oracle(&tc, &prior)?));
        }
    }
    let mut max_z: f64 = 0.0;
    let mut cases = vec![make_symmetric(10, 0.4)?];
    for c in [3, 7] {
        cases.push(random::row_stochastic(c, &mut r)?);
    }
    for tc in &cases {
        let ts = class2simi(tc, &ClassPrior::uniform(tc.num_classes())?)?;
        let (totals, hits) = sample_similarity_rates(tc, 1_000_000, &mut r);
        for (h, p) in [(0, ts.t01()), (1, ts.t11())] {
            let n = totals[h] as f64;
            let z = (hits[h] as f64 / n - p) / (p * (1.0 - p) / n).sqrt();
            max_z = max_z.max(z.abs());
        }
    }
    outcome(
        max_dev < 1e-10 && max_z <= 3.0,
        format!("100 random Tc: max |dev| {max_dev:.2e} < 1e-10; 3 x 1e6 sampled pairs: max |z| {max_z:.2} <= 3"),
    )
}

fn noise_rate_grid() -> Result<Outcome> {
    let mut worst = f64::NEG_INFINITY;
    let mut cells = 0;
    for c in 8..=50 {
        for rho in [0.1, 0.2, 0.3, 0.4, 0.5, 0.6] {
            let tc = make_symmetric(c, rho)?;
            let prior = ClassPrior::uniform(c)?;
            let ts = class2simi(&tc, &prior)?;
            let gap = simi_noise_rate(&ts, prior.pair_similar_prior())? - class_noise_rate(&tc, &prior)?;
            worst = worst.max(gap);
            cells += 1;
        }
    }
    let tc = make_symmetric(2, 0.4)?;
    let prior = ClassPrior::uniform(2)?;
    let two = simi_noise_rate(&class2simi(&tc, &prior)?, 0.5)?;
    let class_two = class_noise_rate(&tc, &prior)?;
    outcome(
        worst < 0.0 && (two - 0.48).abs() < 1e-12 && two > class_two,
        format!(
            "{cells} cells (c 8..50): max(similarity - class) {worst:.4} < 0; c=2 rho=0.4: similarity {two:.6} > class {class_two:.6}"
        ),
    )
}

fn learnability() -> Result<Outcome> {
    let mut r = rng::stream(7, rng::streams::VERIFY);
    let mut min_sum = f64::INFINITY;
    let mut counterexamples = Vec::new();
    for _ in 0..100 {
        let c = r.random_range(2..=20);
        let tc = random::diagonally_dominant(c, &mut r)?;
        let ts = class2simi(&tc, &ClassPrior::uniform(c)?)?;
        let s = ts.t00() + ts.t11();
        min_sum = min_sum.min(s);
        if s <= 1.0 {
            counterexamples.push(tc);
        }
    }
    for tc in &counterexamples {
        eprintln!("counterexample:\n{}", tc.to_text());
    }
    outcome(
        counterexamples.is_empty(),
        format!(
            "100 diagonally dominant Tc: min T00+T11 {min_sum:.4} > 1, {} counterexamples",
            counterexamples.len()
        ),
    )
}

fn empirical_agreement() -> Result<Outcome> {
    let spec = BlobSpec {
        classes: 10,
        per_class: 1000,
        dim: 8,
        separation: 5.0,
        spread: 1.5,
    };
    let noisy = corrupt_labels(&generate_blobs(&spec, 1)?, &make_symmetric(10, 0.4)?, 1)?;
    let n = noisy.len() as f64;
    let class_rate = empirical_class_noise_rate(&noisy)?;
    let class_sigma = (0.4 * 0.6 / n).sqrt();
    let pairs = 1_000_000;
    let simi = empirical_simi_noise_rate(&noisy, pairs, 1)?;
    let simi_sigma = empirical_simi_noise_std_error(&noisy, pairs)?;
    let target = 0.124_444_444_444_444_4;
    let z_class = (class_rate - 0.4) / class_sigma;
    let z_simi = (simi - target) / simi_sigma;
    outcome(
        z_class.abs() <= 3.0 && z_simi.abs() <= 3.0,
        format!(
            "n=1e4: class rate {class_rate:.4} (z {z_class:+.2}), similarity rate {simi:.5} vs 0.124444 (z {z_simi:+.2})"
        ),
    )
}

fn gradient_gate() -> Result<Outcome> {
    let tc = make_symmetric(3, 0.3)?;
    let ts = class2simi(&tc, &ClassPrior::uniform(3)?)?;
    let mut worst: Vec<(String, f64)> = Vec::new();
    for (name, objective) in [
        ("ce", Objective::CrossEntropy),
        ("forward_pointwise", Objective::Forward(&tc)),
        ("reweight_pointwise", Objective::Reweight(&tc)),
        ("f_class2simi", Objective::FClass2Simi(&ts)),
        ("r_class2simi", Objective::RClass2Simi(&ts)),
    ] {
        let mut w: f64 = 0.0;
        for seed in 0..3u64 {
            let x = common::normal_matrix(8, 4, seed);
            let labels: Vec<usize> = (0..8).map(|i| (i + seed as usize) % 3).collect();
            let model = MlpModel::new(&[4, 6, 3], seed)?;
            w = w.max(common::fd_max_rel_error(&objective, &model, x.view(), &labels, LossSettings::default()));
        }
        worst.push((name.to_string(), w));
    }
    let all = worst.iter().all(|(_, e)| *e < 1e-4);
    let parts: Vec<String> = worst.iter().map(|(n, e)| format!("{n} {e:.1e}")).collect();
    outcome(all, format!("max relative error < 1e-4: {}", parts.join(", ")))
}

fn ordering() -> Result<Outcome> {
    let (mut ce, mut fw, mut f2) = (Vec::new(), Vec::new(), Vec::new());
    for seed in 0..5 {
        let mut cfg = ExperimentConfig::blobs_default();
        cfg.seed = seed;
        let data = prepare_data(&cfg)?;
        let stage1 = run_stage1(&cfg, &data)?;
        let tc = resolve_tc(&cfg, &data, &stage1)?;
        let ts = class2simi(&tc, &prior_for(&cfg, &data)?)?;
        ce.push(stage1.report.clean_test_accuracy);
        fw.push(run_pointwise(&cfg, &data, Method::Forward, &tc)?.1.clean_test_accuracy);
        f2.push(run_stage2(&cfg, &data, &stage1.model, &ts)?.1.clean_test_accuracy);
    }
    let (ce, fw, f2) = (mean(&ce), mean(&fw), mean(&f2));
    outcome(
        f2 >= fw && fw >= ce && f2 - ce > 0.0,
        format!("5 seeds, estimated Tc: F-Class2Simi {f2:.4} >= Forward {fw:.4} >= CE {ce:.4}"),
    )
}

fn robustness() -> Result<Outcome> {
    let (mut drop_fw, mut drop_f2) = (Vec::new(), Vec::new());
    for seed in 0..5 {
        let mut cfg = ExperimentConfig::blobs_default();
        cfg.seed = seed;
        let rows = run_matrix_robustness(&cfg, &[0.0, 0.3])?;
        let acc = |level: f64, m: Method| {
            rows.iter()
                .find(|r| r.level == level && r.method == m)
                .map(|r| r.accuracy)
                .expect("row present")
        };
        drop_fw.push(acc(0.0, Method::Forward) - acc(0.3, Method::Forward));
        drop_f2.push(acc(0.0, Method::FClass2simi) - acc(0.3, Method::FClass2simi));
    }
    let (fw, f2) = (mean(&drop_fw), mean(&drop_f2));
    outcome(
        f2 <= fw,
        format!("level 0 -> 0.3, mean over 5 seeds: F-Class2Simi drop {f2:+.4} <= Forward drop {fw:+.4}"),
    )
}

fn clean_ablation() -> Result<Outcome> {
    let mut diffs = Vec::new();
    for seed in 0..3 {
        let mut cfg = ExperimentConfig::blobs_default();
        cfg.seed = seed;
        cfg.noise = NoiseSpec::None;
        cfg.tc_source = TcSource::True;
        cfg.method = Method::FClass2simi;
        let report = run_experiment(&cfg)?.report;
        diffs.push(report.final_test_accuracy - report.stage1.clean_test_accuracy);
    }
    let d = mean(&diffs);
    outcome(
        d.abs() <= 0.01,
        format!("Tc = identity, 3 seeds: |acc(F-Class2Simi) - acc(CE)| = {:.4} <= 0.01", d.abs()),
    )
}

fn determinism() -> Result<Outcome> {
    let mut cfg = ExperimentConfig::blobs_default();
    cfg.seed = 11;
    let mut same = true;
    for method in [Method::FClass2simi, Method::Forward] {
        cfg.method = method;
        let a = run_experiment(&cfg)?.report.to_json_without_timing()?;
        let b = run_experiment(&cfg)?.report.to_json_without_timing()?;
        same &= a == b;
    }
    let cli = || {
        let out = Command::new(env!("CARGO_BIN_EXE_class2simi"))
            .args(["train", "--seed", "3", "--method", "r_class2simi", "--epochs", "5"])
            .output()
            .expect("binary runs");
        let mut v: serde_json::Value = serde_json::from_slice(&out.stdout).expect("json report");
        v["wall_clock_seconds"] = serde_json::json!(0);
        serde_json::to_vec(&v).expect("serializes")
    };
    let cli_same = cli() == cli();
    outcome(
        same && cli_same,
        format!("library reports identical: {same}; CLI train reports identical: {cli_same}"),
    )
}

fn checkpoint_round_trip() -> Result<Outcome> {
    let cfg = ExperimentConfig::blobs_default();
    let data = prepare_data(&cfg)?;
    let stage1 = run_stage1(&cfg, &data)?;
    let path = std::env::temp_dir().join(format!("class2simi_acceptance_{}.json", std::process::id()));
    stage1.model.save(&path)?;
    let restored = MlpModel::load(&path)?;
    std::fs::remove_file(&path)?;
    let mut cfg1 = cfg.clone();
    cfg1.stage2.epochs = Some(1);
    let (_, a) = run_stage2(&cfg1, &data, &stage1.model, &stage1.ts_hat)?;
    let (_, b) = run_stage2(&cfg1, &data, &restored, &stage1.ts_hat)?;
    let (la, lb) = (a.epochs[0].train_loss, b.epochs[0].train_loss);
    outcome(
        la.to_bits() == lb.to_bits() && restored == stage1.model,
        format!("first stage-2 epoch loss {la:?} vs {lb:?}"),
    )
}

type Check = fn() -> Result<Outcome>;

fn main() -> ExitCode {
    let criteria: [(u8, &str, Option<Duration>, Check); 10] = [
        (1, "oracle equivalence", Some(Duration::from_secs(30)), oracle_equivalence),
        (2, "noise-rate reduction grid", Some(Duration::from_secs(5)), noise_rate_grid),
        (3, "learnability", None, learnability),
        (4, "empirical/analytic agreement", Some(Duration::from_secs(10)), empirical_agreement),
        (5, "gradient gate", Some(Duration::from_secs(10)), gradient_gate),
        (6, "end-to-end ordering", Some(Duration::from_secs(300)), ordering),
        (7, "matrix perturbation robustness", Some(Duration::from_secs(600)), robustness),
        (8, "clean-data ablation", None, clean_ablation),
        (9, "determinism", None, determinism),
        (10, "checkpoint round-trip", None, checkpoint_round_trip),
    ];
    let mut failures = 0;
    for (id, name, limit, check) in criteria {
        let start = Instant::now();
        let result = check();
        let elapsed = start.elapsed();
        let (mut passed, detail) = match result {
            Ok(o) => (o.passed, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        let timing = match limit {
            Some(l) => {
                passed &= elapsed <= l;
                format!("{:.2}s, limit {}s", elapsed.as_secs_f64(), l.as_secs())
            }
            None => format!("{:.2}s", elapsed.as_secs_f64()),
        };
        failures += usize::from(!passed);
        println!(
            "[{}] {id:>2} {name}: {detail} ({timing})",
            if passed { "PASS" } else { "FAIL" }
        );
    }
    println!("acceptance: {} of 10 criteria passed", 10 - failures);
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
