use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use class2simi::estimation::DEFAULT_ANCHOR_PERCENTILE;
use class2simi::noise::{corrupt_labels, generate_blobs, load_csv};
use class2simi::pipeline::{
    run_experiment, run_matrix_robustness, run_verification, write_robustness_csv,
    ExperimentConfig, Method, TcSource, VerifyOptions,
};
use class2simi::transition::{class2simi, learnability_check, simi_noise_rate, class_noise_rate};
use class2simi::{
    estimate_tc_anchor, BlobSpec, ClassPrior, ClassTransitionMatrix, CsvSchema, Error, MlpModel, Result,
};

#[derive(Parser)]
#[command(name = "class2simi", version, about = "Noisy-label learning through pairwise similarity")]
struct Cli {
    /// Print one human-readable summary line instead of the machine output.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a Gaussian-blob dataset as CSV with clean labels.
    GenData(GenData),
    /// Append a noisy-label column drawn through a transition matrix.
    Corrupt(Corrupt),
    /// Print the 2x2 similarity transition matrix of a class matrix file.
    TransformMatrix(TransformMatrix),
    /// Estimate the class transition matrix from a trained checkpoint.
    EstimateTc(EstimateTc),
    /// Run an experiment and print its JSON report.
    Train(Train),
    /// Perturb the true matrix and compare Forward with F-Class2Simi.
    Robustness(Robustness),
    /// Run the numerical checks on the similarity transform.
    Verify(Verify),
}

#[derive(Args)]
struct GenData {
    /// Experiment config whose blob dataset and seed are used.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    classes: Option<usize>,
    #[arg(long)]
    per_class: Option<usize>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    separation: Option<f64>,
    #[arg(long)]
    spread: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Write here instead of stdout.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct CsvInput {
    /// Zero-based label column; defaults to the last column.
    #[arg(long)]
    label_column: Option<usize>,
    /// Zero-based column of already-noisy labels, excluded from features.
    #[arg(long)]
    noisy_label_column: Option<usize>,
    #[arg(long)]
    no_header: bool,
    /// Number of classes; inferred from the labels when absent.
    #[arg(long)]
    classes: Option<usize>,
}

impl CsvInput {
    fn schema(&self, path: &Path) -> Result<CsvSchema> {
        let label_column = match self.label_column {
            Some(c) => c,
            None => csv_width(path)?.checked_sub(1).ok_or_else(|| Error::arg("input", "no columns"))?,
        };
        Ok(CsvSchema {
            label_column,
            has_header: !self.no_header,
            noisy_label_column: self.noisy_label_column,
            num_classes: self.classes,
        })
    }
}

fn csv_width(path: &Path) -> Result<usize> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::file(path, io),
            other => Error::arg("input", format!("{other:?}")),
        })?;
    match reader.records().next() {
        Some(rec) => Ok(rec?.len()),
        None => Err(Error::arg("input", format!("{} is empty", path.display()))),
    }
}

#[derive(Args)]
struct Corrupt {
    #[arg(long)]
    input: PathBuf,
    /// Class transition matrix file.
    #[arg(long)]
    matrix: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    csv: CsvInput,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct TransformMatrix {
    /// Class transition matrix file.
    #[arg(long)]
    matrix: PathBuf,
    /// Comma-separated class prior; uniform when absent.
    #[arg(long, value_delimiter = ',')]
    prior: Option<Vec<f64>>,
}

#[derive(Args)]
struct EstimateTc {
    /// Model checkpoint trained on noisy labels.
    #[arg(long)]
    checkpoint: PathBuf,
    /// CSV pool of points to search for anchors.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value_t = DEFAULT_ANCHOR_PERCENTILE)]
    percentile: f64,
    #[command(flatten)]
    csv: CsvInput,
    /// Write the matrix file here instead of stdout.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct ConfigArgs {
    /// Experiment config (JSON); the built-in blob experiment when absent.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// ce, forward, reweight, f_class2simi or r_class2simi.
    #[arg(long)]
    method: Option<Method>,
    /// true, estimated or perturbed:<level>.
    #[arg(long)]
    tc_source: Option<TcSource>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    /// Start stage 2 from a fresh initialization instead of the stage-1 model.
    #[arg(long)]
    cold_start: bool,
}

impl ConfigArgs {
    fn resolve(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::blobs_default(),
        };
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(m) = self.method {
            cfg.method = m;
        }
        if let Some(t) = self.tc_source {
            cfg.tc_source = t;
        }
        if let Some(e) = self.epochs {
            cfg.train.epochs = e;
        }
        if let Some(lr) = self.learning_rate {
            cfg.train.learning_rate = lr;
        }
        if self.cold_start {
            cfg.stage2.warm_start = false;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct Train {
    #[command(flatten)]
    config: ConfigArgs,
    /// Directory for the report, checkpoints and matrices.
    #[arg(long)]
    output_dir: Option<PathBuf>,
}

#[derive(Args)]
struct Robustness {
    #[command(flatten)]
    config: ConfigArgs,
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.0, 0.1, 0.2, 0.3, 0.4])]
    levels: Vec<f64>,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct Verify {
    #[arg(long, default_value_t = 2)]
    c_min: usize,
    #[arg(long, default_value_t = 50)]
    c_max: usize,
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6])]
    rhos: Vec<f64>,
    /// Monte-Carlo cases.
    #[arg(long, default_value_t = 5)]
    trials: usize,
    /// Sampled pairs per Monte-Carlo case.
    #[arg(long, default_value_t = 1_000_000)]
    pairs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

/// Writes `text` to `path`, or to stdout unless `quiet`.
fn emit(text: &str, path: Option<&Path>, quiet: bool) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| Error::file(p, e)),
        None if quiet => Ok(()),
        None => {
            let mut out = io::stdout().lock();
            out.write_all(text.as_bytes())?;
            if !text.ends_with('\n') {
                out.write_all(b"\n")?;
            }
            Ok(())
        }
    }
}

fn gen_data(args: &GenData, quiet: bool) -> Result<()> {
    let (mut spec, mut seed) = match &args.config {
        Some(path) => {
            let cfg = ExperimentConfig::load(path)?;
            let spec = cfg.dataset.blob_spec().ok_or_else(|| Error::Config {
                field: "dataset.kind".into(),
                reason: "gen-data needs a blobs dataset".into(),
            })?;
            (spec, cfg.seed)
        }
        None => (
            ExperimentConfig::blobs_default().dataset.blob_spec().expect("blob default"),
            0,
        ),
    };
    let BlobSpec { classes, per_class, dim, separation, spread } = &mut spec;
    if let Some(v) = args.classes {
        *classes = v;
    }
    if let Some(v) = args.per_class {
        *per_class = v;
    }
    if let Some(v) = args.dim {
        *dim = v;
    }
    if let Some(v) = args.separation {
        *separation = v;
    }
    if let Some(v) = args.spread {
        *spread = v;
    }
    if let Some(s) = args.seed {
        seed = s;
    }
    let ds = generate_blobs(&spec, seed)?;
    let mut buf = Vec::new();
    ds.write_csv(&mut buf)?;
    emit(&String::from_utf8_lossy(&buf), args.output.as_deref(), quiet)?;
    if quiet {
        println!("gen-data: {} points, {} classes, {} features", ds.len(), ds.num_classes(), ds.dim());
    }
    Ok(())
}

fn corrupt(args: &Corrupt, quiet: bool) -> Result<()> {
    let tc = ClassTransitionMatrix::read(&args.matrix)?;
    let mut schema = args.csv.schema(&args.input)?;
    schema.num_classes.get_or_insert(tc.num_classes());
    let ds = load_csv(&args.input, &schema)?;
    let noisy = corrupt_labels(&ds, &tc, args.seed)?;
    let mut buf = Vec::new();
    noisy.write_csv(&mut buf)?;
    emit(&String::from_utf8_lossy(&buf), args.output.as_deref(), quiet)?;
    if quiet {
        let rate = class2simi::noise::empirical_class_noise_rate(&noisy)?;
        println!("corrupt: {} points, flipped fraction {rate:.4}", noisy.len());
    }
    Ok(())
}

fn transform_matrix(args: &TransformMatrix, quiet: bool) -> Result<()> {
    let tc = ClassTransitionMatrix::read(&args.matrix)?;
    let prior = match &args.prior {
        Some(w) => ClassPrior::from_weights(w)?,
        None => ClassPrior::uniform(tc.num_classes())?,
    };
    let ts = class2simi(&tc, &prior)?;
    let check = learnability_check(&tc, &ts);
    let class_rate = class_noise_rate(&tc, &prior)?;
    let simi_rate = simi_noise_rate(&ts, prior.pair_similar_prior())?;
    if quiet {
        println!(
            "transform-matrix: T00={:.6} T11={:.6} learnable={} class_rate={:.6} similarity_rate={:.6}",
            ts.t00(),
            ts.t11(),
            check.ts_learnable,
            class_rate,
            simi_rate
        );
        return Ok(());
    }
    let out = json!({
        "ts": ts,
        "learnability": check,
        "class_noise_rate": class_rate,
        "similarity_noise_rate": simi_rate,
    });
    emit(&serde_json::to_string_pretty(&out)?, None, false)
}

fn estimate_tc(args: &EstimateTc, quiet: bool) -> Result<()> {
    let model = MlpModel::load(&args.checkpoint)?;
    let mut schema = args.csv.schema(&args.input)?;
    schema.num_classes.get_or_insert(model.num_classes());
    let pool = load_csv(&args.input, &schema)?;
    let tc = estimate_tc_anchor(&model, pool.features(), args.percentile)?;
    emit(&tc.to_text(), args.output.as_deref(), quiet)?;
    if quiet {
        let diag: f64 = (0..tc.num_classes()).map(|i| tc.get(i, i)).sum::<f64>() / tc.num_classes() as f64;
        println!("estimate-tc: {} classes, mean diagonal {diag:.4}", tc.num_classes());
    }
    Ok(())
}

fn train(args: &Train, quiet: bool) -> Result<()> {
    let cfg = args.config.resolve()?;
    let run = run_experiment(&cfg)?;
    let report = &run.report;
    let json = serde_json::to_string_pretty(report)?;
    if let Some(dir) = &args.output_dir {
        fs::create_dir_all(dir).map_err(|e| Error::file(dir, e))?;
        let write = |name: &str, text: &str| {
            let p = dir.join(name);
            fs::write(&p, text).map_err(|e| Error::file(&p, e))
        };
        write("report.json", &json)?;
        write("stage1_model.json", &run.stage1.model.to_checkpoint_json()?)?;
        write("final_model.json", &run.final_model.to_checkpoint_json()?)?;
        write("tc_estimated.txt", &run.stage1.tc_hat.to_text())?;
        write("ts_estimated.json", &serde_json::to_string_pretty(&run.stage1.ts_hat)?)?;
        if let Some(tc) = &report.tc_used {
            write("tc_used.txt", &tc.to_text())?;
        }
        if let Some(ts) = &report.ts_used {
            write("ts_used.json", &serde_json::to_string_pretty(ts)?)?;
        }
    }
    if quiet {
        println!("train: {}", report.summary_line());
        Ok(())
    } else {
        emit(&json, None, false)
    }
}

fn robustness(args: &Robustness, quiet: bool) -> Result<()> {
    let cfg = args.config.resolve()?;
    let rows = run_matrix_robustness(&cfg, &args.levels)?;
    let mut buf = Vec::new();
    write_robustness_csv(&rows, &mut buf)?;
    emit(&String::from_utf8_lossy(&buf), args.output.as_deref(), quiet)?;
    if quiet {
        let cells: Vec<String> = rows
            .iter()
            .map(|r| format!("{}@{}={:.4}", r.method.name(), r.level, r.accuracy))
            .collect();
        println!("robustness: {}", cells.join(" "));
    }
    Ok(())
}

/// Exit code 2 when a check fails: the run completed but its result is a
/// failure, which scripts should not mistake for bad input.
fn verify(args: &Verify, quiet: bool) -> Result<bool> {
    let opts = VerifyOptions {
        c_min: args.c_min,
        c_max: args.c_max,
        rhos: args.rhos.clone(),
        trials: args.trials,
        monte_carlo_pairs: args.pairs,
        seed: args.seed,
    };
    let report = run_verification(&opts)?;
    if quiet {
        println!("{}", report.summary_line());
    } else {
        emit(&serde_json::to_string_pretty(&report)?, None, false)?;
    }
    Ok(report.passed)
}

fn dispatch(cli: &Cli) -> Result<bool> {
    let q = cli.quiet;
    match &cli.command {
        Command::GenData(a) => gen_data(a, q).map(|_| true),
        Command::Corrupt(a) => corrupt(a, q).map(|_| true),
        Command::TransformMatrix(a) => transform_matrix(a, q).map(|_| true),
        Command::EstimateTc(a) => estimate_tc(a, q).map(|_| true),
        Command::Train(a) => train(a, q).map(|_| true),
        Command::Robustness(a) => robustness(a, q).map(|_| true),
        Command::Verify(a) => verify(a, q),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 1 } else { 2 })
        }
    }
}
