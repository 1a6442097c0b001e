//! Trains on a CSV file whose noisy labels were produced elsewhere.

use class2simi::noise::{corrupt_labels, generate_blobs};
use class2simi::pipeline::{run_experiment, DatasetSpec, ExperimentConfig, NoiseSpec};
use class2simi::transition::make_asymmetric;
use class2simi::BlobSpec;

fn main() -> class2simi::Result<()> {
    let dir = std::env::temp_dir().join("class2simi_csv_example");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("train.csv");
    let spec = BlobSpec {
        classes: 4,
        per_class: 150,
        dim: 3,
        separation: 4.0,
        spread: 1.0,
    };
    let clean = generate_blobs(&spec, 1)?;
    corrupt_labels(&clean, &make_asymmetric(4, 0.3)?, 1)?.save_csv(&path)?;

    let mut cfg = ExperimentConfig::blobs_default();
    cfg.dataset = DatasetSpec::Csv {
        path: path.clone(),
        label_column: 3,
        has_header: true,
        noisy_label_column: Some(4),
        num_classes: Some(4),
        test_path: None,
        test_fraction: 0.2,
    };
    cfg.noise = NoiseSpec::Provided;
    cfg.hidden_layers = vec![16];
    let report = run_experiment(&cfg)?.report;
    println!("{}", report.summary_line());
    println!("estimated Tc:\n{}", report.tc_estimated.to_text());
    std::fs::remove_dir_all(&dir)?;
    Ok(())
}
