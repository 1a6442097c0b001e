//! Saves the stage-1 model, reloads it and continues with stage 2 exactly as
//! if it had never left memory.

use class2simi::pipeline::{prepare_data, run_stage1, run_stage2, ExperimentConfig};
use class2simi::MlpModel;

fn main() -> class2simi::Result<()> {
    let mut cfg = ExperimentConfig::blobs_default();
    cfg.train.epochs = 10;
    let data = prepare_data(&cfg)?;
    let stage1 = run_stage1(&cfg, &data)?;

    let path = std::env::temp_dir().join("class2simi_stage1.json");
    stage1.model.save(&path)?;
    let restored = MlpModel::load(&path)?;

    let (_, direct) = run_stage2(&cfg, &data, &stage1.model, &stage1.ts_hat)?;
    let (_, resumed) = run_stage2(&cfg, &data, &restored, &stage1.ts_hat)?;
    let (a, b) = (direct.epochs[0].train_loss, resumed.epochs[0].train_loss);
    println!("first stage-2 epoch loss: {a:?} vs {b:?}, identical: {}", a.to_bits() == b.to_bits());
    println!("stage-2 clean test accuracy {:.4}", resumed.clean_test_accuracy);
    std::fs::remove_file(&path)?;
    Ok(())
}
