//! Fits a classifier on noisy labels and reads the transition matrix off
//! its anchor points.

use class2simi::pipeline::{prepare_data, run_stage1, ExperimentConfig, NoiseSpec};

fn main() -> class2simi::Result<()> {
    let mut cfg = ExperimentConfig::blobs_default();
    cfg.noise = NoiseSpec::Asymmetric { rate: 0.3 };
    let data = prepare_data(&cfg)?;
    let stage1 = run_stage1(&cfg, &data)?;
    let truth = data.true_tc.as_ref().expect("synthetic noise");

    println!(
        "noisy-label model: clean test accuracy {:.3} (epoch {})",
        stage1.report.clean_test_accuracy, stage1.report.selected_epoch
    );
    println!("largest entry error {:.3}", stage1.tc_hat.max_abs_diff(truth));
    println!("row  true diag/next   estimated diag/next");
    let c = truth.num_classes();
    for i in 0..c {
        let next = (i + 1) % c;
        println!(
            "{i:>3}  {:.2} / {:.2}        {:.2} / {:.2}",
            truth.get(i, i),
            truth.get(i, next),
            stage1.tc_hat.get(i, i),
            stage1.tc_hat.get(i, next)
        );
    }
    println!("similarity matrix from the estimate: {:?}", stage1.ts_hat.entries());
    Ok(())
}
