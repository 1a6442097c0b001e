//! Every method on the same noisy blobs.
//!
//! `cargo run --release --example two_stage_pipeline -- 3` averages over
//! three seeds.

use class2simi::pipeline::{run_experiment, ExperimentConfig, Method};

fn main() -> class2simi::Result<()> {
    let seeds: u64 = std::env::args().nth(1).map_or(1, |s| s.parse().expect("seed count"));
    let methods = [
        Method::Ce,
        Method::Forward,
        Method::Reweight,
        Method::FClass2simi,
        Method::RClass2simi,
    ];
    for method in methods {
        let mut total = 0.0;
        for seed in 0..seeds {
            let mut cfg = ExperimentConfig::blobs_default();
            cfg.method = method;
            cfg.seed = seed;
            let report = run_experiment(&cfg)?.report;
            total += report.final_test_accuracy;
            if seed == 0 {
                if let Some(ts) = &report.ts_used {
                    println!("  estimated Ts {:?}", ts.entries());
                }
            }
        }
        println!("{:<14} mean clean test accuracy {:.4}", method.name(), total / seeds as f64);
    }
    Ok(())
}
