//! Forward versus F-Class2Simi when the transition matrix they are given is
//! increasingly wrong. Prints the CSV table.

use class2simi::pipeline::{run_matrix_robustness, write_robustness_csv, ExperimentConfig};

fn main() -> class2simi::Result<()> {
    let cfg = ExperimentConfig::blobs_default();
    let rows = run_matrix_robustness(&cfg, &[0.0, 0.1, 0.2, 0.3, 0.4])?;
    write_robustness_csv(&rows, std::io::stdout().lock())
}
