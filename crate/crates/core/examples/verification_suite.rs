//! The full verification suite, then the cells where fewer than eight
//! classes make the similarity labels noisier than the class labels.

use class2simi::pipeline::{run_verification, VerifyOptions};

fn main() -> class2simi::Result<()> {
    let report = run_verification(&VerifyOptions::default())?;
    println!("{}", report.summary_line());

    println!("symmetric noise, rho = 0.4");
    println!("{:>3} {:>10} {:>10} {:>8}", "c", "class", "similar", "checked");
    for cell in report.symmetric.cells.iter().filter(|c| c.rho == 0.4 && c.classes <= 12) {
        println!(
            "{:>3} {:>10.6} {:>10.6} {:>8}",
            cell.classes, cell.class_noise_rate, cell.similarity_noise_rate, cell.asserted
        );
    }
    for case in &report.monte_carlo.cases {
        println!(
            "sampled c={}: T01 {:.5} vs {:.5} (z {:+.2}), T11 {:.5} vs {:.5} (z {:+.2})",
            case.classes,
            case.sampled_t01,
            case.analytic_t01,
            case.z_t01,
            case.sampled_t11,
            case.analytic_t11,
            case.z_t11
        );
    }
    Ok(())
}
