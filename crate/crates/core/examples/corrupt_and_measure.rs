//! Corrupts a balanced blob dataset and compares the measured flip rates
//! with the analytic ones.

use class2simi::noise::{corrupt_labels, empirical_class_noise_rate, empirical_simi_noise_rate, generate_blobs};
use class2simi::transition::{class2simi, class_noise_rate, make_symmetric, simi_noise_rate};
use class2simi::{BlobSpec, ClassPrior, Result};

fn main() -> Result<()> {
    let spec = BlobSpec {
        classes: 10,
        per_class: 1000,
        dim: 8,
        separation: 5.0,
        spread: 1.5,
    };
    let clean = generate_blobs(&spec, 7)?;
    let tc = make_symmetric(10, 0.4)?;
    let noisy = corrupt_labels(&clean, &tc, 7)?;

    let prior = ClassPrior::uniform(10)?;
    let ts = class2simi(&tc, &prior)?;
    let n = noisy.len() as f64;
    let class_rate = class_noise_rate(&tc, &prior)?;
    let simi_rate = simi_noise_rate(&ts, prior.pair_similar_prior())?;
    let pairs = 1_000_000;

    let measured = empirical_class_noise_rate(&noisy)?;
    let sigma = (class_rate * (1.0 - class_rate) / n).sqrt();
    println!("class labels:      measured {measured:.4}, analytic {class_rate:.4}, sigma {sigma:.4}");

    let measured = empirical_simi_noise_rate(&noisy, pairs, 7)?;
    let sigma = (simi_rate * (1.0 - simi_rate) / pairs as f64).sqrt();
    println!("similarity labels: measured {measured:.4}, analytic {simi_rate:.4}, sigma {sigma:.4}");

    let mut out = Vec::new();
    noisy.subset(&[0, 1, 2]).write_csv(&mut out)?;
    print!("{}", String::from_utf8_lossy(&out));
    Ok(())
}
