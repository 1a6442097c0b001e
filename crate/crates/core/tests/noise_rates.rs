use class2simi::noise::{
    corrupt_labels, empirical_class_noise_rate, empirical_simi_noise_rate, empirical_simi_noise_std_error,
    generate_blobs,
};
use class2simi::transition::{class2simi, make_asymmetric, make_symmetric, simi_noise_rate};
use class2simi::{BlobSpec, ClassPrior};

fn balanced(per_class: usize) -> class2simi::LabeledDataset {
    let spec = BlobSpec {
        classes: 10,
        per_class,
        dim: 8,
        separation: 5.0,
        spread: 1.5,
    };
    generate_blobs(&spec, 3).unwrap()
}

fn within_3_sigma(measured: f64, expected: f64, n: f64) {
    let sigma = (expected * (1.0 - expected) / n).sqrt();
    assert!(
        (measured - expected).abs() <= 3.0 * sigma,
        "{measured} vs {expected} (sigma {sigma})"
    );
}

#[test]
fn symmetric_rates_match_analytic_values() {
    let ds = balanced(1000);
    let tc = make_symmetric(10, 0.4).unwrap();
    for seed in 0..3 {
        let noisy = corrupt_labels(&ds, &tc, seed).unwrap();
        within_3_sigma(empirical_class_noise_rate(&noisy).unwrap(), 0.4, 1e4);
        let pairs = 1_000_000;
        let rate = empirical_simi_noise_rate(&noisy, pairs, seed).unwrap();
        let sigma = empirical_simi_noise_std_error(&noisy, pairs).unwrap();
        assert!((rate - 0.124_444_444_444_444_4).abs() <= 3.0 * sigma, "{rate} (sigma {sigma})");
    }
}

#[test]
fn analytic_similarity_rate_value() {
    let tc = make_symmetric(10, 0.4).unwrap();
    let prior = ClassPrior::uniform(10).unwrap();
    let ts = class2simi(&tc, &prior).unwrap();
    let rate = simi_noise_rate(&ts, prior.pair_similar_prior()).unwrap();
    assert!((rate - 0.124_444_444_444_444_4).abs() < 1e-12);
}

#[test]
fn pair_flip_rates_match() {
    let ds = balanced(1000);
    let tc = make_asymmetric(10, 0.3).unwrap();
    let noisy = corrupt_labels(&ds, &tc, 11).unwrap();
    within_3_sigma(empirical_class_noise_rate(&noisy).unwrap(), 0.3, 1e4);
    let prior = ClassPrior::uniform(10).unwrap();
    let expected = simi_noise_rate(&class2simi(&tc, &prior).unwrap(), 0.1).unwrap();
    // 4 rho (1 - rho) / c for pair-flip noise
    assert!((expected - 0.084).abs() < 1e-12);
    let rate = empirical_simi_noise_rate(&noisy, 1_000_000, 11).unwrap();
    let sigma = empirical_simi_noise_std_error(&noisy, 1_000_000).unwrap();
    assert!((rate - expected).abs() <= 3.0 * sigma, "{rate} vs {expected} (sigma {sigma})");
}

#[test]
fn exhaustive_pairs_on_small_sets() {
    let ds = balanced(10);
    let noisy = corrupt_labels(&ds, &make_symmetric(10, 0.4).unwrap(), 5).unwrap();
    let total = 100 * 99 / 2;
    let a = empirical_simi_noise_rate(&noisy, total, 1).unwrap();
    let b = empirical_simi_noise_rate(&noisy, total, 2).unwrap();
    assert_eq!(a, b, "full enumeration does not depend on the seed");
}

/// For symmetric noise the per-point flip rate takes two values, 2 rho / c
/// for kept labels and a larger one for flipped labels, so the standard error
/// has a closed form to check against.
#[test]
fn standard_error_matches_closed_form() {
    let ds = balanced(1000);
    let noisy = corrupt_labels(&ds, &make_symmetric(10, 0.4).unwrap(), 2).unwrap();
    let (rho, c): (f64, f64) = (0.4, 10.0);
    let kept = 2.0 * rho / c;
    let flipped = (1.0 - rho / (c - 1.0)) / c + (1.0 - rho) / c + (c - 2.0) / c * rho / (c - 1.0);
    let var_g = rho * (1.0 - rho) * (flipped - kept) * (flipped - kept);
    let r: f64 = 0.124_444_444_444_444_4;
    let expected = (4.0 * var_g / 1e4 + r * (1.0 - r) / 1e6).sqrt();
    let got = empirical_simi_noise_std_error(&noisy, 1_000_000).unwrap();
    assert!((got - expected).abs() / expected < 0.05, "{got} vs {expected}");
}
