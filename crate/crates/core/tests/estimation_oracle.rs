mod common;

use class2simi::noise::generate_blobs;
use class2simi::transition::{class2simi, make_asymmetric, make_symmetric};
use class2simi::{estimate_tc_anchor, BlobSpec, ClassPrior, ClassTransitionMatrix};
use common::GaussianNoisyPosterior;

fn pool(classes: usize, dim: usize, separation: f64, spread: f64) -> ndarray::Array2<f64> {
    let spec = BlobSpec {
        classes,
        per_class: 5000 / classes + 1,
        dim,
        separation,
        spread,
    };
    generate_blobs(&spec, 21).unwrap().features().to_owned()
}

fn check(tc: ClassTransitionMatrix, dim: usize) {
    let c = tc.num_classes();
    let x = pool(c, dim, 6.0, 1.0);
    assert!(x.nrows() >= 5000);
    let g = GaussianNoisyPosterior::new(c, dim, 6.0, 1.0, tc.clone());
    let est = estimate_tc_anchor(&g, x.view(), 97.0).unwrap();
    let err = est.max_abs_diff(&tc);
    assert!(err <= 0.05, "max entry error {err}");
    let prior = ClassPrior::uniform(c).unwrap();
    let ts_err = class2simi(&est, &prior)
        .unwrap()
        .max_abs_diff(&class2simi(&tc, &prior).unwrap());
    assert!(ts_err <= 0.05, "Ts error {ts_err}");
}

#[test]
fn exact_posterior_recovers_symmetric_noise() {
    check(make_symmetric(10, 0.4).unwrap(), 8);
}

#[test]
fn exact_posterior_recovers_pair_flip_noise() {
    check(make_asymmetric(5, 0.3).unwrap(), 4);
}

#[test]
fn exact_posterior_recovers_identity() {
    check(ClassTransitionMatrix::identity(4).unwrap(), 2);
}
