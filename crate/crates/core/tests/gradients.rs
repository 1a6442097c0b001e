mod common;

use class2simi::model::{LossSettings, Objective};
use class2simi::transition::{class2simi, make_asymmetric, make_symmetric, random};
use class2simi::{ClassPrior, MlpModel};
use common::{fd_max_rel_error, normal_matrix};
use proptest::prelude::*;

const TOL: f64 = 1e-4;

fn batch(seed: u64) -> (ndarray::Array2<f64>, Vec<usize>) {
    let x = normal_matrix(8, 5, seed);
    let labels = (0..8).map(|i| ((i as u64 * 7 + seed) % 3) as usize).collect();
    (x, labels)
}

#[test]
fn every_loss_matches_finite_differences() {
    let settings = LossSettings::default();
    for seed in 0..4u64 {
        let (x, labels) = batch(seed);
        let model = MlpModel::new(&[5, 7, 3], 100 + seed).unwrap();
        let sym = make_symmetric(3, 0.3).unwrap();
        let flip = make_asymmetric(3, 0.25).unwrap();
        let ts = class2simi(&sym, &ClassPrior::uniform(3).unwrap()).unwrap();
        for objective in [
            Objective::CrossEntropy,
            Objective::Forward(&sym),
            Objective::Forward(&flip),
            Objective::Reweight(&flip),
            Objective::FClass2Simi(&ts),
            Objective::RClass2Simi(&ts),
        ] {
            let err = fd_max_rel_error(&objective, &model, x.view(), &labels, settings);
            assert!(err < TOL, "{:?} seed {seed}: relative error {err:e}", objective.kind());
        }
    }
}

#[test]
fn deeper_model_gradients() {
    let (x, labels) = batch(9);
    let model = MlpModel::new(&[5, 6, 4, 3], 5).unwrap();
    let tc = make_symmetric(3, 0.2).unwrap();
    let ts = class2simi(&tc, &ClassPrior::uniform(3).unwrap()).unwrap();
    for objective in [Objective::Forward(&tc), Objective::FClass2Simi(&ts)] {
        let err = fd_max_rel_error(&objective, &model, x.view(), &labels, LossSettings::default());
        assert!(err < TOL, "{:?}: {err:e}", objective.kind());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn random_matrices_pass_the_gate(seed in 0u64..1000) {
        let mut r = class2simi::rng::seeded(seed);
        let tc = random::diagonally_dominant(3, &mut r).unwrap();
        let ts = class2simi(&tc, &ClassPrior::uniform(3).unwrap()).unwrap();
        let (x, labels) = batch(seed);
        let model = MlpModel::new(&[5, 4, 3], seed).unwrap();
        for objective in [Objective::Forward(&tc), Objective::Reweight(&tc), Objective::FClass2Simi(&ts), Objective::RClass2Simi(&ts)] {
            let err = fd_max_rel_error(&objective, &model, x.view(), &labels, LossSettings::default());
            prop_assert!(err < TOL, "{:?}: {:e}", objective.kind(), err);
        }
    }

    /// Reordering the minibatch changes neither the loss nor its gradient.
    #[test]
    fn batch_order_is_irrelevant(seed in 0u64..1000, rot in 1usize..8) {
        let tc = make_symmetric(3, 0.3).unwrap();
        let ts = class2simi(&tc, &ClassPrior::uniform(3).unwrap()).unwrap();
        let (x, labels) = batch(seed);
        let order: Vec<usize> = (0..8).map(|i| (i * 3 + rot) % 8).collect();
        let xp = x.select(ndarray::Axis(0), &order);
        let lp: Vec<usize> = order.iter().map(|&i| labels[i]).collect();
        let model = MlpModel::new(&[5, 4, 3], seed).unwrap();
        let s = LossSettings::default();
        for objective in [Objective::CrossEntropy, Objective::Reweight(&tc), Objective::FClass2Simi(&ts), Objective::RClass2Simi(&ts)] {
            let (a, ga) = objective.loss_and_grad(&model, x.view(), &labels, s).unwrap();
            let (b, gb) = objective.loss_and_grad(&model, xp.view(), &lp, s).unwrap();
            prop_assert!((a - b).abs() < 1e-12);
            for (u, v) in ga.flat().iter().zip(gb.flat()) {
                prop_assert!((u - v).abs() < 1e-12);
            }
        }
    }
}
