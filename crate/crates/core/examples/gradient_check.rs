//! Central finite differences against the analytic gradient of each loss.
//! The importance-weighted losses hold their weights fixed, as training does.

use class2simi::model::{LossSettings, Objective};
use class2simi::rng;
use class2simi::transition::{class2simi, make_symmetric};
use class2simi::{ClassPrior, MlpModel, Result};
use ndarray::Array2;
use rand_distr::{Distribution, StandardNormal};

fn main() -> Result<()> {
    let mut r = rng::seeded(3);
    let x = Array2::from_shape_simple_fn((8, 4), || StandardNormal.sample(&mut r));
    let labels = [0, 1, 2, 0, 1, 2, 0, 0];
    let model = MlpModel::new(&[4, 6, 3], 11)?;
    let tc = make_symmetric(3, 0.3)?;
    let ts = class2simi(&tc, &ClassPrior::uniform(3)?)?;
    let settings = LossSettings::default();
    let h = 1e-5;

    for objective in [
        Objective::CrossEntropy,
        Objective::Forward(&tc),
        Objective::Reweight(&tc),
        Objective::FClass2Simi(&ts),
        Objective::RClass2Simi(&ts),
    ] {
        let (_, grads) = objective.loss_and_grad(&model, x.view(), &labels, settings)?;
        let analytic = grads.flat();
        let base = model.flat_params();
        let mut probe = model.clone();
        let mut worst: f64 = 0.0;
        for k in 0..base.len() {
            let mut p = base.clone();
            p[k] = base[k] + h;
            probe.set_flat_params(&p)?;
            let up = objective.loss_with_weights_from(&model, &probe, x.view(), &labels, settings)?;
            p[k] = base[k] - h;
            probe.set_flat_params(&p)?;
            let down = objective.loss_with_weights_from(&model, &probe, x.view(), &labels, settings)?;
            let numeric = (up - down) / (2.0 * h);
            let rel = (numeric - analytic[k]).abs() / numeric.abs().max(analytic[k].abs()).max(1e-8);
            worst = worst.max(rel);
        }
        println!("{:?}: {} parameters, max relative error {worst:.2e}", objective.kind(), base.len());
    }
    Ok(())
}
