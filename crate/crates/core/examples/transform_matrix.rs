//! Class noise versus the similarity noise it induces.
//!
//! Run with `cargo run --example transform_matrix`.

use class2simi::transition::{
    class2simi, class_noise_rate, learnability_check, make_asymmetric, make_symmetric,
    simi_noise_rate, simi_transition_oracle,
};
use class2simi::{ClassPrior, Result};

fn main() -> Result<()> {
    for (name, tc) in [
        ("symmetric c=10 rho=0.4", make_symmetric(10, 0.4)?),
        ("pair-flip c=10 rho=0.4", make_asymmetric(10, 0.4)?),
        ("symmetric c=2 rho=0.4", make_symmetric(2, 0.4)?),
    ] {
        let prior = ClassPrior::uniform(tc.num_classes())?;
        let ts = class2simi(&tc, &prior)?;
        let brute = simi_transition_oracle(&tc, &prior)?;
        let check = learnability_check(&tc, &ts);
        println!("{name}");
        println!("  Ts = {:?}", ts.entries());
        println!("  brute-force deviation {:.1e}", ts.max_abs_diff(&brute));
        println!(
            "  class noise {:.6}, similarity noise {:.6}",
            class_noise_rate(&tc, &prior)?,
            simi_noise_rate(&ts, prior.pair_similar_prior())?
        );
        println!(
            "  T00 + T11 = {:.6}, Tc condition {:.3}",
            ts.t00() + ts.t11(),
            check.tc_condition_estimate
        );
    }

    // A skewed prior changes the pair composition and so the 2x2 matrix.
    let tc = make_symmetric(3, 0.3)?;
    let skewed = ClassPrior::from_weights(&[0.6, 0.3, 0.1])?;
    println!("symmetric c=3 rho=0.3, prior [0.6, 0.3, 0.1]: {:?}", class2simi(&tc, &skewed)?.entries());
    Ok(())
}
