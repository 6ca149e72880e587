//! Nested variable-importance sets: A_k collects the variables selected by
//! at least k of the G models, so A_1 ⊇ A_2 ⊇ … ⊇ A_G ranks variables by
//! how many diverse models insist on keeping them.
//!
//! Run with: cargo run --example importance_sets

use ndarray::Array1;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use split_logit::simulate::{generate_labels, DesignSampler, Scenario, ScenarioConfig};
use split_logit::{fit, importance_sets, Dataset, HyperParams};

fn main() -> split_logit::Result<()> {
    let config = ScenarioConfig {
        scenario: Scenario::S2,
        n: 180,
        p: 30,
        zeta: 0.2,
        rho1: 0.1,
        rho2: 0.6,
        pi1: 0.5,
        seed: 5,
    };
    let sampler = DesignSampler::new(&config)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let x = sampler.sample(config.n, &mut rng);
    let beta = Array1::from_shape_fn(config.p, |j| if j < 6 { 0.9 } else { 0.0 });
    let y = generate_labels(&x, 0.0, &beta, &mut rng);
    let data = Dataset::standardize(x, y)?;

    let hyper = HyperParams {
        alpha: 0.75,
        lambda_s: 0.02,
        lambda_d: 0.4,
        g: 5,
        ..Default::default()
    };
    let fitted = fit(&data, &hyper, None)?;
    let sets = importance_sets(&fitted);

    for (k, set) in sets.sets.iter().enumerate() {
        let names: Vec<&str> = set.iter().map(|&j| fitted.names[j].as_str()).collect();
        println!("A_{}: {{{}}}", k + 1, names.join(", "));
    }
    // nestedness holds by construction
    for w in sets.sets.windows(2) {
        assert!(w[1].iter().all(|j| w[0].contains(j)));
    }
    Ok(())
}
