//! Fit a three-model ensemble on a synthetic draw and inspect the result.
//!
//! Run with: cargo run --example fit_basic

use ndarray::Array1;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use split_logit::simulate::{generate_labels, DesignSampler, Scenario, ScenarioConfig};
use split_logit::{fit, Dataset, HyperParams};

fn main() -> split_logit::Result<()> {
    // correlated design: one active group of 6 variables out of 30
    let config = ScenarioConfig {
        scenario: Scenario::S2,
        n: 150,
        p: 30,
        zeta: 0.2,
        rho1: 0.1,
        rho2: 0.6,
        pi1: 0.5,
        seed: 7,
    };
    let sampler = DesignSampler::new(&config)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let x = sampler.sample(config.n, &mut rng);
    let beta = Array1::from_shape_fn(config.p, |j| if j < 6 { 0.8 } else { 0.0 });
    let y = generate_labels(&x, 0.0, &beta, &mut rng);
    let data = Dataset::standardize(x, y)?;

    let hyper = HyperParams {
        alpha: 0.75,
        lambda_s: 0.03,
        lambda_d: 0.5,
        g: 3,
        ..Default::default()
    };
    let fitted = fit(&data, &hyper, None)?;

    println!(
        "converged: {} after {} sweeps, objective {:.6}",
        fitted.converged, fitted.sweeps_used, fitted.objective
    );
    for g in 0..fitted.g() {
        let active: Vec<String> = fitted
            .names
            .iter()
            .enumerate()
            .filter(|(j, _)| fitted.coefs[(*j, g)] != 0.0)
            .map(|(j, name)| format!("{name}={:+.3}", fitted.coefs_original[(j, g)]))
            .collect();
        println!("model {}: {}", g + 1, active.join(", "));
    }
    let (b0, bbar) = fitted.ensemble_params_original();
    let nnz = bbar.iter().filter(|&&v| v != 0.0).count();
    println!("ensemble: intercept {b0:+.3}, {nnz} active variables");
    Ok(())
}
