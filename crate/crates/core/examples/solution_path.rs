//! Trace the coefficient solution path along a descending sparsity grid.
//!
//! Run with: cargo run --example solution_path

use ndarray::Array1;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use split_logit::simulate::{generate_labels, DesignSampler, Scenario, ScenarioConfig};
use split_logit::solver::solution_path;
use split_logit::tuning::{lambda_s_max, make_grid, GridKind};
use split_logit::Dataset;

fn main() -> split_logit::Result<()> {
    let config = ScenarioConfig {
        scenario: Scenario::S1,
        n: 120,
        p: 25,
        zeta: 0.2,
        rho1: 0.3,
        rho2: 0.3,
        pi1: 0.5,
        seed: 11,
    };
    let sampler = DesignSampler::new(&config)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let x = sampler.sample(config.n, &mut rng);
    let beta = Array1::from_shape_fn(config.p, |j| if j < 5 { 1.0 } else { 0.0 });
    let y = generate_labels(&x, 0.0, &beta, &mut rng);
    let data = Dataset::standardize(x, y)?;

    let (alpha, lambda_d, g) = (0.75, 0.2, 3);
    let lmax = lambda_s_max(&data, alpha, g, lambda_d)?;
    let grid = make_grid(GridKind::Sparsity, 15, lmax, data.n(), data.p());
    let fits = solution_path(&data, alpha, lambda_d, g, &grid.values)?;

    println!("{:>12}  {:>6}  {:>9}", "lambda_s", "active", "objective");
    for (fit, &ls) in fits.iter().zip(&grid.values) {
        let active = fit.coefs.iter().filter(|&&b| b != 0.0).count();
        println!("{ls:>12.6}  {active:>6}  {:>9.5}", fit.objective);
    }
    // at the grid top every model must be null
    assert!(fits[0].coefs.iter().all(|&b| b == 0.0));
    Ok(())
}
