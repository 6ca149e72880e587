//! Tune both penalties by the alternating cross-validated grid search.
//!
//! Run with: cargo run --example cross_validation

use ndarray::Array1;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use split_logit::simulate::{generate_labels, DesignSampler, Scenario, ScenarioConfig};
use split_logit::{alternating_search, Dataset, SearchConfig};

fn main() -> split_logit::Result<()> {
    let config = ScenarioConfig {
        scenario: Scenario::S2,
        n: 100,
        p: 40,
        zeta: 0.25,
        rho1: 0.1,
        rho2: 0.5,
        pi1: 0.5,
        seed: 3,
    };
    let sampler = DesignSampler::new(&config)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let x = sampler.sample(config.n, &mut rng);
    let beta = Array1::from_shape_fn(config.p, |j| if j < 10 { 0.7 } else { 0.0 });
    let y = generate_labels(&x, 0.0, &beta, &mut rng);
    let data = Dataset::standardize(x, y)?;

    let search = SearchConfig {
        alpha: 0.75,
        g: 4,
        k: 5,
        grid_size_sparsity: 15,
        grid_size_diversity: 15,
        seed: 0,
        ..Default::default()
    };
    let (report, fit) = alternating_search(&data, &search)?;

    for pass in &report.passes {
        println!(
            "pass {} ({:?}): {} grid points, selected {:?}",
            pass.pass,
            pass.kind,
            pass.points.len(),
            pass.selected
        );
    }
    println!(
        "selected lambda_s = {:.6}, lambda_d = {:.6} after {} passes (cv loss {:.5})",
        report.selected_lambda_s, report.selected_lambda_d, report.pass_count, report.final_cv_loss
    );
    let active = fit.coefs.iter().filter(|&&b| b != 0.0).count();
    println!(
        "refit on all rows: {} nonzero coefficients across {} models",
        active,
        fit.g()
    );
    Ok(())
}
