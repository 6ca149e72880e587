//! Miniature accuracy–diversity trade-off study: misclassification and
//! overlap as the ensemble size G grows, averaged over replications.
//!
//! Run with: cargo run --release --example simulate_tradeoff

use split_logit::simulate::{run_tradeoff_study, StudyConfig};
use split_logit::{Scenario, ScenarioConfig};

fn main() -> split_logit::Result<()> {
    let config = ScenarioConfig {
        scenario: Scenario::S2,
        n: 60,
        p: 100,
        zeta: 0.2,
        rho1: 0.1,
        rho2: 0.5,
        pi1: 0.4,
        seed: 42,
    };
    let study = StudyConfig {
        alpha: 1.0,
        cv_folds: 4,
        grid_size_sparsity: 10,
        grid_size_diversity: 10,
        test_size: 500,
        replications: 3,
    };
    let table = run_tradeoff_study(&config, &[2, 5, 10], &study)?;
    print!("{}", table.to_csv());
    Ok(())
}
