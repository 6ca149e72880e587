//! Diversity analytics: fit with and without the diversity penalty and
//! compare the ensemble disagreement measures on a fresh test draw.
//!
//! Run with: cargo run --example diversity_report

use ndarray::{Array1, Array2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use split_logit::simulate::{generate_labels, DesignSampler, Scenario, ScenarioConfig};
use split_logit::{fit, Dataset, DiversityReport, HyperParams, SplitFit};

fn report_on(
    fitted: &SplitFit,
    test_x: &Array2<f64>,
    test_y: &Array1<f64>,
) -> split_logit::Result<DiversityReport> {
    let (m, g) = (test_x.nrows(), fitted.g());
    let mut model_preds = Array2::zeros((g, m));
    let mut ensemble = Array1::zeros(m);
    for i in 0..m {
        for k in 0..g {
            let lin = fitted.model_linear_original(k, test_x.row(i));
            model_preds[(k, i)] = if lin >= 0.0 { 1.0 } else { -1.0 };
        }
        ensemble[i] = fitted.predict_class_original(test_x.row(i))?;
    }
    DiversityReport::compute(&model_preds, &ensemble, test_y, &fitted.coefs)
}

fn main() -> split_logit::Result<()> {
    let config = ScenarioConfig {
        scenario: Scenario::S2,
        n: 200,
        p: 40,
        zeta: 0.25,
        rho1: 0.2,
        rho2: 0.7,
        pi1: 0.5,
        seed: 21,
    };
    let sampler = DesignSampler::new(&config)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let beta = Array1::from_shape_fn(config.p, |j| if j < 10 { 0.6 } else { 0.0 });
    let x = sampler.sample(config.n, &mut rng);
    let y = generate_labels(&x, 0.0, &beta, &mut rng);
    let data = Dataset::standardize(x, y)?;
    let test_x = sampler.sample(1000, &mut rng);
    let test_y = generate_labels(&test_x, 0.0, &beta, &mut rng);

    for lambda_d in [0.0, 1.0] {
        let hyper = HyperParams {
            alpha: 0.75,
            lambda_s: 0.02,
            lambda_d,
            g: 5,
            ..Default::default()
        };
        let fitted = fit(&data, &hyper, None)?;
        let report = report_on(&fitted, &test_x, &test_y)?;
        println!("lambda_d = {lambda_d}");
        for (key, value) in report.flat() {
            match value {
                Some(v) => println!("  {key:6} {v:.4}"),
                None => println!("  {key:6} NA"),
            }
        }
    }
    Ok(())
}
