//! Acceptance suite: ten end-to-end criteria, one pass/fail line each.
//!
//! Run with: cargo test --test acceptance -- --nocapture

use std::time::Instant;

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use split_logit::data::Dataset;
use split_logit::diversity::{
    entropy_measure, generalized_diversity, kw_variance, overlap, pairwise_measures,
    CorrectnessMatrix,
};
use split_logit::model::{diversity_penalty, logistic_loss, HyperParams, SplitFit};
use split_logit::simulate::{
    calibrate_intercept, generate_coefficients, generate_labels, run_tradeoff_study,
    DesignSampler, Scenario, ScenarioConfig, StudyConfig, TradeoffTable,
};
use split_logit::solver::{
    fit, max_kkt_violation, soft_threshold, update_coefficient, update_intercept, WorkingState,
};
use split_logit::tuning::{
    alternating_search, lambda_s_max, make_grid, GridKind, SearchConfig,
};

// ---------------------------------------------------------------------------
// shared helpers

fn random_dataset(n: usize, p: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = Array2::from_shape_fn((n, p), |_| rng.gen_range(-1.0..1.0));
    let beta = Array1::from_shape_fn(p, |j| if j < p / 2 { rng.gen_range(-1.5..1.5) } else { 0.0 });
    let y = generate_labels(&x, 0.1, &beta, &mut rng);
    if y.iter().all(|&v| v == y[0]) {
        return random_dataset(n, p, seed + 10_001);
    }
    Dataset::standardize(x, y).unwrap()
}

/// Independent minimizer of the single-model elastic-net logistic objective
/// (1/n)Σ log(1+e^{-y f}) + λ[(1-α)/2 ‖β‖² + α‖β‖₁] by proximal gradient
/// with backtracking; the objective is convex, so a stationary point of the
/// proximal map is the global optimum.
fn prox_grad_logistic(
    data: &Dataset,
    alpha: f64,
    lambda: f64,
) -> (f64, Array1<f64>) {
    let (n, p) = (data.n(), data.p());
    let inv_n = 1.0 / n as f64;
    let mut b0 = 0.0f64;
    let mut beta = Array1::<f64>::zeros(p);
    let mut step = 1.0f64;
    let obj = |b0: f64, beta: &Array1<f64>| -> f64 {
        let mut loss = 0.0;
        for i in 0..n {
            let f = b0 + data.x().row(i).dot(beta);
            loss += logistic_loss(data.y()[i] * f);
        }
        loss * inv_n
            + lambda
                * ((1.0 - alpha) / 2.0 * beta.dot(beta)
                    + alpha * beta.iter().map(|b| b.abs()).sum::<f64>())
    };
    let mut cur = obj(b0, &beta);
    for _ in 0..200_000 {
        // gradient of the smooth part (loss + ridge)
        let mut g0 = 0.0;
        let mut grad = beta.mapv(|b| (1.0 - alpha) * lambda * b);
        for i in 0..n {
            let f = b0 + data.x().row(i).dot(&beta);
            let yi = data.y()[i];
            let s = -yi / (1.0 + (yi * f).exp()) * inv_n;
            g0 += s;
            grad.scaled_add(s, &data.x().row(i));
        }
        // backtracking proximal step
        let (mut nb0, mut nbeta, mut nobj);
        loop {
            nb0 = b0 - step * g0;
            nbeta = Array1::from_shape_fn(p, |j| {
                soft_threshold(beta[j] - step * grad[j], step * alpha * lambda)
            });
            nobj = obj(nb0, &nbeta);
            // sufficient decrease against the quadratic upper bound
            let diff0 = nb0 - b0;
            let mut quad = cur + g0 * diff0 + diff0 * diff0 / (2.0 * step);
            for j in 0..p {
                let d = nbeta[j] - beta[j];
                quad += grad[j] * d + d * d / (2.0 * step)
                    + alpha * lambda * (nbeta[j].abs() - beta[j].abs());
            }
            if nobj <= quad + 1e-15 || step < 1e-12 {
                break;
            }
            step *= 0.5;
        }
        let change = (nb0 - b0).abs().max(
            nbeta
                .iter()
                .zip(beta.iter())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max),
        );
        b0 = nb0;
        beta = nbeta;
        cur = nobj;
        if change < 1e-13 {
            break;
        }
        step = (step * 1.5).min(4.0);
    }
    (b0, beta)
}

fn s3_config(seed: u64) -> ScenarioConfig {
    ScenarioConfig {
        scenario: Scenario::S3,
        n: 50,
        p: 1500,
        zeta: 0.2,
        rho1: 0.2,
        rho2: 0.5,
        pi1: 0.4,
        seed,
    }
}

fn miniature_study() -> StudyConfig {
    StudyConfig {
        alpha: 0.75,
        cv_folds: 5,
        grid_size_sparsity: 25,
        grid_size_diversity: 25,
        test_size: 2000,
        replications: 10,
    }
}

struct Outcome {
    failures: Vec<String>,
}

impl Outcome {
    fn new() -> Self {
        Outcome { failures: Vec::new() }
    }
    fn check(&mut self, criterion: usize, name: &str, ok: bool, detail: String) {
        if ok {
            println!("criterion {criterion} ({name}): PASS");
        } else {
            println!("criterion {criterion} ({name}): FAIL — {detail}");
            self.failures.push(format!("criterion {criterion}: {detail}"));
        }
    }
}

// ---------------------------------------------------------------------------

fn criterion_1_and_3_part1(out: &mut Outcome) -> Vec<(SplitFit, Dataset)> {
    let mut kept = Vec::new();
    let mut worst_collapse = 0.0f64;
    let mut worst_oracle = 0.0f64;
    for inst in 0..20 {
        let data = random_dataset(40, 10, 1000 + inst);
        let g = if inst % 2 == 0 { 2 } else { 5 };
        let alpha = if inst % 4 < 2 { 1.0 } else { 0.75 };
        let lmax = lambda_s_max(&data, alpha, 1, 0.0).unwrap();
        let lambda_s = 0.3 * lmax;
        let hyper = HyperParams { alpha, lambda_s, lambda_d: 0.0, g, ..Default::default() };
        let ens = fit(&data, &hyper, None).unwrap();
        let single = fit(&data, &HyperParams { g: 1, ..hyper }, None).unwrap();
        for k in 0..g {
            worst_collapse = worst_collapse
                .max((ens.intercepts[k] - single.intercepts[0]).abs());
            for j in 0..data.p() {
                worst_collapse = worst_collapse
                    .max((ens.coefs[(j, k)] - single.coefs[(j, 0)]).abs());
            }
        }
        let (ob0, obeta) = prox_grad_logistic(&data, alpha, lambda_s);
        worst_oracle = worst_oracle.max((single.intercepts[0] - ob0).abs());
        for j in 0..data.p() {
            worst_oracle = worst_oracle.max((single.coefs[(j, 0)] - obeta[j]).abs());
        }
        kept.push((ens, data.clone()));
        kept.push((single, data));
    }
    out.check(
        1,
        "elastic-net equivalence",
        worst_collapse <= 1e-6 && worst_oracle <= 1e-4,
        format!("max collapse gap {worst_collapse:.2e}, max oracle gap {worst_oracle:.2e}"),
    );
    kept
}

/// Exact minimizer of the piecewise-quadratic 1-D surrogate via three-point
/// quadratic interpolation on each side of the |b| kink.
fn surrogate_oracle(f: &dyn Fn(f64) -> f64) -> f64 {
    let side = |s: f64| -> (f64, f64) {
        // fit a(x-0)^2-ish via divided differences at s·{0.5, 1.0, 1.5}
        let (x1, x2, x3) = (0.5 * s, 1.0 * s, 1.5 * s);
        let (f1, f2, f3) = (f(x1), f(x2), f(x3));
        let d12 = (f2 - f1) / (x2 - x1);
        let d23 = (f3 - f2) / (x3 - x2);
        let a = (d23 - d12) / (x3 - x1);
        let b = d12 - a * (x1 + x2);
        (a, b)
    };
    let (ar, br) = side(1.0);
    let (al, bl) = side(-1.0);
    if br >= 0.0 && bl <= 0.0 {
        0.0
    } else if br < 0.0 {
        -br / (2.0 * ar)
    } else {
        -bl / (2.0 * al)
    }
}

fn criterion_2(out: &mut Outcome) {
    let mut checked = 0usize;
    let mut worst_coef = 0.0f64;
    let mut worst_int = 0.0f64;
    for ds in 0..10 {
        let data = random_dataset(30, 8, 2000 + ds);
        let mut rng = ChaCha8Rng::seed_from_u64(500 + ds);
        let g = 2 + (ds as usize) % 3;
        let b0 = Array1::from_shape_fn(g, |_| rng.gen_range(-0.5..0.5));
        let b = Array2::from_shape_fn((data.p(), g), |_| {
            if rng.gen_bool(0.5) { rng.gen_range(-1.0..1.0) } else { 0.0 }
        });
        let hyper = HyperParams {
            alpha: 0.75,
            lambda_s: 0.05,
            lambda_d: 0.4,
            g,
            ..Default::default()
        };
        for trial in 0..12 {
            let mut state = WorkingState::new(&data, g, Some((&b0, &b)));
            let mg = trial % g;
            state.refresh_model(mg, &data);

            // intercept against the closed-form Newton step
            let newton = state.intercepts[mg]
                + state.resid().column(mg).sum() / state.weights().column(mg).sum();
            update_intercept(&mut state, mg, &data);
            worst_int = worst_int.max((state.intercepts[mg] - newton).abs());

            // coefficient against the 1-D surrogate minimum
            let j = (trial * 3 + ds as usize) % data.p();
            let n = data.n() as f64;
            let cur = state.coefs[(j, mg)];
            let xj = data.column(j).to_owned();
            let resid = state.resid().column(mg).to_owned();
            let w = state.weights().column(mg).to_owned();
            let u_extra: f64 = (0..g)
                .filter(|&h| h != mg)
                .map(|h| state.coefs[(j, h)].abs())
                .sum();
            let hy = hyper.clone();
            let surrogate = move |bv: f64| -> f64 {
                let delta = bv - cur;
                let mut q = 0.0;
                for i in 0..resid.len() {
                    let r = resid[i] - delta * w[i] * xj[i];
                    q += r * r / w[i];
                }
                q / (2.0 * n)
                    + hy.lambda_s * ((1.0 - hy.alpha) / 2.0 * bv * bv + hy.alpha * bv.abs())
                    + hy.lambda_d / 2.0 * u_extra * bv.abs()
            };
            let oracle = surrogate_oracle(&surrogate);
            update_coefficient(&mut state, mg, j, &data, &hyper);
            worst_coef = worst_coef.max((state.coefs[(j, mg)] - oracle).abs());
            checked += 1;
        }
    }
    out.check(
        2,
        "coordinate-update oracle",
        checked >= 100 && worst_coef <= 1e-8 && worst_int <= 1e-10,
        format!("{checked} states, coef gap {worst_coef:.2e}, intercept gap {worst_int:.2e}"),
    );
}

fn criterion_4(out: &mut Outcome) {
    // correlated features so that models genuinely compete for variables
    let config = ScenarioConfig {
        scenario: Scenario::S2,
        n: 200,
        p: 20,
        zeta: 0.3,
        rho1: 0.2,
        rho2: 0.7,
        pi1: 0.5,
        seed: 77,
    };
    let sampler = DesignSampler::new(&config).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let x = sampler.sample(config.n, &mut rng);
    let beta = Array1::from_shape_fn(config.p, |j| if j < 6 { 1.0 } else { 0.0 });
    let y = generate_labels(&x, 0.0, &beta, &mut rng);
    let data = Dataset::standardize(x, y).unwrap();
    let (alpha, g, lambda_s) = (0.75, 3usize, 0.02);
    let ld_max = split_logit::tuning::lambda_d_max(&data, alpha, g, lambda_s).unwrap();
    if ld_max.degenerate {
        out.check(4, "disjointness limit", false, "lambda_d_max degenerate".into());
        return;
    }
    let hyper = HyperParams { alpha, lambda_s, lambda_d: ld_max.value, g, ..Default::default() };
    let f = fit(&data, &hyper, None).unwrap();
    let pd = diversity_penalty(&f.coefs);
    let all_non_null = (0..g).all(|k| f.coefs.column(k).iter().any(|&b| b != 0.0));
    let ov = overlap(&f.coefs);
    let ov_ok = match ov {
        Ok(v) => all_non_null && v == 1.0 / g as f64,
        Err(_) => false,
    };
    out.check(
        4,
        "disjointness limit",
        pd == 0.0 && ov_ok,
        format!("diversity penalty {pd:.2e}, overlap {ov:?}, non-null models {all_non_null}"),
    );
}

fn criterion_5(out: &mut Outcome) -> TradeoffTable {
    let table = run_tradeoff_study(&s3_config(0), &[2, 5, 10, 25], &miniature_study()).unwrap();
    let row = |gv: usize| table.rows.iter().find(|r| r.g == gv).unwrap();
    let (r2, r5, r10, r25) = (row(2), row(5), row(10), row(25));
    let mut problems = Vec::new();
    if !(0.10..=0.18).contains(&r2.mr) {
        problems.push(format!("G=2 MR {:.4} outside [0.10, 0.18]", r2.mr));
    }
    match r2.ov {
        Some(v) if (0.55..=0.85).contains(&v) => {}
        other => problems.push(format!("G=2 OV {other:?} outside [0.55, 0.85]")),
    }
    if !(0.08..=0.16).contains(&r10.mr) {
        problems.push(format!("G=10 MR {:.4} outside [0.08, 0.16]", r10.mr));
    }
    match r10.ov {
        Some(v) if (0.20..=0.45).contains(&v) => {}
        other => problems.push(format!("G=10 OV {other:?} outside [0.20, 0.45]")),
    }
    let ems = [r2.em, r5.em, r10.em, r25.em];
    if !ems.windows(2).all(|w| w[1] > w[0]) {
        problems.push(format!("EM not strictly increasing: {ems:?}"));
    }
    let ovs: Vec<f64> = [r2.ov, r5.ov, r10.ov, r25.ov].iter().map(|o| o.unwrap_or(f64::NAN)).collect();
    if !ovs.windows(2).all(|w| w[1] < w[0]) {
        problems.push(format!("OV not strictly decreasing: {ovs:?}"));
    }
    for r in [r5, r10, r25] {
        if r.mr > r.mr_bar {
            problems.push(format!("G={} ensemble MR {:.4} > mean model MR {:.4}", r.g, r.mr, r.mr_bar));
        }
    }
    out.check(
        5,
        "trade-off table miniature",
        problems.is_empty(),
        problems.join("; "),
    );
    table
}

fn criterion_3b_kkt_on_study_fits(out_worst: &mut f64) {
    // one tuned fit per ensemble size at the criterion-5 configuration
    for (i, g) in [2usize, 10].into_iter().enumerate() {
        let config = s3_config(900 + i as u64);
        let sampler = DesignSampler::new(&config).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let x = sampler.sample(config.n, &mut rng);
        let active = config.active_count();
        let beta_active = generate_coefficients(active, config.seed);
        let mut beta = Array1::zeros(config.p);
        for j in 0..active {
            beta[j] = beta_active[j];
        }
        let b0 = calibrate_intercept(&sampler, &beta, config.pi1, config.seed).unwrap();
        let y = generate_labels(&x, b0, &beta, &mut rng);
        if y.iter().all(|&v| v == y[0]) {
            continue;
        }
        let data = Dataset::standardize(x, y).unwrap();
        let search = SearchConfig {
            alpha: 0.75,
            g,
            k: 5,
            grid_size_sparsity: 25,
            grid_size_diversity: 25,
            seed: config.seed,
            ..Default::default()
        };
        let (_, f) = alternating_search(&data, &search).unwrap();
        *out_worst = out_worst.max(max_kkt_violation(&f, &data));
    }
}

fn criterion_6(out: &mut Outcome) {
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let m = rng.gen_range(3..40);
        let g = rng.gen_range(2..12);
        let c = CorrectnessMatrix::from_shape_fn((m, g), |_| rng.gen_bool(0.5));
        let kw = kw_variance(&c).unwrap();
        let (dis, _) = pairwise_measures(&c).unwrap();
        let identity = (g as f64 - 1.0) / (2.0 * g as f64) * dis;
        worst = worst.max((kw - identity).abs());
    }
    // frozen G=3 example: rows are points, columns models
    let c = CorrectnessMatrix::from_shape_vec(
        (2, 3),
        vec![true, true, false, false, false, true],
    )
    .unwrap();
    let em = entropy_measure(&c).unwrap();
    let (dis, df) = pairwise_measures(&c).unwrap();
    let kw = kw_variance(&c).unwrap();
    let gd = generalized_diversity(&c).unwrap();
    let frozen_ok = em == 1.0
        && (dis - 2.0 / 3.0).abs() < 1e-15
        && (df - 1.0 / 6.0).abs() < 1e-15
        && (kw - 2.0 / 9.0).abs() < 1e-15
        && (gd - 2.0 / 3.0).abs() < 1e-15;
    out.check(
        6,
        "diversity identities",
        worst <= 1e-12 && frozen_ok,
        format!("max KW-DIS identity gap {worst:.2e}, frozen example ok: {frozen_ok}"),
    );
}

fn criterion_7(out: &mut Outcome) {
    let p = 200;
    let active = 10;
    let m = 5000;
    let ns = [100usize, 400, 1600];
    let mut avg_tl = [0.0f64; 3];
    let mut avg_bayes = 0.0f64;
    let seeds = 5u64;
    for seed in 0..seeds {
        let mut rng = ChaCha8Rng::seed_from_u64(7000 + seed);
        let beta = Array1::from_shape_fn(p, |j| if j < active { 1.0 } else { 0.0 });
        let test_x = Array2::from_shape_fn((m, p), |_| rng.gen_range(-2.0..2.0f64));
        let test_y = generate_labels(&test_x, 0.0, &beta, &mut rng);
        // Bayes loss: logistic loss of the true parameters on this test set
        let mut bayes = 0.0;
        for i in 0..m {
            let f = test_x.row(i).dot(&beta);
            bayes += logistic_loss(test_y[i] * f);
        }
        avg_bayes += bayes / m as f64 / seeds as f64;
        for (a, &n) in ns.iter().enumerate() {
            let train_x = Array2::from_shape_fn((n, p), |_| rng.gen_range(-2.0..2.0f64));
            let train_y = generate_labels(&train_x, 0.0, &beta, &mut rng);
            let data = Dataset::standardize(train_x, train_y).unwrap();
            let search = SearchConfig {
                alpha: 1.0,
                g: 3,
                k: 5,
                grid_size_sparsity: 12,
                grid_size_diversity: 12,
                seed,
                ..Default::default()
            };
            let (_, f) = alternating_search(&data, &search).unwrap();
            let (b0, bbar) = f.ensemble_params_original();
            let mut tl = 0.0;
            for i in 0..m {
                let lin = b0 + test_x.row(i).dot(&bbar);
                tl += logistic_loss(test_y[i] * lin);
            }
            avg_tl[a] += tl / m as f64 / seeds as f64;
        }
    }
    let decreasing = avg_tl[0] > avg_tl[1] && avg_tl[1] > avg_tl[2];
    let excess_small = avg_tl[0] - avg_bayes;
    let excess_large = avg_tl[2] - avg_bayes;
    let contraction = excess_large <= 0.5 * excess_small;
    out.check(
        7,
        "risk consistency trend",
        decreasing && contraction,
        format!(
            "TL {avg_tl:?}, Bayes {avg_bayes:.4}, excess n=100 {excess_small:.4}, n=1600 {excess_large:.4}"
        ),
    );
}

fn criterion_8(out: &mut Outcome) {
    let mut problems = Vec::new();
    // epsilon rules and endpoints
    let g1 = make_grid(GridKind::Sparsity, 100, 2.0, 50, 20); // p < n
    if g1.values.len() != 100 || g1.values[0] != 2.0 || (g1.values[99] - 2.0e-4).abs() > 1e-18 {
        problems.push(format!(
            "p<n grid endpoints wrong: {} .. {}",
            g1.values[0], g1.values[99]
        ));
    }
    let g2 = make_grid(GridKind::Sparsity, 100, 2.0, 20, 50); // p >= n
    if g2.values[99] != 2.0e-2 {
        problems.push(format!("p>=n grid tail {} != 0.02", g2.values[99]));
    }
    let ratios: Vec<f64> = g1.values.windows(2).map(|w| w[1] / w[0]).collect();
    let spread = ratios
        .iter()
        .map(|r| (r - ratios[0]).abs())
        .fold(0.0, f64::max);
    if spread > 1e-12 {
        problems.push(format!("grid not log-equispaced, ratio spread {spread:.2e}"));
    }
    // null fit at the sparsity grid top
    for (alpha, seed) in [(1.0, 81u64), (0.75, 82)] {
        let data = random_dataset(60, 12, seed);
        let lmax = lambda_s_max(&data, alpha, 3, 0.0).unwrap();
        let grid = make_grid(GridKind::Sparsity, 10, lmax, data.n(), data.p());
        let hyper = HyperParams {
            alpha,
            lambda_s: grid.values[0],
            lambda_d: 0.0,
            g: 3,
            ..Default::default()
        };
        let f = fit(&data, &hyper, None).unwrap();
        if f.coefs.iter().any(|&b| b != 0.0) {
            problems.push(format!("alpha={alpha}: grid-top fit not null"));
        }
    }
    out.check(8, "grid construction", problems.is_empty(), problems.join("; "));
}

fn criterion_9(out: &mut Outcome) {
    let config = s3_config(91);
    let sampler = DesignSampler::new(&config).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let x = sampler.sample(config.n, &mut rng);
    let beta = {
        let active = config.active_count();
        let ba = generate_coefficients(active, config.seed);
        let mut b = Array1::zeros(config.p);
        for j in 0..active {
            b[j] = ba[j];
        }
        b
    };
    let y = generate_labels(&x, 0.0, &beta, &mut rng);
    let data = Dataset::standardize(x, y).unwrap();
    let lmax = lambda_s_max(&data, 1.0, 1, 0.0).unwrap();
    let time_fit = |g: usize| -> f64 {
        let hyper = HyperParams {
            alpha: 1.0,
            lambda_s: 0.3 * lmax,
            lambda_d: 0.05,
            g,
            ..Default::default()
        };
        let mut best = f64::INFINITY;
        for _ in 0..3 {
            let t = Instant::now();
            let f = fit(&data, &hyper, None).unwrap();
            best = best.min(t.elapsed().as_secs_f64());
            assert!(f.sweeps_used > 0);
        }
        best
    };
    let t5 = time_fit(5);
    let t20 = time_fit(20);
    out.check(
        9,
        "scaling sanity",
        t20 < 6.0 * t5 && t5 > 0.0,
        format!("G=5 {t5:.3}s, G=20 {t20:.3}s, ratio {:.2}", t20 / t5),
    );
}

fn criterion_10(out: &mut Outcome, first: &TradeoffTable) {
    let again = run_tradeoff_study(&s3_config(0), &[2, 5, 10, 25], &miniature_study()).unwrap();
    let ok = first.to_csv() == again.to_csv();
    out.check(
        10,
        "determinism",
        ok,
        "repeated study CSV differs from the first run".into(),
    );
}

#[test]
fn acceptance() {
    let mut out = Outcome::new();
    let kept_fits = criterion_1_and_3_part1(&mut out);
    criterion_2(&mut out);

    let mut worst_kkt = 0.0f64;
    for (f, d) in &kept_fits {
        worst_kkt = worst_kkt.max(max_kkt_violation(f, d));
    }
    criterion_3b_kkt_on_study_fits(&mut worst_kkt);
    out.check(
        3,
        "KKT residuals",
        worst_kkt <= 1e-4,
        format!("max KKT violation {worst_kkt:.2e}"),
    );

    criterion_4(&mut out);
    let table = criterion_5(&mut out);
    criterion_6(&mut out);
    criterion_7(&mut out);
    criterion_8(&mut out);
    criterion_9(&mut out);
    criterion_10(&mut out, &table);

    assert!(
        out.failures.is_empty(),
        "acceptance failures:\n{}",
        out.failures.join("\n")
    );
}
