//! Synthetic-data generators (three correlation scenarios), evaluation
//! metrics, and the accuracy–diversity trade-off study harness.

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::diversity::DiversityReport;
use crate::error::{Result, SplitError};
use crate::model::{logistic_loss, sigmoid, SplitFit};
use crate::tuning::{alternating_search, SearchConfig};

/// Draws used for Monte-Carlo intercept calibration.
const CALIBRATION_DRAWS: usize = 100_000;
/// Target accuracy of the calibrated positive-class probability.
const CALIBRATION_TOL: f64 = 0.002;
/// Active variables per block in scenario 3.
pub const BLOCK_SIZE: usize = 25;

/// One of the three synthetic correlation designs.
///
/// * Scenario 1: all p predictors equicorrelated at ρ.
/// * Scenario 2: active and inactive predictors form two groups with
///   within-group correlation ρ₂ and cross-group correlation ρ₁.
/// * Scenario 3: active predictors split into blocks of 25 with within-block
///   correlation ρ₂; inactive predictors form one ρ₂ group; everything else
///   correlates at ρ₁.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scenario {
    S1,
    S2,
    S3,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    pub n: usize,
    pub p: usize,
    /// Proportion of active variables; the active count is round(ζp).
    pub zeta: f64,
    /// S1: the common correlation. S2/S3: the cross-group correlation.
    pub rho1: f64,
    /// Within-group correlation for S2/S3; ignored by S1.
    pub rho2: f64,
    /// Target P(Y = +1).
    pub pi1: f64,
    pub seed: u64,
}

impl ScenarioConfig {
    /// Number of active variables, ζp rounded to the nearest integer.
    pub fn active_count(&self) -> usize {
        (self.zeta * self.p as f64).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.p == 0 {
            return Err(SplitError::InvalidHyper("n and p must be positive".into()));
        }
        if !(self.zeta > 0.0 && self.zeta < 1.0) {
            return Err(SplitError::InvalidHyper(format!(
                "zeta {} not in (0,1)",
                self.zeta
            )));
        }
        if !(self.pi1 > 0.0 && self.pi1 < 1.0) {
            return Err(SplitError::InvalidHyper(format!(
                "pi1 {} not in (0,1)",
                self.pi1
            )));
        }
        let a = self.active_count();
        if a == 0 || a >= self.p {
            return Err(SplitError::InvalidHyper(format!(
                "active count round(zeta*p) = {a} must be in 1..p"
            )));
        }
        match self.scenario {
            Scenario::S1 => {
                if !(0.0..1.0).contains(&self.rho1) {
                    return Err(SplitError::InvalidHyper(format!(
                        "scenario 1 correlation rho = {} not in [0,1)",
                        self.rho1
                    )));
                }
            }
            Scenario::S2 | Scenario::S3 => {
                if !(self.rho1 < self.rho2) {
                    return Err(SplitError::InvalidHyper(format!(
                        "scenarios 2/3 require rho1 < rho2, got ({}, {})",
                        self.rho1, self.rho2
                    )));
                }
                if !(0.0..1.0).contains(&self.rho1) || !(0.0..1.0).contains(&self.rho2) {
                    return Err(SplitError::InvalidHyper(format!(
                        "correlations ({}, {}) must lie in [0,1) (zeta = {})",
                        self.rho1, self.rho2, self.zeta
                    )));
                }
                if self.scenario == Scenario::S3 && a % BLOCK_SIZE != 0 {
                    return Err(SplitError::InvalidHyper(format!(
                        "scenario 3 needs round(zeta*p) = {a} divisible by {BLOCK_SIZE}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Factor-group index of each variable (variables in the same group share
    /// a ρ₂-level factor; distinct groups correlate at ρ₁).
    fn groups(&self) -> Vec<usize> {
        let a = self.active_count();
        match self.scenario {
            Scenario::S1 => vec![0; self.p],
            Scenario::S2 => (0..self.p).map(|j| usize::from(j >= a)).collect(),
            Scenario::S3 => (0..self.p)
                .map(|j| if j < a { j / BLOCK_SIZE } else { a / BLOCK_SIZE })
                .collect(),
        }
    }

    /// Population correlation between variables j and k (j ≠ k).
    pub fn correlation(&self, j: usize, k: usize) -> f64 {
        if j == k {
            return 1.0;
        }
        match self.scenario {
            Scenario::S1 => self.rho1,
            _ => {
                let g = self.groups();
                if g[j] == g[k] {
                    self.rho2
                } else {
                    self.rho1
                }
            }
        }
    }
}

/// True active coefficients: (−1)^z·u with z ~ Bernoulli(0.3), u ~ U(0, 1/2).
pub fn generate_coefficients(count: usize, seed: u64) -> Array1<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Array1::from_shape_fn(count, |_| {
        let sign = if rng.gen_bool(0.3) { -1.0 } else { 1.0 };
        sign * rng.gen_range(0.0..0.5)
    })
}

/// Draws rows from the scenario's Gaussian design using the factor
/// construction: x_j = √ρ₁·z₀ + √(ρ₂−ρ₁)·w_{g(j)} + √(1−ρ₂)·ε_j
/// (for S1 the middle term is absent and ρ₂ = ρ₁).
pub struct DesignSampler {
    config: ScenarioConfig,
    groups: Vec<usize>,
    n_groups: usize,
    shared_sd: f64,
    group_sd: f64,
    idio_sd: f64,
}

impl DesignSampler {
    pub fn new(config: &ScenarioConfig) -> Result<DesignSampler> {
        config.validate()?;
        let (lo, hi) = match config.scenario {
            Scenario::S1 => (config.rho1, config.rho1),
            _ => (config.rho1, config.rho2),
        };
        // the two-factor construction realizes exactly the structures the
        // validated configs allow: 0 ≤ ρ1 ≤ ρ2 < 1
        if lo < 0.0 || hi < lo || hi >= 1.0 {
            return Err(SplitError::InvalidHyper(format!(
                "correlation structure (rho1 = {}, rho2 = {}, zeta = {}) is not positive semidefinite under the factor construction",
                config.rho1, config.rho2, config.zeta
            )));
        }
        let groups = config.groups();
        let n_groups = groups.iter().max().copied().unwrap_or(0) + 1;
        Ok(DesignSampler {
            config: config.clone(),
            groups,
            n_groups,
            shared_sd: lo.sqrt(),
            group_sd: (hi - lo).sqrt(),
            idio_sd: (1.0 - hi).sqrt(),
        })
    }

    pub fn sample(&self, n: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
        let p = self.config.p;
        let mut x = Array2::zeros((n, p));
        let normal = StandardNormal;
        let mut group_draws = vec![0.0f64; self.n_groups];
        for i in 0..n {
            let z0: f64 = normal.sample(rng);
            for w in group_draws.iter_mut() {
                *w = normal.sample(rng);
            }
            for j in 0..p {
                let e: f64 = normal.sample(rng);
                x[(i, j)] = self.shared_sd * z0
                    + self.group_sd * group_draws[self.groups[j]]
                    + self.idio_sd * e;
            }
        }
        x
    }

    /// Population variance of xᵀβ for a coefficient vector over the leading
    /// entries (inactive coefficients are zero).
    pub fn margin_variance(&self, beta: &Array1<f64>) -> f64 {
        let mut v = 0.0;
        for j in 0..beta.len() {
            if beta[j] == 0.0 {
                continue;
            }
            for k in 0..beta.len() {
                if beta[k] != 0.0 {
                    v += beta[j] * beta[k] * self.config.correlation(j, k);
                }
            }
        }
        v
    }
}

/// β₀ such that E[S(β₀ + xᵀβ)] ≈ π1 within 0.002, found by bisection on a
/// fixed set of 10⁵ Monte-Carlo margin draws (xᵀβ is exactly Gaussian under
/// the factor construction, so the margins are drawn from its true law).
pub fn calibrate_intercept(
    sampler: &DesignSampler,
    beta: &Array1<f64>,
    pi1: f64,
    seed: u64,
) -> Result<f64> {
    if !(pi1 > 0.0 && pi1 < 1.0) {
        return Err(SplitError::InvalidHyper(format!("pi1 {pi1} not in (0,1)")));
    }
    let logit = (pi1 / (1.0 - pi1)).ln();
    let sd = sampler.margin_variance(beta).sqrt();
    if sd == 0.0 {
        return Ok(logit);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = StandardNormal;
    let margins: Vec<f64> = (0..CALIBRATION_DRAWS)
        .map(|_| sd * <StandardNormal as Distribution<f64>>::sample(&normal, &mut rng))
        .collect();
    let rate = |b0: f64| {
        margins.iter().map(|&m| sigmoid(b0 + m)).sum::<f64>() / CALIBRATION_DRAWS as f64
    };
    let mut lo = logit - 1.0 - 3.0 * sd;
    let mut hi = logit + 1.0 + 3.0 * sd;
    while rate(lo) > pi1 {
        lo -= 2.0;
    }
    while rate(hi) < pi1 {
        hi += 2.0;
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        let r = rate(mid);
        if (r - pi1).abs() <= 0.25 * CALIBRATION_TOL {
            return Ok(mid);
        }
        if r < pi1 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// ±1 labels with P(y_i = +1) = S(β₀ + x_iᵀβ), independently per row.
pub fn generate_labels(
    x: &Array2<f64>,
    beta0: f64,
    beta: &Array1<f64>,
    rng: &mut ChaCha8Rng,
) -> Array1<f64> {
    Array1::from_shape_fn(x.nrows(), |i| {
        let mut f = beta0;
        for j in 0..beta.len() {
            if beta[j] != 0.0 {
                f += x[(i, j)] * beta[j];
            }
        }
        if rng.gen_bool(sigmoid(f)) {
            1.0
        } else {
            -1.0
        }
    })
}

/// Classification and selection metrics on a test set.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricsRecord {
    /// Misclassification rate of the ensemble.
    pub mr: f64,
    /// Sensitivity; None when the test set has no positives.
    pub se: Option<f64>,
    /// Specificity; None when the test set has no negatives.
    pub sp: Option<f64>,
    /// Mean logistic loss of the ensemble predictor.
    pub tl: f64,
    /// Recall of the true support; None when no true coefficient is nonzero.
    pub rc: Option<f64>,
    /// Precision of the estimated support; None when β̂ ≡ 0.
    pub pr: Option<f64>,
}

/// Evaluate a fit on raw (original-scale) test rows. `true_beta`, when
/// given, enables the support-recovery metrics RC and PR against the
/// ensemble-averaged coefficients.
pub fn evaluate(
    fit: &SplitFit,
    test_x: &Array2<f64>,
    test_y: &Array1<f64>,
    true_beta: Option<&Array1<f64>>,
) -> Result<MetricsRecord> {
    let m = test_x.nrows();
    if m == 0 || test_y.len() != m {
        return Err(SplitError::DimensionMismatch(
            "test set empty or label length mismatch".into(),
        ));
    }
    let (b0, beta_bar) = fit.ensemble_params_original();
    let mut miss = 0usize;
    let mut tp = 0usize;
    let mut tn = 0usize;
    let mut npos = 0usize;
    let mut nneg = 0usize;
    let mut tl = 0.0;
    for i in 0..m {
        let f = b0 + beta_bar.dot(&test_x.row(i));
        let pred = if f >= 0.0 { 1.0 } else { -1.0 };
        tl += logistic_loss(test_y[i] * f);
        if test_y[i] == 1.0 {
            npos += 1;
            if pred == 1.0 {
                tp += 1;
            }
        } else {
            nneg += 1;
            if pred == -1.0 {
                tn += 1;
            }
        }
        if pred != test_y[i] {
            miss += 1;
        }
    }
    let (rc, pr) = match true_beta {
        None => (None, None),
        Some(tb) => {
            let truth: Vec<bool> = (0..beta_bar.len())
                .map(|j| j < tb.len() && tb[j] != 0.0)
                .collect();
            let est: Vec<bool> = beta_bar.iter().map(|&b| b != 0.0).collect();
            let hits = truth
                .iter()
                .zip(est.iter())
                .filter(|(t, e)| **t && **e)
                .count();
            let n_true = truth.iter().filter(|&&t| t).count();
            let n_est = est.iter().filter(|&&e| e).count();
            (
                (n_true > 0).then(|| hits as f64 / n_true as f64),
                (n_est > 0).then(|| hits as f64 / n_est as f64),
            )
        }
    };
    Ok(MetricsRecord {
        mr: miss as f64 / m as f64,
        se: (npos > 0).then(|| tp as f64 / npos as f64),
        sp: (nneg > 0).then(|| tn as f64 / nneg as f64),
        tl: tl / m as f64,
        rc,
        pr,
    })
}

/// One averaged row of the trade-off table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TradeoffRow {
    pub g: usize,
    pub mr: f64,
    pub mr_bar: f64,
    pub em: f64,
    /// None when every replication produced an all-null ensemble.
    pub ov: Option<f64>,
    pub dis: f64,
    pub df: f64,
    pub kw: f64,
    /// None when GD was undefined in every replication.
    pub gd: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TradeoffTable {
    pub config: ScenarioConfig,
    pub rows: Vec<TradeoffRow>,
    pub replications: usize,
    pub test_size: usize,
}

/// Tuning knobs for [`run_tradeoff_study`], scaled down from the CLI
/// defaults so a full table stays desk-sized.
#[derive(Debug, Clone)]
pub struct StudyConfig {
    pub alpha: f64,
    pub cv_folds: usize,
    pub grid_size_sparsity: usize,
    pub grid_size_diversity: usize,
    pub test_size: usize,
    pub replications: usize,
}

impl Default for StudyConfig {
    fn default() -> Self {
        StudyConfig {
            alpha: 1.0,
            cv_folds: 5,
            grid_size_sparsity: 20,
            grid_size_diversity: 20,
            test_size: 2000,
            replications: 10,
        }
    }
}

struct RepOutcome {
    metrics: MetricsRecord,
    report: DiversityReport,
}

fn run_replication(
    config: &ScenarioConfig,
    study: &StudyConfig,
    g: usize,
    rep_seed: u64,
) -> Result<RepOutcome> {
    let sampler = DesignSampler::new(config)?;
    let a = config.active_count();
    let mut beta = Array1::zeros(config.p);
    let active = generate_coefficients(a, rep_seed ^ 0x5eed_c0ef);
    beta.slice_mut(ndarray::s![..a]).assign(&active);
    let beta0 = calibrate_intercept(&sampler, &beta, config.pi1, rep_seed ^ 0xca11_b8a7)?;

    let mut rng = ChaCha8Rng::seed_from_u64(rep_seed);
    // training data must contain both classes; redraw labels a few times if a
    // tiny sample comes out single-class
    let train_x = sampler.sample(config.n, &mut rng);
    let mut train_y = generate_labels(&train_x, beta0, &beta, &mut rng);
    for _ in 0..20 {
        let has_pos = train_y.iter().any(|&v| v == 1.0);
        let has_neg = train_y.iter().any(|&v| v == -1.0);
        if has_pos && has_neg {
            break;
        }
        train_y = generate_labels(&train_x, beta0, &beta, &mut rng);
    }
    let test_x = sampler.sample(study.test_size, &mut rng);
    let test_y = generate_labels(&test_x, beta0, &beta, &mut rng);

    let data = Dataset::standardize(train_x, train_y)?;
    let search = SearchConfig {
        alpha: study.alpha,
        g,
        k: study.cv_folds,
        grid_size_sparsity: study.grid_size_sparsity,
        grid_size_diversity: study.grid_size_diversity,
        seed: rep_seed,
        ..Default::default()
    };
    let (_, fit) = alternating_search(&data, &search)?;

    let metrics = evaluate(&fit, &test_x, &test_y, Some(&beta))?;
    let mut model_preds = Array2::zeros((g, study.test_size));
    for i in 0..study.test_size {
        for mg in 0..g {
            let f = fit.model_linear_original(mg, test_x.row(i));
            model_preds[(mg, i)] = if f >= 0.0 { 1.0 } else { -1.0 };
        }
    }
    let ensemble_pred = Array1::from_shape_fn(study.test_size, |i| {
        let (b0, bb) = fit.ensemble_params_original();
        if b0 + bb.dot(&test_x.row(i)) >= 0.0 {
            1.0
        } else {
            -1.0
        }
    });
    let report = DiversityReport::compute(&model_preds, &ensemble_pred, &test_y, &fit.coefs)?;
    Ok(RepOutcome { metrics, report })
}

fn mean_opt(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let present: Vec<f64> = values.flatten().collect();
    if present.is_empty() {
        None
    } else {
        Some(present.iter().sum::<f64>() / present.len() as f64)
    }
}

/// For each G in `g_list`: tune on a fresh training draw, evaluate accuracy
/// and diversity on a fresh test draw, and average over `replications`
/// independent repeats (replication r uses seed `config.seed + r`).
pub fn run_tradeoff_study(
    config: &ScenarioConfig,
    g_list: &[usize],
    study: &StudyConfig,
) -> Result<TradeoffTable> {
    config.validate()?;
    let mut rows = Vec::with_capacity(g_list.len());
    for &g in g_list {
        let outcomes: Vec<Result<RepOutcome>> = (0..study.replications)
            .into_par_iter()
            .map(|r| run_replication(config, study, g, config.seed + r as u64))
            .collect();
        let outcomes: Vec<RepOutcome> = outcomes.into_iter().collect::<Result<_>>()?;
        let nr = outcomes.len() as f64;
        rows.push(TradeoffRow {
            g,
            mr: outcomes.iter().map(|o| o.metrics.mr).sum::<f64>() / nr,
            mr_bar: outcomes
                .iter()
                .map(|o| o.report.mr_individual_mean)
                .sum::<f64>()
                / nr,
            em: outcomes.iter().map(|o| o.report.em).sum::<f64>() / nr,
            ov: mean_opt(outcomes.iter().map(|o| o.report.ov)),
            dis: outcomes.iter().map(|o| o.report.dis).sum::<f64>() / nr,
            df: outcomes.iter().map(|o| o.report.df).sum::<f64>() / nr,
            kw: outcomes.iter().map(|o| o.report.kw).sum::<f64>() / nr,
            gd: mean_opt(outcomes.iter().map(|o| o.report.gd)),
        });
    }
    Ok(TradeoffTable {
        config: config.clone(),
        rows,
        replications: study.replications,
        test_size: study.test_size,
    })
}

impl TradeoffTable {
    /// Fixed-header CSV with one row per G.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "G, MR, MRbar, EM, OV, DIS, DF, KW, GD, n, p, zeta, rho1, rho2, pi1, reps, seed\n",
        );
        let fmt = |v: Option<f64>| match v {
            Some(x) => format!("{x:.6}"),
            None => "NA".to_string(),
        };
        for r in &self.rows {
            out.push_str(&format!(
                "{}, {:.6}, {:.6}, {:.6}, {}, {:.6}, {:.6}, {:.6}, {}, {}, {}, {}, {}, {}, {}, {}, {}\n",
                r.g,
                r.mr,
                r.mr_bar,
                r.em,
                fmt(r.ov),
                r.dis,
                r.df,
                r.kw,
                fmt(r.gd),
                self.config.n,
                self.config.p,
                self.config.zeta,
                self.config.rho1,
                self.config.rho2,
                self.config.pi1,
                self.replications,
                self.config.seed,
            ));
        }
        out
    }
}
