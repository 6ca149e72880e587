//! Penalty grids, λ_s^max / λ_d^max searches, cross-validation and the
//! alternating grid search over (λ_s, λ_d).

use ndarray::{Array1, Array2};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Result, SplitError};
use crate::model::{diversity_penalty, logistic_loss, HyperParams, SplitFit};
use crate::solver;

/// Relative CV-loss decrease required to accept a new grid point.
const CV_DECREASE_REL: f64 = 1e-6;
/// Maximum number of alternation passes.
pub const PASS_CAP: usize = 10;
/// Bisection steps for the λ^max searches.
const BISECTION_STEPS: usize = 20;
/// Relative bracket width target for the λ^max searches.
const BRACKET_REL_WIDTH: f64 = 0.01;
/// Nullness threshold for coefficients in the pure-ridge (α = 0) surrogate.
const RIDGE_NULL_TOL: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GridKind {
    Sparsity,
    Diversity,
}

/// Descending log-equispaced penalty grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Grid {
    pub values: Vec<f64>,
    pub kind: GridKind,
}

/// `l` log-equispaced values between λ_max and ε·λ_max, descending, with
/// ε = 10⁻⁴ if p < n and 10⁻² otherwise.
pub fn make_grid(kind: GridKind, l: usize, lambda_max: f64, n: usize, p: usize) -> Grid {
    assert!(lambda_max > 0.0, "lambda_max must be positive");
    assert!(l >= 1);
    let eps = if p < n { 1e-4 } else { 1e-2 };
    let values = if l == 1 {
        vec![lambda_max]
    } else {
        let log_max = lambda_max.ln();
        let log_min = (eps * lambda_max).ln();
        (0..l)
            .map(|i| {
                // pin the endpoints so the grid top is exactly λ_max
                if i == 0 {
                    lambda_max
                } else if i == l - 1 {
                    eps * lambda_max
                } else {
                    (log_max + (log_min - log_max) * i as f64 / (l - 1) as f64).exp()
                }
            })
            .collect()
    };
    Grid { values, kind }
}

fn fast_hyper(alpha: f64, lambda_s: f64, lambda_d: f64, g: usize) -> HyperParams {
    HyperParams {
        alpha,
        lambda_s,
        lambda_d,
        g,
        ..Default::default()
    }
}

/// Closed-form null point for λ_d = 0, α > 0:
/// λ_s^max = max_j |⟨x_j, z - q̄·1⟩| / (n·α) with q̄ the +1 proportion.
fn lambda_s_max_closed_form(data: &Dataset, alpha: f64) -> Result<f64> {
    let z = data.z();
    let q = data.positive_fraction();
    let centered = z.mapv(|v| v - q);
    let mut max_score = 0.0f64;
    for j in 0..data.p() {
        if data.is_constant(j) {
            continue;
        }
        max_score = max_score.max(data.column(j).dot(&centered).abs());
    }
    if max_score <= 1e-12 {
        return Err(SplitError::NoSignal);
    }
    // Inflate by a relative 1e-12 so the fit at exactly λ_s^max is null even
    // when the solver's gradient accumulation rounds differently from `dot`.
    Ok(max_score / (data.n() as f64 * alpha) * (1.0 + 1e-12))
}

fn is_null_fit(fit: &SplitFit, alpha: f64) -> bool {
    let tol = if alpha > 0.0 { 0.0 } else { RIDGE_NULL_TOL };
    fit.coefs.iter().all(|b| b.abs() <= tol)
}

/// Smallest λ_s that makes all G models null at the given λ_d.
///
/// Uses the KKT closed form when λ_d = 0 and α > 0; otherwise a bracketed
/// bisection over fits. For α = 0 nullness means max|β_j| ≤ 1e-3.
pub fn lambda_s_max(data: &Dataset, alpha: f64, g: usize, lambda_d: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(SplitError::InvalidHyper(format!("alpha {alpha}")));
    }
    if lambda_d == 0.0 && alpha > 0.0 {
        return lambda_s_max_closed_form(data, alpha);
    }
    // anchor the bracket at the α-floored closed form
    let anchor = lambda_s_max_closed_form(data, alpha.max(1e-3))?;
    let null_at = |lambda_s: f64| -> Result<bool> {
        let fit = solver::fit(data, &fast_hyper(alpha, lambda_s, lambda_d, g), None)?;
        Ok(is_null_fit(&fit, alpha))
    };
    let mut hi = anchor;
    let mut doublings = 0;
    while !null_at(hi)? {
        hi *= 2.0;
        doublings += 1;
        if doublings > 60 {
            return Err(SplitError::Numerical(
                "lambda_s_max bracket search did not terminate".into(),
            ));
        }
    }
    let mut lo = hi / 2.0;
    let mut halvings = 0;
    while null_at(lo)? {
        hi = lo;
        lo /= 2.0;
        halvings += 1;
        if halvings > 60 {
            // null all the way down: data carry no usable signal
            return Err(SplitError::NoSignal);
        }
    }
    for _ in 0..BISECTION_STEPS {
        if (hi - lo) / hi <= BRACKET_REL_WIDTH {
            break;
        }
        let mid = (lo * hi).sqrt();
        if null_at(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Result of the λ_d^max search.
#[derive(Debug, Clone)]
pub struct LambdaDMax {
    pub value: f64,
    /// Set when all models are already null at the given λ_s, so the
    /// disjointness condition is vacuous and the bracket floor is returned.
    pub degenerate: bool,
}

/// Smallest λ_d at which the fitted models have pairwise disjoint supports.
pub fn lambda_d_max(data: &Dataset, alpha: f64, g: usize, lambda_s: f64) -> Result<LambdaDMax> {
    if g < 2 {
        return Err(SplitError::InvalidHyper(
            "lambda_d_max requires at least two models".into(),
        ));
    }
    let disjoint_at = |lambda_d: f64| -> Result<(bool, bool)> {
        let fit = solver::fit(data, &fast_hyper(alpha, lambda_s, lambda_d, g), None)?;
        Ok((
            diversity_penalty(&fit.coefs) == 0.0,
            is_null_fit(&fit, alpha),
        ))
    };
    let floor = 1e-4 * lambda_s.max(1e-3);
    let (disjoint0, null0) = disjoint_at(0.0)?;
    if null0 {
        return Ok(LambdaDMax {
            value: floor,
            degenerate: true,
        });
    }
    if disjoint0 {
        // supports already disjoint without any diversity pressure
        return Ok(LambdaDMax {
            value: floor,
            degenerate: false,
        });
    }
    let mut hi = lambda_s.max(1e-3);
    let mut doublings = 0;
    while !disjoint_at(hi)?.0 {
        hi *= 2.0;
        doublings += 1;
        if doublings > 60 {
            return Err(SplitError::Numerical(
                "lambda_d_max bracket search did not terminate".into(),
            ));
        }
    }
    let mut lo = hi / 2.0;
    let mut halvings = 0;
    while disjoint_at(lo)?.0 {
        hi = lo;
        lo /= 2.0;
        halvings += 1;
        if halvings > 60 {
            return Ok(LambdaDMax {
                value: hi,
                degenerate: false,
            });
        }
    }
    for _ in 0..BISECTION_STEPS {
        if (hi - lo) / hi <= BRACKET_REL_WIDTH {
            break;
        }
        let mid = (lo * hi).sqrt();
        if disjoint_at(mid)?.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(LambdaDMax {
        value: hi,
        degenerate: false,
    })
}

/// Class-stratified fold assignment (entries in 0..k), seeded shuffle.
pub fn stratified_folds(y: &Array1<f64>, k: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pos: Vec<usize> = (0..y.len()).filter(|&i| y[i] == 1.0).collect();
    let mut neg: Vec<usize> = (0..y.len()).filter(|&i| y[i] != 1.0).collect();
    pos.shuffle(&mut rng);
    neg.shuffle(&mut rng);
    let mut assignment = vec![0usize; y.len()];
    for (rank, &i) in pos.iter().chain(neg.iter()).enumerate() {
        assignment[i] = rank % k;
    }
    assignment
}

/// Cross-validated loss of the ensemble classifier at one grid point.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CvPoint {
    pub lambda_s: f64,
    pub lambda_d: f64,
    pub mean_loss: f64,
    pub std_error: f64,
}

struct FoldData {
    train: Dataset,
    test_x: Array2<f64>,
    test_y: Array1<f64>,
}

/// Split along a fold assignment; a fold whose training complement lacks a
/// class is merged into the next fold (with a warning recorded).
fn build_folds(
    data: &Dataset,
    assignment: &mut Vec<usize>,
    k: usize,
    warnings: &mut Vec<String>,
) -> Result<Vec<FoldData>> {
    for _ in 0..k {
        let mut bad: Option<usize> = None;
        for f in 0..k {
            let train_rows: Vec<usize> = (0..data.n()).filter(|&i| assignment[i] != f).collect();
            if train_rows.is_empty() {
                continue;
            }
            let ys: Vec<f64> = train_rows.iter().map(|&i| data.y()[i]).collect();
            let has_pos = ys.iter().any(|&v| v == 1.0);
            let has_neg = ys.iter().any(|&v| v == -1.0);
            if !(has_pos && has_neg) {
                bad = Some(f);
                break;
            }
        }
        match bad {
            None => break,
            Some(f) => {
                let target = (f + 1) % k;
                warnings.push(format!(
                    "fold {} left single-class training data; merged into fold {}",
                    f + 1,
                    target + 1
                ));
                for a in assignment.iter_mut() {
                    if *a == f {
                        *a = target;
                    }
                }
            }
        }
    }
    let mut folds = Vec::new();
    for f in 0..k {
        let test_rows: Vec<usize> = (0..data.n()).filter(|&i| assignment[i] == f).collect();
        if test_rows.is_empty() {
            continue;
        }
        let train_rows: Vec<usize> = (0..data.n()).filter(|&i| assignment[i] != f).collect();
        let train = data.subset(&train_rows)?;
        let (test_x, test_y) = data.raw_rows(&test_rows);
        folds.push(FoldData {
            train,
            test_x,
            test_y,
        });
    }
    if folds.len() < 2 {
        return Err(SplitError::Data(
            "cross-validation needs at least two usable folds".into(),
        ));
    }
    Ok(folds)
}

fn held_out_loss(fit: &SplitFit, x: &Array2<f64>, y: &Array1<f64>) -> Result<f64> {
    let mut loss = 0.0;
    let (b0, beta) = fit.ensemble_params_original();
    for i in 0..x.nrows() {
        let f = b0 + beta.dot(&x.row(i));
        loss += logistic_loss(y[i] * f);
    }
    Ok(loss / x.nrows() as f64)
}

fn cv_at(
    folds: &[FoldData],
    hyper: &HyperParams,
    warm: Option<&[SplitFit]>,
) -> Result<(f64, f64, Vec<SplitFit>)> {
    let results: Vec<Result<(f64, SplitFit)>> = folds
        .par_iter()
        .enumerate()
        .map(|(fi, fold)| {
            let init = warm.map(|w| &w[fi]);
            let fit = solver::fit(&fold.train, hyper, init)?;
            let loss = held_out_loss(&fit, &fold.test_x, &fold.test_y)?;
            Ok((loss, fit))
        })
        .collect();
    let mut losses = Vec::with_capacity(folds.len());
    let mut fits = Vec::with_capacity(folds.len());
    for r in results {
        let (loss, fit) = r?;
        losses.push(loss);
        fits.push(fit);
    }
    let k = losses.len() as f64;
    let mean = losses.iter().sum::<f64>() / k;
    let var = losses.iter().map(|l| (l - mean) * (l - mean)).sum::<f64>() / (k - 1.0);
    let se = (var / k).sqrt();
    Ok((mean, se, fits))
}

/// K-fold cross-validated loss at a single (λ_s, λ_d) point.
///
/// Folds are stratified by class; each fold is fitted on its complement and
/// evaluated by the mean logistic loss of the ensemble prediction.
pub fn cv_loss(
    data: &Dataset,
    hyper: &HyperParams,
    k: usize,
    fold_assignment: &[usize],
) -> Result<(f64, f64)> {
    if k < 2 {
        return Err(SplitError::InvalidHyper("k must be at least 2".into()));
    }
    if fold_assignment.len() != data.n() {
        return Err(SplitError::DimensionMismatch(
            "fold assignment length does not match n".into(),
        ));
    }
    let mut assignment = fold_assignment.to_vec();
    let mut warnings = Vec::new();
    let folds = build_folds(data, &mut assignment, k, &mut warnings)?;
    let (mean, se, _) = cv_at(&folds, hyper, None)?;
    Ok((mean, se))
}

/// One half-pass of the alternating search.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PassRecord {
    pub kind: GridKind,
    pub pass: usize,
    pub lambda_max: f64,
    pub points: Vec<CvPoint>,
    pub selected: Option<f64>,
}

/// Full record of an alternating grid search.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CvReport {
    pub fold_assignment: Vec<usize>,
    pub passes: Vec<PassRecord>,
    pub selected_lambda_s: f64,
    pub selected_lambda_d: f64,
    pub pass_count: usize,
    pub final_cv_loss: f64,
    pub warnings: Vec<String>,
}

/// Configuration for [`alternating_search`].
#[derive(Debug, Clone)]
pub struct SearchConfig {
    pub alpha: f64,
    pub g: usize,
    pub k: usize,
    pub grid_size_sparsity: usize,
    pub grid_size_diversity: usize,
    pub seed: u64,
    pub pass_cap: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            alpha: 0.75,
            g: 10,
            k: 10,
            grid_size_sparsity: 100,
            grid_size_diversity: 100,
            seed: 0,
            pass_cap: PASS_CAP,
        }
    }
}

fn improved(best: f64, candidate: f64) -> bool {
    if best.is_infinite() {
        return candidate.is_finite();
    }
    candidate < best - CV_DECREASE_REL * best.abs().max(1e-12)
}

/// Alternating grid search over (λ_s, λ_d).
///
/// Starts at λ_d = 0, alternates a descending warm-started pass over the
/// sparsity grid with one over the diversity grid (which always includes
/// λ_d = 0), accepting a new grid point only when the cross-validated loss
/// strictly decreases, and stops when a full pass brings no decrease. The
/// returned fit is refit on all data at the selected pair.
pub fn alternating_search(data: &Dataset, config: &SearchConfig) -> Result<(CvReport, SplitFit)> {
    if !data.has_both_classes() {
        return Err(SplitError::SingleClass);
    }
    let k = config.k.min(data.n());
    let mut assignment = stratified_folds(data.y(), k, config.seed);
    let mut warnings = Vec::new();
    let folds = build_folds(data, &mut assignment, k, &mut warnings)?;

    let mut passes: Vec<PassRecord> = Vec::new();
    let mut lambda_s_opt: Option<f64> = None;
    let mut lambda_d_opt: f64 = 0.0;
    let mut best_cvl = f64::INFINITY;
    let mut pass_count = 0usize;

    for pass in 1..=config.pass_cap {
        pass_count = pass;
        let mut pass_improved = false;

        // sparsity half-pass at the current λ_d
        let ls_max = lambda_s_max(data, config.alpha, config.g, lambda_d_opt)?;
        let grid = make_grid(
            GridKind::Sparsity,
            config.grid_size_sparsity,
            ls_max,
            data.n(),
            data.p(),
        );
        let mut record = PassRecord {
            kind: GridKind::Sparsity,
            pass,
            lambda_max: ls_max,
            points: Vec::new(),
            selected: None,
        };
        let mut warm: Option<Vec<SplitFit>> = None;
        let mut pass_best = best_cvl;
        let mut pass_sel: Option<f64> = None;
        for &ls in &grid.values {
            let hyper = fast_hyper(config.alpha, ls, lambda_d_opt, config.g);
            let (mean, se, fits) = cv_at(&folds, &hyper, warm.as_deref())?;
            warm = Some(fits);
            record.points.push(CvPoint {
                lambda_s: ls,
                lambda_d: lambda_d_opt,
                mean_loss: mean,
                std_error: se,
            });
            if improved(pass_best, mean) {
                pass_best = mean;
                pass_sel = Some(ls);
            }
        }
        if let Some(ls) = pass_sel {
            lambda_s_opt = Some(ls);
            best_cvl = pass_best;
            record.selected = Some(ls);
            pass_improved = true;
        }
        passes.push(record);

        let ls_current = lambda_s_opt.unwrap_or(ls_max);

        // diversity half-pass at the selected λ_s (needs G ≥ 2)
        if config.g >= 2 {
            let ld_max = lambda_d_max(data, config.alpha, config.g, ls_current)?;
            if ld_max.degenerate {
                warnings.push(format!(
                    "pass {pass}: all models null at lambda_s = {ls_current:.6e}; diversity grid degenerate"
                ));
            }
            let mut grid = make_grid(
                GridKind::Diversity,
                config.grid_size_diversity,
                ld_max.value,
                data.n(),
                data.p(),
            );
            grid.values.push(0.0); // λ_d = 0 is always included
            let mut record = PassRecord {
                kind: GridKind::Diversity,
                pass,
                lambda_max: ld_max.value,
                points: Vec::new(),
                selected: None,
            };
            let mut warm: Option<Vec<SplitFit>> = None;
            let mut pass_best = best_cvl;
            let mut pass_sel: Option<f64> = None;
            for &ld in &grid.values {
                let hyper = fast_hyper(config.alpha, ls_current, ld, config.g);
                let (mean, se, fits) = cv_at(&folds, &hyper, warm.as_deref())?;
                warm = Some(fits);
                record.points.push(CvPoint {
                    lambda_s: ls_current,
                    lambda_d: ld,
                    mean_loss: mean,
                    std_error: se,
                });
                if improved(pass_best, mean) {
                    pass_best = mean;
                    pass_sel = Some(ld);
                }
            }
            if let Some(ld) = pass_sel {
                lambda_d_opt = ld;
                best_cvl = pass_best;
                record.selected = Some(ld);
                pass_improved = true;
            }
            passes.push(record);
        }

        if !pass_improved {
            break;
        }
    }

    let selected_ls = lambda_s_opt.unwrap_or_else(|| passes[0].lambda_max);
    let hyper = fast_hyper(config.alpha, selected_ls, lambda_d_opt, config.g);
    let final_fit = solver::fit(data, &hyper, None)?;
    let report = CvReport {
        fold_assignment: assignment,
        passes,
        selected_lambda_s: selected_ls,
        selected_lambda_d: lambda_d_opt,
        pass_count,
        final_cv_loss: best_cvl,
        warnings,
    };
    Ok((report, final_fit))
}
