//! Loss, penalties, objective, ensemble prediction and importance sets.

use ndarray::{Array1, Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Result, SplitError};

/// Logistic sigmoid S(t) = e^t / (1 + e^t), computed without overflow.
pub fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// Logistic loss log(1 + exp(-margin)) with margin = y·f(x).
pub fn logistic_loss(margin: f64) -> f64 {
    if margin > 0.0 {
        (-margin).exp().ln_1p()
    } else {
        -margin + margin.exp().ln_1p()
    }
}

/// Elastic-net penalty (1-α)/2·‖β‖₂² + α·‖β‖₁, intercept excluded.
pub fn sparsity_penalty(beta: ArrayView1<'_, f64>, alpha: f64) -> f64 {
    let l1: f64 = beta.iter().map(|b| b.abs()).sum();
    let l2sq: f64 = beta.iter().map(|b| b * b).sum();
    (1.0 - alpha) / 2.0 * l2sq + alpha * l1
}

/// Σ_g Σ_{h≠g} Σ_j |β_j^g||β_j^h| over ordered pairs of models.
///
/// Each unordered pair is counted twice; the λ_d/2 factor stays in the
/// objective.
pub fn diversity_penalty(coefs: &Array2<f64>) -> f64 {
    let mut total = 0.0;
    for row in coefs.rows() {
        let abs_sum: f64 = row.iter().map(|b| b.abs()).sum();
        let sq_sum: f64 = row.iter().map(|b| b * b).sum();
        total += abs_sum * abs_sum - sq_sum;
    }
    total
}

/// Fitting hyperparameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HyperParams {
    pub alpha: f64,
    pub lambda_s: f64,
    pub lambda_d: f64,
    pub g: usize,
    pub tol: f64,
    pub max_sweeps: usize,
}

impl Default for HyperParams {
    fn default() -> Self {
        HyperParams {
            alpha: 0.75,
            lambda_s: 0.0,
            lambda_d: 0.0,
            g: 10,
            tol: 1e-8,
            max_sweeps: 1000,
        }
    }
}

impl HyperParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(SplitError::InvalidHyper(format!(
                "alpha must be in [0,1], got {}",
                self.alpha
            )));
        }
        if self.lambda_s < 0.0 || !self.lambda_s.is_finite() {
            return Err(SplitError::InvalidHyper(format!(
                "lambda_s must be a finite nonnegative value, got {}",
                self.lambda_s
            )));
        }
        if self.lambda_d < 0.0 || !self.lambda_d.is_finite() {
            return Err(SplitError::InvalidHyper(format!(
                "lambda_d must be a finite nonnegative value, got {}",
                self.lambda_d
            )));
        }
        if self.g < 1 {
            return Err(SplitError::InvalidHyper("g must be at least 1".into()));
        }
        if self.tol <= 0.0 {
            return Err(SplitError::InvalidHyper("tol must be positive".into()));
        }
        if self.max_sweeps == 0 {
            return Err(SplitError::InvalidHyper("max_sweeps must be positive".into()));
        }
        Ok(())
    }
}

/// A fitted ensemble of G logistic regression models.
#[derive(Debug, Clone)]
pub struct SplitFit {
    /// Intercepts β_0^g on the standardized scale.
    pub intercepts: Array1<f64>,
    /// p×G coefficient matrix on the standardized scale.
    pub coefs: Array2<f64>,
    /// Intercepts adjusted to the original predictor scale.
    pub intercepts_original: Array1<f64>,
    /// p×G coefficient matrix on the original predictor scale.
    pub coefs_original: Array2<f64>,
    pub hyper: HyperParams,
    pub converged: bool,
    pub sweeps_used: usize,
    pub objective: f64,
    pub col_means: Array1<f64>,
    pub col_scales: Array1<f64>,
    pub names: Vec<String>,
}

impl SplitFit {
    pub fn g(&self) -> usize {
        self.intercepts.len()
    }

    pub fn p(&self) -> usize {
        self.coefs.nrows()
    }

    /// Destandardize: β_j^orig = β_j/s_j, β_0^orig = β_0 - Σ_j β_j m_j/s_j.
    pub(crate) fn destandardize(
        intercepts: &Array1<f64>,
        coefs: &Array2<f64>,
        col_means: &Array1<f64>,
        col_scales: &Array1<f64>,
    ) -> (Array1<f64>, Array2<f64>) {
        let (p, g) = coefs.dim();
        let mut b0 = intercepts.clone();
        let mut b = Array2::zeros((p, g));
        for k in 0..g {
            for j in 0..p {
                let s = col_scales[j];
                if s > 0.0 {
                    let c = coefs[(j, k)] / s;
                    b[(j, k)] = c;
                    b0[k] -= c * col_means[j];
                }
            }
        }
        (b0, b)
    }

    /// Ensemble-averaged intercept and coefficients on the standardized scale.
    pub fn ensemble_params(&self) -> (f64, Array1<f64>) {
        let g = self.g() as f64;
        let b0 = self.intercepts.sum() / g;
        let beta = self.coefs.sum_axis(ndarray::Axis(1)) / g;
        (b0, beta)
    }

    /// Ensemble-averaged intercept and coefficients on the original scale.
    pub fn ensemble_params_original(&self) -> (f64, Array1<f64>) {
        let g = self.g() as f64;
        let b0 = self.intercepts_original.sum() / g;
        let beta = self.coefs_original.sum_axis(ndarray::Axis(1)) / g;
        (b0, beta)
    }

    /// Linear predictor of model `g` on a standardized input row.
    pub fn model_linear(&self, g: usize, x_std: ArrayView1<'_, f64>) -> f64 {
        self.intercepts[g] + self.coefs.column(g).dot(&x_std)
    }

    /// Linear predictor of model `g` on an original-scale input row.
    pub fn model_linear_original(&self, g: usize, x_raw: ArrayView1<'_, f64>) -> f64 {
        self.intercepts_original[g] + self.coefs_original.column(g).dot(&x_raw)
    }

    /// Ensemble probability S(β̄_0 + xᵀβ̄) on a standardized input row.
    pub fn predict_proba(&self, x_std: ArrayView1<'_, f64>) -> Result<f64> {
        check_finite(x_std)?;
        let (b0, beta) = self.ensemble_params();
        Ok(sigmoid(b0 + beta.dot(&x_std)))
    }

    /// Ensemble probability on an original-scale input row.
    pub fn predict_proba_original(&self, x_raw: ArrayView1<'_, f64>) -> Result<f64> {
        check_finite(x_raw)?;
        let (b0, beta) = self.ensemble_params_original();
        Ok(sigmoid(b0 + beta.dot(&x_raw)))
    }

    /// Class prediction: +1 iff probability ≥ 0.5 (ties go to +1).
    pub fn predict_class_original(&self, x_raw: ArrayView1<'_, f64>) -> Result<f64> {
        Ok(if self.predict_proba_original(x_raw)? >= 0.5 {
            1.0
        } else {
            -1.0
        })
    }

    /// Recompute the objective value on a dataset.
    pub fn objective_on(&self, data: &Dataset) -> Result<f64> {
        objective(
            &self.intercepts,
            &self.coefs,
            data,
            self.hyper.alpha,
            self.hyper.lambda_s,
            self.hyper.lambda_d,
        )
    }
}

fn check_finite(x: ArrayView1<'_, f64>) -> Result<()> {
    if x.iter().any(|v| !v.is_finite()) {
        Err(SplitError::NonFinite("prediction input".into()))
    } else {
        Ok(())
    }
}

/// Split objective J = Σ_g [(1/n)Σ_i ℒ + λ_s P_s(β^g)] + (λ_d/2)·Σ_{g<h} P_d(β^g,β^h).
///
/// `diversity_penalty` sums over ordered pairs (each unordered pair twice),
/// so the unordered-pair charge (λ_d/2)·Σ_{g<h} equals (λ_d/4)× that sum.
/// This makes ∂J/∂β_j^g carry the L1 weight (λ_d/2)·Σ_{h≠g}|β_j^h| used by
/// the block coordinate updates and the KKT conditions.
pub fn objective(
    intercepts: &Array1<f64>,
    coefs: &Array2<f64>,
    data: &Dataset,
    alpha: f64,
    lambda_s: f64,
    lambda_d: f64,
) -> Result<f64> {
    let (p, g) = coefs.dim();
    if p != data.p() || g != intercepts.len() {
        return Err(SplitError::DimensionMismatch(format!(
            "coefs {}x{}, data p={}, intercepts {}",
            p,
            g,
            data.p(),
            intercepts.len()
        )));
    }
    let n = data.n() as f64;
    let mut total = 0.0;
    for k in 0..g {
        let col = coefs.column(k);
        let mut loss = 0.0;
        for i in 0..data.n() {
            let f = intercepts[k] + data.x().row(i).dot(&col);
            loss += logistic_loss(data.y()[i] * f);
        }
        total += loss / n + lambda_s * sparsity_penalty(col, alpha);
    }
    total += lambda_d / 4.0 * diversity_penalty(coefs);
    Ok(total)
}

/// Nested importance sets A_1 ⊇ A_2 ⊇ … ⊇ A_G.
#[derive(Debug, Clone)]
pub struct ImportanceSets {
    /// sets[k-1] = A_k = { j : variable j appears in at least k models }.
    pub sets: Vec<Vec<usize>>,
    /// multiplicity[j] = number of models with β_j^g ≠ 0.
    pub multiplicity: Vec<usize>,
}

pub fn importance_sets(fit: &SplitFit) -> ImportanceSets {
    let (p, g) = fit.coefs.dim();
    let mut multiplicity = vec![0usize; p];
    for j in 0..p {
        multiplicity[j] = fit.coefs.row(j).iter().filter(|&&b| b != 0.0).count();
    }
    let sets = (1..=g)
        .map(|k| {
            (0..p)
                .filter(|&j| multiplicity[j] >= k)
                .collect::<Vec<_>>()
        })
        .collect();
    ImportanceSets { sets, multiplicity }
}
