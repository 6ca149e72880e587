//! Block coordinate descent for the split logistic regression objective.
//!
//! Models are updated in a deterministic cyclic order. Within each model
//! block the logistic loss is replaced by its quadratic approximation at the
//! current estimates, and a single coordinate descent pass is applied to the
//! intercept and every coefficient before the fitted probabilities and IRLS
//! weights of that model are refreshed.

use ndarray::{Array1, Array2, ShapeBuilder};

use crate::data::Dataset;
use crate::error::{Result, SplitError};
use crate::model::{
    diversity_penalty, logistic_loss, sigmoid, sparsity_penalty, HyperParams, SplitFit,
};

/// Probabilities are clipped to [P_CLIP, 1 - P_CLIP] before weight computation.
const P_CLIP: f64 = 1e-5;
/// IRLS weights are clamped below by this value.
const W_MIN: f64 = 1e-5;
/// Objective increases beyond this slack trigger the damped-sweep safeguard.
const OBJ_SLACK: f64 = 1e-12;
/// A full verification sweep runs after this many restricted sweeps.
const FULL_SWEEP_PERIOD: usize = 10;

/// Soft(v, t) = sign(v)·max(|v| - t, 0).
pub fn soft_threshold(v: f64, t: f64) -> f64 {
    debug_assert!(t >= 0.0);
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

/// Per-model IRLS state for the block coordinate descent loop.
///
/// `resid` holds the weighted working residual of each model; right after a
/// refresh of model g it equals z - p̃^g, and it is kept in sync as
/// coordinates move within the model's sweep.
pub struct WorkingState {
    pub intercepts: Array1<f64>,
    /// p×G coefficient matrix.
    pub coefs: Array2<f64>,
    probs: Array2<f64>,
    weights: Array2<f64>,
    resid: Array2<f64>,
    eta: Array2<f64>,
    z: Array1<f64>,
}

impl WorkingState {
    /// Current per-model probabilities p̃ (n×G).
    pub fn probs(&self) -> &Array2<f64> {
        &self.probs
    }

    /// Current IRLS weights w̃ (n×G), floored away from zero.
    pub fn weights(&self) -> &Array2<f64> {
        &self.weights
    }

    /// Current weighted working residuals (n×G).
    pub fn resid(&self) -> &Array2<f64> {
        &self.resid
    }

    /// Binary responses z_i = (y_i + 1)/2.
    pub fn z(&self) -> &Array1<f64> {
        &self.z
    }

    pub fn new(data: &Dataset, g: usize, init: Option<(&Array1<f64>, &Array2<f64>)>) -> Self {
        let n = data.n();
        let p = data.p();
        let (intercepts, coefs) = match init {
            Some((b0, b)) => (b0.clone(), b.clone()),
            None => (Array1::zeros(g), Array2::zeros((p, g))),
        };
        let mut state = WorkingState {
            intercepts,
            coefs,
            probs: Array2::zeros((n, g).f()),
            weights: Array2::zeros((n, g).f()),
            resid: Array2::zeros((n, g).f()),
            eta: Array2::zeros((n, g).f()),
            z: data.z(),
        };
        for k in 0..g {
            state.refresh_model(k, data);
        }
        state
    }

    /// Recompute η, p̃^g and w̃^g of model g from its current parameters and
    /// reset the working residual to z - p̃^g.
    pub fn refresh_model(&mut self, g: usize, data: &Dataset) {
        let n = data.n();
        let b0 = self.intercepts[g];
        {
            let mut eta = self.eta.column_mut(g);
            eta.fill(b0);
        }
        for j in 0..data.p() {
            let b = self.coefs[(j, g)];
            if b != 0.0 {
                let xj = data.column(j);
                let xj = xj.as_slice().expect("contiguous column");
                let mut eta = self.eta.column_mut(g);
                let eta = eta.as_slice_mut().expect("contiguous column");
                for i in 0..n {
                    eta[i] += b * xj[i];
                }
            }
        }
        for i in 0..n {
            let p = sigmoid(self.eta[(i, g)]);
            self.probs[(i, g)] = p;
            let pc = p.clamp(P_CLIP, 1.0 - P_CLIP);
            self.weights[(i, g)] = (pc * (1.0 - pc)).max(W_MIN);
            self.resid[(i, g)] = self.z[i] - p;
        }
    }

    /// Mean logistic loss of model g at its last refreshed linear predictor.
    fn model_loss(&self, g: usize, data: &Dataset) -> f64 {
        let n = data.n();
        let mut loss = 0.0;
        for i in 0..n {
            loss += logistic_loss(data.y()[i] * self.eta[(i, g)]);
        }
        loss / n as f64
    }

    /// Full objective value; valid right after every model has been refreshed.
    fn objective(&self, data: &Dataset, hyper: &HyperParams) -> f64 {
        let mut total = 0.0;
        for k in 0..hyper.g {
            total += self.model_loss(k, data)
                + hyper.lambda_s * sparsity_penalty(self.coefs.column(k), hyper.alpha);
        }
        // λ_d/4 × ordered-pair sum = λ_d/2 × unordered-pair sum; see model::objective.
        total + hyper.lambda_d / 4.0 * diversity_penalty(&self.coefs)
    }
}

/// One coordinate descent update of the intercept of model g.
pub fn update_intercept(state: &mut WorkingState, g: usize, data: &Dataset) -> f64 {
    intercept_step(state, g, data, 1.0)
}

/// Intercept step scaled by `damp` (1 = exact surrogate minimizer).
fn intercept_step(state: &mut WorkingState, g: usize, data: &Dataset, damp: f64) -> f64 {
    let n = data.n();
    let mut num = 0.0;
    let mut den = 0.0;
    {
        let r = state.resid.column(g);
        let w = state.weights.column(g);
        let r = r.as_slice().expect("contiguous column");
        let w = w.as_slice().expect("contiguous column");
        for i in 0..n {
            num += r[i];
            den += w[i];
        }
    }
    let delta = damp * num / den;
    state.intercepts[g] += delta;
    if delta != 0.0 {
        let w = state.weights.column(g).to_owned();
        let mut r = state.resid.column_mut(g);
        let r = r.as_slice_mut().expect("contiguous column");
        for i in 0..n {
            r[i] -= delta * w[i];
        }
    }
    state.intercepts[g]
}

/// One coordinate descent update of coefficient j of model g.
///
/// Exactly minimizes the one-dimensional weighted-least-squares surrogate
/// plus its penalty, with the other parameters held at their current values.
pub fn update_coefficient(
    state: &mut WorkingState,
    g: usize,
    j: usize,
    data: &Dataset,
    hyper: &HyperParams,
) -> f64 {
    coefficient_step(state, g, j, data, hyper, 1.0)
}

/// Coefficient step blended at factor `damp` toward the surrogate minimizer.
fn coefficient_step(
    state: &mut WorkingState,
    g: usize,
    j: usize,
    data: &Dataset,
    hyper: &HyperParams,
    damp: f64,
) -> f64 {
    if data.is_constant(j) {
        return 0.0;
    }
    let n = data.n();
    let inv_n = 1.0 / n as f64;
    let cur = state.coefs[(j, g)];

    let xj = data.column(j);
    let xj = xj.as_slice().expect("contiguous column");
    let mut xr = 0.0;
    let mut xw = 0.0;
    {
        let r = state.resid.column(g);
        let w = state.weights.column(g);
        let r = r.as_slice().expect("contiguous column");
        let w = w.as_slice().expect("contiguous column");
        for i in 0..n {
            xr += xj[i] * r[i];
            xw += xj[i] * xj[i] * w[i];
        }
    }
    let xw_n = xw * inv_n;

    // effective L1 weight u_{j,g} = α·λ_s + (λ_d/2)·Σ_{h≠g}|β_j^h|
    let mut cross = 0.0;
    for h in 0..hyper.g {
        if h != g {
            cross += state.coefs[(j, h)].abs();
        }
    }
    let u = hyper.alpha * hyper.lambda_s + hyper.lambda_d / 2.0 * cross;

    let num = xr * inv_n + cur * xw_n;
    let den = xw_n + (1.0 - hyper.alpha) * hyper.lambda_s;
    let mut new = soft_threshold(num, u) / den;
    if damp != 1.0 {
        new = cur + damp * (new - cur);
    }

    if new != cur {
        let delta = new - cur;
        let w = state.weights.column(g).to_owned();
        let w = w.as_slice().expect("contiguous");
        let mut r = state.resid.column_mut(g);
        let r = r.as_slice_mut().expect("contiguous column");
        for i in 0..n {
            r[i] -= delta * w[i] * xj[i];
        }
        state.coefs[(j, g)] = new;
    }
    new
}

fn ensemble_average(intercepts: &Array1<f64>, coefs: &Array2<f64>) -> Array1<f64> {
    let (p, g) = coefs.dim();
    let inv_g = 1.0 / g as f64;
    let mut avg = Array1::zeros(p + 1);
    avg[0] = intercepts.sum() * inv_g;
    for j in 0..p {
        avg[j + 1] = coefs.row(j).sum() * inv_g;
    }
    avg
}

/// Fit the split logistic regression ensemble.
///
/// Cyclic order: model 1 (intercept then j = 1..p), model 2, ..., model G,
/// then a convergence check on the ensemble-averaged coefficients. After the
/// first sweep the coordinate cycle is restricted to the active set, with a
/// full verification sweep every ten restricted sweeps and before declaring
/// convergence.
pub fn fit(data: &Dataset, hyper: &HyperParams, init: Option<&SplitFit>) -> Result<SplitFit> {
    hyper.validate()?;
    if !data.has_both_classes() {
        return Err(SplitError::SingleClass);
    }
    let p = data.p();
    if let Some(f) = init {
        if f.p() != p || f.g() != hyper.g {
            return Err(SplitError::DimensionMismatch(format!(
                "warm start has p={}, g={}; expected p={}, g={}",
                f.p(),
                f.g(),
                p,
                hyper.g
            )));
        }
    }

    let mut state = WorkingState::new(data, hyper.g, init.map(|f| (&f.intercepts, &f.coefs)));
    let all_coords: Vec<usize> = (0..p).filter(|&j| !data.is_constant(j)).collect();

    let mut objective = state.objective(data, hyper);
    let mut active: Vec<usize> = all_coords
        .iter()
        .copied()
        .filter(|&j| state.coefs.row(j).iter().any(|&b| b != 0.0))
        .collect();
    let mut restricted_count = 0usize;
    let mut force_full = false;
    let mut converged = false;
    let mut sweeps_used = 0usize;

    for sweep in 1..=hyper.max_sweeps {
        sweeps_used = sweep;
        let full = sweep == 1 || force_full || restricted_count >= FULL_SWEEP_PERIOD;
        force_full = false;
        let coords: &[usize] = if full { &all_coords } else { &active };

        let prev_intercepts = state.intercepts.clone();
        let prev_coefs = state.coefs.clone();
        let prev_avg = ensemble_average(&prev_intercepts, &prev_coefs);

        for g in 0..hyper.g {
            update_intercept(&mut state, g, data);
            for &j in coords {
                update_coefficient(&mut state, g, j, data, hyper);
            }
            state.refresh_model(g, data);
        }

        let mut new_objective = state.objective(data, hyper);
        if new_objective > objective + OBJ_SLACK {
            // IRLS surrogates can overshoot: roll back and retry the sweep
            // with each coordinate step blended toward the current value
            let mut t = 0.5;
            let mut accepted = false;
            for _ in 0..5 {
                state.intercepts.assign(&prev_intercepts);
                state.coefs.assign(&prev_coefs);
                for g in 0..hyper.g {
                    state.refresh_model(g, data);
                }
                for g in 0..hyper.g {
                    intercept_step(&mut state, g, data, t);
                    for &j in coords {
                        coefficient_step(&mut state, g, j, data, hyper, t);
                    }
                    state.refresh_model(g, data);
                }
                let obj_t = state.objective(data, hyper);
                if obj_t <= objective + OBJ_SLACK {
                    new_objective = obj_t;
                    accepted = true;
                    break;
                }
                t *= 0.5;
            }
            if !accepted {
                state.intercepts.assign(&prev_intercepts);
                state.coefs.assign(&prev_coefs);
                for g in 0..hyper.g {
                    state.refresh_model(g, data);
                }
                converged = false;
                break;
            }
        }
        objective = new_objective;

        let new_avg = ensemble_average(&state.intercepts, &state.coefs);
        let max_sq_change = prev_avg
            .iter()
            .zip(new_avg.iter())
            .map(|(a, b)| (a - b) * (a - b))
            .fold(0.0f64, f64::max);

        if full {
            active = all_coords
                .iter()
                .copied()
                .filter(|&j| state.coefs.row(j).iter().any(|&b| b != 0.0))
                .collect();
            restricted_count = 0;
            if max_sq_change < hyper.tol {
                converged = true;
                break;
            }
        } else {
            restricted_count += 1;
            if max_sq_change < hyper.tol {
                // verify with a mandatory full sweep before declaring convergence
                force_full = true;
            }
        }
    }

    let (b0_orig, b_orig) = SplitFit::destandardize(
        &state.intercepts,
        &state.coefs,
        data.col_means(),
        data.col_scales(),
    );
    Ok(SplitFit {
        intercepts: state.intercepts,
        coefs: state.coefs,
        intercepts_original: b0_orig,
        coefs_original: b_orig,
        hyper: hyper.clone(),
        converged,
        sweeps_used,
        objective,
        col_means: data.col_means().clone(),
        col_scales: data.col_scales().clone(),
        names: data.names().to_vec(),
    })
}

/// Warm-started fits along a strictly descending λ_s grid.
pub fn solution_path(
    data: &Dataset,
    alpha: f64,
    lambda_d: f64,
    g: usize,
    lambda_s_grid: &[f64],
) -> Result<Vec<SplitFit>> {
    if lambda_s_grid.windows(2).any(|w| w[1] >= w[0]) {
        return Err(SplitError::InvalidHyper(
            "lambda_s grid must be strictly descending".into(),
        ));
    }
    let mut fits = Vec::with_capacity(lambda_s_grid.len());
    let mut prev: Option<SplitFit> = None;
    for &lambda_s in lambda_s_grid {
        let hyper = HyperParams {
            alpha,
            lambda_s,
            lambda_d,
            g,
            ..Default::default()
        };
        let fit = fit(data, &hyper, prev.as_ref())?;
        prev = Some(fit.clone());
        fits.push(fit);
    }
    Ok(fits)
}

/// Largest KKT residual over the intercepts and all (j, g) coefficients.
///
/// For β_j^g ≠ 0 the subgradient condition is
/// |(1/n)·grad_j + (1-α)λ_s·β_j^g + u_{j,g}·sign(β_j^g)| with
/// grad_j = -⟨x_j, z - p^g⟩; for β_j^g = 0 the violation is
/// max(0, |(1/n)⟨x_j, z - p^g⟩| - u_{j,g}).
pub fn max_kkt_violation(fit: &SplitFit, data: &Dataset) -> f64 {
    let n = data.n();
    let inv_n = 1.0 / n as f64;
    let z = data.z();
    let g_count = fit.g();
    let mut worst = 0.0f64;
    for g in 0..g_count {
        let mut gap = Array1::zeros(n);
        for i in 0..n {
            let f = fit.model_linear(g, data.x().row(i));
            gap[i] = z[i] - sigmoid(f);
        }
        worst = worst.max((gap.sum() * inv_n).abs());
        for j in 0..data.p() {
            if data.is_constant(j) {
                continue;
            }
            let score = data.column(j).dot(&gap) * inv_n;
            let mut cross = 0.0;
            for h in 0..g_count {
                if h != g {
                    cross += fit.coefs[(j, h)].abs();
                }
            }
            let u = fit.hyper.alpha * fit.hyper.lambda_s + fit.hyper.lambda_d / 2.0 * cross;
            let b = fit.coefs[(j, g)];
            let viol = if b != 0.0 {
                (-score + (1.0 - fit.hyper.alpha) * fit.hyper.lambda_s * b + u * b.signum()).abs()
            } else {
                (score.abs() - u).max(0.0)
            };
            worst = worst.max(viol);
        }
    }
    worst
}
