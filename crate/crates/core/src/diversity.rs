//! Ensemble diversity measures.
//!
//! All accuracy-based measures operate on an m×G boolean correctness matrix:
//! entry (i, g) is true when model g classifies input i correctly, using that
//! model's own probability thresholded at 1/2. ℓ(x) denotes the number of
//! correct models at input x.

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{Result, SplitError};

/// m×G matrix: rows are evaluation points, columns are models; true means
/// the model classified the point correctly.
pub type CorrectnessMatrix = Array2<bool>;

fn validate(correct: &CorrectnessMatrix) -> Result<(usize, usize)> {
    let (m, g) = correct.dim();
    if m == 0 || g == 0 {
        return Err(SplitError::DimensionMismatch(
            "correctness matrix must be non-empty".into(),
        ));
    }
    Ok((m, g))
}

fn correct_counts(correct: &CorrectnessMatrix) -> Array1<usize> {
    let (m, _) = correct.dim();
    Array1::from_shape_fn(m, |i| correct.row(i).iter().filter(|&&c| c).count())
}

/// Entropy measure: mean over points of min(ℓ, G−ℓ)/(G − ⌈G/2⌉). Zero under
/// unanimity, one when the correct/incorrect split is as even as possible.
pub fn entropy_measure(correct: &CorrectnessMatrix) -> Result<f64> {
    let (m, g) = validate(correct)?;
    if g < 2 {
        return Err(SplitError::InvalidHyper(
            "entropy measure needs at least two models".into(),
        ));
    }
    let denom = (g - g.div_ceil(2)) as f64;
    let total: f64 = correct_counts(correct)
        .iter()
        .map(|&l| l.min(g - l) as f64 / denom)
        .sum();
    Ok(total / m as f64)
}

/// Disagreement and double-fault rates averaged over ordered model pairs and
/// evaluation points: (DIS, DF). A pair disagrees when exactly one of the two
/// is correct; a double fault is both wrong.
pub fn pairwise_measures(correct: &CorrectnessMatrix) -> Result<(f64, f64)> {
    let (m, g) = validate(correct)?;
    if g < 2 {
        return Err(SplitError::InvalidHyper(
            "pairwise measures need at least two models".into(),
        ));
    }
    // per point: #disagreeing ordered pairs = 2·ℓ(G−ℓ); #double-fault ordered
    // pairs = (G−ℓ)(G−ℓ−1)
    let mut dis = 0.0;
    let mut df = 0.0;
    for &l in correct_counts(correct).iter() {
        let wrong = g - l;
        dis += (2 * l * wrong) as f64;
        df += (wrong * wrong.saturating_sub(1)) as f64;
    }
    let norm = (m * g * (g - 1)) as f64;
    Ok((dis / norm, df / norm))
}

/// Kohavi–Wolpert variance: mean over points of ℓ(G−ℓ)/G².
pub fn kw_variance(correct: &CorrectnessMatrix) -> Result<f64> {
    let (m, g) = validate(correct)?;
    let total: f64 = correct_counts(correct)
        .iter()
        .map(|&l| (l * (g - l)) as f64 / (g * g) as f64)
        .sum();
    Ok(total / m as f64)
}

/// Generalized diversity: 1 − p(2)/p(1) with p(1) = Σ_g (g/G)·P(ℓ=g) and
/// p(2) = Σ_g g(g−1)/(G(G−1))·P(ℓ=g) over the empirical distribution of the
/// correct-count ℓ. Zero under unanimous correctness; one when no two models
/// are ever correct together. Undefined when no model is ever correct.
pub fn generalized_diversity(correct: &CorrectnessMatrix) -> Result<f64> {
    let (m, g) = validate(correct)?;
    if g < 2 {
        return Err(SplitError::InvalidHyper(
            "generalized diversity needs at least two models".into(),
        ));
    }
    let gf = g as f64;
    let mut p1 = 0.0;
    let mut p2 = 0.0;
    for &l in correct_counts(correct).iter() {
        let lf = l as f64;
        p1 += lf / gf;
        p2 += lf * (lf - 1.0) / (gf * (gf - 1.0));
    }
    p1 /= m as f64;
    p2 /= m as f64;
    if p1 == 0.0 {
        return Err(SplitError::Numerical(
            "generalized diversity undefined: no model is ever correct".into(),
        ));
    }
    Ok(1.0 - p2 / p1)
}

/// Support overlap of an ensemble's coefficients (p×G): the mean, over
/// variables selected by at least one model, of the fraction of models
/// selecting the variable. Equals 1/G when no variable is shared, 1 when all
/// models have identical supports.
pub fn overlap(coefs: &Array2<f64>) -> Result<f64> {
    let (p, g) = coefs.dim();
    if p == 0 || g == 0 {
        return Err(SplitError::DimensionMismatch(
            "coefficient matrix must be non-empty".into(),
        ));
    }
    let mut num = 0.0;
    let mut selected = 0usize;
    for j in 0..p {
        let o = coefs.row(j).iter().filter(|&&b| b != 0.0).count() as f64 / g as f64;
        if o != 0.0 {
            num += o;
            selected += 1;
        }
    }
    if selected == 0 {
        return Err(SplitError::Numerical(
            "overlap undefined: all models are null".into(),
        ));
    }
    Ok(num / selected as f64)
}

/// Diversity and accuracy summaries for one fitted ensemble on one
/// evaluation set.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiversityReport {
    pub em: f64,
    pub dis: f64,
    pub df: f64,
    pub kw: f64,
    /// None when no model is ever correct on the evaluation set.
    pub gd: Option<f64>,
    /// None when all models are null.
    pub ov: Option<f64>,
    pub mr_ensemble: f64,
    pub mr_individual_mean: f64,
    pub per_model_mr: Vec<f64>,
}

impl DiversityReport {
    /// Build the report from per-model ±1 predictions (G×m), ensemble ±1
    /// predictions, true ±1 labels and the fitted p×G coefficient matrix.
    pub fn compute(
        model_preds: &Array2<f64>,
        ensemble_pred: &Array1<f64>,
        y: &Array1<f64>,
        coefs: &Array2<f64>,
    ) -> Result<DiversityReport> {
        let (g, m) = model_preds.dim();
        if g == 0 || m == 0 {
            return Err(SplitError::DimensionMismatch(
                "prediction matrix must be non-empty".into(),
            ));
        }
        if ensemble_pred.len() != m || y.len() != m {
            return Err(SplitError::DimensionMismatch(
                "prediction/label lengths disagree".into(),
            ));
        }
        if model_preds.iter().any(|&v| v != 1.0 && v != -1.0)
            || y.iter().any(|&v| v != 1.0 && v != -1.0)
        {
            return Err(SplitError::Data("predictions and labels must be ±1".into()));
        }
        let correct =
            CorrectnessMatrix::from_shape_fn((m, g), |(i, a)| model_preds[(a, i)] == y[i]);
        let em = entropy_measure(&correct)?;
        let (dis, df) = pairwise_measures(&correct)?;
        let kw = kw_variance(&correct)?;
        let gd = generalized_diversity(&correct).ok();
        let ov = overlap(coefs).ok();
        let mr_ensemble = ensemble_pred
            .iter()
            .zip(y.iter())
            .filter(|(p, t)| p != t)
            .count() as f64
            / m as f64;
        let per_model_mr: Vec<f64> = (0..g)
            .map(|a| correct.column(a).iter().filter(|&&c| !c).count() as f64 / m as f64)
            .collect();
        let mr_individual_mean = per_model_mr.iter().sum::<f64>() / g as f64;
        Ok(DiversityReport {
            em,
            dis,
            df,
            kw,
            gd,
            ov,
            mr_ensemble,
            mr_individual_mean,
            per_model_mr,
        })
    }

    /// Flat key–value view used by the CLI report writer.
    pub fn flat(&self) -> Vec<(String, Option<f64>)> {
        let mut out = vec![
            ("EM".to_string(), Some(self.em)),
            ("DIS".to_string(), Some(self.dis)),
            ("DF".to_string(), Some(self.df)),
            ("KW".to_string(), Some(self.kw)),
            ("GD".to_string(), self.gd),
            ("OV".to_string(), self.ov),
            ("MR".to_string(), Some(self.mr_ensemble)),
            ("MRbar".to_string(), Some(self.mr_individual_mean)),
        ];
        for (i, mr) in self.per_model_mr.iter().enumerate() {
            out.push((format!("MR{}", i + 1), Some(*mr)));
        }
        out
    }
}
