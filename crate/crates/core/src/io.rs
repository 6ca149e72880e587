//! Delimited-text ingestion and the versioned model-file format.

use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Result, SplitError};
use crate::model::{HyperParams, SplitFit};

/// Current model-file format version.
pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Options for [`ingest`].
#[derive(Debug, Clone)]
pub struct IngestOptions {
    pub label_column: String,
    /// When set, labels equal to this string map to +1 and everything else
    /// to −1. When unset, labels must be numeric 0/1 or ±1.
    pub positive_label: Option<String>,
    pub delimiter: u8,
}

impl Default for IngestOptions {
    fn default() -> Self {
        IngestOptions {
            label_column: "y".into(),
            positive_label: None,
            delimiter: b',',
        }
    }
}

/// Parsed and standardized dataset plus ingestion warnings (constant
/// columns).
#[derive(Debug)]
pub struct Ingested {
    pub dataset: Dataset,
    pub warnings: Vec<String>,
}

/// Read a delimited text file with a header row, map labels to ±1, and
/// standardize the feature columns. Missing or non-numeric cells are hard
/// errors naming the row and column; no imputation.
pub fn ingest(path: &Path, opts: &IngestOptions) -> Result<Ingested> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(opts.delimiter)
        .trim(csv::Trim::All)
        .flexible(false)
        .from_path(path)
        .map_err(|e| SplitError::Data(format!("cannot read {}: {e}", path.display())))?;
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| SplitError::Data(format!("bad header row: {e}")))?
        .iter()
        .map(|h| h.to_string())
        .collect();
    let label_idx = headers
        .iter()
        .position(|h| h == &opts.label_column)
        .ok_or_else(|| {
            SplitError::Data(format!(
                "label column '{}' not found; header has: {}",
                opts.label_column,
                headers.join(", ")
            ))
        })?;
    let feature_names: Vec<String> = headers
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != label_idx)
        .map(|(_, h)| h.clone())
        .collect();

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut labels: Vec<f64> = Vec::new();
    for (r, record) in reader.records().enumerate() {
        let record =
            record.map_err(|e| SplitError::Data(format!("row {}: {e}", r + 2)))?;
        if record.len() != headers.len() {
            return Err(SplitError::Data(format!(
                "row {}: expected {} fields, found {}",
                r + 2,
                headers.len(),
                record.len()
            )));
        }
        let mut row = Vec::with_capacity(headers.len() - 1);
        for (c, cell) in record.iter().enumerate() {
            if c == label_idx {
                labels.push(parse_label(cell, opts, r + 2)?);
                continue;
            }
            if cell.is_empty() {
                return Err(SplitError::Data(format!(
                    "missing value at row {}, column '{}'",
                    r + 2,
                    headers[c]
                )));
            }
            let v: f64 = cell.parse().map_err(|_| {
                SplitError::Data(format!(
                    "non-numeric value '{}' at row {}, column '{}'",
                    cell,
                    r + 2,
                    headers[c]
                ))
            })?;
            row.push(v);
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(SplitError::Data("no data rows".into()));
    }
    let n = rows.len();
    let p = feature_names.len();
    let mut x = Array2::zeros((n, p));
    for (i, row) in rows.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            x[(i, j)] = v;
        }
    }
    let y = Array1::from_vec(labels);
    let dataset = Dataset::standardize_named(x, y, feature_names)?;
    let warnings: Vec<String> = (0..dataset.p())
        .filter(|&j| dataset.is_constant(j))
        .map(|j| {
            format!(
                "column '{}' is constant; its coefficients are forced to zero",
                dataset.names()[j]
            )
        })
        .collect();
    Ok(Ingested { dataset, warnings })
}

fn parse_label(cell: &str, opts: &IngestOptions, row: usize) -> Result<f64> {
    if let Some(pos) = &opts.positive_label {
        return Ok(if cell == pos { 1.0 } else { -1.0 });
    }
    match cell.parse::<f64>() {
        Ok(v) if v == 0.0 || v == -1.0 => Ok(-1.0),
        Ok(v) if v == 1.0 => Ok(1.0),
        _ => Err(SplitError::Data(format!(
            "unparseable label '{cell}' at row {row}: expected 0/1 or ±1 \
             (or pass an explicit positive label)"
        ))),
    }
}

/// One nonzero coefficient on the original predictor scale.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoefTriplet {
    pub model: usize,
    pub variable: String,
    pub value: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitDiagnostics {
    pub converged: bool,
    pub sweeps: usize,
    pub objective: f64,
}

/// Serializable model artifact: hyperparameters, original-scale sparse
/// coefficients, standardization metadata and fit diagnostics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelFile {
    pub version: u32,
    pub alpha: f64,
    pub lambda_s: f64,
    pub lambda_d: f64,
    pub g: usize,
    /// Intercepts on the original predictor scale, one per model.
    pub intercepts: Vec<f64>,
    pub coefficients: Vec<CoefTriplet>,
    pub variables: Vec<String>,
    pub col_means: Vec<f64>,
    pub col_scales: Vec<f64>,
    pub diagnostics: FitDiagnostics,
}

impl ModelFile {
    pub fn from_fit(fit: &SplitFit) -> ModelFile {
        let (p, g) = fit.coefs_original.dim();
        let mut coefficients = Vec::new();
        for k in 0..g {
            for j in 0..p {
                let v = fit.coefs_original[(j, k)];
                if v != 0.0 {
                    coefficients.push(CoefTriplet {
                        model: k + 1,
                        variable: fit.names[j].clone(),
                        value: v,
                    });
                }
            }
        }
        ModelFile {
            version: MODEL_FORMAT_VERSION,
            alpha: fit.hyper.alpha,
            lambda_s: fit.hyper.lambda_s,
            lambda_d: fit.hyper.lambda_d,
            g,
            intercepts: fit.intercepts_original.to_vec(),
            coefficients,
            variables: fit.names.clone(),
            col_means: fit.col_means.to_vec(),
            col_scales: fit.col_scales.to_vec(),
            diagnostics: FitDiagnostics {
                converged: fit.converged,
                sweeps: fit.sweeps_used,
                objective: fit.objective,
            },
        }
    }

    /// Rebuild a [`SplitFit`] (both scales) from the stored original-scale
    /// parameters and standardization metadata.
    pub fn to_fit(&self) -> Result<SplitFit> {
        if self.version != MODEL_FORMAT_VERSION {
            return Err(SplitError::Data(format!(
                "unsupported model file version {} (this build reads version {})",
                self.version, MODEL_FORMAT_VERSION
            )));
        }
        let p = self.variables.len();
        let g = self.g;
        if self.intercepts.len() != g
            || self.col_means.len() != p
            || self.col_scales.len() != p
        {
            return Err(SplitError::Data("inconsistent model file".into()));
        }
        let mut coefs_original = Array2::zeros((p, g));
        for t in &self.coefficients {
            let j = self
                .variables
                .iter()
                .position(|v| v == &t.variable)
                .ok_or_else(|| {
                    SplitError::Data(format!("unknown variable '{}' in model file", t.variable))
                })?;
            if t.model == 0 || t.model > g {
                return Err(SplitError::Data(format!(
                    "coefficient references model {} of {}",
                    t.model, g
                )));
            }
            coefs_original[(j, t.model - 1)] = t.value;
        }
        let intercepts_original = Array1::from_vec(self.intercepts.clone());
        let col_means = Array1::from_vec(self.col_means.clone());
        let col_scales = Array1::from_vec(self.col_scales.clone());
        // restandardize: β_std = β_orig·s_j, β0_std = β0_orig + Σ_j β_orig·m_j
        let mut coefs = Array2::zeros((p, g));
        let mut intercepts = intercepts_original.clone();
        for k in 0..g {
            for j in 0..p {
                let v = coefs_original[(j, k)];
                if v != 0.0 {
                    coefs[(j, k)] = v * col_scales[j];
                    intercepts[k] += v * col_means[j];
                }
            }
        }
        Ok(SplitFit {
            intercepts,
            coefs,
            intercepts_original,
            coefs_original,
            hyper: HyperParams {
                alpha: self.alpha,
                lambda_s: self.lambda_s,
                lambda_d: self.lambda_d,
                g,
                ..Default::default()
            },
            converged: self.diagnostics.converged,
            sweeps_used: self.diagnostics.sweeps,
            objective: self.diagnostics.objective,
            col_means,
            col_scales,
            names: self.variables.clone(),
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)
            .map_err(|e| SplitError::Data(format!("cannot serialize model: {e}")))?;
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<ModelFile> {
        let text = std::fs::read_to_string(path)?;
        let file: ModelFile = serde_json::from_str(&text)
            .map_err(|e| SplitError::Data(format!("cannot parse model file: {e}")))?;
        if file.version != MODEL_FORMAT_VERSION {
            return Err(SplitError::Data(format!(
                "unsupported model file version {} (this build reads version {})",
                file.version, MODEL_FORMAT_VERSION
            )));
        }
        Ok(file)
    }
}
