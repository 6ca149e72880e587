//! Standardized design matrices with ±1 labels.

use ndarray::{Array1, Array2, ArrayView1, ShapeBuilder};

use crate::error::{Result, SplitError};

/// A standardized dataset: every non-constant column of `x` has mean 0 and
/// mean-of-squares 1 (1/n convention). Constant columns are stored as all
/// zeros with a zero entry in `col_scales`.
#[derive(Debug, Clone)]
pub struct Dataset {
    x: Array2<f64>,
    y: Array1<f64>,
    col_means: Array1<f64>,
    col_scales: Array1<f64>,
    names: Vec<String>,
}

impl Dataset {
    /// Standardize a raw design matrix. Labels must already be ±1.
    pub fn standardize(x_raw: Array2<f64>, y: Array1<f64>) -> Result<Self> {
        let names = (1..=x_raw.ncols()).map(|j| format!("x{j}")).collect();
        Self::standardize_named(x_raw, y, names)
    }

    pub fn standardize_named(
        x_raw: Array2<f64>,
        y: Array1<f64>,
        names: Vec<String>,
    ) -> Result<Self> {
        let (n, p) = x_raw.dim();
        if n == 0 || p == 0 {
            return Err(SplitError::Data("empty design matrix".into()));
        }
        if y.len() != n {
            return Err(SplitError::DimensionMismatch(format!(
                "{} rows but {} labels",
                n,
                y.len()
            )));
        }
        if names.len() != p {
            return Err(SplitError::DimensionMismatch(format!(
                "{} columns but {} names",
                p,
                names.len()
            )));
        }
        for (i, &yi) in y.iter().enumerate() {
            if yi != -1.0 && yi != 1.0 {
                return Err(SplitError::Data(format!(
                    "label at row {} is {}, expected -1 or +1",
                    i + 1,
                    yi
                )));
            }
        }
        if x_raw.iter().any(|v| !v.is_finite()) {
            return Err(SplitError::NonFinite("design matrix entry".into()));
        }

        // Column-major storage: the solver walks columns.
        let mut x = Array2::zeros((n, p).f());
        let mut col_means = Array1::zeros(p);
        let mut col_scales = Array1::zeros(p);
        let inv_n = 1.0 / n as f64;
        for j in 0..p {
            let col = x_raw.column(j);
            let mean = col.sum() * inv_n;
            let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() * inv_n;
            let scale = var.sqrt();
            col_means[j] = mean;
            if scale > 0.0 {
                col_scales[j] = scale;
                let mut out = x.column_mut(j);
                for (o, v) in out.iter_mut().zip(col.iter()) {
                    *o = (v - mean) / scale;
                }
            }
            // constant column: left all-zero, col_scales[j] stays 0
        }
        Ok(Dataset {
            x,
            y,
            col_means,
            col_scales,
            names,
        })
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    /// Standardized design matrix (column-major).
    pub fn x(&self) -> &Array2<f64> {
        &self.x
    }

    pub fn y(&self) -> &Array1<f64> {
        &self.y
    }

    pub fn column(&self, j: usize) -> ArrayView1<'_, f64> {
        self.x.column(j)
    }

    pub fn col_means(&self) -> &Array1<f64> {
        &self.col_means
    }

    /// Root-mean-square deviations of the original columns; 0 flags a constant column.
    pub fn col_scales(&self) -> &Array1<f64> {
        &self.col_scales
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn is_constant(&self, j: usize) -> bool {
        self.col_scales[j] == 0.0
    }

    /// 0/1 recoding z_i = (y_i + 1) / 2.
    pub fn z(&self) -> Array1<f64> {
        self.y.mapv(|v| (v + 1.0) / 2.0)
    }

    /// Fraction of +1 labels.
    pub fn positive_fraction(&self) -> f64 {
        self.y.iter().filter(|&&v| v == 1.0).count() as f64 / self.n() as f64
    }

    pub fn has_both_classes(&self) -> bool {
        let q = self.positive_fraction();
        q > 0.0 && q < 1.0
    }

    /// Reconstruct the original-scale design matrix.
    pub fn raw_x(&self) -> Array2<f64> {
        let (n, p) = self.x.dim();
        let mut raw = Array2::zeros((n, p));
        for j in 0..p {
            let m = self.col_means[j];
            let s = self.col_scales[j];
            for i in 0..n {
                raw[(i, j)] = if s > 0.0 { self.x[(i, j)] * s + m } else { m };
            }
        }
        raw
    }

    /// Extract the given rows (original scale) and re-standardize them.
    pub fn subset(&self, rows: &[usize]) -> Result<Dataset> {
        let p = self.p();
        let mut x_raw = Array2::zeros((rows.len(), p));
        let mut y = Array1::zeros(rows.len());
        for (out_i, &i) in rows.iter().enumerate() {
            y[out_i] = self.y[i];
            for j in 0..p {
                let s = self.col_scales[j];
                x_raw[(out_i, j)] = if s > 0.0 {
                    self.x[(i, j)] * s + self.col_means[j]
                } else {
                    self.col_means[j]
                };
            }
        }
        Dataset::standardize_named(x_raw, y, self.names.clone())
    }

    /// Original-scale rows for the given indices (used to evaluate held-out folds).
    pub fn raw_rows(&self, rows: &[usize]) -> (Array2<f64>, Array1<f64>) {
        let p = self.p();
        let mut x_raw = Array2::zeros((rows.len(), p));
        let mut y = Array1::zeros(rows.len());
        for (out_i, &i) in rows.iter().enumerate() {
            y[out_i] = self.y[i];
            for j in 0..p {
                let s = self.col_scales[j];
                x_raw[(out_i, j)] = if s > 0.0 {
                    self.x[(i, j)] * s + self.col_means[j]
                } else {
                    self.col_means[j]
                };
            }
        }
        (x_raw, y)
    }
}
