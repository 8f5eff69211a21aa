//! Datasets and active sets.

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::family::{nll_unchecked, Family, LossMetric};

/// A design matrix, response vector and family, validated on construction.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub x: Array2<f64>,
    pub y: Array1<f64>,
    pub family: Family,
    pub column_names: Option<Vec<String>>,
    /// True when every column has sample mean 0 and standard deviation 1
    /// (population convention, tolerance 1e-10). Informational; the solver
    /// standardizes internally either way.
    pub standardized: bool,
}

impl Dataset {
    pub fn new(x: Array2<f64>, y: Array1<f64>, family: Family) -> Result<Self> {
        let n = x.nrows();
        let p = x.ncols();
        if n < 2 {
            return Err(invalid(format!("dataset needs n >= 2 rows, got {n}")));
        }
        if p < 1 {
            return Err(invalid("dataset needs p >= 1 columns"));
        }
        if y.len() != n {
            return Err(invalid(format!(
                "response length {} does not match {} rows",
                y.len(),
                n
            )));
        }
        if x.iter().any(|v| !v.is_finite()) || y.iter().any(|v| !v.is_finite()) {
            return Err(invalid("dataset contains non-finite values"));
        }
        if family == Family::Binomial && y.iter().any(|&v| v != 0.0 && v != 1.0) {
            return Err(invalid("binomial response must lie in {0, 1}"));
        }
        let standardized = is_standardized(&x);
        Ok(Dataset {
            x,
            y,
            family,
            column_names: None,
            standardized,
        })
    }

    pub fn with_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.p() {
            return Err(invalid(format!(
                "{} column names for {} columns",
                names.len(),
                self.p()
            )));
        }
        self.column_names = Some(names);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    /// Copy of the rows at `idx`, revalidating the standardized flag.
    pub fn select_rows(&self, idx: &[usize]) -> Dataset {
        let n = idx.len();
        let p = self.p();
        let mut x = Array2::zeros((n, p));
        let mut y = Array1::zeros(n);
        for (r, &i) in idx.iter().enumerate() {
            x.row_mut(r).assign(&self.x.row(i));
            y[r] = self.y[i];
        }
        let standardized = is_standardized(&x);
        Dataset {
            x,
            y,
            family: self.family,
            column_names: self.column_names.clone(),
            standardized,
        }
    }

    /// Linear predictor X beta (+ intercept).
    pub fn linear_predictor(&self, beta: &[f64], intercept: f64) -> Array1<f64> {
        let b = Array1::from_vec(beta.to_vec());
        let mut theta = self.x.dot(&b);
        if intercept != 0.0 {
            theta.mapv_inplace(|t| t + intercept);
        }
        theta
    }
}

fn is_standardized(x: &Array2<f64>) -> bool {
    let n = x.nrows() as f64;
    for col in x.columns() {
        let mean = col.sum() / n;
        if mean.abs() > 1e-10 {
            return false;
        }
        let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        if (var.sqrt() - 1.0).abs() > 1e-10 {
            return false;
        }
    }
    true
}

/// Strictly increasing column indices of the nonzero coefficients of a model.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ActiveSet {
    indices: Vec<usize>,
}

impl ActiveSet {
    pub fn new(indices: Vec<usize>) -> Result<Self> {
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid("active set indices must be strictly increasing"));
        }
        Ok(ActiveSet { indices })
    }

    pub fn empty() -> Self {
        ActiveSet { indices: Vec::new() }
    }

    /// Indices of the nonzero entries of a dense coefficient vector.
    pub fn from_dense(beta: &[f64]) -> Self {
        ActiveSet {
            indices: beta
                .iter()
                .enumerate()
                .filter(|(_, &v)| v != 0.0)
                .map(|(j, _)| j)
                .collect(),
        }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn size(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn contains(&self, j: usize) -> bool {
        self.indices.binary_search(&j).is_ok()
    }
}

/// Out-of-sample loss of a coefficient vector on `test`.
///
/// `Pe` is the mean squared error of the linear predictor, `Ce` the
/// misclassification rate at the 0.5 threshold (only for binomial data) and
/// `Nll` the mean negative log-likelihood.
pub fn prediction_loss(
    family: Family,
    beta: &[f64],
    intercept: f64,
    test: &Dataset,
    metric: LossMetric,
) -> Result<f64> {
    if beta.len() != test.p() {
        return Err(invalid(format!(
            "coefficient length {} does not match {} columns",
            beta.len(),
            test.p()
        )));
    }
    if metric == LossMetric::Ce && family != Family::Binomial {
        return Err(invalid("classification error requires a binomial family"));
    }
    if family != test.family {
        return Err(invalid("family does not match the test dataset"));
    }
    let theta = test.linear_predictor(beta, intercept);
    let n = test.n() as f64;
    Ok(match metric {
        LossMetric::Pe => theta
            .iter()
            .zip(test.y.iter())
            .map(|(t, y)| (y - t) * (y - t))
            .sum::<f64>()
            / n,
        LossMetric::Ce => theta
            .iter()
            .zip(test.y.iter())
            .map(|(&t, &y)| {
                let label = if family.b_dot(t) > 0.5 { 1.0 } else { 0.0 };
                if label == y {
                    0.0
                } else {
                    1.0
                }
            })
            .sum::<f64>()
            / n,
        LossMetric::Nll => nll_unchecked(family, theta.as_slice().unwrap(), test.y.as_slice().unwrap()),
    })
}
