//! Exponential families with canonical link, and the losses every selector
//! shares.
//!
//! A family is described by its cumulant `b`: the log-likelihood of an
//! observation is `y*theta - b(theta)` up to terms that do not involve the
//! linear predictor `theta = x'beta`. The Gaussian dispersion is treated as
//! known and dropped, so the Gaussian loss is proportional to the residual
//! sum of squares and every model comparison is unaffected.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Gaussian,
    Binomial,
}

impl Family {
    /// Cumulant b(theta).
    pub fn b(self, theta: f64) -> f64 {
        match self {
            Family::Gaussian => 0.5 * theta * theta,
            // log(1 + e^theta), computed stably for large |theta|.
            Family::Binomial => {
                if theta > 0.0 {
                    theta + (-theta).exp().ln_1p()
                } else {
                    theta.exp().ln_1p()
                }
            }
        }
    }

    /// Mean function b'(theta).
    pub fn b_dot(self, theta: f64) -> f64 {
        match self {
            Family::Gaussian => theta,
            Family::Binomial => {
                if theta >= 0.0 {
                    1.0 / (1.0 + (-theta).exp())
                } else {
                    let e = theta.exp();
                    e / (1.0 + e)
                }
            }
        }
    }

    /// Variance function b''(theta); strictly positive for finite theta.
    pub fn b_ddot(self, theta: f64) -> f64 {
        match self {
            Family::Gaussian => 1.0,
            Family::Binomial => {
                let p = self.b_dot(theta);
                p * (1.0 - p)
            }
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Family::Gaussian => "gaussian",
            Family::Binomial => "binomial",
        }
    }
}

/// Mean negative log-likelihood `(1/m) sum_i [-y_i theta_i + b(theta_i)]`.
pub fn neg_log_lik(family: Family, theta: &[f64], y: &[f64]) -> Result<f64> {
    if theta.len() != y.len() {
        return Err(invalid(format!(
            "neg_log_lik: theta has length {} but y has length {}",
            theta.len(),
            y.len()
        )));
    }
    if theta.is_empty() {
        return Err(invalid("neg_log_lik: empty input"));
    }
    if theta.iter().chain(y.iter()).any(|v| !v.is_finite()) {
        return Err(invalid("neg_log_lik: non-finite input"));
    }
    Ok(nll_unchecked(family, theta, y))
}

/// Same as [`neg_log_lik`] without argument validation; used on hot paths
/// where the inputs are produced internally.
pub(crate) fn nll_unchecked(family: Family, theta: &[f64], y: &[f64]) -> f64 {
    let s: f64 = theta
        .iter()
        .zip(y)
        .map(|(&t, &yi)| -yi * t + family.b(t))
        .sum();
    s / theta.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossMetric {
    /// Mean squared prediction error `(1/n) sum (y_i - x_i'beta)^2`.
    Pe,
    /// Misclassification rate of `1{b'(x'beta) > 0.5}`; ties classify as 0.
    Ce,
    /// Mean negative log-likelihood at `theta = x'beta`.
    Nll,
}
