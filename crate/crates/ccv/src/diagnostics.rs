//! Analytic checks on the selectors and the path geometry: coherent-rate
//! curves, the orthonormal shrinkage decomposition, extreme-order-statistics
//! probabilities, theoretical penalty-level comparisons and universal
//! thresholding.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{ActiveSet, Dataset};
use crate::error::{invalid, Result};
use crate::family::Family;
use crate::penalty::PenaltyKind;
use crate::path::SolutionPath;
use crate::restricted::{fit_restricted, RestrictedOptions};
use crate::seed::{derive_seed, rng_from};
use rand_distr::StandardNormal;

/// Per-position agreement between the whole-data active sets and the
/// split-wise active sets at the same grid location.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoherentRateSeries {
    /// Fractions in `[0,1]`; each entry is a multiple of 1/r.
    pub cr: Vec<f64>,
    pub n_splits: usize,
    pub cv_choice_position: Option<usize>,
    pub first_noise_position: Option<usize>,
}

impl CoherentRateSeries {
    pub fn with_cv_choice(mut self, pos: usize) -> Self {
        self.cv_choice_position = Some(pos);
        self
    }

    pub fn with_first_noise(mut self, pos: Option<usize>) -> Self {
        self.first_noise_position = pos;
        self
    }

    /// Mean of `cr` strictly after `from` (exclusive); NaN when empty.
    pub fn mean_after(&self, from: usize) -> f64 {
        let tail = &self.cr[(from + 1).min(self.cr.len())..];
        if tail.is_empty() {
            f64::NAN
        } else {
            tail.iter().sum::<f64>() / tail.len() as f64
        }
    }
}

/// Fraction of splits whose active set equals the whole-data active set,
/// position by position. All sequences must share one length.
pub fn coherent_rate(
    full_path_sets: &[ActiveSet],
    split_path_sets: &[Vec<ActiveSet>],
) -> Result<CoherentRateSeries> {
    let n_pos = full_path_sets.len();
    if split_path_sets.is_empty() {
        return Err(invalid("coherent_rate needs at least one split sequence"));
    }
    for (j, seq) in split_path_sets.iter().enumerate() {
        if seq.len() != n_pos {
            return Err(invalid(format!(
                "split sequence {j} has length {} but the full path has {n_pos}",
                seq.len()
            )));
        }
    }
    let r = split_path_sets.len() as f64;
    let cr = (0..n_pos)
        .map(|l| {
            let matches = split_path_sets
                .iter()
                .filter(|seq| seq[l] == full_path_sets[l])
                .count();
            matches as f64 / r
        })
        .collect();
    Ok(CoherentRateSeries {
        cr,
        n_splits: split_path_sets.len(),
        cv_choice_position: None,
        first_noise_position: None,
    })
}

/// Earliest position whose active set contains an index outside `truth`.
pub fn first_noise_position(sets: &[ActiveSet], truth: &ActiveSet) -> Option<usize> {
    sets.iter()
        .position(|s| s.indices().iter().any(|j| !truth.contains(*j)))
}

/// One grid position of the shrinkage decomposition: in-sample squared-error
/// losses of the penalized fit and of the restricted MLE on the same active
/// set, and the `lambda^2 d` shrinkage term that separates them on
/// orthonormal designs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ShrinkageRecord {
    pub position: usize,
    pub lambda: f64,
    pub d_alpha: usize,
    pub gamma_hat: f64,
    pub gamma_tilde: f64,
    pub shrink_term: f64,
    pub gap: f64,
    pub refit_converged: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ShrinkageDecomposition {
    pub records: Vec<ShrinkageRecord>,
}

impl ShrinkageDecomposition {
    pub fn max_abs_gap(&self) -> f64 {
        self.records
            .iter()
            .filter(|r| r.refit_converged)
            .fold(0.0f64, |acc, r| acc.max(r.gap.abs()))
    }
}

fn mse(data: &Dataset, coef: &[(usize, f64)]) -> f64 {
    let n = data.n();
    let mut total = 0.0;
    for i in 0..n {
        let mut theta = 0.0;
        for &(j, v) in coef {
            theta += v * data.x[[i, j]];
        }
        let d = data.y[i] - theta;
        total += d * d;
    }
    total / n as f64
}

/// Decompose each lasso path point into restricted-MLE loss plus shrinkage.
///
/// Both losses are on the squared-error scale, where the orthonormal-design
/// identity `gamma_hat = gamma_tilde + lambda^2 d` is exact; on general
/// designs the `gap` column is reported, not asserted. Gaussian lasso paths
/// only.
pub fn shrinkage_decomposition(
    data: &Dataset,
    path: &SolutionPath,
) -> Result<ShrinkageDecomposition> {
    if data.family != Family::Gaussian {
        return Err(invalid("shrinkage decomposition requires gaussian data"));
    }
    if path.penalty.kind != PenaltyKind::Lasso {
        return Err(invalid("shrinkage decomposition requires a lasso path"));
    }
    if path.intercept_enabled {
        return Err(invalid("shrinkage decomposition expects an intercept-free path"));
    }
    let cap = data.n().saturating_sub(2);
    let mut records = Vec::with_capacity(path.len());
    for k in 0..path.len() {
        let lambda = path.grid.values()[k];
        let active = &path.active_sets[k];
        let d_alpha = active.size();
        let gamma_hat = mse(data, &path.betas[k]);
        let refit = fit_restricted(data, active, &RestrictedOptions::with_cap(cap))?;
        let tilde_coef: Vec<(usize, f64)> = active
            .indices()
            .iter()
            .copied()
            .zip(refit.coef.iter().copied())
            .collect();
        let gamma_tilde = mse(data, &tilde_coef);
        let shrink_term = lambda * lambda * d_alpha as f64;
        records.push(ShrinkageRecord {
            position: k,
            lambda,
            d_alpha,
            gamma_hat,
            gamma_tilde,
            shrink_term,
            gap: gamma_hat - gamma_tilde - shrink_term,
            refit_converged: refit.converged,
        });
    }
    Ok(ShrinkageDecomposition { records })
}

/// Correlation model for the order-statistics experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RhoModel {
    Iid,
    /// First-order autoregressive correlations `rho^|i-j|`.
    Ar1(f64),
}

/// Monte-Carlo estimate of `P{ k T_k^2 > l T_l^2 }` where `T_m` is the
/// `(p-m)`-th ascending order statistic of |S| and S is a Gaussian sequence
/// (optionally AR(1)-correlated, optionally mean-shifted).
pub fn order_stats_probability(
    p: usize,
    k: usize,
    l: usize,
    rho_model: RhoModel,
    mean_shifts: Option<&[f64]>,
    trials: usize,
    seed: u64,
) -> Result<f64> {
    if !(2 <= l && l < k && k < p) {
        return Err(invalid(format!(
            "order statistics require 2 <= l < k < p, got l={l}, k={k}, p={p}"
        )));
    }
    if trials < 1 {
        return Err(invalid("need at least one trial"));
    }
    if let Some(m) = mean_shifts {
        if m.len() != p {
            return Err(invalid(format!(
                "mean_shifts has length {} but p = {p}",
                m.len()
            )));
        }
    }
    if let RhoModel::Ar1(rho) = rho_model {
        if !(0.0..1.0).contains(&rho) {
            return Err(invalid(format!("ar1 rho must lie in [0,1), got {rho}")));
        }
    }

    let successes: u64 = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let mut rng = rng_from(derive_seed(seed, t));
            let mut s = vec![0.0f64; p];
            match rho_model {
                RhoModel::Iid => {
                    for v in s.iter_mut() {
                        *v = rng.sample::<f64, _>(StandardNormal);
                    }
                }
                RhoModel::Ar1(rho) => {
                    let innov = (1.0 - rho * rho).sqrt();
                    let mut prev: f64 = rng.sample(StandardNormal);
                    s[0] = prev;
                    for v in s.iter_mut().skip(1) {
                        prev = rho * prev + innov * rng.sample::<f64, _>(StandardNormal);
                        *v = prev;
                    }
                }
            }
            if let Some(shifts) = mean_shifts {
                for (v, m) in s.iter_mut().zip(shifts) {
                    *v += m;
                }
            }
            for v in s.iter_mut() {
                *v = v.abs();
            }
            // T_k sits at ascending index p-k-1; T_l (l < k) further right.
            let (_, tk, right) = s.select_nth_unstable_by(p - k - 1, f64::total_cmp);
            let tk = *tk;
            let (_, tl, _) = right.select_nth_unstable_by(k - l - 1, f64::total_cmp);
            let tl = *tl;
            u64::from(k as f64 * tk * tk > l as f64 * tl * tl)
        })
        .sum();
    Ok(successes as f64 / trials as f64)
}

/// Path positions compared against the theoretical penalty level
/// `sigma * sqrt(2 log(p - d) / n_c)`, with the shrinkage size `lambda^2 d`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TheoreticalLambdaRecord {
    pub position: usize,
    pub lambda: f64,
    pub d_alpha: usize,
    pub ratio: f64,
    pub shrink: f64,
}

/// Positions where `p - d <= 1` are skipped (the logarithm degenerates).
pub fn theoretical_lambda_series(
    path: &SolutionPath,
    n_c: usize,
    sigma: f64,
) -> Vec<TheoreticalLambdaRecord> {
    let p = path.p;
    let mut out = Vec::with_capacity(path.len());
    for k in 0..path.len() {
        let d = path.active_sets[k].size();
        if p.saturating_sub(d) <= 1 {
            continue;
        }
        let lambda = path.grid.values()[k];
        let theoretical = sigma * (2.0 * ((p - d) as f64).ln() / n_c as f64).sqrt();
        out.push(TheoreticalLambdaRecord {
            position: k,
            lambda,
            d_alpha: d,
            ratio: lambda / theoretical,
            shrink: lambda * lambda * d as f64,
        });
    }
    out
}

/// The noise ceiling `sigma * sqrt(2 log p / n)`: the theoretical penalty
/// level below which noise coordinates start to enter.
pub fn universal_threshold(n: usize, p: usize, sigma: f64) -> f64 {
    sigma * (2.0 * (p as f64).ln() / n as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Dataset;
    use crate::path::{fit_path, lambda_grid, FitOptions};
    use crate::penalty::PenaltySpec;
    use ndarray::{Array1, Array2};

    fn sets(spec: &[&[usize]]) -> Vec<ActiveSet> {
        spec.iter()
            .map(|s| ActiveSet::new(s.to_vec()).unwrap())
            .collect()
    }

    #[test]
    fn coherent_rate_trivial_cases() {
        let full = sets(&[&[], &[0], &[0, 1]]);
        let identical = vec![full.clone(), full.clone()];
        let cr = coherent_rate(&full, &identical).unwrap();
        assert_eq!(cr.cr, vec![1.0, 1.0, 1.0]);

        let differing = vec![full.clone(), sets(&[&[], &[1], &[0, 1]])];
        let cr = coherent_rate(&full, &differing).unwrap();
        assert_eq!(cr.cr, vec![1.0, 0.5, 1.0]);

        let bad = vec![sets(&[&[]])];
        assert!(coherent_rate(&full, &bad).is_err());
    }

    #[test]
    fn coherent_rate_entries_are_multiples_of_one_over_r() {
        let full = sets(&[&[0], &[0, 2], &[0, 2, 3]]);
        let splits = vec![
            full.clone(),
            sets(&[&[0], &[0, 1], &[0, 2, 3]]),
            sets(&[&[1], &[0, 2], &[0, 1, 3]]),
        ];
        let cr = coherent_rate(&full, &splits).unwrap();
        for v in &cr.cr {
            let scaled = v * 3.0;
            assert!((scaled - scaled.round()).abs() < 1e-12);
        }
    }

    #[test]
    fn first_noise_detects_extra_indices() {
        let truth = ActiveSet::new(vec![0, 1]).unwrap();
        let seq = sets(&[&[], &[0], &[0, 1], &[0, 1, 5]]);
        assert_eq!(first_noise_position(&seq, &truth), Some(3));
        assert_eq!(first_noise_position(&seq[..3], &truth), None);
    }

    #[test]
    fn shrinkage_identity_on_orthonormal_design() {
        let n = 200;
        let p = 50;
        let x = crate::sim::orthonormal_design(n, p, 7);
        let mut rng = crate::seed::rng_from(8);
        use rand_distr::StandardNormal;
        let mut y = Array1::zeros(n);
        let truth = [2.0, 1.6, 1.2, 0.8, 0.4];
        for i in 0..n {
            let mut t = 0.0;
            for (j, b) in truth.iter().enumerate() {
                t += b * x[[i, j]];
            }
            y[i] = t + rng.sample::<f64, _>(StandardNormal);
        }
        let data = Dataset::new(x, y, Family::Gaussian).unwrap();
        let grid = lambda_grid(&data, 30, 0.05).unwrap();
        let path = fit_path(&data, &PenaltySpec::lasso(), &grid, &FitOptions::default()).unwrap();
        let dec = shrinkage_decomposition(&data, &path).unwrap();
        assert!(dec.max_abs_gap() <= 1e-6, "gap {}", dec.max_abs_gap());
        // First record is the null model: everything zero.
        let first = &dec.records[0];
        assert_eq!(first.d_alpha, 0);
        assert!((first.gamma_hat - first.gamma_tilde).abs() < 1e-12);
        assert_eq!(first.shrink_term, 0.0);
    }

    #[test]
    fn shrinkage_rejects_wrong_inputs() {
        let x = Array2::from_shape_vec((4, 2), vec![1.0, 0.0, -1.0, 0.5, 0.3, -0.2, 0.1, 0.9])
            .unwrap();
        let y = Array1::from_vec(vec![1.0, 0.0, 1.0, 0.0]);
        let data = Dataset::new(x, y, Family::Binomial).unwrap();
        let grid = lambda_grid(&data, 4, 0.1).unwrap();
        let path = fit_path(&data, &PenaltySpec::lasso(), &grid, &FitOptions::default()).unwrap();
        assert!(shrinkage_decomposition(&data, &path).is_err());
    }

    #[test]
    fn order_stats_rejects_bad_parameter_order() {
        assert!(order_stats_probability(100, 3, 3, RhoModel::Iid, None, 10, 1).is_err());
        assert!(order_stats_probability(100, 2, 3, RhoModel::Iid, None, 10, 1).is_err());
        assert!(order_stats_probability(3, 3, 2, RhoModel::Iid, None, 10, 1).is_err());
    }

    #[test]
    fn order_stats_probability_grows_with_dimension() {
        let large = order_stats_probability(2000, 3, 2, RhoModel::Iid, None, 400, 5).unwrap();
        let small = order_stats_probability(10, 3, 2, RhoModel::Iid, None, 400, 5).unwrap();
        assert!(large > small, "large={large} small={small}");
        assert!(large >= 0.85);
    }

    #[test]
    fn order_stats_deterministic_and_parallel_safe() {
        let a = order_stats_probability(500, 3, 2, RhoModel::Ar1(0.4), None, 300, 9).unwrap();
        let b = order_stats_probability(500, 3, 2, RhoModel::Ar1(0.4), None, 300, 9).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn theoretical_series_formula() {
        // Build a tiny synthetic path by fitting, then check the formula rows.
        let x = crate::sim::orthonormal_design(50, 8, 3);
        let mut y = Array1::zeros(50);
        for i in 0..50 {
            y[i] = 1.5 * x[[i, 0]] + 0.1 * (i as f64 % 3.0 - 1.0);
        }
        let data = Dataset::new(x, y, Family::Gaussian).unwrap();
        let grid = lambda_grid(&data, 10, 0.1).unwrap();
        let path = fit_path(&data, &PenaltySpec::lasso(), &grid, &FitOptions::default()).unwrap();
        let series = theoretical_lambda_series(&path, 30, 1.0);
        for rec in &series {
            let d = rec.d_alpha;
            let expect = rec.lambda / (2.0 * ((8 - d) as f64).ln() / 30.0).sqrt();
            assert!((rec.ratio - expect).abs() < 1e-12);
            assert!((rec.shrink - rec.lambda * rec.lambda * d as f64).abs() < 1e-15);
        }
        // d = 0 rows use log p in the denominator.
        let null = &series[0];
        assert_eq!(null.d_alpha, 0);
        let expect = null.lambda / (2.0 * 8f64.ln() / 30.0).sqrt();
        assert!((null.ratio - expect).abs() < 1e-12);
    }

    #[test]
    fn universal_threshold_examples() {
        let a = universal_threshold(300, 1000, 1.0);
        assert!((a - 0.2146).abs() < 5e-4, "{a}");
        assert_eq!(format!("{:.2}", a), "0.21");
        let b = universal_threshold(500, 1000, 1.0);
        assert!((b - 0.1662).abs() < 5e-4, "{b}");
        assert_eq!(format!("{:.2}", b), "0.17");
        assert_eq!(universal_threshold(100, 50, 0.0), 0.0);
    }

    #[test]
    fn universal_threshold_scales_inverse_sqrt_n() {
        let v1 = universal_threshold(200, 5000, 1.3);
        let v2 = universal_threshold(800, 5000, 1.3);
        assert_eq!(v2, v1 / 2.0);
    }
}
