//! Data splitting and the four tuning-parameter selectors.
//!
//! All selectors share one loss convention: per split, the mean validation
//! negative log-likelihood; per position, the unweighted average over the
//! splits that produced a usable fit. Split plans are generated up front from
//! the seed, per-split work is pure, and results are reduced in split order,
//! so outputs are identical whether splits run sequentially or in parallel.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{ActiveSet, Dataset};
use crate::error::{invalid, Error, Result};
use crate::family::Family;
use crate::linalg::{mean, sample_sd};
use crate::path::{
    active_set_sequence, fit_path, lambda_grid_with, FitOptions, LambdaGrid, SolutionPath,
};
use crate::penalty::PenaltySpec;
use crate::restricted::{fit_restricted, RestrictedFit, RestrictedOptions};
use crate::seed::{derive_seed2, rng_from};

/// One validation/construction partition of the row indices.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Split {
    pub validation: Vec<usize>,
    pub construction: Vec<usize>,
}

/// `r` partitions of `{0..n-1}` into validation sets of (nominal) size `n_v`
/// and construction sets of size `n_c`, reproducible from the seed.
///
/// K-fold plans with `k` not dividing `n` carry folds of two sizes; `n_v`
/// then records the larger fold size.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SplitPlan {
    pub n: usize,
    pub n_v: usize,
    pub n_c: usize,
    pub r: usize,
    pub seed: u64,
    pub splits: Vec<Split>,
}

fn partition_from_rng(n: usize, n_c: usize, rng: &mut impl Rng) -> Split {
    let mut idx: Vec<usize> = (0..n).collect();
    for i in 0..n_c {
        let j = rng.gen_range(i..n);
        idx.swap(i, j);
    }
    let mut construction = idx[..n_c].to_vec();
    let mut validation = idx[n_c..].to_vec();
    construction.sort_unstable();
    validation.sort_unstable();
    Split {
        validation,
        construction,
    }
}

/// `r` independent uniform partitions with construction size `n_c`.
pub fn monte_carlo_splits(n: usize, n_c: usize, r: usize, seed: u64) -> Result<SplitPlan> {
    if n_c < 2 || n_c >= n {
        return Err(invalid(format!(
            "construction size must satisfy 2 <= n_c < n, got n_c={n_c}, n={n}"
        )));
    }
    if r < 1 {
        return Err(invalid("need at least one split"));
    }
    let splits = (0..r)
        .map(|s| {
            let mut rng = rng_from(derive_seed2(seed, s as u64, 0));
            partition_from_rng(n, n_c, &mut rng)
        })
        .collect();
    Ok(SplitPlan {
        n,
        n_v: n - n_c,
        n_c,
        r,
        seed,
        splits,
    })
}

/// One shuffled partition into `k` folds; fold `i` validates, the rest
/// construct. The first `n mod k` folds are one element larger.
pub fn kfold_splits(n: usize, k: usize, seed: u64) -> Result<SplitPlan> {
    if k < 2 || k > n {
        return Err(invalid(format!(
            "fold count must satisfy 2 <= k <= n, got k={k}, n={n}"
        )));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    let mut rng = rng_from(seed);
    for i in (1..n).rev() {
        let j = rng.gen_range(0..=i);
        idx.swap(i, j);
    }
    let base = n / k;
    let extra = n % k;
    let mut splits = Vec::with_capacity(k);
    let mut start = 0usize;
    for fold in 0..k {
        let size = base + usize::from(fold < extra);
        let mut validation = idx[start..start + size].to_vec();
        let mut construction: Vec<usize> = idx[..start]
            .iter()
            .chain(&idx[start + size..])
            .copied()
            .collect();
        validation.sort_unstable();
        construction.sort_unstable();
        splits.push(Split {
            validation,
            construction,
        });
        start += size;
    }
    let n_v = base + usize::from(extra > 0);
    Ok(SplitPlan {
        n,
        n_v,
        n_c: n - n_v,
        r: k,
        seed,
        splits,
    })
}

/// Consistency guideline for the number of splits: at least `(n/n_c)^2`.
pub fn recommended_min_splits(n: usize, n_c: usize) -> usize {
    let ratio = n as f64 / n_c as f64;
    (ratio * ratio).ceil() as usize
}

/// Regenerate Monte-Carlo splits whose construction set carries fewer than
/// two observations of either class (binomial only). Returns the attempts
/// used per regenerated split.
fn rebalance_for_binomial(plan: &SplitPlan, data: &Dataset) -> (SplitPlan, Vec<(usize, u32)>) {
    if data.family != Family::Binomial {
        return (plan.clone(), Vec::new());
    }
    let balanced = |s: &Split| {
        let ones = s
            .construction
            .iter()
            .filter(|&&i| data.y[i] == 1.0)
            .count();
        ones >= 2 && s.construction.len() - ones >= 2
    };
    let mut out = plan.clone();
    let mut log = Vec::new();
    for (sidx, split) in out.splits.iter_mut().enumerate() {
        if balanced(split) {
            continue;
        }
        let mut attempts = 0u32;
        for attempt in 1..=100u32 {
            attempts = attempt;
            let mut rng = rng_from(derive_seed2(plan.seed, sidx as u64, u64::from(attempt)));
            let cand = partition_from_rng(plan.n, plan.n_c, &mut rng);
            if balanced(&cand) {
                *split = cand;
                break;
            }
        }
        log.push((sidx, attempts));
    }
    (out, log)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveAxis {
    LambdaIndex,
    ActiveSetIndex,
}

/// Mean validation loss with spread, per grid position or per candidate set.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CvCurve {
    pub axis: CurveAxis,
    pub positions: Vec<usize>,
    /// NaN where no split contributed.
    pub mean_loss: Vec<f64>,
    /// Sample standard deviation over contributing splits divided by
    /// sqrt(contributing count); 0 with fewer than two contributors.
    pub se_loss: Vec<f64>,
    pub n_valid_splits: Vec<usize>,
    pub model_sizes: Vec<usize>,
}

fn curve_from_losses(
    axis: CurveAxis,
    losses: &[Vec<Option<f64>>],
    model_sizes: Vec<usize>,
) -> CvCurve {
    let n_pos = losses.first().map(|l| l.len()).unwrap_or(0);
    let mut mean_loss = Vec::with_capacity(n_pos);
    let mut se_loss = Vec::with_capacity(n_pos);
    let mut n_valid = Vec::with_capacity(n_pos);
    for pos in 0..n_pos {
        let vals: Vec<f64> = losses.iter().filter_map(|split| split[pos]).collect();
        if vals.is_empty() {
            mean_loss.push(f64::NAN);
            se_loss.push(f64::NAN);
        } else {
            mean_loss.push(mean(&vals));
            se_loss.push(sample_sd(&vals) / (vals.len() as f64).sqrt());
        }
        n_valid.push(vals.len());
    }
    CvCurve {
        axis,
        positions: (0..n_pos).collect(),
        mean_loss,
        se_loss,
        n_valid_splits: n_valid,
        model_sizes,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionRule {
    Min,
    OneSe,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectorMethod {
    Kfold,
    Kfold1se,
    CvNv,
    Ccv,
}

impl SelectorMethod {
    pub fn name(self) -> &'static str {
        match self {
            SelectorMethod::Kfold => "kfold",
            SelectorMethod::Kfold1se => "kfold_1se",
            SelectorMethod::CvNv => "cv_nv",
            SelectorMethod::Ccv => "ccv",
        }
    }
}

/// Per-split bookkeeping: positions without a usable fit, and class-balance
/// resampling attempts.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SplitRecord {
    pub split: usize,
    pub resample_attempts: u32,
    pub failed_positions: Vec<usize>,
}

/// Outcome of a selector: the chosen position on its curve, the matching
/// model, the penalized whole-data coefficients there, and a restricted-MLE
/// refit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SelectionReport {
    pub method: SelectorMethod,
    pub selected_position: usize,
    pub selected_lambda: Option<f64>,
    pub selected_active: ActiveSet,
    /// Whole-data path coefficients at the selection, (column, value) pairs.
    pub penalized: Option<Vec<(usize, f64)>>,
    pub penalized_intercept: f64,
    pub refit: RestrictedFit,
    pub curve: CvCurve,
    pub split_log: Vec<SplitRecord>,
    pub notes: Vec<String>,
}

/// Options shared by the selectors.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct CvOptions {
    pub fit: FitOptions,
    /// Newton budget for restricted fits and refits.
    pub restricted_max_iter: usize,
}

impl CvOptions {
    pub fn restricted_opts(&self, size_cap: usize) -> RestrictedOptions {
        RestrictedOptions {
            size_cap,
            max_iter: if self.restricted_max_iter == 0 {
                50
            } else {
                self.restricted_max_iter
            },
            intercept: self.fit.intercept,
        }
    }
}

/// Mean validation negative log-likelihood of a sparse coefficient vector
/// over the rows `rows` of `data`.
fn validation_nll(data: &Dataset, rows: &[usize], coef: &[(usize, f64)], intercept: f64) -> f64 {
    let mut total = 0.0;
    for &i in rows {
        let mut theta = intercept;
        for &(j, v) in coef {
            theta += v * data.x[[i, j]];
        }
        total += -data.y[i] * theta + data.family.b(theta);
    }
    total / rows.len() as f64
}

/// Fit a path per split on its construction rows (re-using `grid`) and score
/// every grid position on the validation rows. Non-converged points and
/// failed fits yield `None`.
fn split_path_losses(
    data: &Dataset,
    penalty: &PenaltySpec,
    grid: &LambdaGrid,
    plan: &SplitPlan,
    opts: &CvOptions,
) -> (Vec<Vec<Option<f64>>>, Vec<SplitRecord>, Vec<Vec<ActiveSet>>) {
    let n_pos = grid.len();
    let per_split: Vec<(Vec<Option<f64>>, Vec<ActiveSet>)> = plan
        .splits
        .par_iter()
        .map(|split| {
            let sub = data.select_rows(&split.construction);
            match fit_path(&sub, penalty, grid, &opts.fit) {
                Ok(path) => {
                    let losses = (0..n_pos)
                        .map(|k| {
                            if path.converged[k] {
                                Some(validation_nll(
                                    data,
                                    &split.validation,
                                    &path.betas[k],
                                    path.intercepts[k],
                                ))
                            } else {
                                None
                            }
                        })
                        .collect();
                    (losses, path.active_sets.clone())
                }
                Err(_) => (vec![None; n_pos], vec![ActiveSet::empty(); n_pos]),
            }
        })
        .collect();

    let mut losses = Vec::with_capacity(per_split.len());
    let mut records = Vec::with_capacity(per_split.len());
    let mut sets = Vec::with_capacity(per_split.len());
    for (sidx, (l, s)) in per_split.into_iter().enumerate() {
        let failed: Vec<usize> = l
            .iter()
            .enumerate()
            .filter(|(_, v)| v.is_none())
            .map(|(k, _)| k)
            .collect();
        records.push(SplitRecord {
            split: sidx,
            resample_attempts: 0,
            failed_positions: failed,
        });
        losses.push(l);
        sets.push(s);
    }
    (losses, records, sets)
}

/// Smallest-index argmin over positions with at least one contributing split,
/// so ties resolve to the largest penalty level (the sparser model).
fn argmin_position(curve: &CvCurve) -> Result<usize> {
    let mut best: Option<usize> = None;
    for pos in 0..curve.mean_loss.len() {
        if curve.n_valid_splits[pos] == 0 {
            continue;
        }
        let m = curve.mean_loss[pos];
        if best.map(|b| m < curve.mean_loss[b]).unwrap_or(true) {
            best = Some(pos);
        }
    }
    best.ok_or_else(|| {
        Error::SelectionFailed("every grid position lost all of its splits".into())
    })
}

fn one_se_position(curve: &CvCurve, min_pos: usize) -> usize {
    let threshold = curve.mean_loss[min_pos] + curve.se_loss[min_pos];
    for pos in 0..=min_pos {
        if curve.n_valid_splits[pos] > 0 && curve.mean_loss[pos] <= threshold {
            return pos;
        }
    }
    min_pos
}

fn refit_report(
    data: &Dataset,
    path: &SolutionPath,
    method: SelectorMethod,
    selected_position: usize,
    curve: CvCurve,
    split_log: Vec<SplitRecord>,
    notes: Vec<String>,
    opts: &CvOptions,
) -> Result<SelectionReport> {
    let active = path.active_sets[selected_position].clone();
    // The refit is uncapped here (cap = n - 2): the cap governs candidate
    // generation, not the final least-squares/Newton solve.
    let refit = fit_restricted(
        data,
        &active,
        &opts.restricted_opts(data.n().saturating_sub(2)),
    )?;
    Ok(SelectionReport {
        method,
        selected_position,
        selected_lambda: Some(path.grid.values()[selected_position]),
        selected_active: active,
        penalized: Some(path.betas[selected_position].clone()),
        penalized_intercept: path.intercepts[selected_position],
        refit,
        curve,
        split_log,
        notes,
    })
}

/// K-fold cross-validation over a shared lambda grid, choosing by minimum
/// loss or by the one-standard-error rule.
pub fn kfold_cv(
    data: &Dataset,
    penalty: &PenaltySpec,
    grid: &LambdaGrid,
    k: usize,
    rule: SelectionRule,
    seed: u64,
    opts: &CvOptions,
) -> Result<SelectionReport> {
    let plan = kfold_splits(data.n(), k, seed)?;
    let path = fit_path(data, penalty, grid, &opts.fit)?;
    let (losses, split_log, _) = split_path_losses(data, penalty, grid, &plan, opts);
    let sizes = (0..path.len()).map(|k| path.nonzero_count(k)).collect();
    let curve = curve_from_losses(CurveAxis::LambdaIndex, &losses, sizes);
    let min_pos = argmin_position(&curve)?;
    let (method, pos) = match rule {
        SelectionRule::Min => (SelectorMethod::Kfold, min_pos),
        SelectionRule::OneSe => (SelectorMethod::Kfold1se, one_se_position(&curve, min_pos)),
    };
    refit_report(data, &path, method, pos, curve, split_log, Vec::new(), opts)
}

/// Monte-Carlo leave-`n_v`-out cross-validation: split paths reuse the
/// whole-data grid, the minimizing lambda is chosen, and the whole-data
/// active set there is refit by restricted MLE.
pub fn cv_nv(
    data: &Dataset,
    penalty: &PenaltySpec,
    grid: &LambdaGrid,
    plan: &SplitPlan,
    opts: &CvOptions,
) -> Result<SelectionReport> {
    if plan.n != data.n() {
        return Err(invalid("split plan was built for a different sample size"));
    }
    let (plan, rebalanced) = rebalance_for_binomial(plan, data);
    let path = fit_path(data, penalty, grid, &opts.fit)?;
    let (losses, mut split_log, _) = split_path_losses(data, penalty, grid, &plan, opts);
    for (sidx, attempts) in &rebalanced {
        split_log[*sidx].resample_attempts = *attempts;
    }
    let mut notes = Vec::new();
    if !rebalanced.is_empty() {
        notes.push(format!(
            "class-balance guard resampled {} split(s)",
            rebalanced.len()
        ));
    }
    let sizes = (0..path.len()).map(|k| path.nonzero_count(k)).collect();
    let curve = curve_from_losses(CurveAxis::LambdaIndex, &losses, sizes);
    let pos = argmin_position(&curve)?;
    refit_report(data, &path, SelectorMethod::CvNv, pos, curve, split_log, notes, opts)
}

/// Score candidate active sets by split-wise restricted-MLE validation loss.
///
/// Returns the index of the winning candidate and the curve. Candidates with
/// fewer than `ceil(r/2)` finite-loss splits are ineligible; if every
/// candidate is starved the selection fails, naming them.
pub fn select_active_set(
    data: &Dataset,
    candidates: &[(ActiveSet, usize)],
    plan: &SplitPlan,
    size_cap: usize,
    opts: &CvOptions,
) -> Result<(usize, CvCurve, Vec<SplitRecord>)> {
    if candidates.is_empty() {
        return Err(Error::SelectionFailed("no candidate active sets".into()));
    }
    let (plan, rebalanced) = rebalance_for_binomial(plan, data);
    let ropts = opts.restricted_opts(size_cap);

    let losses: Vec<Vec<Option<f64>>> = plan
        .splits
        .par_iter()
        .map(|split| {
            let sub = data.select_rows(&split.construction);
            candidates
                .iter()
                .map(|(cand, _)| match fit_restricted(&sub, cand, &ropts) {
                    Ok(fit) if fit.converged => {
                        let coef: Vec<(usize, f64)> = cand
                            .indices()
                            .iter()
                            .copied()
                            .zip(fit.coef.iter().copied())
                            .collect();
                        Some(validation_nll(data, &split.validation, &coef, fit.intercept))
                    }
                    _ => None,
                })
                .collect()
        })
        .collect();

    let mut split_log: Vec<SplitRecord> = losses
        .iter()
        .enumerate()
        .map(|(sidx, l)| SplitRecord {
            split: sidx,
            resample_attempts: 0,
            failed_positions: l
                .iter()
                .enumerate()
                .filter(|(_, v)| v.is_none())
                .map(|(k, _)| k)
                .collect(),
        })
        .collect();
    for (sidx, attempts) in &rebalanced {
        split_log[*sidx].resample_attempts = *attempts;
    }

    let sizes: Vec<usize> = candidates.iter().map(|(c, _)| c.size()).collect();
    let curve = curve_from_losses(CurveAxis::ActiveSetIndex, &losses, sizes);

    let quorum = plan.r.div_ceil(2);
    let mut winner: Option<usize> = None;
    for idx in 0..candidates.len() {
        if curve.n_valid_splits[idx] < quorum {
            continue;
        }
        let better = match winner {
            None => true,
            Some(w) => {
                let (mw, mi) = (curve.mean_loss[w], curve.mean_loss[idx]);
                mi < mw
                    || (mi == mw
                        && (candidates[idx].0.size(), idx) < (candidates[w].0.size(), w))
            }
        };
        if better {
            winner = Some(idx);
        }
    }
    let winner = winner.ok_or_else(|| {
        let starved: Vec<String> = candidates
            .iter()
            .enumerate()
            .map(|(i, (c, _))| format!("candidate {i} (d={}, {}/{} splits)", c.size(), curve.n_valid_splits[i], plan.r))
            .collect();
        Error::SelectionFailed(format!(
            "no candidate reached the {quorum}-split quorum: {}",
            starved.join(", ")
        ))
    })?;
    Ok((winner, curve, split_log))
}

/// Consistent cross-validation: the whole-data path's deduplicated active-set
/// sequence (truncated at `size_cap`) is scored by [`select_active_set`] and
/// the winner is refit on the full data.
pub fn ccv(
    data: &Dataset,
    penalty: &PenaltySpec,
    grid: &LambdaGrid,
    plan: &SplitPlan,
    size_cap: usize,
    opts: &CvOptions,
) -> Result<SelectionReport> {
    if plan.n != data.n() {
        return Err(invalid("split plan was built for a different sample size"));
    }
    let path = fit_path(data, penalty, grid, &opts.fit)?;
    let sequence = active_set_sequence(&path);
    let mut notes = Vec::new();
    let truncated_at = sequence.iter().position(|(s, _)| s.size() > size_cap);
    let candidates: Vec<(ActiveSet, usize)> = match truncated_at {
        Some(idx) => {
            notes.push(format!(
                "candidate sequence truncated at entry {idx} (first set larger than cap {size_cap})"
            ));
            sequence[..idx].to_vec()
        }
        None => sequence,
    };
    let (winner, curve, split_log) = select_active_set(data, &candidates, plan, size_cap, opts)?;
    let (active, first_pos) = candidates[winner].clone();
    let refit = fit_restricted(data, &active, &opts.restricted_opts(size_cap))?;
    Ok(SelectionReport {
        method: SelectorMethod::Ccv,
        selected_position: winner,
        selected_lambda: Some(path.grid.values()[first_pos]),
        selected_active: active,
        penalized: Some(path.betas[first_pos].clone()),
        penalized_intercept: path.intercepts[first_pos],
        refit,
        curve,
        split_log,
        notes,
    })
}

/// Fit the shared grid the selectors expect: computed once on the whole data.
pub fn default_grid(data: &Dataset, n_lambda: usize, opts: &CvOptions) -> Result<LambdaGrid> {
    let min_ratio = crate::path::default_min_ratio(data.n(), data.p());
    lambda_grid_with(data, n_lambda, min_ratio, opts.fit.intercept)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::Family;
    use crate::seed::rng_from;
    use ndarray::{Array1, Array2};
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn sparse_gaussian(n: usize, p: usize, seed: u64) -> Dataset {
        let mut rng = rng_from(seed);
        let x = Array2::from_shape_fn((n, p), |_| rng.sample::<f64, _>(StandardNormal));
        let y = Array1::from_shape_fn(n, |i| {
            2.0 * x[[i, 0]] + 1.2 * x[[i, 1]] + rng.sample::<f64, _>(StandardNormal)
        });
        Dataset::new(x, y, Family::Gaussian).unwrap()
    }

    #[test]
    fn monte_carlo_plan_structure() {
        let plan = monte_carlo_splits(5, 2, 3, 7).unwrap();
        assert_eq!(plan.splits.len(), 3);
        for s in &plan.splits {
            assert_eq!(s.construction.len(), 2);
            assert_eq!(s.validation.len(), 3);
            let mut all: Vec<usize> = s
                .construction
                .iter()
                .chain(&s.validation)
                .copied()
                .collect();
            all.sort_unstable();
            assert_eq!(all, vec![0, 1, 2, 3, 4]);
        }
        // determinism
        let again = monte_carlo_splits(5, 2, 3, 7).unwrap();
        for (a, b) in plan.splits.iter().zip(&again.splits) {
            assert_eq!(a.construction, b.construction);
        }
        // bad arguments
        assert!(monte_carlo_splits(5, 5, 2, 0).is_err());
        assert!(monte_carlo_splits(5, 1, 2, 0).is_err());
        assert!(monte_carlo_splits(5, 2, 0, 0).is_err());
    }

    #[test]
    fn paper_scale_plan() {
        // n=500 with construction size ceil(sqrt(500)) = 23 and 50 splits.
        let plan = monte_carlo_splits(500, 23, 50, 11).unwrap();
        assert_eq!(plan.r, 50);
        assert_eq!(plan.n_v, 477);
        assert!(plan.splits.iter().all(|s| s.construction.len() == 23));
    }

    #[test]
    fn kfold_fold_sizes() {
        let plan = kfold_splits(10, 5, 1).unwrap();
        assert!(plan.splits.iter().all(|s| s.validation.len() == 2));

        let plan = kfold_splits(10, 3, 1).unwrap();
        let mut sizes: Vec<usize> = plan.splits.iter().map(|s| s.validation.len()).collect();
        sizes.sort_unstable();
        assert_eq!(sizes, vec![3, 3, 4]);
        // folds partition the indices
        let mut seen: Vec<usize> = plan
            .splits
            .iter()
            .flat_map(|s| s.validation.iter().copied())
            .collect();
        seen.sort_unstable();
        assert_eq!(seen, (0..10).collect::<Vec<_>>());

        let plan = kfold_splits(500, 10, 1).unwrap();
        assert!(plan.splits.iter().all(|s| s.construction.len() == 450));

        assert!(kfold_splits(5, 6, 0).is_err());
    }

    #[test]
    fn one_se_rule_arithmetic() {
        // Curve [5, 3, 3.05, 4], se at the minimizer 0.1: positions 1 and 2
        // qualify and the largest-lambda qualifier is position 1.
        let curve = CvCurve {
            axis: CurveAxis::LambdaIndex,
            positions: vec![0, 1, 2, 3],
            mean_loss: vec![5.0, 3.0, 3.05, 4.0],
            se_loss: vec![0.3, 0.1, 0.2, 0.2],
            n_valid_splits: vec![5, 5, 5, 5],
            model_sizes: vec![0, 1, 2, 3],
        };
        let min_pos = argmin_position(&curve).unwrap();
        assert_eq!(min_pos, 1);
        assert_eq!(one_se_position(&curve, min_pos), 1);

        // A flatter curve moves the 1se choice to a sparser position.
        let curve2 = CvCurve {
            mean_loss: vec![3.08, 3.0, 3.05, 4.0],
            ..curve.clone()
        };
        assert_eq!(one_se_position(&curve2, 1), 0);
    }

    #[test]
    fn min_rule_unique_on_convex_curve() {
        let curve = CvCurve {
            axis: CurveAxis::LambdaIndex,
            positions: vec![0, 1, 2],
            mean_loss: vec![2.0, 1.0, 1.5],
            se_loss: vec![0.0; 3],
            n_valid_splits: vec![3; 3],
            model_sizes: vec![0, 1, 2],
        };
        assert_eq!(argmin_position(&curve).unwrap(), 1);
    }

    #[test]
    fn selectors_recover_strong_support_gaussian() {
        let data = sparse_gaussian(150, 30, 2024);
        let opts = CvOptions::default();
        let grid = default_grid(&data, 40, &opts).unwrap();
        let pen = PenaltySpec::lasso();

        let kf = kfold_cv(&data, &pen, &grid, 5, SelectionRule::Min, 3, &opts).unwrap();
        assert!(kf.selected_active.contains(0) && kf.selected_active.contains(1));

        let se = kfold_cv(&data, &pen, &grid, 5, SelectionRule::OneSe, 3, &opts).unwrap();
        assert!(se.selected_position <= kf.selected_position);
        assert_eq!(se.method, SelectorMethod::Kfold1se);

        let plan = monte_carlo_splits(data.n(), 28, 20, 4).unwrap();
        let nv = cv_nv(&data, &pen, &grid, &plan, &opts).unwrap();
        assert!(nv.selected_active.contains(0) && nv.selected_active.contains(1));
        assert!(nv.refit.converged);

        let plan = monte_carlo_splits(data.n(), 13, 20, 5).unwrap();
        let cc = ccv(&data, &pen, &grid, &plan, 10, &opts).unwrap();
        assert!(cc.selected_active.contains(0) && cc.selected_active.contains(1));
        assert!(cc.selected_active.size() <= 4, "ccv picked {:?}", cc.selected_active);
    }

    #[test]
    fn ccv_single_candidate_returned_unconditionally() {
        let data = sparse_gaussian(60, 8, 5);
        let plan = monte_carlo_splits(60, 12, 6, 9).unwrap();
        let cand = vec![(ActiveSet::new(vec![0, 1]).unwrap(), 0)];
        let (w, curve, _) = select_active_set(&data, &cand, &plan, 5, &CvOptions::default()).unwrap();
        assert_eq!(w, 0);
        assert_eq!(curve.n_valid_splits.len(), 1);
    }

    #[test]
    fn ccv_prefers_smaller_model_on_pure_noise() {
        // Two nested candidates on a pure-noise response: the empty set must
        // win in a clear majority of seeded trials.
        let mut wins = 0usize;
        let trials = 100usize;
        for seed in 0..trials as u64 {
            let mut rng = rng_from(10_000 + seed);
            let n = 200;
            let x = Array2::from_shape_fn((n, 3), |_| rng.sample::<f64, _>(StandardNormal));
            let y = Array1::from_shape_fn(n, |_| rng.sample::<f64, _>(StandardNormal));
            let data = Dataset::new(x, y, Family::Gaussian).unwrap();
            let plan = monte_carlo_splits(n, 15, 50, seed).unwrap();
            let cands = vec![
                (ActiveSet::empty(), 0),
                (ActiveSet::new(vec![0]).unwrap(), 1),
            ];
            let (w, _, _) = select_active_set(&data, &cands, &plan, 5, &CvOptions::default()).unwrap();
            if w == 0 {
                wins += 1;
            }
        }
        assert!(wins >= 80, "empty set won only {wins}/{trials}");
    }

    #[test]
    fn row_permutation_invariance() {
        let data = sparse_gaussian(80, 12, 31);
        let opts = CvOptions::default();
        let grid = default_grid(&data, 25, &opts).unwrap();
        let pen = PenaltySpec::lasso();
        let plan = monte_carlo_splits(80, 20, 10, 77).unwrap();
        let base = cv_nv(&data, &pen, &grid, &plan, &opts).unwrap();

        // Permute rows and carry the split indices through the permutation:
        // perm[i] is the new position of old row i.
        let mut rng = rng_from(99);
        let mut perm: Vec<usize> = (0..80).collect();
        for i in (1..80).rev() {
            let j = rng.gen_range(0..=i);
            perm.swap(i, j);
        }
        let mut inv = vec![0usize; 80];
        for (old, &new) in perm.iter().enumerate() {
            inv[new] = old;
        }
        let permuted = data.select_rows(&inv);
        let mut plan2 = plan.clone();
        for s in plan2.splits.iter_mut() {
            s.construction = s.construction.iter().map(|&i| perm[i]).collect();
            s.validation = s.validation.iter().map(|&i| perm[i]).collect();
            s.construction.sort_unstable();
            s.validation.sort_unstable();
        }
        let moved = cv_nv(&permuted, &pen, &grid, &plan2, &opts).unwrap();
        assert_eq!(base.selected_position, moved.selected_position);
        assert_eq!(base.selected_active, moved.selected_active);
        for (a, b) in base.curve.mean_loss.iter().zip(&moved.curve.mean_loss) {
            assert!((a - b).abs() <= 1e-12 || (a.is_nan() && b.is_nan()));
        }
    }

    #[test]
    fn ccv_full_model_loss_matches_brute_force() {
        // Recompute the last candidate's mean loss with an independent pass
        // over the splits (normal equations solved by Gauss elimination).
        let data = sparse_gaussian(90, 6, 61);
        let plan = monte_carlo_splits(90, 30, 8, 3).unwrap();
        let cands = vec![
            (ActiveSet::empty(), 0),
            (ActiveSet::new(vec![0, 1, 2, 3, 4, 5]).unwrap(), 1),
        ];
        let opts = CvOptions::default();
        let (_, curve, _) = select_active_set(&data, &cands, &plan, 6, &opts).unwrap();

        let mut split_means = Vec::new();
        for split in &plan.splits {
            // gauss elimination on the construction normal equations
            let d = 6usize;
            let mut a = vec![0.0f64; d * (d + 1)];
            for r in 0..d {
                for c in 0..d {
                    let mut s = 0.0;
                    for &i in &split.construction {
                        s += data.x[[i, r]] * data.x[[i, c]];
                    }
                    a[r * (d + 1) + c] = s;
                }
                let mut s = 0.0;
                for &i in &split.construction {
                    s += data.x[[i, r]] * data.y[i];
                }
                a[r * (d + 1) + d] = s;
            }
            for col in 0..d {
                let pv = a[col * (d + 1) + col];
                for row in (col + 1)..d {
                    let f = a[row * (d + 1) + col] / pv;
                    for k in col..=d {
                        a[row * (d + 1) + k] -= f * a[col * (d + 1) + k];
                    }
                }
            }
            let mut beta = vec![0.0; d];
            for row in (0..d).rev() {
                let mut s = a[row * (d + 1) + d];
                for k in (row + 1)..d {
                    s -= a[row * (d + 1) + k] * beta[k];
                }
                beta[row] = s / a[row * (d + 1) + row];
            }
            let mut total = 0.0;
            for &i in &split.validation {
                let mut theta = 0.0;
                for j in 0..d {
                    theta += beta[j] * data.x[[i, j]];
                }
                total += 0.5 * theta * theta - data.y[i] * theta;
            }
            split_means.push(total / split.validation.len() as f64);
        }
        let brute = mean(&split_means);
        assert!(
            (curve.mean_loss[1] - brute).abs() <= 1e-10,
            "{} vs {brute}",
            curve.mean_loss[1]
        );
    }

    #[test]
    fn binomial_guard_resamples_tiny_unbalanced_constructions() {
        // 6% positive labels and construction sets of 12: some splits will
        // need resampling, and the guarded plan must still be deterministic.
        let mut rng = rng_from(8);
        let n = 120;
        let x = Array2::from_shape_fn((n, 4), |_| rng.sample::<f64, _>(StandardNormal));
        let y = Array1::from_shape_fn(n, |i| if i % 17 == 0 { 1.0 } else { 0.0 });
        let data = Dataset::new(x, y, Family::Binomial).unwrap();
        let plan = monte_carlo_splits(n, 12, 40, 21).unwrap();
        let (guarded, log) = rebalance_for_binomial(&plan, &data);
        assert!(!log.is_empty(), "expected at least one resample");
        for s in &guarded.splits {
            let ones = s.construction.iter().filter(|&&i| data.y[i] == 1.0).count();
            // after up to 100 attempts the guard either balanced the split or
            // left the last candidate in place; with 7 positives available a
            // balanced draw exists and is found quickly
            assert!(ones >= 2 && s.construction.len() - ones >= 2);
        }
        let (guarded2, _) = rebalance_for_binomial(&plan, &data);
        for (a, b) in guarded.splits.iter().zip(&guarded2.splits) {
            assert_eq!(a.construction, b.construction);
        }
    }

    #[test]
    fn selection_error_when_all_candidates_starved() {
        // Constant response column => gaussian restricted fits on a duplicate
        // column pair are singular in every split.
        let mut rng = rng_from(3);
        let n = 40;
        let mut x = Array2::zeros((n, 2));
        for i in 0..n {
            let v: f64 = rng.sample(StandardNormal);
            x[[i, 0]] = v;
            x[[i, 1]] = v;
        }
        let y = Array1::from_shape_fn(n, |_| rng.sample::<f64, _>(StandardNormal));
        let data = Dataset::new(x, y, Family::Gaussian).unwrap();
        let plan = monte_carlo_splits(n, 10, 4, 5).unwrap();
        let cands = vec![(ActiveSet::new(vec![0, 1]).unwrap(), 0)];
        match select_active_set(&data, &cands, &plan, 4, &CvOptions::default()) {
            Err(Error::SelectionFailed(msg)) => assert!(msg.contains("quorum")),
            other => panic!("expected starved-candidate error, got {other:?}"),
        }
    }

    #[test]
    fn recommended_split_floor() {
        assert_eq!(recommended_min_splits(500, 63), 63);
        assert_eq!(recommended_min_splits(500, 23), 473);
    }
}
