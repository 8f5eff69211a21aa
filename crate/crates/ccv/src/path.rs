//! Regularization solution paths by cyclic coordinate descent.
//!
//! The solver minimizes `-loglik(y; X beta) + sum_j rho(|beta_j|; lambda)`
//! over a decreasing log-spaced lambda grid with warm starts. Columns are
//! standardized internally (root-mean-square scaling, plus centering when an
//! intercept is requested) and coefficients are returned on the original
//! scale; `lambda_grid` and `kkt_residual` use the same standardization so
//! the three operations describe one optimization problem. For binomial data
//! an outer quadratic-majorization loop with step halving wraps the weighted
//! inner coordinate descent.

use serde::{Deserialize, Serialize};

use crate::data::{ActiveSet, Dataset};
use crate::error::{invalid, Error, Result};
use crate::family::{nll_unchecked, Family};
use crate::linalg::dot;
use crate::penalty::PenaltySpec;

pub const DEFAULT_N_LAMBDA: usize = 100;
pub const DEFAULT_TOL: f64 = 1e-7;
pub const DEFAULT_MAX_INNER: usize = 10_000;
pub const DEFAULT_MAX_OUTER: usize = 100;

/// Default smallest-to-largest lambda ratio: 0.001 when n > p, 0.05 otherwise.
pub fn default_min_ratio(n: usize, p: usize) -> f64 {
    if n > p {
        0.001
    } else {
        0.05
    }
}

/// Strictly decreasing, log-equispaced penalty levels.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LambdaGrid {
    values: Vec<f64>,
    pub lambda_max: f64,
    pub min_ratio: f64,
}

impl LambdaGrid {
    pub fn log_spaced(lambda_max: f64, n_lambda: usize, min_ratio: f64) -> Result<Self> {
        if !(lambda_max.is_finite() && lambda_max > 0.0) {
            return Err(invalid(format!("lambda_max must be positive, got {lambda_max}")));
        }
        if n_lambda < 2 {
            return Err(invalid("n_lambda must be at least 2"));
        }
        if !(min_ratio > 0.0 && min_ratio < 1.0) {
            return Err(invalid(format!("min_ratio must lie in (0,1), got {min_ratio}")));
        }
        let n = n_lambda;
        let log_max = lambda_max.ln();
        let step = min_ratio.ln() / (n - 1) as f64;
        let mut values = Vec::with_capacity(n);
        values.push(lambda_max);
        for k in 1..(n - 1) {
            values.push((log_max + step * k as f64).exp());
        }
        values.push(lambda_max * min_ratio);
        Ok(LambdaGrid {
            values,
            lambda_max,
            min_ratio,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Check the grid invariants: head/tail endpoints and equal log spacing
    /// (tolerance 1e-10).
    pub fn validate(&self) -> Result<()> {
        let n = self.values.len();
        if n < 2 {
            return Err(invalid("grid needs at least two values"));
        }
        if self.values[0] != self.lambda_max {
            return Err(invalid("grid must start at lambda_max"));
        }
        let tail = self.lambda_max * self.min_ratio;
        if (self.values[n - 1] - tail).abs() > 1e-10 * tail.abs().max(1e-300) {
            return Err(invalid("grid must end at lambda_max * min_ratio"));
        }
        let step = self.min_ratio.ln() / (n - 1) as f64;
        for w in self.values.windows(2) {
            if !(w[1] > 0.0 && w[1] < w[0]) {
                return Err(invalid("grid must be strictly decreasing and positive"));
            }
            if ((w[1] / w[0]).ln() - step).abs() > 1e-10 {
                return Err(invalid("grid must be log-equispaced"));
            }
        }
        Ok(())
    }
}

/// Solver options. `tol` bounds the largest standardized-coefficient change
/// per sweep; `max_inner` caps coordinate sweeps per outer iteration and
/// `max_outer` caps majorization steps (one outer iteration suffices for
/// gaussian data).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitOptions {
    pub tol: f64,
    pub max_inner: usize,
    pub max_outer: usize,
    pub intercept: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            tol: DEFAULT_TOL,
            max_inner: DEFAULT_MAX_INNER,
            max_outer: DEFAULT_MAX_OUTER,
            intercept: false,
        }
    }
}

/// Coefficients along the grid, sparse by active index, on the original
/// column scale.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolutionPath {
    pub grid: LambdaGrid,
    pub penalty: PenaltySpec,
    /// Per grid point: (column, coefficient) pairs sorted by column.
    pub betas: Vec<Vec<(usize, f64)>>,
    /// Per grid point intercept; all zero when fitted without intercept.
    pub intercepts: Vec<f64>,
    pub active_sets: Vec<ActiveSet>,
    /// Coordinate sweeps spent per grid point.
    pub n_iter: Vec<usize>,
    pub converged: Vec<bool>,
    pub intercept_enabled: bool,
    pub p: usize,
    /// Penalized objective after each accepted sweep/outer step, per grid
    /// point. Not serialized.
    #[serde(skip)]
    pub objective_traces: Vec<Vec<f64>>,
}

impl SolutionPath {
    pub fn len(&self) -> usize {
        self.betas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.betas.is_empty()
    }

    pub fn dense_beta(&self, k: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.p];
        for &(j, v) in &self.betas[k] {
            out[j] = v;
        }
        out
    }

    pub fn nonzero_count(&self, k: usize) -> usize {
        self.betas[k].len()
    }
}

pub(crate) struct Standardized {
    pub cols: Vec<Vec<f64>>,
    pub center: Vec<f64>,
    pub scale: Vec<f64>,
    /// False for constant columns, which are excluded from the fit.
    pub usable: Vec<bool>,
    pub n: usize,
}

pub(crate) fn standardize(data: &Dataset, intercept: bool) -> Standardized {
    let n = data.n();
    let p = data.p();
    let nf = n as f64;
    let mut cols = Vec::with_capacity(p);
    let mut center = vec![0.0; p];
    let mut scale = vec![0.0; p];
    let mut usable = vec![false; p];
    for j in 0..p {
        let col = data.x.column(j);
        let c = if intercept { col.sum() / nf } else { 0.0 };
        let ss: f64 = col.iter().map(|v| (v - c) * (v - c)).sum();
        let s = (ss / nf).sqrt();
        center[j] = c;
        scale[j] = s;
        if s > 0.0 {
            usable[j] = true;
            cols.push(col.iter().map(|v| (v - c) / s).collect());
        } else {
            cols.push(Vec::new());
        }
    }
    Standardized {
        cols,
        center,
        scale,
        usable,
        n,
    }
}

fn null_intercept(data: &Dataset) -> f64 {
    let ybar = data.y.sum() / data.n() as f64;
    match data.family {
        Family::Gaussian => ybar,
        Family::Binomial => {
            let eps = 1e-12;
            let p = ybar.clamp(eps, 1.0 - eps);
            (p / (1.0 - p)).ln()
        }
    }
}

fn lambda_max_standardized(data: &Dataset, std: &Standardized, intercept: bool) -> f64 {
    let n = std.n as f64;
    let b0 = if intercept { null_intercept(data) } else { 0.0 };
    let mu = data.family.b_dot(b0);
    let resid: Vec<f64> = data.y.iter().map(|y| y - mu).collect();
    let mut lmax = 0.0f64;
    for j in 0..data.p() {
        if !std.usable[j] {
            continue;
        }
        let g = dot(&std.cols[j], &resid) / n;
        lmax = lmax.max(g.abs());
    }
    lmax
}

/// Grid starting at the smallest lambda whose solution is identically zero.
pub fn lambda_grid(data: &Dataset, n_lambda: usize, min_ratio: f64) -> Result<LambdaGrid> {
    lambda_grid_with(data, n_lambda, min_ratio, false)
}

/// As [`lambda_grid`], with the null fit taken as an intercept-only model
/// when `intercept` is set.
pub fn lambda_grid_with(
    data: &Dataset,
    n_lambda: usize,
    min_ratio: f64,
    intercept: bool,
) -> Result<LambdaGrid> {
    let std = standardize(data, intercept);
    let lmax = lambda_max_standardized(data, &std, intercept);
    if !(lmax > 0.0) {
        return Err(Error::DegenerateGrid);
    }
    LambdaGrid::log_spaced(lmax, n_lambda, min_ratio)
}

/// Fit the whole path with warm starts. Points that exhaust the iteration
/// budget are flagged `converged = false`, never silently dropped.
pub fn fit_path(
    data: &Dataset,
    penalty: &PenaltySpec,
    grid: &LambdaGrid,
    opts: &FitOptions,
) -> Result<SolutionPath> {
    grid.validate()?;
    if !(opts.tol > 0.0) {
        return Err(invalid("tol must be positive"));
    }
    let std = standardize(data, opts.intercept);
    match data.family {
        Family::Gaussian => fit_gaussian(data, penalty, grid, opts, &std),
        Family::Binomial => fit_binomial(data, penalty, grid, opts, &std),
    }
}

fn store_point(
    path: &mut SolutionPath,
    std: &Standardized,
    b: &[f64],
    b0: f64,
    sweeps: usize,
    converged: bool,
    trace: Vec<f64>,
) {
    let mut sparse = Vec::new();
    let mut shift = 0.0;
    for (j, &bj) in b.iter().enumerate() {
        if bj != 0.0 {
            let orig = bj / std.scale[j];
            sparse.push((j, orig));
            shift += std.center[j] * orig;
        }
    }
    let intercept = if path.intercept_enabled { b0 - shift } else { 0.0 };
    path.active_sets
        .push(ActiveSet::new(sparse.iter().map(|&(j, _)| j).collect()).expect("sorted"));
    path.betas.push(sparse);
    path.intercepts.push(intercept);
    path.n_iter.push(sweeps);
    path.converged.push(converged);
    path.objective_traces.push(trace);
}

fn empty_path(grid: &LambdaGrid, penalty: &PenaltySpec, p: usize, intercept: bool) -> SolutionPath {
    SolutionPath {
        grid: grid.clone(),
        penalty: *penalty,
        betas: Vec::new(),
        intercepts: Vec::new(),
        active_sets: Vec::new(),
        n_iter: Vec::new(),
        converged: Vec::new(),
        intercept_enabled: intercept,
        p,
        objective_traces: Vec::new(),
    }
}

fn penalty_total(pen: &PenaltySpec, lambda: f64, b: &[f64]) -> f64 {
    b.iter()
        .filter(|v| **v != 0.0)
        .map(|v| pen.rho(lambda, v.abs()))
        .sum()
}

fn fit_gaussian(
    data: &Dataset,
    pen: &PenaltySpec,
    grid: &LambdaGrid,
    opts: &FitOptions,
    std: &Standardized,
) -> Result<SolutionPath> {
    let n = std.n;
    let nf = n as f64;
    let p = data.p();
    let y = data.y.as_slice().expect("contiguous");
    let yy = dot(y, y);

    let mut path = empty_path(grid, pen, p, opts.intercept);
    let mut b = vec![0.0f64; p];
    let mut b0 = if opts.intercept { null_intercept(data) } else { 0.0 };
    let mut r: Vec<f64> = y.iter().map(|yi| yi - b0).collect();

    // With standardized columns every curvature term is exactly 1.
    let objective = |r: &[f64], b: &[f64], lambda: f64| -> f64 {
        (dot(r, r) - yy) / (2.0 * nf) + penalty_total(pen, lambda, b)
    };

    for &lambda in grid.values() {
        let mut sweeps = 0usize;
        let mut converged = false;
        let mut trace = vec![objective(&r, &b, lambda)];

        let sweep = |b: &mut Vec<f64>, b0: &mut f64, r: &mut Vec<f64>, active_only: bool| -> f64 {
            let mut max_delta = 0.0f64;
            if opts.intercept {
                let d0 = r.iter().sum::<f64>() / nf;
                if d0 != 0.0 {
                    *b0 += d0;
                    for ri in r.iter_mut() {
                        *ri -= d0;
                    }
                    max_delta = max_delta.max(d0.abs());
                }
            }
            for j in 0..p {
                if !std.usable[j] || (active_only && b[j] == 0.0) {
                    continue;
                }
                let col = &std.cols[j];
                let z = dot(col, r) / nf + b[j];
                let new = pen.cd_update(z, 1.0, lambda, b[j]);
                let delta = new - b[j];
                if delta != 0.0 {
                    for (ri, cij) in r.iter_mut().zip(col) {
                        *ri -= delta * cij;
                    }
                    b[j] = new;
                    max_delta = max_delta.max(delta.abs());
                }
            }
            max_delta
        };

        'point: loop {
            let d = sweep(&mut b, &mut b0, &mut r, false);
            sweeps += 1;
            trace.push(objective(&r, &b, lambda));
            if d <= opts.tol {
                converged = true;
                break 'point;
            }
            if sweeps >= opts.max_inner {
                break 'point;
            }
            loop {
                let d = sweep(&mut b, &mut b0, &mut r, true);
                sweeps += 1;
                trace.push(objective(&r, &b, lambda));
                if d <= opts.tol {
                    break;
                }
                if sweeps >= opts.max_inner {
                    break 'point;
                }
            }
        }
        store_point(&mut path, std, &b, b0, sweeps, converged, trace);
    }
    Ok(path)
}

fn fit_binomial(
    data: &Dataset,
    pen: &PenaltySpec,
    grid: &LambdaGrid,
    opts: &FitOptions,
    std: &Standardized,
) -> Result<SolutionPath> {
    let n = std.n;
    let nf = n as f64;
    let p = data.p();
    let y = data.y.as_slice().expect("contiguous");

    let mut path = empty_path(grid, pen, p, opts.intercept);
    let mut b = vec![0.0f64; p];
    let mut b0 = if opts.intercept { null_intercept(data) } else { 0.0 };
    let mut theta = vec![b0; n];

    let objective = |theta: &[f64], b: &[f64], lambda: f64| -> f64 {
        nll_unchecked(Family::Binomial, theta, y) + penalty_total(pen, lambda, b)
    };

    for &lambda in grid.values() {
        let mut sweeps = 0usize;
        let mut converged = false;
        let mut trace = vec![objective(&theta, &b, lambda)];

        'outer: for _outer in 0..opts.max_outer {
            let obj_start = *trace.last().expect("nonempty");
            let w: Vec<f64> = theta.iter().map(|&t| Family::Binomial.b_ddot(t)).collect();
            let mut u: Vec<f64> = theta
                .iter()
                .zip(y)
                .map(|(&t, &yi)| yi - Family::Binomial.b_dot(t))
                .collect();
            let mut v = vec![0.0f64; p];
            for j in 0..p {
                if std.usable[j] {
                    v[j] = std.cols[j]
                        .iter()
                        .zip(&w)
                        .map(|(c, wi)| wi * c * c)
                        .sum::<f64>()
                        / nf;
                }
            }
            let v0 = w.iter().sum::<f64>() / nf;

            let b_start = b.clone();
            let b0_start = b0;
            let mut dtheta = vec![0.0f64; n];
            let mut inner_sweeps = 0usize;

            let sweep = |b: &mut Vec<f64>,
                         b0: &mut f64,
                         u: &mut Vec<f64>,
                         dtheta: &mut Vec<f64>,
                         active_only: bool|
             -> f64 {
                let mut max_delta = 0.0f64;
                if opts.intercept && v0 > 1e-12 {
                    let d0 = u.iter().sum::<f64>() / nf / v0;
                    if d0 != 0.0 {
                        *b0 += d0;
                        for ((ui, wi), di) in u.iter_mut().zip(&w).zip(dtheta.iter_mut()) {
                            *ui -= d0 * wi;
                            *di += d0;
                        }
                        max_delta = max_delta.max(d0.abs());
                    }
                }
                for j in 0..p {
                    if !std.usable[j] || v[j] <= 1e-12 || (active_only && b[j] == 0.0) {
                        continue;
                    }
                    let col = &std.cols[j];
                    let z = dot(col, u) / nf + v[j] * b[j];
                    let new = pen.cd_update(z, v[j], lambda, b[j]);
                    let delta = new - b[j];
                    if delta != 0.0 {
                        for ((ui, wi), (cij, di)) in
                            u.iter_mut().zip(&w).zip(col.iter().zip(dtheta.iter_mut()))
                        {
                            *ui -= delta * wi * cij;
                            *di += delta * cij;
                        }
                        b[j] = new;
                        max_delta = max_delta.max(delta.abs());
                    }
                }
                max_delta
            };

            'inner: loop {
                let d = sweep(&mut b, &mut b0, &mut u, &mut dtheta, false);
                inner_sweeps += 1;
                if d <= opts.tol || inner_sweeps >= opts.max_inner {
                    break 'inner;
                }
                loop {
                    let d = sweep(&mut b, &mut b0, &mut u, &mut dtheta, true);
                    inner_sweeps += 1;
                    if d <= opts.tol {
                        break;
                    }
                    if inner_sweeps >= opts.max_inner {
                        break 'inner;
                    }
                }
            }
            sweeps += inner_sweeps;

            // Line search on the accepted fraction of the inner step.
            let full_step: Vec<f64> = b.iter().zip(&b_start).map(|(nb, ob)| nb - ob).collect();
            let d0_step = b0 - b0_start;
            let mut accepted = false;
            let mut t = 1.0f64;
            let mut obj_new = obj_start;
            let mut theta_t = theta.clone();
            let mut b_t = b_start.clone();
            let mut b0_t = b0_start;
            for _ in 0..21 {
                for (tt, (&base, &dt)) in theta_t.iter_mut().zip(theta.iter().zip(&dtheta)) {
                    *tt = base + t * dt;
                }
                for (bt, (&base, &st)) in b_t.iter_mut().zip(b_start.iter().zip(&full_step)) {
                    *bt = base + t * st;
                }
                b0_t = b0_start + t * d0_step;
                obj_new = objective(&theta_t, &b_t, lambda);
                if obj_new <= obj_start + 1e-12 * (1.0 + obj_start.abs()) {
                    accepted = true;
                    break;
                }
                t *= 0.5;
            }
            if !accepted {
                // Could not make progress; keep the last accepted iterate.
                b = b_start;
                b0 = b0_start;
                break 'outer;
            }
            if obj_new > obj_start + 1e-8 {
                return Err(Error::SolverDivergence {
                    lambda,
                    rise: obj_new - obj_start,
                });
            }
            let step_size = t * full_step
                .iter()
                .fold(d0_step.abs(), |acc, s| acc.max(s.abs()));
            b = b_t;
            b0 = b0_t;
            theta = theta_t;
            trace.push(obj_new);
            if t == 1.0 && step_size <= opts.tol {
                converged = true;
                break 'outer;
            }
        }
        store_point(&mut path, std, &b, b0, sweeps, converged, trace);
    }
    Ok(path)
}

/// Worst first-order stationarity violation of `beta` (original scale) for
/// the intercept-free penalized objective at `lambda`.
///
/// Active coordinates contribute `| |g_j| - rho'(|b_j|) |` including sign
/// mismatches, inactive ones `max(|g_j| - lambda, 0)`, where `g_j` is the
/// gradient along the internally standardized column j.
pub fn kkt_residual(data: &Dataset, penalty: &PenaltySpec, lambda: f64, beta: &[f64]) -> f64 {
    assert_eq!(beta.len(), data.p(), "beta length must equal p");
    let std = standardize(data, false);
    let n = std.n as f64;
    let theta = data.linear_predictor(beta, 0.0);
    let resid: Vec<f64> = theta
        .iter()
        .zip(data.y.iter())
        .map(|(&t, &yi)| yi - data.family.b_dot(t))
        .collect();
    let mut worst = 0.0f64;
    for j in 0..data.p() {
        if !std.usable[j] {
            continue;
        }
        let g = dot(&std.cols[j], &resid) / n;
        let bj = beta[j] * std.scale[j];
        let viol = if bj != 0.0 {
            (g - bj.signum() * penalty.rho_prime(lambda, bj.abs())).abs()
        } else {
            (g.abs() - lambda).max(0.0)
        };
        worst = worst.max(viol);
    }
    worst
}

/// Collapse consecutive duplicate active sets, keeping the earliest grid
/// position of each run. A set that reappears later is a separate entry.
pub fn active_set_sequence(path: &SolutionPath) -> Vec<(ActiveSet, usize)> {
    dedup_consecutive(&path.active_sets)
}

pub(crate) fn dedup_consecutive(sets: &[ActiveSet]) -> Vec<(ActiveSet, usize)> {
    let mut out: Vec<(ActiveSet, usize)> = Vec::new();
    for (k, s) in sets.iter().enumerate() {
        if out.last().map(|(prev, _)| prev != s).unwrap_or(true) {
            out.push((s.clone(), k));
        }
    }
    out
}
