//! Synthetic benchmark designs and the repeated selector-comparison harness.
//!
//! Rows of the design are drawn from N(0, Sigma) with `Sigma_{jk} =
//! rho^|j-k|` via the AR(1) recursion (exact for this covariance and O(np)),
//! responses follow the gaussian or logistic model, and `run_experiment`
//! repeats the configured selectors over seeded replications, aggregating
//! false negatives/positives, prediction or classification error and model
//! size into paper-style tables.

use std::time::Instant;

use ndarray::{Array1, Array2};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cv::{
    ccv, cv_nv, kfold_cv, monte_carlo_splits, CvOptions, SelectionReport, SelectionRule,
};
use crate::data::{ActiveSet, Dataset};
use crate::error::{invalid, Result};
use crate::family::{Family, LossMetric};
use crate::linalg::{dot, mean, median, sample_sd};
use crate::path::{default_min_ratio, lambda_grid, DEFAULT_N_LAMBDA};
use crate::penalty::{PenaltyKind, PenaltySpec, DEFAULT_GAMMA};
use crate::restricted::default_size_cap;
use crate::seed::{derive_seed, label_hash, rng_from};

/// Exactly column-orthonormal design (X'X/n = I to rounding) via modified
/// Gram-Schmidt with reorthogonalization, columns scaled to sum-of-squares n.
pub fn orthonormal_design(n: usize, p: usize, seed: u64) -> Array2<f64> {
    assert!(p <= n, "orthonormal design needs p <= n");
    let mut rng = rng_from(seed);
    let mut cols: Vec<Vec<f64>> = (0..p)
        .map(|_| {
            (0..n)
                .map(|_| rng.sample::<f64, _>(StandardNormal))
                .collect()
        })
        .collect();
    for j in 0..p {
        for _ in 0..2 {
            for k in 0..j {
                let proj = dot(&cols[j], &cols[k]);
                let (head, tail) = cols.split_at_mut(j);
                let ck = &head[k];
                for (vj, vk) in tail[0].iter_mut().zip(ck) {
                    *vj -= proj * vk;
                }
            }
            let nrm = dot(&cols[j], &cols[j]).sqrt();
            for v in cols[j].iter_mut() {
                *v /= nrm;
            }
        }
    }
    let root_n = (n as f64).sqrt();
    Array2::from_shape_fn((n, p), |(i, j)| cols[j][i] * root_n)
}

/// Sparse truth: the leading coefficients of beta; zeros elsewhere. Entries
/// equal to zero inside the prefix stay out of the support.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseBeta {
    pub prefix: Vec<f64>,
}

impl SparseBeta {
    pub fn from_prefix(prefix: &[f64]) -> Self {
        SparseBeta {
            prefix: prefix.to_vec(),
        }
    }

    pub fn support(&self) -> ActiveSet {
        ActiveSet::new(
            self.prefix
                .iter()
                .enumerate()
                .filter(|(_, v)| **v != 0.0)
                .map(|(j, _)| j)
                .collect(),
        )
        .expect("prefix indices are increasing")
    }

    pub fn pairs(&self) -> Vec<(usize, f64)> {
        self.prefix
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(j, &v)| (j, v))
            .collect()
    }
}

fn ar1_row(p: usize, rho: f64, rng: &mut impl Rng) -> Vec<f64> {
    let mut row = Vec::with_capacity(p);
    let innov = (1.0 - rho * rho).sqrt();
    let mut prev: f64 = rng.sample(StandardNormal);
    row.push(prev);
    for _ in 1..p {
        prev = rho * prev + innov * rng.sample::<f64, _>(StandardNormal);
        row.push(prev);
    }
    row
}

fn gen_design(
    n: usize,
    p: usize,
    rho: f64,
    beta: &SparseBeta,
    rng: &mut impl Rng,
) -> (Array2<f64>, Vec<f64>) {
    let pairs = beta.pairs();
    let mut x = Array2::zeros((n, p));
    let mut theta = Vec::with_capacity(n);
    for i in 0..n {
        let row = ar1_row(p, rho, rng);
        let mut t = 0.0;
        for &(j, v) in &pairs {
            t += v * row[j];
        }
        for (j, v) in row.into_iter().enumerate() {
            x[[i, j]] = v;
        }
        theta.push(t);
    }
    (x, theta)
}

/// Gaussian benchmark data: train and test drawn from one AR(1) law.
pub fn gen_linear(
    n: usize,
    p: usize,
    rho: f64,
    beta: &SparseBeta,
    sigma: f64,
    test_n: usize,
    seed: u64,
) -> Result<(Dataset, Dataset)> {
    check_gen_args(n, p, rho, beta, test_n)?;
    let mut rng = rng_from(seed);
    let mut make = |m: usize| -> Result<Dataset> {
        let (x, theta) = gen_design(m, p, rho, beta, &mut rng);
        let y = Array1::from_shape_fn(m, |i| {
            theta[i] + sigma * rng.sample::<f64, _>(StandardNormal)
        });
        Dataset::new(x, y, Family::Gaussian)
    };
    let train = make(n)?;
    let test = make(test_n)?;
    Ok((train, test))
}

/// Logistic benchmark data with Bernoulli responses.
pub fn gen_logistic(
    n: usize,
    p: usize,
    rho: f64,
    beta: &SparseBeta,
    test_n: usize,
    seed: u64,
) -> Result<(Dataset, Dataset)> {
    check_gen_args(n, p, rho, beta, test_n)?;
    let mut rng = rng_from(seed);
    let mut make = |m: usize| -> Result<Dataset> {
        let (x, theta) = gen_design(m, p, rho, beta, &mut rng);
        let y = Array1::from_shape_fn(m, |i| {
            let pr = Family::Binomial.b_dot(theta[i]);
            if rng.gen::<f64>() < pr {
                1.0
            } else {
                0.0
            }
        });
        Dataset::new(x, y, Family::Binomial)
    };
    let train = make(n)?;
    let test = make(test_n)?;
    Ok((train, test))
}

fn check_gen_args(n: usize, p: usize, rho: f64, beta: &SparseBeta, test_n: usize) -> Result<()> {
    if !(0.0..1.0).contains(&rho) {
        return Err(invalid(format!("rho must lie in [0,1), got {rho}")));
    }
    if beta.prefix.len() > p {
        return Err(invalid(format!(
            "beta prefix of length {} exceeds p = {p}",
            beta.prefix.len()
        )));
    }
    if n < 2 || test_n < 2 {
        return Err(invalid("need at least two train and test rows"));
    }
    Ok(())
}

/// Selector configuration inside a simulation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MethodSpec {
    Kfold { k: usize, rule: SelectionRule },
    CvNv { n_c: usize, r: usize },
    Ccv { n_c: usize, r: usize },
}

impl MethodSpec {
    pub fn label(&self) -> String {
        match self {
            MethodSpec::Kfold {
                k,
                rule: SelectionRule::Min,
            } => format!("kfold{k}"),
            MethodSpec::Kfold {
                k,
                rule: SelectionRule::OneSe,
            } => format!("kfold{k}_1se"),
            MethodSpec::CvNv { n_c, r } => format!("cv_nv{n_c}_r{r}"),
            MethodSpec::Ccv { n_c, r } => format!("ccv{n_c}_r{r}"),
        }
    }

    /// Construction-set size, when the method has one.
    pub fn n_c(&self) -> Option<usize> {
        match self {
            MethodSpec::Kfold { .. } => None,
            MethodSpec::CvNv { n_c, .. } | MethodSpec::Ccv { n_c, .. } => Some(*n_c),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PenaltyConfig {
    pub kind: PenaltyKind,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
}

fn default_gamma() -> f64 {
    DEFAULT_GAMMA
}

impl PenaltyConfig {
    pub fn spec(&self) -> Result<PenaltySpec> {
        PenaltySpec::new(self.kind, self.gamma)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimConfig {
    pub family: Family,
    pub n: usize,
    pub p: usize,
    pub rho: f64,
    pub beta_prefix: Vec<f64>,
    #[serde(default = "one")]
    pub sigma: f64,
    pub penalties: Vec<PenaltyConfig>,
    pub methods: Vec<MethodSpec>,
    pub n_reps: usize,
    pub base_seed: u64,
    /// 0 means "same as n".
    #[serde(default)]
    pub test_size: usize,
    /// 0 means the default grid length.
    #[serde(default)]
    pub n_lambda: usize,
    /// Candidate-size cap for ccv; defaults from (n, p).
    #[serde(default)]
    pub size_cap: Option<usize>,
}

fn one() -> f64 {
    1.0
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_reps < 1 {
            return Err(invalid("n_reps must be at least 1"));
        }
        if !(0.0..1.0).contains(&self.rho) {
            return Err(invalid("rho must lie in [0,1)"));
        }
        if self.beta_prefix.len() > self.p {
            return Err(invalid("beta prefix longer than p"));
        }
        if self.penalties.is_empty() || self.methods.is_empty() {
            return Err(invalid("need at least one penalty and one method"));
        }
        for m in &self.methods {
            if let Some(n_c) = m.n_c() {
                if n_c >= self.n {
                    return Err(invalid(format!(
                        "method {} has n_c >= n",
                        m.label()
                    )));
                }
            }
            if let MethodSpec::Kfold { k, .. } = m {
                if *k < 2 || *k > self.n {
                    return Err(invalid("kfold k out of range"));
                }
            }
        }
        for pc in &self.penalties {
            pc.spec()?;
        }
        Ok(())
    }

    pub fn test_n(&self) -> usize {
        if self.test_size == 0 {
            self.n
        } else {
            self.test_size
        }
    }

    pub fn grid_len(&self) -> usize {
        if self.n_lambda == 0 {
            DEFAULT_N_LAMBDA
        } else {
            self.n_lambda
        }
    }

    pub fn loss_metric(&self) -> LossMetric {
        match self.family {
            Family::Gaussian => LossMetric::Pe,
            Family::Binomial => LossMetric::Ce,
        }
    }
}

/// Per-replication outcome of one (penalty, method) cell.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Metrics {
    pub method: String,
    pub penalty: String,
    pub rep: usize,
    pub fn_count: usize,
    pub fp_count: usize,
    /// Prediction error (gaussian) or classification error (binomial) of the
    /// restricted-MLE refit on the test set.
    pub loss: f64,
    /// Same loss for the penalized whole-data coefficients at the selection.
    pub loss_penalized: Option<f64>,
    pub model_size: usize,
    pub selected_lambda: Option<f64>,
    /// Wall-clock seconds; excluded from serialized payloads so identical
    /// configurations produce byte-identical artifacts.
    #[serde(skip)]
    pub runtime: f64,
}

/// Support comparison and test-set loss for a selection.
pub fn evaluate(
    report: &SelectionReport,
    truth: &SparseBeta,
    test: &Dataset,
) -> Result<Metrics> {
    let support = truth.support();
    let selected = &report.selected_active;
    let fn_count = support
        .indices()
        .iter()
        .filter(|j| !selected.contains(**j))
        .count();
    let fp_count = selected
        .indices()
        .iter()
        .filter(|j| !support.contains(**j))
        .count();
    let metric = match test.family {
        Family::Gaussian => LossMetric::Pe,
        Family::Binomial => LossMetric::Ce,
    };
    let refit_full = report.refit.full_coef(test.p());
    let loss = crate::data::prediction_loss(
        test.family,
        &refit_full,
        report.refit.intercept,
        test,
        metric,
    )?;
    let loss_penalized = match &report.penalized {
        Some(pairs) => {
            let mut dense = vec![0.0; test.p()];
            for &(j, v) in pairs {
                dense[j] = v;
            }
            Some(crate::data::prediction_loss(
                test.family,
                &dense,
                report.penalized_intercept,
                test,
                metric,
            )?)
        }
        None => None,
    };
    Ok(Metrics {
        method: report.method.name().to_string(),
        penalty: String::new(),
        rep: 0,
        fn_count,
        fp_count,
        loss,
        loss_penalized,
        model_size: selected.size(),
        selected_lambda: report.selected_lambda,
        runtime: 0.0,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AggregateRow {
    pub method: String,
    pub penalty: String,
    pub metric: String,
    pub mean: f64,
    pub sd: f64,
    pub n_ok: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MedianRow {
    pub method: String,
    pub penalty: String,
    pub n_c: usize,
    pub median_fp: f64,
    pub neg_median_fn: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FailureRecord {
    pub method: String,
    pub penalty: String,
    pub rep: usize,
    pub error: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub per_rep: Vec<Metrics>,
    pub aggregate: Vec<AggregateRow>,
    pub median_series: Vec<MedianRow>,
    pub failures: Vec<FailureRecord>,
}

fn run_method(
    method: &MethodSpec,
    data: &Dataset,
    penalty: &PenaltySpec,
    grid: &crate::path::LambdaGrid,
    size_cap: usize,
    split_seed: u64,
    opts: &CvOptions,
) -> Result<SelectionReport> {
    match *method {
        MethodSpec::Kfold { k, rule } => kfold_cv(data, penalty, grid, k, rule, split_seed, opts),
        MethodSpec::CvNv { n_c, r } => {
            let plan = monte_carlo_splits(data.n(), n_c, r, split_seed)?;
            cv_nv(data, penalty, grid, &plan, opts)
        }
        MethodSpec::Ccv { n_c, r } => {
            let plan = monte_carlo_splits(data.n(), n_c, r, split_seed)?;
            ccv(data, penalty, grid, &plan, size_cap, opts)
        }
    }
}

/// Run every (penalty, method) cell over seeded replications.
///
/// Replication `rep` uses seed `base_seed + rep` for the data and a seed
/// derived from (rep seed, method label hash) for its splits, so methods see
/// the same data with independent splits. Failed selections are excluded
/// from the aggregates and recorded.
pub fn run_experiment(config: &SimConfig) -> Result<ExperimentResult> {
    config.validate()?;
    let truth = SparseBeta::from_prefix(&config.beta_prefix);
    let size_cap = config
        .size_cap
        .unwrap_or_else(|| default_size_cap(config.n, config.p));
    let opts = CvOptions::default();

    type RepOut = (Vec<Metrics>, Vec<FailureRecord>);
    let reps: Vec<RepOut> = (0..config.n_reps)
        .into_par_iter()
        .map(|rep| -> RepOut {
            let rep_seed = config.base_seed + rep as u64;
            let mut metrics = Vec::new();
            let mut failures = Vec::new();
            let generated = match config.family {
                Family::Gaussian => gen_linear(
                    config.n,
                    config.p,
                    config.rho,
                    &truth,
                    config.sigma,
                    config.test_n(),
                    rep_seed,
                ),
                Family::Binomial => gen_logistic(
                    config.n,
                    config.p,
                    config.rho,
                    &truth,
                    config.test_n(),
                    rep_seed,
                ),
            };
            let (train, test) = match generated {
                Ok(pair) => pair,
                Err(e) => {
                    failures.push(FailureRecord {
                        method: "*".into(),
                        penalty: "*".into(),
                        rep,
                        error: e.to_string(),
                    });
                    return (metrics, failures);
                }
            };
            let grid = match lambda_grid(
                &train,
                config.grid_len(),
                default_min_ratio(train.n(), train.p()),
            ) {
                Ok(g) => g,
                Err(e) => {
                    failures.push(FailureRecord {
                        method: "*".into(),
                        penalty: "*".into(),
                        rep,
                        error: e.to_string(),
                    });
                    return (metrics, failures);
                }
            };
            for pc in &config.penalties {
                let penalty = pc.spec().expect("validated");
                for method in &config.methods {
                    let label = method.label();
                    let split_seed = derive_seed(rep_seed, label_hash(&label));
                    let started = Instant::now();
                    match run_method(method, &train, &penalty, &grid, size_cap, split_seed, &opts)
                    {
                        Ok(report) => match evaluate(&report, &truth, &test) {
                            Ok(mut m) => {
                                m.method = label;
                                m.penalty = pc.kind.name().to_string();
                                m.rep = rep;
                                m.runtime = started.elapsed().as_secs_f64();
                                metrics.push(m);
                            }
                            Err(e) => failures.push(FailureRecord {
                                method: label,
                                penalty: pc.kind.name().to_string(),
                                rep,
                                error: e.to_string(),
                            }),
                        },
                        Err(e) => failures.push(FailureRecord {
                            method: label,
                            penalty: pc.kind.name().to_string(),
                            rep,
                            error: e.to_string(),
                        }),
                    }
                }
            }
            (metrics, failures)
        })
        .collect();

    let mut per_rep = Vec::new();
    let mut failures = Vec::new();
    for (m, f) in reps {
        per_rep.extend(m);
        failures.extend(f);
    }

    let aggregate = aggregate_metrics(config, &per_rep);
    let median_series = median_series(config, &per_rep);
    Ok(ExperimentResult {
        per_rep,
        aggregate,
        median_series,
        failures,
    })
}

fn cell_metrics<'a>(
    per_rep: &'a [Metrics],
    method: &str,
    penalty: &str,
) -> Vec<&'a Metrics> {
    per_rep
        .iter()
        .filter(|m| m.method == method && m.penalty == penalty)
        .collect()
}

fn aggregate_metrics(config: &SimConfig, per_rep: &[Metrics]) -> Vec<AggregateRow> {
    let loss_name = match config.family {
        Family::Gaussian => "pe",
        Family::Binomial => "ce",
    };
    let mut rows = Vec::new();
    for pc in &config.penalties {
        for method in &config.methods {
            let label = method.label();
            let cell = cell_metrics(per_rep, &label, pc.kind.name());
            let n_ok = cell.len();
            let columns: [(&str, Vec<f64>); 4] = [
                ("fn", cell.iter().map(|m| m.fn_count as f64).collect()),
                ("fp", cell.iter().map(|m| m.fp_count as f64).collect()),
                (loss_name, cell.iter().map(|m| m.loss).collect()),
                ("size", cell.iter().map(|m| m.model_size as f64).collect()),
            ];
            for (name, values) in columns {
                rows.push(AggregateRow {
                    method: label.clone(),
                    penalty: pc.kind.name().to_string(),
                    metric: name.to_string(),
                    mean: if values.is_empty() { f64::NAN } else { mean(&values) },
                    sd: sample_sd(&values),
                    n_ok,
                });
            }
        }
    }
    rows
}

/// Median false positives (plotted positive) and false negatives (plotted
/// negative) per cell, the construction-size sweep series.
fn median_series(config: &SimConfig, per_rep: &[Metrics]) -> Vec<MedianRow> {
    let mut rows = Vec::new();
    for pc in &config.penalties {
        for method in &config.methods {
            let label = method.label();
            let cell = cell_metrics(per_rep, &label, pc.kind.name());
            if cell.is_empty() {
                continue;
            }
            let fps: Vec<f64> = cell.iter().map(|m| m.fp_count as f64).collect();
            let fns: Vec<f64> = cell.iter().map(|m| m.fn_count as f64).collect();
            rows.push(MedianRow {
                method: label,
                penalty: pc.kind.name().to_string(),
                n_c: method.n_c().unwrap_or(0),
                median_fp: median(&fps),
                neg_median_fn: -median(&fns),
            });
        }
    }
    rows
}

/// Paper-style text table: one row per (penalty, method), `mean(sd)` cells.
pub fn format_table(config: &SimConfig, result: &ExperimentResult) -> String {
    let loss_name = match config.family {
        Family::Gaussian => "PE",
        Family::Binomial => "CE",
    };
    let mut out = String::new();
    out.push_str(&format!(
        "{:<16} {:<10} {:>14} {:>14} {:>14} {:>14} {:>6}\n",
        "method", "penalty", "FN", "FP", loss_name, "size", "n_ok"
    ));
    let cell = |mean: f64, sd: f64| format!("{:.2}({:.2})", mean, sd);
    for pc in &config.penalties {
        for method in &config.methods {
            let label = method.label();
            let find = |metric: &str| {
                result
                    .aggregate
                    .iter()
                    .find(|r| r.method == label && r.penalty == pc.kind.name() && r.metric == metric)
            };
            let (f_n, f_p, loss, size) = (
                find("fn"),
                find("fp"),
                find(&loss_name.to_lowercase()),
                find("size"),
            );
            if let (Some(f_n), Some(f_p), Some(loss), Some(size)) = (f_n, f_p, loss, size) {
                out.push_str(&format!(
                    "{:<16} {:<10} {:>14} {:>14} {:>14} {:>14} {:>6}\n",
                    label,
                    pc.kind.name(),
                    cell(f_n.mean, f_n.sd),
                    cell(f_p.mean, f_p.sd),
                    cell(loss.mean, loss.sd),
                    cell(size.mean, size.sd),
                    f_n.n_ok
                ));
            }
        }
    }
    if !result.failures.is_empty() {
        out.push_str(&format!("failures: {}\n", result.failures.len()));
    }
    out
}
