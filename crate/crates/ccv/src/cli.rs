//! Command-line front end: argument types, dispatch and report emission.
//!
//! Identical command lines produce identical output files; anything
//! wall-clock dependent stays on stderr.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::cv::{
    ccv, cv_nv, kfold_cv, monte_carlo_splits, recommended_min_splits, CvOptions, SelectionReport,
    SelectionRule,
};
use crate::data::Dataset;
use crate::diagnostics::{
    coherent_rate, order_stats_probability, shrinkage_decomposition, theoretical_lambda_series,
    universal_threshold, RhoModel,
};
use crate::error::{invalid, Result};
use crate::family::Family;
use crate::io::{
    load_csv, write_aggregate_csv, write_failures_csv, write_median_csv, write_per_rep_csv,
    write_series_csv,
};
use crate::path::{
    default_min_ratio, fit_path, lambda_grid_with, FitOptions, SolutionPath, DEFAULT_N_LAMBDA,
};
use crate::penalty::{PenaltySpec, DEFAULT_GAMMA};
use crate::restricted::default_size_cap;
use crate::sim::{format_table, run_experiment, MethodSpec, SimConfig};

pub const SCHEMA_VERSION: &str = "1";

#[derive(Debug, Parser)]
#[command(name = "ccv", version, about = "Penalized GLM paths and cross-validation selectors")]
pub struct Cli {
    /// Worker threads (1 = sequential). Results are identical at any count.
    #[arg(long, global = true, default_value_t = 1)]
    pub threads: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a penalized solution path on a CSV dataset
    Fit(FitArgs),
    /// Select the penalty level / model by cross-validation
    Cv(CvArgs),
    /// Run a simulation experiment from a JSON configuration
    Simulate(SimulateArgs),
    /// Diagnostic series and reference values
    Diagnose {
        #[command(subcommand)]
        what: DiagnoseCommand,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FamilyArg {
    Gaussian,
    Binomial,
}

impl From<FamilyArg> for Family {
    fn from(f: FamilyArg) -> Family {
        match f {
            FamilyArg::Gaussian => Family::Gaussian,
            FamilyArg::Binomial => Family::Binomial,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum PenaltyArg {
    Lasso,
    Scad,
    Mcp,
}

impl PenaltyArg {
    fn spec(self, gamma: f64) -> Result<PenaltySpec> {
        match self {
            PenaltyArg::Lasso => Ok(PenaltySpec::lasso()),
            PenaltyArg::Scad => PenaltySpec::scad(gamma),
            PenaltyArg::Mcp => PenaltySpec::mcp(gamma),
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MethodArg {
    Kfold,
    Kfold1se,
    CvNv,
    Ccv,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FormatArg {
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// CSV file with a header row
    #[arg(long)]
    pub data: PathBuf,
    /// Name of the response column
    #[arg(long)]
    pub response: String,
    #[arg(long, value_enum, default_value = "gaussian")]
    pub family: FamilyArg,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, value_enum, default_value = "lasso")]
    pub penalty: PenaltyArg,
    #[arg(long, default_value_t = DEFAULT_GAMMA)]
    pub gamma: f64,
    #[arg(long, default_value_t = DEFAULT_N_LAMBDA)]
    pub n_lambda: usize,
    /// Smallest/largest lambda ratio; defaults by shape (0.001 if n > p else 0.05)
    #[arg(long)]
    pub min_ratio: Option<f64>,
    /// Fit an unpenalized intercept
    #[arg(long)]
    pub intercept: bool,
    #[arg(long, default_value = "path.json")]
    pub output: PathBuf,
    #[arg(long, value_enum, default_value = "json")]
    pub format: FormatArg,
}

#[derive(Debug, Args)]
pub struct CvArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, value_enum, default_value = "lasso")]
    pub penalty: PenaltyArg,
    #[arg(long, default_value_t = DEFAULT_GAMMA)]
    pub gamma: f64,
    #[arg(long, value_enum, default_value = "ccv")]
    pub method: MethodArg,
    /// Folds for kfold methods
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    /// Construction-set size; defaults to the method's recommended rate
    #[arg(long)]
    pub nc: Option<usize>,
    /// Monte-Carlo splits
    #[arg(long, default_value_t = 50)]
    pub r: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_N_LAMBDA)]
    pub n_lambda: usize,
    #[arg(long)]
    pub min_ratio: Option<f64>,
    /// Candidate-size cap for ccv; defaults from (n, p)
    #[arg(long)]
    pub size_cap: Option<usize>,
    #[arg(long)]
    pub intercept: bool,
    #[arg(long, default_value = "selection.json")]
    pub output: PathBuf,
    #[arg(long, value_enum, default_value = "json")]
    pub format: FormatArg,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// JSON file deserializing into the simulation configuration
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long, default_value = "sim-out")]
    pub out_dir: PathBuf,
    /// Full-scale settings: 100 replications and r = 50 splits
    #[arg(long)]
    pub full: bool,
}

#[derive(Debug, Subcommand)]
pub enum DiagnoseCommand {
    /// Theoretical noise ceiling sigma*sqrt(2 log p / n)
    Universal {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        p: usize,
        #[arg(long, default_value_t = 1.0)]
        sigma: f64,
    },
    /// Monte-Carlo order-statistics probability P{k T_k^2 > l T_l^2}
    OrderStats {
        #[arg(long)]
        p: usize,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        l: usize,
        /// AR(1) correlation; omit for iid
        #[arg(long)]
        rho: Option<f64>,
        #[arg(long, default_value_t = 2000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Coherent rate of k-fold split paths against the whole-data path
    CoherentRate {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, value_enum, default_value = "lasso")]
        penalty: PenaltyArg,
        #[arg(long, default_value_t = DEFAULT_GAMMA)]
        gamma: f64,
        #[arg(long, default_value_t = 10)]
        k: usize,
        #[arg(long, default_value_t = DEFAULT_N_LAMBDA)]
        n_lambda: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "coherent_rate.csv")]
        output: PathBuf,
    },
    /// Per-position shrinkage decomposition of a gaussian lasso path
    Shrinkage {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, default_value_t = DEFAULT_N_LAMBDA)]
        n_lambda: usize,
        #[arg(long, default_value = "shrinkage.csv")]
        output: PathBuf,
    },
    /// Ratio of construction-path lambdas to their theoretical level
    LambdaRatio {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        nc: Option<usize>,
        #[arg(long, default_value_t = 20)]
        r: usize,
        #[arg(long, default_value_t = 1.0)]
        sigma: f64,
        #[arg(long, default_value_t = DEFAULT_N_LAMBDA)]
        n_lambda: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output stem; writes `<stem>_ratio.csv` and `<stem>_shrink.csv`
        #[arg(long, default_value = "lambda_series")]
        output: PathBuf,
    },
}

#[derive(Serialize)]
struct PathPayload<'a> {
    schema_version: &'static str,
    family: &'static str,
    penalty: &'static str,
    gamma: f64,
    intercept: bool,
    lambdas: &'a [f64],
    points: Vec<PathPoint<'a>>,
}

#[derive(Serialize)]
struct PathPoint<'a> {
    lambda: f64,
    n_nonzero: usize,
    n_iter: usize,
    converged: bool,
    intercept: f64,
    coef: &'a [(usize, f64)],
}

#[derive(Serialize)]
struct CvPayload<'a> {
    schema_version: &'static str,
    family: &'static str,
    penalty: &'static str,
    gamma: f64,
    n: usize,
    p: usize,
    report: &'a SelectionReport,
}

#[derive(Serialize)]
struct ErrorRecord<'a> {
    error: ErrorBody<'a>,
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    code: &'a str,
    message: String,
}

/// Run the parsed command inside a thread pool of the requested size.
/// Returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    let threads = cli.threads.max(1);
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("{{\"error\":{{\"code\":\"io\",\"message\":\"{e}\"}}}}");
            return 2;
        }
    };
    match pool.install(|| dispatch(cli.command)) {
        Ok(()) => 0,
        Err(e) => {
            let record = ErrorRecord {
                error: ErrorBody {
                    code: e.code(),
                    message: e.to_string(),
                },
            };
            eprintln!(
                "{}",
                serde_json::to_string(&record).unwrap_or_else(|_| e.to_string())
            );
            1
        }
    }
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Fit(args) => cmd_fit(args),
        Command::Cv(args) => cmd_cv(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Diagnose { what } => cmd_diagnose(what),
    }
}

fn load(data: &DataArgs) -> Result<Dataset> {
    load_csv(&data.data, &data.response, data.family.into())
}

fn shared_grid(
    data: &Dataset,
    n_lambda: usize,
    min_ratio: Option<f64>,
    intercept: bool,
) -> Result<crate::path::LambdaGrid> {
    let ratio = min_ratio.unwrap_or_else(|| default_min_ratio(data.n(), data.p()));
    lambda_grid_with(data, n_lambda, ratio, intercept)
}

fn write_path_json(path: &Path, solution: &SolutionPath, family: Family) -> Result<()> {
    let points = (0..solution.len())
        .map(|k| PathPoint {
            lambda: solution.grid.values()[k],
            n_nonzero: solution.nonzero_count(k),
            n_iter: solution.n_iter[k],
            converged: solution.converged[k],
            intercept: solution.intercepts[k],
            coef: &solution.betas[k],
        })
        .collect();
    let payload = PathPayload {
        schema_version: SCHEMA_VERSION,
        family: family.name(),
        penalty: solution.penalty.kind.name(),
        gamma: solution.penalty.gamma,
        intercept: solution.intercept_enabled,
        lambdas: solution.grid.values(),
        points,
    };
    std::fs::write(path, serde_json::to_string_pretty(&payload)?)?;
    Ok(())
}

fn write_path_csv(path: &Path, solution: &SolutionPath) -> Result<()> {
    let mut out = String::from("lambda,n_nonzero,coef_index,coef_value\n");
    for k in 0..solution.len() {
        let lambda = solution.grid.values()[k];
        let nnz = solution.nonzero_count(k);
        if solution.betas[k].is_empty() {
            out.push_str(&format!("{lambda},{nnz},,\n"));
        }
        for (j, v) in &solution.betas[k] {
            out.push_str(&format!("{lambda},{nnz},{j},{v}\n"));
        }
    }
    std::fs::write(path, out)?;
    Ok(())
}

fn cmd_fit(args: FitArgs) -> Result<()> {
    let data = load(&args.data)?;
    let penalty = args.penalty.spec(args.gamma)?;
    let grid = shared_grid(&data, args.n_lambda, args.min_ratio, args.intercept)?;
    let opts = FitOptions {
        intercept: args.intercept,
        ..FitOptions::default()
    };
    let solution = fit_path(&data, &penalty, &grid, &opts)?;
    match args.format {
        FormatArg::Json => write_path_json(&args.output, &solution, data.family)?,
        FormatArg::Csv => write_path_csv(&args.output, &solution)?,
    }
    eprintln!(
        "fit: {} grid points, {} converged, wrote {}",
        solution.len(),
        solution.converged.iter().filter(|c| **c).count(),
        args.output.display()
    );
    Ok(())
}

fn cmd_cv(args: CvArgs) -> Result<()> {
    let data = load(&args.data)?;
    let family: Family = args.data.family.into();
    let penalty = args.penalty.spec(args.gamma)?;
    let grid = shared_grid(&data, args.n_lambda, args.min_ratio, args.intercept)?;
    let opts = CvOptions {
        fit: FitOptions {
            intercept: args.intercept,
            ..FitOptions::default()
        },
        ..CvOptions::default()
    };
    let n = data.n();
    let report = match args.method {
        MethodArg::Kfold | MethodArg::Kfold1se => {
            let rule = match args.method {
                MethodArg::Kfold => SelectionRule::Min,
                _ => SelectionRule::OneSe,
            };
            kfold_cv(&data, &penalty, &grid, args.k, rule, args.seed, &opts)?
        }
        MethodArg::CvNv => {
            let n_c = args.nc.unwrap_or_else(|| default_nc_cv_nv(n, family));
            if args.r < recommended_min_splits(n, n_c) {
                eprintln!(
                    "warning: r = {} splits is below the (n/n_c)^2 = {} guideline for n_c = {n_c}",
                    args.r,
                    recommended_min_splits(n, n_c)
                );
            }
            let plan = monte_carlo_splits(n, n_c, args.r, args.seed)?;
            cv_nv(&data, &penalty, &grid, &plan, &opts)?
        }
        MethodArg::Ccv => {
            let n_c = args.nc.unwrap_or_else(|| default_nc_ccv(n, family));
            let cap = args
                .size_cap
                .unwrap_or_else(|| default_size_cap(n, data.p()));
            let plan = monte_carlo_splits(n, n_c, args.r, args.seed)?;
            ccv(&data, &penalty, &grid, &plan, cap, &opts)?
        }
    };
    match args.format {
        FormatArg::Json => {
            let payload = CvPayload {
                schema_version: SCHEMA_VERSION,
                family: family.name(),
                penalty: penalty.kind.name(),
                gamma: penalty.gamma,
                n,
                p: data.p(),
                report: &report,
            };
            std::fs::write(&args.output, serde_json::to_string_pretty(&payload)?)?;
        }
        FormatArg::Csv => {
            let mut out = String::from("position,mean_loss,se_loss,n_valid_splits,model_size\n");
            for i in 0..report.curve.positions.len() {
                out.push_str(&format!(
                    "{},{},{},{},{}\n",
                    report.curve.positions[i],
                    report.curve.mean_loss[i],
                    report.curve.se_loss[i],
                    report.curve.n_valid_splits[i],
                    report.curve.model_sizes[i]
                ));
            }
            std::fs::write(&args.output, out)?;
        }
    }
    eprintln!(
        "cv {}: selected position {} (lambda {:?}), model size {}, wrote {}",
        report.method.name(),
        report.selected_position,
        report.selected_lambda,
        report.selected_active.size(),
        args.output.display()
    );
    Ok(())
}

/// Construction-size defaults: ceil(n^{2/3}) gaussian / ceil(n^{3/4}) binomial.
pub fn default_nc_cv_nv(n: usize, family: Family) -> usize {
    let n_f = n as f64;
    let rate = match family {
        Family::Gaussian => n_f.powf(2.0 / 3.0),
        Family::Binomial => n_f.powf(0.75),
    };
    (rate.ceil() as usize).clamp(2, n.saturating_sub(1))
}

/// Construction-size defaults: ceil(n^{1/2}) gaussian / ceil(n^{2/3}) binomial.
pub fn default_nc_ccv(n: usize, family: Family) -> usize {
    let n_f = n as f64;
    let rate = match family {
        Family::Gaussian => n_f.sqrt(),
        Family::Binomial => n_f.powf(2.0 / 3.0),
    };
    (rate.ceil() as usize).clamp(2, n.saturating_sub(1))
}

fn cmd_simulate(args: SimulateArgs) -> Result<()> {
    let text = std::fs::read_to_string(&args.config)?;
    let mut config: SimConfig = serde_json::from_str(&text)?;
    if args.full {
        config.n_reps = config.n_reps.max(100);
        config.methods = config
            .methods
            .iter()
            .map(|m| match *m {
                MethodSpec::CvNv { n_c, .. } => MethodSpec::CvNv { n_c, r: 50 },
                MethodSpec::Ccv { n_c, .. } => MethodSpec::Ccv { n_c, r: 50 },
                other => other,
            })
            .collect();
    }
    config.validate()?;
    std::fs::create_dir_all(&args.out_dir)?;
    let result = run_experiment(&config)?;
    write_per_rep_csv(&args.out_dir.join("per_rep.csv"), &result)?;
    write_aggregate_csv(&args.out_dir.join("aggregate.csv"), &result)?;
    write_median_csv(&args.out_dir.join("median_series.csv"), &result)?;
    if !result.failures.is_empty() {
        write_failures_csv(&args.out_dir.join("failures.csv"), &result)?;
    }
    let table = format_table(&config, &result);
    std::fs::write(args.out_dir.join("table.txt"), &table)?;
    println!("{table}");
    let total_runtime: f64 = result.per_rep.iter().map(|m| m.runtime).sum();
    eprintln!(
        "simulate: {} cells, {} failures, selector time {:.1}s, wrote {}",
        result.per_rep.len(),
        result.failures.len(),
        total_runtime,
        args.out_dir.display()
    );
    Ok(())
}

fn cmd_diagnose(what: DiagnoseCommand) -> Result<()> {
    match what {
        DiagnoseCommand::Universal { n, p, sigma } => {
            if n == 0 || p < 2 {
                return Err(invalid("universal threshold needs n >= 1 and p >= 2"));
            }
            println!("{}", universal_threshold(n, p, sigma));
        }
        DiagnoseCommand::OrderStats {
            p,
            k,
            l,
            rho,
            trials,
            seed,
        } => {
            let model = match rho {
                Some(r) => RhoModel::Ar1(r),
                None => RhoModel::Iid,
            };
            let estimate = order_stats_probability(p, k, l, model, None, trials, seed)?;
            println!("{estimate}");
        }
        DiagnoseCommand::CoherentRate {
            data,
            penalty,
            gamma,
            k,
            n_lambda,
            seed,
            output,
        } => {
            let dataset = load(&data)?;
            let pen = penalty.spec(gamma)?;
            let grid = shared_grid(&dataset, n_lambda, None, false)?;
            let opts = FitOptions::default();
            let full = fit_path(&dataset, &pen, &grid, &opts)?;
            let plan = crate::cv::kfold_splits(dataset.n(), k, seed)?;
            let split_sets: Vec<Vec<crate::data::ActiveSet>> = plan
                .splits
                .iter()
                .map(|s| {
                    let sub = dataset.select_rows(&s.construction);
                    fit_path(&sub, &pen, &grid, &opts).map(|p| p.active_sets)
                })
                .collect::<Result<_>>()?;
            let series = coherent_rate(&full.active_sets, &split_sets)?;
            let rows: Vec<(usize, f64)> = series.cr.iter().copied().enumerate().collect();
            write_series_csv(&output, "cr", &rows)?;
            eprintln!("coherent-rate: wrote {} positions to {}", rows.len(), output.display());
        }
        DiagnoseCommand::Shrinkage {
            data,
            n_lambda,
            output,
        } => {
            let dataset = load(&data)?;
            let grid = shared_grid(&dataset, n_lambda, None, false)?;
            let path = fit_path(&dataset, &PenaltySpec::lasso(), &grid, &FitOptions::default())?;
            let dec = shrinkage_decomposition(&dataset, &path)?;
            let mut out = String::from(
                "position,lambda,d_alpha,gamma_hat,gamma_tilde,shrink_term,gap,refit_converged\n",
            );
            for r in &dec.records {
                out.push_str(&format!(
                    "{},{},{},{},{},{},{},{}\n",
                    r.position,
                    r.lambda,
                    r.d_alpha,
                    r.gamma_hat,
                    r.gamma_tilde,
                    r.shrink_term,
                    r.gap,
                    r.refit_converged
                ));
            }
            std::fs::write(&output, out)?;
            eprintln!("shrinkage: wrote {}", output.display());
        }
        DiagnoseCommand::LambdaRatio {
            data,
            nc,
            r,
            sigma,
            n_lambda,
            seed,
            output,
        } => {
            let dataset = load(&data)?;
            let family: Family = data.family.into();
            let n_c = nc.unwrap_or_else(|| default_nc_cv_nv(dataset.n(), family));
            let grid = shared_grid(&dataset, n_lambda, None, false)?;
            let plan = monte_carlo_splits(dataset.n(), n_c, r, seed)?;
            let opts = FitOptions::default();
            // Per-position averages of the construction-path series.
            let n_pos = grid.len();
            let mut ratio_sum = vec![0.0f64; n_pos];
            let mut shrink_sum = vec![0.0f64; n_pos];
            let mut counts = vec![0usize; n_pos];
            for split in &plan.splits {
                let sub = dataset.select_rows(&split.construction);
                let path = fit_path(&sub, &PenaltySpec::lasso(), &grid, &opts)?;
                for rec in theoretical_lambda_series(&path, n_c, sigma) {
                    ratio_sum[rec.position] += rec.ratio;
                    shrink_sum[rec.position] += rec.shrink;
                    counts[rec.position] += 1;
                }
            }
            let ratio_rows: Vec<(usize, f64)> = (0..n_pos)
                .filter(|&k| counts[k] > 0)
                .map(|k| (k, ratio_sum[k] / counts[k] as f64))
                .collect();
            let shrink_rows: Vec<(usize, f64)> = (0..n_pos)
                .filter(|&k| counts[k] > 0)
                .map(|k| (k, shrink_sum[k] / counts[k] as f64))
                .collect();
            let stem = output.display().to_string();
            write_series_csv(Path::new(&format!("{stem}_ratio.csv")), "ratio", &ratio_rows)?;
            write_series_csv(Path::new(&format!("{stem}_shrink.csv")), "shrink", &shrink_rows)?;
            eprintln!("lambda-ratio: wrote {stem}_ratio.csv and {stem}_shrink.csv");
        }
    }
    Ok(())
}
