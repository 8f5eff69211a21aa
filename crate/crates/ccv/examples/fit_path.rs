//! Fit lasso, SCAD and MCP solution paths on one simulated dataset and
//! verify first-order optimality at every converged grid point.
//!
//! ```bash
//! cargo run --release --example fit_path
//! ```

use ccv::path::{fit_path, kkt_residual, lambda_grid, FitOptions};
use ccv::penalty::PenaltySpec;
use ccv::sim::{gen_linear, SparseBeta};

fn main() {
    let beta = SparseBeta::from_prefix(&[2.0, 1.6, 1.2, 0.8, 0.4]);
    let (train, _) = gen_linear(200, 400, 0.0, &beta, 1.0, 2, 42).unwrap();
    let grid = lambda_grid(&train, 50, 0.05).unwrap();
    println!(
        "n = {}, p = {}, lambda_max = {:.4}, grid of {}",
        train.n(),
        train.p(),
        grid.lambda_max,
        grid.len()
    );

    for penalty in [
        PenaltySpec::lasso(),
        PenaltySpec::scad(3.0).unwrap(),
        PenaltySpec::mcp(3.0).unwrap(),
    ] {
        let path = fit_path(&train, &penalty, &grid, &FitOptions::default()).unwrap();
        let worst_kkt = (0..path.len())
            .filter(|&k| path.converged[k])
            .map(|k| kkt_residual(&train, &penalty, grid.values()[k], &path.dense_beta(k)))
            .fold(0.0f64, f64::max);
        let total_sweeps: usize = path.n_iter.iter().sum();
        println!(
            "{:<6} nonzero at grid end = {:>3}, worst kkt residual = {:.2e}, sweeps = {}",
            penalty.kind.name(),
            path.nonzero_count(path.len() - 1),
            worst_kkt,
            total_sweeps
        );
        print!("       model size along the path:");
        for k in (0..path.len()).step_by(7) {
            print!(" {}", path.nonzero_count(k));
        }
        println!();
    }
}
