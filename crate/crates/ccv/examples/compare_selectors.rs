//! Run all four tuning-parameter selectors on the same dataset and compare
//! the models they pick against the generating support.
//!
//! ```bash
//! cargo run --release --example compare_selectors
//! ```

use ccv::cv::{ccv, cv_nv, kfold_cv, monte_carlo_splits, CvOptions, SelectionRule};
use ccv::data::prediction_loss;
use ccv::family::LossMetric;
use ccv::path::lambda_grid;
use ccv::penalty::PenaltySpec;
use ccv::restricted::default_size_cap;
use ccv::sim::{gen_linear, SparseBeta};

fn main() {
    let truth = SparseBeta::from_prefix(&[2.0, 1.6, 1.2, 0.8, 0.4]);
    let (train, test) = gen_linear(500, 1000, 0.0, &truth, 1.0, 500, 7).unwrap();
    let grid = lambda_grid(&train, 100, 0.05).unwrap();
    let pen = PenaltySpec::lasso();
    let opts = CvOptions::default();
    let support = truth.support();

    let mut reports = Vec::new();
    reports.push(kfold_cv(&train, &pen, &grid, 10, SelectionRule::Min, 1, &opts).unwrap());
    reports.push(kfold_cv(&train, &pen, &grid, 10, SelectionRule::OneSe, 1, &opts).unwrap());
    let plan = monte_carlo_splits(train.n(), 63, 50, 2).unwrap();
    reports.push(cv_nv(&train, &pen, &grid, &plan, &opts).unwrap());
    let plan = monte_carlo_splits(train.n(), 23, 50, 3).unwrap();
    let cap = default_size_cap(train.n(), train.p());
    reports.push(ccv(&train, &pen, &grid, &plan, cap, &opts).unwrap());

    println!(
        "{:<10} {:>8} {:>6} {:>4} {:>4} {:>10}",
        "method", "lambda", "size", "FN", "FP", "test PE"
    );
    for report in &reports {
        let fn_count = support
            .indices()
            .iter()
            .filter(|j| !report.selected_active.contains(**j))
            .count();
        let fp_count = report
            .selected_active
            .indices()
            .iter()
            .filter(|j| !support.contains(**j))
            .count();
        let pe = prediction_loss(
            test.family,
            &report.refit.full_coef(test.p()),
            report.refit.intercept,
            &test,
            LossMetric::Pe,
        )
        .unwrap();
        println!(
            "{:<10} {:>8.4} {:>6} {:>4} {:>4} {:>10.4}",
            report.method.name(),
            report.selected_lambda.unwrap_or(f64::NAN),
            report.selected_active.size(),
            fn_count,
            fp_count,
            pe
        );
    }
}
