//! The file-based workflow: write a dataset to CSV, load it back, and select
//! a model — the same path the `ccv` binary drives.
//!
//! ```bash
//! cargo run --release --example csv_workflow
//! ```

use ccv::cv::{ccv, monte_carlo_splits, CvOptions};
use ccv::family::Family;
use ccv::io::{load_csv, write_dataset_csv};
use ccv::path::lambda_grid;
use ccv::penalty::PenaltySpec;
use ccv::restricted::default_size_cap;
use ccv::sim::{gen_linear, SparseBeta};

fn main() {
    let dir = std::env::temp_dir().join("ccv-example");
    std::fs::create_dir_all(&dir).unwrap();
    let csv_path = dir.join("train.csv");

    let truth = SparseBeta::from_prefix(&[2.0, 1.6, 1.2]);
    let (train, _) = gen_linear(200, 50, 0.3, &truth, 1.0, 2, 13).unwrap();
    write_dataset_csv(&csv_path, &train, "y").unwrap();
    println!("wrote {}", csv_path.display());

    let data = load_csv(&csv_path, "y", Family::Gaussian).unwrap();
    assert_eq!(data.x, train.x);
    println!("reloaded {} rows x {} columns (round trip exact)", data.n(), data.p());

    let grid = lambda_grid(&data, 50, 0.01).unwrap();
    let plan = monte_carlo_splits(data.n(), 15, 50, 1).unwrap();
    let cap = default_size_cap(data.n(), data.p());
    let report = ccv(
        &data,
        &PenaltySpec::lasso(),
        &grid,
        &plan,
        cap,
        &CvOptions::default(),
    )
    .unwrap();
    let names = data.column_names.as_ref().unwrap();
    println!("selected columns:");
    for (&j, coef) in report.selected_active.indices().iter().zip(&report.refit.coef) {
        println!("  {} = {:.4}", names[j], coef);
    }
    let out = dir.join("selection.json");
    std::fs::write(&out, serde_json::to_string_pretty(&report).unwrap()).unwrap();
    println!("full report: {}", out.display());
}
