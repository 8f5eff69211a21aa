//! A guided tour of consistent cross-validation: the path's active-set
//! sequence becomes the candidate list, each candidate is scored by
//! restricted-MLE validation likelihood over small construction sets, and
//! the winner is refit on the full data.
//!
//! ```bash
//! cargo run --release --example consistent_cv
//! ```

use ccv::cv::{ccv, monte_carlo_splits, CvOptions};
use ccv::path::{active_set_sequence, fit_path, lambda_grid, FitOptions};
use ccv::penalty::PenaltySpec;
use ccv::restricted::default_size_cap;
use ccv::sim::{gen_linear, SparseBeta};

fn main() {
    let truth = SparseBeta::from_prefix(&[2.0, 1.6, 1.2, 0.8, 0.4]);
    let (train, _) = gen_linear(500, 1000, 0.0, &truth, 1.0, 2, 11).unwrap();
    let grid = lambda_grid(&train, 100, 0.05).unwrap();
    let pen = PenaltySpec::lasso();

    let path = fit_path(&train, &pen, &grid, &FitOptions::default()).unwrap();
    let sequence = active_set_sequence(&path);
    println!("path visits {} distinct active sets; first few:", sequence.len());
    for (set, first_pos) in sequence.iter().take(8) {
        println!(
            "  d = {:<2} first at lambda = {:.4}  {:?}",
            set.size(),
            grid.values()[*first_pos],
            set.indices()
        );
    }

    // Construction sets of ceil(sqrt(n)) rows, 50 splits.
    let plan = monte_carlo_splits(train.n(), 23, 50, 5).unwrap();
    let cap = default_size_cap(train.n(), train.p());
    let report = ccv(&train, &pen, &grid, &plan, cap, &CvOptions::default()).unwrap();

    println!("\ncandidate scores (mean validation negative log-likelihood):");
    for i in 0..report.curve.positions.len() {
        let marker = if i == report.selected_position { "  <-- selected" } else { "" };
        println!(
            "  candidate {:<2} d = {:<2} loss = {:.4} ({} splits){}",
            i,
            report.curve.model_sizes[i],
            report.curve.mean_loss[i],
            report.curve.n_valid_splits[i],
            marker
        );
    }
    println!(
        "\nselected {:?} (true support {:?})",
        report.selected_active.indices(),
        truth.support().indices()
    );
    println!("refit coefficients: {:?}", report.refit.coef);
    for note in &report.notes {
        println!("note: {note}");
    }
}
