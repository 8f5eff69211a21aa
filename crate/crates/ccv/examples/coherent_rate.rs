//! Coherent rate: how often the split paths carry the same active set as the
//! whole-data path at each grid position. Agreement collapses once noise
//! variables start to enter, which is why averaging losses by penalty level
//! compares different models across splits.
//!
//! ```bash
//! cargo run --release --example coherent_rate
//! ```

use ccv::cv::kfold_splits;
use ccv::data::ActiveSet;
use ccv::diagnostics::{coherent_rate, first_noise_position};
use ccv::path::{fit_path, lambda_grid, FitOptions};
use ccv::penalty::PenaltySpec;
use ccv::sim::{gen_linear, SparseBeta};

fn main() {
    let truth = SparseBeta::from_prefix(&[2.0, 1.6, 1.2, 0.8, 0.4]);
    let (train, _) = gen_linear(300, 600, 0.5, &truth, 1.0, 2, 21).unwrap();
    let grid = lambda_grid(&train, 60, 0.01).unwrap();
    let pen = PenaltySpec::lasso();
    let opts = FitOptions::default();

    let full = fit_path(&train, &pen, &grid, &opts).unwrap();
    let plan = kfold_splits(train.n(), 10, 9).unwrap();
    let split_sets: Vec<Vec<ActiveSet>> = plan
        .splits
        .iter()
        .map(|s| {
            fit_path(&train.select_rows(&s.construction), &pen, &grid, &opts)
                .unwrap()
                .active_sets
        })
        .collect();

    let noise_at = first_noise_position(&full.active_sets, &truth.support());
    let series = coherent_rate(&full.active_sets, &split_sets)
        .unwrap()
        .with_first_noise(noise_at);

    println!("position  lambda   d   CR");
    for (k, cr) in series.cr.iter().enumerate() {
        if k % 3 != 0 && Some(k) != noise_at {
            continue;
        }
        let mark = if Some(k) == noise_at { "  <-- first noise variable" } else { "" };
        println!(
            "{:>8}  {:>6.4} {:>3}  {:.2}{}",
            k,
            grid.values()[k],
            full.nonzero_count(k),
            cr,
            mark
        );
    }
    if let Some(pos) = noise_at {
        println!(
            "\nmean CR after the first noise entry: {:.3}",
            series.mean_after(pos)
        );
    }
}
