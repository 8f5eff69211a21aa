//! A compact selector-comparison experiment: several replications of a
//! sparse gaussian design, three selectors, aggregated into a mean(sd) table.
//! Scale n, p and the replication count up to reproduce full benchmark runs.
//!
//! ```bash
//! cargo run --release --example simulation_table
//! ```

use ccv::cv::SelectionRule;
use ccv::family::Family;
use ccv::penalty::PenaltyKind;
use ccv::sim::{format_table, run_experiment, MethodSpec, PenaltyConfig, SimConfig};

fn main() {
    let config = SimConfig {
        family: Family::Gaussian,
        n: 300,
        p: 600,
        rho: 0.0,
        beta_prefix: vec![2.0, 1.6, 1.2, 0.8, 0.4],
        sigma: 1.0,
        penalties: vec![
            PenaltyConfig {
                kind: PenaltyKind::Lasso,
                gamma: 3.0,
            },
            PenaltyConfig {
                kind: PenaltyKind::Mcp,
                gamma: 3.0,
            },
        ],
        methods: vec![
            MethodSpec::Kfold {
                k: 10,
                rule: SelectionRule::Min,
            },
            MethodSpec::CvNv { n_c: 45, r: 20 },
            MethodSpec::Ccv { n_c: 18, r: 20 },
        ],
        n_reps: 10,
        base_seed: 1,
        test_size: 0,
        n_lambda: 100,
        size_cap: None,
    };
    let result = run_experiment(&config).unwrap();
    println!("{}", format_table(&config, &result));
    println!("construction-size series (median FP / -median FN):");
    for row in &result.median_series {
        println!(
            "  {:<14} {:<6} n_c={:<4} +{:.1} / {:.1}",
            row.method, row.penalty, row.n_c, row.median_fp, row.neg_median_fn
        );
    }
}
