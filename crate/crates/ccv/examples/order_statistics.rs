//! Monte-Carlo estimate of P{k T_k^2 > l T_l^2} for near-extreme order
//! statistics of |Gaussian| sequences. The probability approaches 1 as the
//! dimension grows, which is what makes the shrinkage term favor sparser
//! correct models on the path; at small p the effect is visibly weaker.
//!
//! ```bash
//! cargo run --release --example order_statistics
//! ```

use ccv::diagnostics::{order_stats_probability, RhoModel};

fn main() {
    let (k, l) = (3, 2);
    println!("P{{ {k} T_{k}^2 > {l} T_{l}^2 }} for iid standard normals:");
    for &p in &[10usize, 100, 1000, 10_000] {
        let trials = if p <= 10 { 100_000 } else { 2000 };
        let est = order_stats_probability(p, k, l, RhoModel::Iid, None, trials, 7).unwrap();
        println!("  p = {:>6}: {:.4}  ({} trials)", p, est, trials);
    }

    println!("\nsame, under AR(1) correlation 0.5:");
    for &p in &[100usize, 10_000] {
        let est = order_stats_probability(p, k, l, RhoModel::Ar1(0.5), None, 2000, 7).unwrap();
        println!("  p = {:>6}: {:.4}", p, est);
    }

    // Mean shifts below the sqrt(2 log p) scale do not change the limit.
    let p = 10_000;
    let shifts: Vec<f64> = (0..p).map(|i| if i < 5 { 1.5 } else { 0.0 }).collect();
    let est = order_stats_probability(p, k, l, RhoModel::Iid, Some(&shifts), 2000, 7).unwrap();
    println!("\nwith 5 shifted coordinates (+1.5) at p = 10^4: {est:.4}");
}
