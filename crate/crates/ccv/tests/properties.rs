//! Property tests for the structural invariants.

use proptest::prelude::*;

use ccv::cv::{kfold_splits, monte_carlo_splits};
use ccv::diagnostics::universal_threshold;
use ccv::path::LambdaGrid;
use ccv::penalty::PenaltySpec;

proptest! {
    /// Monte-Carlo splits always partition the index range with the
    /// requested sizes, for any seed.
    #[test]
    fn monte_carlo_splits_partition(
        n in 4usize..200,
        frac in 0.1f64..0.9,
        r in 1usize..8,
        seed in any::<u64>(),
    ) {
        let n_c = ((n as f64 * frac) as usize).clamp(2, n - 1);
        let plan = monte_carlo_splits(n, n_c, r, seed).unwrap();
        prop_assert_eq!(plan.splits.len(), r);
        for s in &plan.splits {
            prop_assert_eq!(s.construction.len(), n_c);
            prop_assert_eq!(s.validation.len(), n - n_c);
            let mut all: Vec<usize> = s.construction.iter().chain(&s.validation).copied().collect();
            all.sort_unstable();
            prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
            prop_assert!(s.construction.windows(2).all(|w| w[0] < w[1]));
        }
    }

    /// K-fold validation folds partition the indices and differ in size by
    /// at most one.
    #[test]
    fn kfold_splits_partition(n in 4usize..150, k in 2usize..10, seed in any::<u64>()) {
        prop_assume!(k <= n);
        let plan = kfold_splits(n, k, seed).unwrap();
        let mut seen: Vec<usize> = plan.splits.iter().flat_map(|s| s.validation.iter().copied()).collect();
        seen.sort_unstable();
        prop_assert_eq!(seen, (0..n).collect::<Vec<_>>());
        let sizes: Vec<usize> = plan.splits.iter().map(|s| s.validation.len()).collect();
        let max = sizes.iter().max().unwrap();
        let min = sizes.iter().min().unwrap();
        prop_assert!(max - min <= 1);
    }

    /// Log-spaced grids validate their own invariants for any admissible
    /// parameters.
    #[test]
    fn lambda_grid_invariants(
        lmax in 1e-6f64..1e3,
        n_lambda in 2usize..200,
        ratio in 1e-4f64..0.99,
    ) {
        let grid = LambdaGrid::log_spaced(lmax, n_lambda, ratio).unwrap();
        prop_assert!(grid.validate().is_ok());
        prop_assert_eq!(grid.len(), n_lambda);
    }

    /// Penalty derivatives are nonnegative, bounded by lambda, and the
    /// penalty itself is nondecreasing in |t|.
    #[test]
    fn penalty_shape(
        lambda in 1e-6f64..10.0,
        t1 in 0.0f64..20.0,
        t2 in 0.0f64..20.0,
        gamma_scad in 2.01f64..10.0,
        gamma_mcp in 1.01f64..10.0,
    ) {
        let pens = [
            PenaltySpec::lasso(),
            PenaltySpec::scad(gamma_scad).unwrap(),
            PenaltySpec::mcp(gamma_mcp).unwrap(),
        ];
        let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
        for pen in pens {
            let d = pen.rho_prime(lambda, lo);
            prop_assert!((0.0..=lambda + 1e-15).contains(&d));
            prop_assert!(pen.rho(lambda, lo) <= pen.rho(lambda, hi) + 1e-12);
        }
    }

    /// The universal threshold scales exactly as 1/sqrt(n).
    #[test]
    fn universal_threshold_scaling(n in 1usize..10_000, p in 2usize..100_000, sigma in 0.0f64..10.0) {
        let v1 = universal_threshold(n, p, sigma);
        let v4 = universal_threshold(4 * n, p, sigma);
        prop_assert_eq!(v4, v1 / 2.0);
    }
}
