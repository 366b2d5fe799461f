mod common;

use common::{l1, random_system, rng};
use drift_lasso::estimate::*;
use drift_lasso::DriftBasis;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::Rng;

fn certify(res: &EstimationResult, sys: &GramSystem, cfg: &LassoConfig) {
    if res.converged {
        assert!(res.kkt_residual <= cfg.kkt_bound(sys.linear_sup()));
    }
}

/// Minimizes the penalized objective over `[-5, 5]^p` on successively finer
/// grids, each centered on the previous minimizer.
fn grid_oracle(sys: &GramSystem, lambda: f64) -> Vec<f64> {
    let p = sys.p();
    let mut center = vec![0.0; p];
    let mut step = 0.1;
    let mut half = 50usize;
    while step >= 1e-5 {
        let width = 2 * half + 1;
        let mut best = (f64::INFINITY, center.clone());
        let mut point = vec![0.0; p];
        for code in 0..width.pow(p as u32) {
            let mut c = code;
            for j in 0..p {
                point[j] = center[j] + ((c % width) as f64 - half as f64) * step;
                c /= width;
            }
            if point.iter().any(|v| v.abs() > 5.0 + 1e-12) {
                continue;
            }
            let f = sys.objective(&point, lambda);
            if f < best.0 {
                best = (f, point.clone());
            }
        }
        center = best.1;
        step /= 10.0;
        half = 20;
    }
    center
}

fn well_conditioned(seed: u64, p: usize) -> GramSystem {
    let mut r = rng(seed);
    let b = DMatrix::from_fn(p, p, |_, _| r.random_range(-1.0..1.0));
    let gram = b.transpose() * &b + DMatrix::identity(p, p);
    let linear = DVector::from_fn(p, |_, _| r.random_range(-3.0..3.0));
    GramSystem {
        gram,
        linear,
        constant: 0.0,
        delta_n: 1.0,
        n: 1,
    }
}

#[test]
fn coordinate_descent_matches_sign_enumeration() {
    let cfg = LassoConfig::default();
    for k in 0..200u64 {
        let p = 1 + (k % 3) as usize;
        let sys = random_system(k, p, 50);
        let lambda = rng(k ^ 0xabc).random_range(0.0..1.2) * sys.linear_sup();
        let cd = lasso_solve(&sys, lambda, &cfg).unwrap();
        certify(&cd, &sys, &cfg);
        let bf = brute_force_lasso(&sys, lambda).unwrap();
        for (a, b) in cd.theta_hat.iter().zip(&bf) {
            assert!((a - b).abs() < 1e-6, "instance {k}: {a} vs {b}");
        }
    }
}

#[test]
fn sign_enumeration_matches_grid_oracle() {
    for k in 0..200u64 {
        let p = 2 + (k % 2) as usize;
        let sys = well_conditioned(k, p);
        let lambda = rng(k ^ 0x5eed).random_range(0.0..2.0);
        let bf = brute_force_lasso(&sys, lambda).unwrap();
        let grid = grid_oracle(&sys, lambda);
        for (a, b) in bf.iter().zip(&grid) {
            assert!((a - b).abs() < 2e-4, "instance {k}: {a} vs {b}");
        }
    }
}

#[test]
fn sign_enumeration_rejects_large_p() {
    let sys = random_system(1, 4, 50);
    assert!(brute_force_lasso(&sys, 0.1).is_err());
}

#[test]
fn zero_penalty_matches_least_squares() {
    let cfg = LassoConfig::default();
    for k in 0..20u64 {
        let sys = random_system(100 + k, 3, 50);
        let cd = lasso_solve(&sys, 0.0, &cfg).unwrap();
        let mle = mle_solve(&sys).unwrap();
        assert!(!mle.rank_deficient);
        for (a, b) in cd.theta_hat.iter().zip(&mle.theta_hat) {
            assert!((a - b).abs() < 1e-8);
        }
    }
}

#[test]
fn path_is_monotone_in_l1_on_fifty_systems() {
    let cfg = LassoConfig::default();
    for k in 0..50u64 {
        let sys = random_system(200 + k, 8, 80);
        let grid = log_grid(sys.linear_sup(), 1e-3, 30);
        let path = lasso_path(&sys, &grid, &cfg).unwrap();
        for w in path.windows(2) {
            certify(&w[0], &sys, &cfg);
            assert!(l1(&w[1].theta_hat) >= l1(&w[0].theta_hat) - 1e-9);
        }
    }
}

#[test]
fn path_endpoints_match_cold_solves() {
    let cfg = LassoConfig::default();
    let sys = random_system(7, 6, 200);
    let grid = log_grid(sys.linear_sup() * 1.01, 1e-2, 12);
    let path = lasso_path(&sys, &grid, &cfg).unwrap();
    assert!(path[0].theta_hat.iter().all(|v| *v == 0.0));
    for (res, &lambda) in path.iter().zip(&grid) {
        let cold = lasso_solve(&sys, lambda, &cfg).unwrap();
        for (a, b) in res.theta_hat.iter().zip(&cold.theta_hat) {
            assert!((a - b).abs() < 1e-8);
        }
    }
}

#[test]
fn gram_identity_on_a_cosine_path() {
    let traj = common::random_walk(3, 300, 3, 0.02);
    let basis = DriftBasis::cosine(3, 12, 2.0).unwrap();
    let sys = build_gram(&traj, &basis).unwrap();
    let mut r = rng(4);
    for _ in 0..150 {
        let theta: Vec<f64> = (0..12).map(|_| r.random_range(-4.0..4.0)).collect();
        let direct = contrast_direct(&traj, &basis, &theta).unwrap();
        let quad = sys.contrast(&theta);
        assert!((direct - quad).abs() <= 1e-10 * direct.abs().max(1.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn null_threshold_gives_exact_zero(seed in 0u64..10_000, p in 1usize..10, scale in 1.0f64..5.0) {
        let sys = random_system(seed, p, 60);
        let res = lasso_solve(&sys, scale * sys.linear_sup(), &LassoConfig::default()).unwrap();
        prop_assert!(res.theta_hat.iter().all(|v| *v == 0.0));
        prop_assert!(res.converged);
    }

    #[test]
    fn kkt_certificate_holds(seed in 0u64..10_000, p in 1usize..12, frac in 0.0f64..1.0) {
        let cfg = LassoConfig::default();
        let sys = random_system(seed, p, 60);
        let res = lasso_solve(&sys, frac * sys.linear_sup(), &cfg).unwrap();
        if res.converged {
            prop_assert!(res.kkt_residual <= cfg.kkt_bound(sys.linear_sup()));
            prop_assert_eq!(res.kkt_residual, kkt_residual(&sys, &res.theta_hat, res.lambda, &vec![false; p]));
        }
    }

    #[test]
    fn l1_norm_is_monotone(seed in 0u64..10_000, p in 2usize..10, a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let cfg = LassoConfig::default();
        let sys = random_system(seed, p, 60);
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let s = sys.linear_sup();
        let small = lasso_solve(&sys, lo * s, &cfg).unwrap();
        let large = lasso_solve(&sys, hi * s, &cfg).unwrap();
        prop_assert!(l1(&small.theta_hat) >= l1(&large.theta_hat) - 1e-9);
    }

    #[test]
    fn objective_never_increases_across_sweeps(seed in 0u64..10_000, p in 1usize..12, frac in 0.0f64..1.0) {
        let sys = random_system(seed, p, 60);
        let (_, trace) = coordinate_descent(&sys, frac * sys.linear_sup(), &LassoConfig::default(), None, true).unwrap();
        let trace = trace.unwrap();
        for w in trace.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-12 * w[0].abs().max(1.0));
        }
    }

    #[test]
    fn gram_identity_random_theta(seed in 0u64..10_000, p in 1usize..8) {
        let traj = common::random_walk(seed, 80, 2, 0.05);
        let basis = DriftBasis::cosine(2, p, 1.5).unwrap();
        let sys = build_gram(&traj, &basis).unwrap();
        let mut r = rng(seed ^ 77);
        for _ in 0..100 {
            let theta: Vec<f64> = (0..p).map(|_| r.random_range(-5.0..5.0)).collect();
            let direct = contrast_direct(&traj, &basis, &theta).unwrap();
            prop_assert!((direct - sys.contrast(&theta)).abs() <= 1e-10 * direct.abs().max(1.0));
        }
    }

    #[test]
    fn soft_threshold_shrinks(z in -10.0f64..10.0, g in 0.0f64..5.0) {
        let v = soft_threshold(z, g);
        prop_assert!(v.abs() <= z.abs());
        prop_assert!(v == 0.0 || v.signum() == z.signum());
        prop_assert!(((z - v).abs() - g.min(z.abs())).abs() < 1e-12);
    }
}
