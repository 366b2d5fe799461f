mod common;

use common::{random_stable, rng};
use drift_lasso::estimate::*;
use drift_lasso::simulate::*;
use drift_lasso::{DriftBasis, Error};
use nalgebra::{DMatrix, DVector};
use rand::Rng;

/// Composite Simpson rule for `∫₀^t e^{−sA} e^{−sAᵀ} ds`.
fn quadrature_covariance(a: &DMatrix<f64>, t: f64, panels: usize) -> DMatrix<f64> {
    let d = a.nrows();
    let h = t / panels as f64;
    let integrand = |s: f64| {
        let e = (-a * s).exp();
        &e * e.transpose()
    };
    let mut acc = DMatrix::<f64>::zeros(d, d);
    for k in 0..=panels {
        let w = if k == 0 || k == panels {
            1.0
        } else if k % 2 == 1 {
            4.0
        } else {
            2.0
        };
        acc += integrand(k as f64 * h) * w;
    }
    acc * (h / 3.0)
}

#[test]
fn lyapunov_residual_on_random_stable_matrices() {
    for k in 0..100u64 {
        let d = 1 + (k as usize % 20);
        let a = random_stable(k, d, 0.3);
        let c = stationary_covariance(&a).unwrap();
        let resid = &a * &c + &c * a.transpose() - DMatrix::<f64>::identity(d, d);
        assert!(resid.abs().max() <= 1e-10, "d = {d}: residual {:e}", resid.abs().max());
        assert!((&c - c.transpose()).abs().max() == 0.0);
    }
}

#[test]
fn half_identity_gives_identity_covariance() {
    for d in [1, 4, 9] {
        let c = stationary_covariance(&(DMatrix::identity(d, d) * 0.5)).unwrap();
        assert!((c - DMatrix::<f64>::identity(d, d)).abs().max() <= 1e-12);
    }
}

#[test]
fn transition_covariance_matches_quadrature() {
    for k in 0..10u64 {
        let d = 2 + (k as usize % 4);
        let a = random_stable(500 + k, d, 0.2);
        for dt in [0.01, 0.3, 1.0] {
            let sigma = transition_covariance(&a, dt).unwrap();
            let oracle = quadrature_covariance(&a, dt, 2000);
            assert!((&sigma - &oracle).abs().max() <= 1e-8);
        }
    }
}

#[test]
fn stationary_covariance_matches_long_quadrature() {
    let a = DMatrix::from_row_slice(3, 3, &[1.0, 0.4, 0.0, -0.3, 1.2, 0.2, 0.1, 0.0, 0.9]);
    let c = stationary_covariance(&a).unwrap();
    let oracle = quadrature_covariance(&a, 40.0, 20_000);
    assert!((&c - &oracle).abs().max() <= 1e-8);
}

#[test]
fn stationary_law_is_invariant_under_transition() {
    let a = random_stable(9, 5, 0.4);
    let c = stationary_covariance(&a).unwrap();
    let (f, sigma) = drift_lasso::linalg::ou_transition(&a, 0.25);
    let pushed = &f * &c * f.transpose() + sigma;
    assert!((pushed - c).abs().max() <= 1e-12);
}

#[test]
fn exact_sampler_stationary_covariance() {
    let a = DMatrix::from_row_slice(3, 3, &[1.0, 0.3, 0.0, -0.2, 1.5, 0.1, 0.0, 0.4, 0.8]);
    let c = stationary_covariance(&a).unwrap();
    let (n, dt, batches) = (1_000_000usize, 0.1, 1000usize);
    let traj = simulate_ou_exact(&a, n, dt, 2024, true).unwrap();
    let per = n / batches;
    for r in 0..3 {
        for s in 0..3 {
            let means: Vec<f64> = (0..batches)
                .map(|b| {
                    (b * per..(b + 1) * per)
                        .map(|i| traj.state(i)[r] * traj.state(i)[s])
                        .sum::<f64>()
                        / per as f64
                })
                .collect();
            let (mean, sd) = drift_lasso::metrics::mean_sd(&means);
            let se = sd / (batches as f64).sqrt();
            assert!((mean - c[(r, s)]).abs() <= 3.0 * se, "({r},{s}): {mean} vs {}", c[(r, s)]);
        }
    }
}

#[test]
fn exact_sampler_one_step_moments() {
    let a = DMatrix::from_row_slice(2, 2, &[0.7, 0.2, -0.1, 1.1]);
    let dt = 0.5;
    let (f, sigma) = drift_lasso::linalg::ou_transition(&a, dt);
    let reps = 40_000;
    let x0 = DVector::from_column_slice(&[1.0, -2.0]);
    let mut sums = [0.0; 2];
    let mut sq = [[0.0; 2]; 2];
    let mean = &f * &x0;
    let mut r = rng(5);
    for k in 0..reps {
        let traj = simulate_ou_exact(&a, 1, dt, r.random::<u64>() ^ k, false).unwrap();
        let y0 = DVector::from_column_slice(traj.state(1));
        let y = &f * &x0 + y0;
        for i in 0..2 {
            sums[i] += y[i];
            for j in 0..2 {
                sq[i][j] += (y[i] - mean[i]) * (y[j] - mean[j]);
            }
        }
    }
    for i in 0..2 {
        let m = sums[i] / reps as f64;
        let se = (sigma[(i, i)] / reps as f64).sqrt();
        assert!((m - mean[i]).abs() <= 4.0 * se);
        for j in 0..2 {
            let v = sq[i][j] / reps as f64;
            let se = ((sigma[(i, i)] * sigma[(j, j)] + sigma[(i, j)].powi(2)) / reps as f64).sqrt();
            assert!((v - sigma[(i, j)]).abs() <= 4.0 * se);
        }
    }
}

#[test]
fn spectral_constants_of_diagonal_matrix() {
    let a = DMatrix::from_diagonal(&DVector::from_column_slice(&[1.0, 2.0, 3.0]));
    let m = ou_spectral_constants(&a).unwrap();
    assert!((m.m_frak - 1.0).abs() < 1e-12);
    assert!((m.p_frak - 1.0).abs() < 1e-9);
    assert!((m.l_min - 1.0 / 6.0).abs() < 1e-12);
    assert!((m.l_max - 0.5).abs() < 1e-12);
    assert!((m.a_frak - 0.5).abs() < 1e-12);
}

#[test]
fn defective_matrix_is_rejected() {
    let a = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]);
    assert!(matches!(
        ou_spectral_constants(&a),
        Err(Error::DiagonalizationFailed(_))
    ));
}

#[test]
fn repeated_eigenvalue_with_full_eigenspace() {
    let a = DMatrix::identity(4, 4) * 2.0;
    let m = ou_spectral_constants(&a).unwrap();
    assert!((m.p_frak - 1.0).abs() < 1e-9);
}

#[test]
fn ou_lasso_matches_linear_basis_lasso() {
    let cfg = LassoConfig::default();
    for k in 0..20u64 {
        let d = 2 + (k as usize % 3);
        let a = random_stable(900 + k, d, 0.5);
        let traj = simulate_ou_exact(&a, 300, 0.05, k, true).unwrap();
        let basis = DriftBasis::ou_linear(d).unwrap();
        let sys = build_gram(&traj, &basis).unwrap();
        let lambda = rng(k).random_range(0.05..0.8) * sys.linear_sup();
        let dense = lasso_solve(&sys, lambda, &cfg).unwrap();
        let ou = lasso_ou(&traj, lambda, &cfg).unwrap();
        for (x, y) in ou.a_hat.to_vec().iter().zip(&dense.theta_hat) {
            assert!((x - y).abs() <= 1e-9);
        }
    }
}
