use drift_lasso::metrics::*;
use drift_lasso::model::*;
use proptest::prelude::*;
use proptest::collection::vec;

fn near_cone_boundary(x: &[f64], s: usize, c: f64) -> bool {
    let total: f64 = x.iter().map(|v| v.abs()).sum();
    let head: f64 = top_indices(x, s).iter().map(|&i| x[i].abs()).sum();
    (total - (1.0 + c) * head).abs() <= 1e-9 * total
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn drift_is_affine_in_theta(
        t1 in vec(-5.0f64..5.0, 6),
        t2 in vec(-5.0f64..5.0, 6),
        x in vec(-3.0f64..3.0, 3),
        anchor in 0.5f64..4.0,
    ) {
        let basis = DriftBasis::cosine(3, 6, anchor).unwrap();
        let sum: Vec<f64> = t1.iter().zip(&t2).map(|(a, b)| a + b).collect();
        let b1 = basis.eval_drift(&SparseParam::new(t1), &x).unwrap();
        let b2 = basis.eval_drift(&SparseParam::new(t2), &x).unwrap();
        let b12 = basis.eval_drift(&SparseParam::new(sum), &x).unwrap();
        let mut phi0 = vec![0.0; 3];
        basis.eval_anchor(&x, &mut phi0);
        for k in 0..3 {
            prop_assert!((b12[k] - (b1[k] + b2[k] - phi0[k])).abs() <= 1e-12 * (1.0 + b12[k].abs()));
        }
    }

    #[test]
    fn ou_linear_drift_is_matrix_product(a in vec(-2.0f64..2.0, 9), x in vec(-3.0f64..3.0, 3)) {
        let basis = DriftBasis::ou_linear(3).unwrap();
        let b = basis.eval_drift(&SparseParam::new(a.clone()), &x).unwrap();
        let m = nalgebra::DMatrix::from_column_slice(3, 3, &a);
        let ax = &m * nalgebra::DVector::from_column_slice(&x);
        for k in 0..3 {
            prop_assert!((b[k] - ax[k]).abs() <= 1e-12);
        }
    }

    #[test]
    fn cone_membership_is_scale_invariant(
        x in vec(-10.0f64..10.0, 1..20),
        s in 1usize..5,
        c in 0.1f64..10.0,
        scale in 1e-3f64..1e3,
    ) {
        prop_assume!(x.iter().any(|v| *v != 0.0));
        prop_assume!(!near_cone_boundary(&x, s, c));
        let y: Vec<f64> = x.iter().map(|v| v * scale).collect();
        prop_assert_eq!(cone_membership(&x, s, c).unwrap(), cone_membership(&y, s, c).unwrap());
    }

    #[test]
    fn error_norms_triangle_inequality(
        a in vec(-10.0f64..10.0, 12),
        b in vec(-10.0f64..10.0, 12),
        c in vec(-10.0f64..10.0, 12),
    ) {
        let ac = error_norms(&a, &c).unwrap();
        let ab = error_norms(&a, &b).unwrap();
        let bc = error_norms(&b, &c).unwrap();
        prop_assert!(ac.l1 <= ab.l1 + bc.l1 + 1e-12);
        prop_assert!(ac.l2 <= ab.l2 + bc.l2 + 1e-12);
    }

    #[test]
    fn support_score_is_permutation_symmetric(
        pairs in vec((prop_oneof![Just(0.0), -3.0f64..3.0], prop_oneof![Just(0.0), -3.0f64..3.0]), 1..25),
        shift in 0usize..25,
        tau in 0.0f64..1.0,
    ) {
        let (h, t): (Vec<f64>, Vec<f64>) = pairs.iter().cloned().unzip();
        let n = h.len();
        let perm: Vec<usize> = (0..n).map(|i| (i * 7 + shift) % n).collect();
        prop_assume!({ let mut p = perm.clone(); p.sort(); p.dedup(); p.len() == n });
        let hp: Vec<f64> = perm.iter().map(|&i| h[i]).collect();
        let tp: Vec<f64> = perm.iter().map(|&i| t[i]).collect();
        prop_assert_eq!(support_score(&h, &t, tau).unwrap(), support_score(&hp, &tp, tau).unwrap());
    }

    #[test]
    fn rate_fit_slope_ignores_horizon_scale(
        errs in vec(0.01f64..10.0, 3..8),
        scale in 0.01f64..100.0,
    ) {
        let pts: Vec<(f64, f64)> = errs.iter().enumerate().map(|(k, &e)| (100.0 * 2f64.powi(k as i32), e)).collect();
        let scaled: Vec<(f64, f64)> = pts.iter().map(|&(t, e)| (t * scale, e)).collect();
        let a = rate_fit(&pts).unwrap();
        let b = rate_fit(&scaled).unwrap();
        prop_assert!((a.slope - b.slope).abs() <= 1e-12);
        prop_assert!((a.r2 - b.r2).abs() <= 1e-12);
    }

    #[test]
    fn top_indices_are_the_largest(x in vec(-5.0f64..5.0, 1..30), s in 0usize..30) {
        let idx = top_indices(&x, s);
        prop_assert_eq!(idx.len(), s.min(x.len()));
        let floor = idx.iter().map(|&i| x[i].abs()).fold(f64::INFINITY, f64::min);
        for (j, v) in x.iter().enumerate() {
            if !idx.contains(&j) {
                prop_assert!(v.abs() <= floor);
            }
        }
    }
}

#[test]
fn cosine_lipschitz_constants() {
    let basis = DriftBasis::cosine(4, 5, 2.5).unwrap();
    assert_eq!(basis.lipschitz_constants(), vec![7.5, 2.0, 3.0, 4.0, 5.0, 6.0]);
}

#[test]
fn cosine_lipschitz_constants_bound_finite_differences() {
    let basis = DriftBasis::cosine(1, 4, 1.0).unwrap();
    let l = basis.lipschitz_constants();
    let mut anchor = [0.0];
    let mut f0 = vec![0.0; 4];
    let mut f1 = vec![0.0; 4];
    for k in 0..2000 {
        let x = -3.0 + 0.003 * k as f64;
        let h = 1e-3;
        basis.eval_features(&[x], &mut anchor, &mut f0);
        basis.eval_features(&[x + h], &mut anchor, &mut f1);
        for j in 0..4 {
            assert!((f1[j] - f0[j]).abs() / h <= l[j + 1] + 1e-9);
        }
    }
}
