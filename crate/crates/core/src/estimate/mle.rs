use nalgebra::{DMatrix, DVector};

use super::gram::GramSystem;
use super::lasso::EstimationResult;
use crate::error::{Error, Result};

const RANK_CUTOFF: f64 = 1e-10;

/// Minimum-norm solution of `2Δₙ·G·θ = −ℓ`.
pub fn mle_solve(gram: &GramSystem) -> Result<EstimationResult> {
    let p = gram.p();
    let h: DMatrix<f64> = &gram.gram * (2.0 * gram.delta_n);
    let rhs: DVector<f64> = -&gram.linear;
    if h.iter().chain(rhs.iter()).any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("Gram system has non-finite entries".into()));
    }
    let svd = h.clone().svd(true, true);
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let cutoff = RANK_CUTOFF * smax;
    let rank = svd.singular_values.iter().filter(|&&s| s > cutoff).count();
    let theta = if smax > 0.0 {
        svd.solve(&rhs, cutoff)
            .map_err(|e| Error::NumericDegeneracy(e.to_string()))?
    } else {
        DVector::zeros(p)
    };
    let residual = (&h * &theta - &rhs).amax();
    Ok(EstimationResult {
        theta_hat: theta.iter().copied().collect(),
        lambda: 0.0,
        sweeps_used: 0,
        kkt_residual: residual,
        converged: true,
        pinned: Vec::new(),
        rank_deficient: rank < p,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_example() {
        let g = GramSystem {
            gram: DMatrix::identity(3, 3),
            linear: DVector::from_vec(vec![-2.0, 0.0, 0.0]),
            constant: 0.0,
            delta_n: 1.0,
            n: 1,
        };
        let r = mle_solve(&g).unwrap();
        assert_eq!(r.theta_hat, vec![1.0, 0.0, 0.0]);
        assert!(!r.rank_deficient);
    }

    #[test]
    fn singular_consistent_system() {
        let g = GramSystem {
            gram: DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]),
            linear: DVector::from_vec(vec![-2.0, -2.0]),
            constant: 0.0,
            delta_n: 0.5,
            n: 1,
        };
        let r = mle_solve(&g).unwrap();
        assert!(r.rank_deficient);
        assert!(r.kkt_residual <= 1e-8);
        assert!((r.theta_hat[0] - 1.0).abs() < 1e-12 && (r.theta_hat[1] - 1.0).abs() < 1e-12);
    }
}
