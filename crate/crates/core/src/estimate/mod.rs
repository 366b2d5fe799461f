//! Lasso and unpenalized estimators of the drift parameter.

mod brute;
mod cv;
mod gram;
mod lasso;
mod mle;
mod ou;

pub use brute::brute_force_lasso;
pub use cv::{block_bounds, cross_validate, CvResult};
pub use gram::{
    accumulate, build_gram, contrast_direct, empirical_covariance, GramAccumulator, GramSystem,
};
pub use lasso::{
    coordinate_descent, kkt_residual, lasso_path, lasso_solve, lasso_solve_warm, log_grid,
    soft_threshold, EstimationResult, LassoConfig, Quadratic,
};
pub use mle::mle_solve;
pub use ou::{lasso_ou, lasso_ou_system, OuEstimate, OuRowSystem};
