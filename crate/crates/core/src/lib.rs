//! Sparse drift estimation for diffusions observed at discrete times.
//!
//! The drift is linear in an unknown parameter, `b_θ = φ₀ + Σ θ_j φ_j`, and
//! `θ` is recovered by minimizing the discretized contrast plus an ℓ₁ penalty.
//! Besides the estimators the crate carries samplers for the diffusion and for
//! the Ornstein–Uhlenbeck special case, the constants and tail bounds that
//! govern the estimator's error, and Monte Carlo audits of those bounds.

pub mod error;
pub mod estimate;
pub mod linalg;
pub mod metrics;
pub mod model;
pub mod rng;
pub mod simulate;
pub mod theory;

pub use error::{Error, Result};
pub use model::{BasisFamily, CustomField, DriftBasis, OUParam, SparseParam};
pub use simulate::{NoiseRecord, Trajectory};
