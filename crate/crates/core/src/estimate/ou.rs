//! Lasso for the interaction matrix of an Ornstein–Uhlenbeck process.
//!
//! Row `r` of `A` solves its own problem with Gram matrix `C_T`; the rows are
//! swept in lockstep so that the iterates coincide with the dense solver run
//! on the ou-linear basis.

use nalgebra::DMatrix;

use super::gram::{constant_term, empirical_covariance, linear_term};
use super::lasso::{coordinate_descent, EstimationResult, LassoConfig, Quadratic};
use crate::error::{Error, Result};
use crate::model::OUParam;
use crate::simulate::Trajectory;

/// The `d` row problems, indexed like `vec(A)` (entry `(r, c)` at `c·d + r`).
#[derive(Debug, Clone)]
pub struct OuRowSystem {
    pub c_t: DMatrix<f64>,
    pub linear: Vec<f64>,
    pub constant: f64,
    pub delta_n: f64,
    d: usize,
}

impl OuRowSystem {
    pub fn build(traj: &Trajectory) -> Result<Self> {
        let n = traj.n();
        if n < 2 {
            return Err(Error::InvalidInput(format!(
                "need at least two increments, got {n}"
            )));
        }
        let d = traj.d();
        let mut cross = vec![0.0; d * d];
        let mut dx_sq = 0.0;
        let mut dx = vec![0.0; d];
        for i in 0..n {
            let (x0, x1) = (traj.state(i), traj.state(i + 1));
            for k in 0..d {
                dx[k] = x1[k] - x0[k];
            }
            for c in 0..d {
                for r in 0..d {
                    cross[c * d + r] += x0[c] * dx[r];
                }
            }
            dx_sq += dx.iter().fold(0.0, |s, v| s + v * v);
        }
        let nf = n as f64;
        let dt = traj.delta_n();
        Ok(Self {
            c_t: empirical_covariance(traj),
            linear: cross.iter().map(|&c| linear_term(c, 0.0, nf, dt)).collect(),
            constant: constant_term(dx_sq, 0.0, 0.0, nf, dt),
            delta_n: dt,
            d,
        })
    }

    pub fn d(&self) -> usize {
        self.d
    }
}

impl Quadratic for OuRowSystem {
    fn dim(&self) -> usize {
        self.d * self.d
    }

    fn delta_n(&self) -> f64 {
        self.delta_n
    }

    fn constant(&self) -> f64 {
        self.constant
    }

    fn linear(&self, j: usize) -> f64 {
        self.linear[j]
    }

    fn diag(&self, j: usize) -> f64 {
        let c = j / self.d;
        self.c_t[(c, c)]
    }

    fn add_column(&self, j: usize, scale: f64, out: &mut [f64]) {
        let (c, r) = (j / self.d, j % self.d);
        for cc in 0..self.d {
            out[cc * self.d + r] += scale * self.c_t[(cc, c)];
        }
    }

    fn is_finite(&self) -> bool {
        self.constant.is_finite()
            && self.linear.iter().all(|v| v.is_finite())
            && self.c_t.iter().all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone)]
pub struct OuEstimate {
    pub a_hat: OUParam,
    pub result: EstimationResult,
}

/// `Â_L = argmin_A R_T(A) + λ‖A‖₁`.
pub fn lasso_ou(traj: &Trajectory, lambda: f64, cfg: &LassoConfig) -> Result<OuEstimate> {
    let sys = OuRowSystem::build(traj)?;
    lasso_ou_system(&sys, lambda, cfg)
}

pub fn lasso_ou_system(sys: &OuRowSystem, lambda: f64, cfg: &LassoConfig) -> Result<OuEstimate> {
    let (result, _) = coordinate_descent(sys, lambda, cfg, None, false)?;
    let a_hat = OUParam::from_vec(sys.d, &result.theta_hat)?;
    Ok(OuEstimate { a_hat, result })
}
