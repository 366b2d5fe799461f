//! Monte Carlo audits of the concentration bounds and the oracle inequality.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use super::constants::{linear_concentration_bound, oracle_rhs, ou_concentration_bound};
use crate::error::{check_len, Error, Result};
use crate::estimate::{empirical_covariance, Quadratic};
use crate::model::{DriftBasis, SparseParam};
use crate::rng;
use crate::simulate::{simulate_linear, simulate_ou_exact, OUModel, SimulationConfig};

/// One row of an audit table: the tail level, the observed exceedance
/// frequency, the bound and the binomial standard error of the frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AuditRow {
    pub level: f64,
    pub empirical: f64,
    pub bound: f64,
    pub se: f64,
    pub reps: usize,
}

impl AuditRow {
    pub fn passes(&self) -> bool {
        self.empirical <= self.bound + 3.0 * self.se
    }
}

pub fn binomial_se(p: f64, reps: usize) -> f64 {
    (p * (1.0 - p) / reps as f64).sqrt()
}

/// A scalar test function with its declared Lipschitz constant.
pub struct LipschitzFn<'a> {
    pub f: &'a (dyn Fn(&[f64]) -> f64 + Sync),
    pub lipschitz: f64,
}

/// Inputs for the linear concentration audit.
pub struct LinearAuditSpec<'a> {
    pub basis: &'a DriftBasis,
    pub theta0: &'a SparseParam,
    pub sim: SimulationConfig,
    pub m_mono: f64,
    pub l_drift: f64,
}

/// Tail frequencies of `(1/n)·Σ f(X_{t_i})` around its Monte Carlo mean.
pub fn concentration_audit_linear(
    spec: &LinearAuditSpec<'_>,
    f: &LipschitzFn<'_>,
    r_grid: &[f64],
    reps: usize,
    seed: u64,
) -> Result<Vec<AuditRow>> {
    if reps == 0 {
        return Err(Error::InvalidInput("need at least one replication".into()));
    }
    let n = spec.sim.n;
    let averages: Vec<f64> = (0..reps as u64)
        .into_par_iter()
        .map(|r| {
            let mut cfg = spec.sim.clone();
            cfg.seed = seed ^ r;
            let (traj, _) = simulate_linear(spec.basis, spec.theta0, &cfg)?;
            Ok((1..=n).map(|i| (f.f)(traj.state(i))).sum::<f64>() / n as f64)
        })
        .collect::<Result<_>>()?;
    let mean = averages.iter().sum::<f64>() / reps as f64;
    Ok(r_grid
        .iter()
        .map(|&r| {
            let hits = averages.iter().filter(|&&a| a - mean > r).count();
            let p = hits as f64 / reps as f64;
            AuditRow {
                level: r,
                empirical: p,
                bound: linear_concentration_bound(
                    r,
                    n,
                    spec.sim.delta_n,
                    spec.basis.d(),
                    f.lipschitz,
                    spec.m_mono,
                    spec.l_drift,
                ),
                se: binomial_se(p, reps),
                reps,
            }
        })
        .collect())
}

/// Unit vectors: the coordinate axes followed by `extra` uniform draws.
pub fn audit_directions(d: usize, extra: usize, seed: u64) -> Vec<DVector<f64>> {
    let mut out: Vec<DVector<f64>> = (0..d)
        .map(|k| DVector::from_fn(d, |i, _| if i == k { 1.0 } else { 0.0 }))
        .collect();
    let mut rng = rng::rng(seed);
    while out.len() < d + extra {
        let mut v = DVector::zeros(d);
        rng::fill_normal(&mut rng, v.as_mut_slice());
        let norm = v.norm();
        if norm > 1e-12 {
            out.push(v / norm);
        }
    }
    out
}

/// Exceedance frequencies of `|vᵀ(C_T − C∞)v| > x`, maximized over directions.
pub fn concentration_audit_ou(
    ou: &OUModel,
    n: usize,
    delta_n: f64,
    x_grid: &[f64],
    reps: usize,
    directions: &[DVector<f64>],
    seed: u64,
) -> Result<Vec<AuditRow>> {
    if reps == 0 || directions.is_empty() {
        return Err(Error::InvalidInput("need replications and directions".into()));
    }
    let deviations: Vec<Vec<f64>> = (0..reps as u64)
        .into_par_iter()
        .map(|r| {
            let traj = simulate_ou_exact(&ou.a, n, delta_n, seed ^ r, true)?;
            let gap: DMatrix<f64> = empirical_covariance(&traj) - &ou.c_inf;
            Ok(directions.iter().map(|v| v.dot(&(&gap * v)).abs()).collect())
        })
        .collect::<Result<_>>()?;
    Ok(x_grid
        .iter()
        .map(|&x| {
            let worst = (0..directions.len())
                .map(|k| deviations.iter().filter(|dev| dev[k] > x).count())
                .max()
                .unwrap_or(0);
            let p = worst as f64 / reps as f64;
            AuditRow {
                level: x,
                empirical: p,
                bound: ou_concentration_bound(x, n, delta_n, ou),
                se: binomial_se(p, reps),
                reps,
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OracleCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// `‖b_{θ̂} − b_{θ₀}‖²_D ≤ 4λ²s(2+γ)²/(k²γΔₙ²)`, the left side read off the
/// quadratic form.
pub fn oracle_check<Q: Quadratic>(
    q: &Q,
    theta_hat: &[f64],
    theta0: &[f64],
    lambda: f64,
    s: usize,
    gamma: f64,
    k: f64,
) -> Result<OracleCheck> {
    check_len("estimate length", q.dim(), theta_hat.len())?;
    check_len("parameter length", q.dim(), theta0.len())?;
    let diff: Vec<f64> = theta_hat.iter().zip(theta0).map(|(a, b)| a - b).collect();
    let gd = q.apply(&diff);
    let lhs = diff.iter().zip(&gd).map(|(a, b)| a * b).sum::<f64>();
    let rhs = oracle_rhs(lambda, s, gamma, k, q.delta_n());
    Ok(OracleCheck {
        lhs,
        rhs,
        holds: lhs <= rhs,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleAudit {
    pub fraction: f64,
    pub checks: Vec<OracleCheck>,
}

/// Runs `replicate(seed ^ r)` for each replication; it returns the oracle
/// check for that replication's fitted estimate.
pub fn oracle_audit<F>(
    reps: usize,
    seed: u64,
    k: f64,
    l_re: f64,
    replicate: F,
) -> Result<OracleAudit>
where
    F: Fn(u64) -> Result<OracleCheck> + Sync,
{
    if reps == 0 {
        return Err(Error::InvalidInput("need at least one replication".into()));
    }
    if !(k > 0.0) || k * k >= l_re {
        return Err(Error::InvalidInput(format!(
            "need 0 < k and k² < l, got k = {k}, l = {l_re}"
        )));
    }
    let checks: Vec<OracleCheck> = (0..reps as u64)
        .into_par_iter()
        .map(|r| replicate(seed ^ r))
        .collect::<Result<_>>()?;
    let fraction = checks.iter().filter(|c| c.holds).count() as f64 / reps as f64;
    Ok(OracleAudit { fraction, checks })
}
