//! Cyclic coordinate descent for `c + ℓᵀθ + Δₙ·θᵀGθ + λ‖θ‖₁`.

use serde::Serialize;

use super::gram::GramSystem;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LassoConfig {
    /// Largest coordinate change in a sweep below which the KKT check runs.
    pub tol: f64,
    pub max_sweeps: usize,
    /// Entries below this magnitude are set to exactly zero after solving.
    pub snap: f64,
}

impl Default for LassoConfig {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_sweeps: 10_000,
            snap: 1e-12,
        }
    }
}

impl LassoConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) || self.max_sweeps == 0 || !(self.snap >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "solver config needs tol > 0, max_sweeps ≥ 1, snap ≥ 0; got {self:?}"
            )));
        }
        Ok(())
    }

    /// KKT tolerance `10·tol·max(1, ‖ℓ‖∞)`.
    pub fn kkt_bound(&self, linear_sup: f64) -> f64 {
        10.0 * self.tol * linear_sup.max(1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimationResult {
    pub theta_hat: Vec<f64>,
    pub lambda: f64,
    pub sweeps_used: usize,
    pub kkt_residual: f64,
    pub converged: bool,
    /// Coordinates with a zero diagonal Gram entry, held at zero.
    pub pinned: Vec<usize>,
    /// Set by the unpenalized solver when the system is rank deficient.
    pub rank_deficient: bool,
}

/// A convex quadratic `c + ℓᵀθ + Δₙ·θᵀGθ` exposed column by column.
pub trait Quadratic {
    fn dim(&self) -> usize;
    fn delta_n(&self) -> f64;
    fn constant(&self) -> f64;
    fn linear(&self, j: usize) -> f64;
    fn diag(&self, j: usize) -> f64;
    /// `out += scale · G[:, j]`.
    fn add_column(&self, j: usize, scale: f64, out: &mut [f64]);
    fn is_finite(&self) -> bool;

    fn linear_sup(&self) -> f64 {
        (0..self.dim()).fold(0.0_f64, |m, j| m.max(self.linear(j).abs()))
    }

    /// `G·θ`.
    fn apply(&self, theta: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        for (j, &t) in theta.iter().enumerate() {
            if t != 0.0 {
                self.add_column(j, t, &mut out);
            }
        }
        out
    }
}

impl Quadratic for GramSystem {
    fn dim(&self) -> usize {
        self.p()
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
        self.gram[(j, j)]
    }

    fn add_column(&self, j: usize, scale: f64, out: &mut [f64]) {
        for (o, g) in out.iter_mut().zip(self.gram.column(j).iter()) {
            *o += scale * g;
        }
    }

    fn is_finite(&self) -> bool {
        self.constant.is_finite()
            && self.delta_n.is_finite()
            && self.linear.iter().all(|v| v.is_finite())
            && self.gram.iter().all(|v| v.is_finite())
    }
}

pub fn soft_threshold(z: f64, gamma: f64) -> f64 {
    if z > gamma {
        z - gamma
    } else if z < -gamma {
        z + gamma
    } else {
        0.0
    }
}

/// Objective given a precomputed `r = G·θ`.
fn objective_with<Q: Quadratic>(q: &Q, theta: &[f64], r: &[f64], lambda: f64) -> f64 {
    let mut lin = 0.0;
    let mut quad = 0.0;
    let mut l1 = 0.0;
    for (j, (&t, &rj)) in theta.iter().zip(r).enumerate() {
        lin += q.linear(j) * t;
        quad += t * rj;
        l1 += t.abs();
    }
    q.constant() + lin + q.delta_n() * quad + lambda * l1
}

/// Largest violation of the subgradient conditions, ignoring pinned coordinates.
pub fn kkt_residual<Q: Quadratic>(q: &Q, theta: &[f64], lambda: f64, pinned: &[bool]) -> f64 {
    let r = q.apply(theta);
    kkt_with(q, theta, &r, lambda, pinned)
}

fn kkt_with<Q: Quadratic>(q: &Q, theta: &[f64], r: &[f64], lambda: f64, pinned: &[bool]) -> f64 {
    let two_dt = 2.0 * q.delta_n();
    let mut worst = 0.0_f64;
    for j in 0..q.dim() {
        if pinned[j] {
            continue;
        }
        let g = q.linear(j) + two_dt * r[j];
        let v = if theta[j] != 0.0 {
            (g + lambda * theta[j].signum()).abs()
        } else {
            (g.abs() - lambda).max(0.0)
        };
        worst = worst.max(v);
    }
    worst
}

/// Solver entry point shared by the dense and structured systems. When
/// `trace` is set, the penalized objective after every sweep is returned.
pub fn coordinate_descent<Q: Quadratic>(
    q: &Q,
    lambda: f64,
    cfg: &LassoConfig,
    warm: Option<&[f64]>,
    trace: bool,
) -> Result<(EstimationResult, Option<Vec<f64>>)> {
    cfg.validate()?;
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidInput(format!("λ must be finite and ≥ 0, got {lambda}")));
    }
    if !q.is_finite() {
        return Err(Error::InvalidInput("quadratic has non-finite entries".into()));
    }
    let p = q.dim();
    let dt = q.delta_n();
    let pinned: Vec<bool> = (0..p).map(|j| !(q.diag(j) > 0.0)).collect();
    let mut theta = match warm {
        Some(w) => {
            crate::error::check_len("warm start length", p, w.len())?;
            w.to_vec()
        }
        None => vec![0.0; p],
    };
    for j in 0..p {
        if pinned[j] {
            theta[j] = 0.0;
        }
    }
    let mut r = q.apply(&theta);
    let bound = cfg.kkt_bound(q.linear_sup());
    let mut objectives = trace.then(|| vec![objective_with(q, &theta, &r, lambda)]);
    let mut converged = false;
    let mut sweeps = 0;

    while sweeps < cfg.max_sweeps {
        sweeps += 1;
        let mut max_change = 0.0_f64;
        for j in 0..p {
            if pinned[j] {
                continue;
            }
            let gjj = q.diag(j);
            let old = theta[j];
            let z = -(q.linear(j) + 2.0 * dt * (r[j] - gjj * old));
            let new = soft_threshold(z, lambda) / (2.0 * dt * gjj);
            if new != old {
                q.add_column(j, new - old, &mut r);
                theta[j] = new;
                max_change = max_change.max((new - old).abs());
            }
        }
        if let Some(obj) = objectives.as_mut() {
            obj.push(objective_with(q, &theta, &r, lambda));
        }
        if max_change < cfg.tol && kkt_with(q, &theta, &r, lambda, &pinned) <= bound {
            converged = true;
            break;
        }
    }

    for t in theta.iter_mut() {
        if t.abs() < cfg.snap {
            *t = 0.0;
        }
    }
    let kkt = kkt_residual(q, &theta, lambda, &pinned);
    let result = EstimationResult {
        theta_hat: theta,
        lambda,
        sweeps_used: sweeps,
        kkt_residual: kkt,
        converged: converged && kkt <= bound,
        pinned: (0..p).filter(|&j| pinned[j]).collect(),
        rank_deficient: false,
    };
    Ok((result, objectives))
}

pub fn lasso_solve(gram: &GramSystem, lambda: f64, cfg: &LassoConfig) -> Result<EstimationResult> {
    coordinate_descent(gram, lambda, cfg, None, false).map(|(r, _)| r)
}

pub fn lasso_solve_warm(
    gram: &GramSystem,
    lambda: f64,
    cfg: &LassoConfig,
    warm: &[f64],
) -> Result<EstimationResult> {
    coordinate_descent(gram, lambda, cfg, Some(warm), false).map(|(r, _)| r)
}

/// Warm-started solves along a strictly descending grid.
pub fn lasso_path<Q: Quadratic>(
    q: &Q,
    lambda_grid: &[f64],
    cfg: &LassoConfig,
) -> Result<Vec<EstimationResult>> {
    if lambda_grid.is_empty() {
        return Err(Error::InvalidInput("λ grid is empty".into()));
    }
    if lambda_grid.windows(2).any(|w| !(w[0] > w[1])) {
        return Err(Error::InvalidInput("λ grid must be strictly descending".into()));
    }
    let mut out: Vec<EstimationResult> = Vec::with_capacity(lambda_grid.len());
    for &lambda in lambda_grid {
        let warm = out.last().map(|r| r.theta_hat.as_slice());
        out.push(coordinate_descent(q, lambda, cfg, warm, false)?.0);
    }
    Ok(out)
}

/// `n` log-spaced values from `max` down to `max·ratio`.
pub fn log_grid(max: f64, ratio: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![max];
    }
    (0..n)
        .map(|k| max * ratio.powf(k as f64 / (n - 1) as f64))
        .collect()
}
