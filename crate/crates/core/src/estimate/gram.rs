//! The discretized contrast as an explicit quadratic.

use nalgebra::{DMatrix, DVector};

use crate::error::{check_len, Error, Result};
use crate::model::DriftBasis;
use crate::simulate::Trajectory;

/// `R_T(θ) = c + ℓᵀθ + Δₙ·θᵀGθ`.
#[derive(Debug, Clone, PartialEq)]
pub struct GramSystem {
    pub gram: DMatrix<f64>,
    pub linear: DVector<f64>,
    pub constant: f64,
    pub delta_n: f64,
    /// Number of increments the sums were taken over.
    pub n: usize,
}

impl GramSystem {
    pub fn p(&self) -> usize {
        self.linear.len()
    }

    /// Unpenalized contrast at `θ`.
    pub fn contrast(&self, theta: &[f64]) -> f64 {
        let t = DVector::from_column_slice(theta);
        self.constant + self.linear.dot(&t) + self.delta_n * t.dot(&(&self.gram * &t))
    }

    /// Contrast plus `λ‖θ‖₁`.
    pub fn objective(&self, theta: &[f64], lambda: f64) -> f64 {
        self.contrast(theta) + lambda * theta.iter().map(|v| v.abs()).sum::<f64>()
    }

    /// Gradient `ℓ + 2Δₙ·Gθ` of the contrast.
    pub fn gradient(&self, theta: &[f64]) -> DVector<f64> {
        let t = DVector::from_column_slice(theta);
        &self.linear + (&self.gram * &t) * (2.0 * self.delta_n)
    }

    pub fn linear_sup(&self) -> f64 {
        self.linear.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// `‖b_θ − b_υ‖²_D = (θ−υ)ᵀG(θ−υ)`.
    pub fn d_norm_sq(&self, theta: &[f64], upsilon: &[f64]) -> f64 {
        let diff = DVector::from_iterator(theta.len(), theta.iter().zip(upsilon).map(|(a, b)| a - b));
        diff.dot(&(&self.gram * &diff))
    }
}

/// Unnormalized sums over a set of increments; blocks can be merged before
/// normalizing, which is how cross-validation builds training systems.
#[derive(Debug, Clone)]
pub struct GramAccumulator {
    p: usize,
    d: usize,
    /// `Σ Φᵀ Φ`, upper triangle filled during accumulation.
    gram: DMatrix<f64>,
    /// `Σ Φᵀ ΔX`.
    cross: DVector<f64>,
    /// `Σ Φᵀ φ₀`.
    anchor_cross: DVector<f64>,
    dx_sq: f64,
    anchor_dx: f64,
    anchor_sq: f64,
    count: usize,
    phi0: Vec<f64>,
    phi: Vec<f64>,
}

impl GramAccumulator {
    pub fn new(basis: &DriftBasis) -> Self {
        let (p, d) = (basis.p(), basis.d());
        Self {
            p,
            d,
            gram: DMatrix::zeros(p, p),
            cross: DVector::zeros(p),
            anchor_cross: DVector::zeros(p),
            dx_sq: 0.0,
            anchor_dx: 0.0,
            anchor_sq: 0.0,
            count: 0,
            phi0: vec![0.0; d],
            phi: vec![0.0; d * p],
        }
    }

    pub fn count(&self) -> usize {
        self.count
    }

    /// Adds the increment `ΔX = x_next − x_prev` evaluated at `x_prev`.
    pub fn add(&mut self, basis: &DriftBasis, x_prev: &[f64], x_next: &[f64]) {
        let (p, d) = (self.p, self.d);
        basis.eval_features(x_prev, &mut self.phi0, &mut self.phi);
        let dx: Vec<f64> = x_next.iter().zip(x_prev).map(|(a, b)| a - b).collect();
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).fold(0.0, |s, (u, v)| s + u * v);
        for j in 0..p {
            let cj = &self.phi[j * d..(j + 1) * d];
            for l in j..p {
                self.gram[(j, l)] += dot(cj, &self.phi[l * d..(l + 1) * d]);
            }
            self.cross[j] += dot(cj, &dx);
            self.anchor_cross[j] += dot(cj, &self.phi0);
        }
        self.dx_sq += dot(&dx, &dx);
        self.anchor_dx += dot(&self.phi0, &dx);
        self.anchor_sq += dot(&self.phi0, &self.phi0);
        self.count += 1;
    }

    pub fn merge(&mut self, other: &Self) {
        self.gram += &other.gram;
        self.cross += &other.cross;
        self.anchor_cross += &other.anchor_cross;
        self.dx_sq += other.dx_sq;
        self.anchor_dx += other.anchor_dx;
        self.anchor_sq += other.anchor_sq;
        self.count += other.count;
    }

    pub fn finish(&self, delta_n: f64) -> Result<GramSystem> {
        if self.count == 0 {
            return Err(Error::InvalidInput("no increments accumulated".into()));
        }
        let n = self.count as f64;
        let mut gram = DMatrix::zeros(self.p, self.p);
        for j in 0..self.p {
            for l in j..self.p {
                let v = self.gram[(j, l)] / n;
                gram[(j, l)] = v;
                gram[(l, j)] = v;
            }
        }
        let linear = self
            .cross
            .zip_map(&self.anchor_cross, |c, a| linear_term(c, a, n, delta_n));
        let constant = constant_term(self.dx_sq, self.anchor_dx, self.anchor_sq, n, delta_n);
        Ok(GramSystem {
            gram,
            linear,
            constant,
            delta_n,
            n: self.count,
        })
    }
}

/// `ℓ_j = (2/n)·Σ φ_jᵀΔX + 2Δₙ·(1/n)·Σ φ_jᵀφ₀` from the raw sums.
pub(crate) fn linear_term(cross: f64, anchor_cross: f64, n: f64, delta_n: f64) -> f64 {
    2.0 * cross / n + 2.0 * delta_n * anchor_cross / n
}

pub(crate) fn constant_term(dx_sq: f64, anchor_dx: f64, anchor_sq: f64, n: f64, delta_n: f64) -> f64 {
    dx_sq / (n * delta_n) + 2.0 * anchor_dx / n + delta_n * anchor_sq / n
}

fn check_inputs(traj: &Trajectory, basis: &DriftBasis) -> Result<()> {
    check_len("trajectory dimension", basis.d(), traj.d())?;
    if traj.n() < 2 {
        return Err(Error::InvalidInput(format!(
            "need at least two increments, got {}",
            traj.n()
        )));
    }
    Ok(())
}

/// Accumulates increments `from..to` (indices of the left endpoints).
pub fn accumulate(
    traj: &Trajectory,
    basis: &DriftBasis,
    from: usize,
    to: usize,
) -> GramAccumulator {
    let mut acc = GramAccumulator::new(basis);
    for i in from..to {
        acc.add(basis, traj.state(i), traj.state(i + 1));
    }
    acc
}

pub fn build_gram(traj: &Trajectory, basis: &DriftBasis) -> Result<GramSystem> {
    check_inputs(traj, basis)?;
    accumulate(traj, basis, 0, traj.n()).finish(traj.delta_n())
}

/// `R_T(θ) = (1/T)·Σ‖ΔX_i + Δₙ·b_θ(X_{t_{i−1}})‖²` by direct summation.
pub fn contrast_direct(traj: &Trajectory, basis: &DriftBasis, theta: &[f64]) -> Result<f64> {
    check_inputs(traj, basis)?;
    check_len("parameter length", basis.p(), theta.len())?;
    let d = basis.d();
    let dt = traj.delta_n();
    let mut b = vec![0.0; d];
    let mut total = 0.0;
    for i in 0..traj.n() {
        let (x0, x1) = (traj.state(i), traj.state(i + 1));
        basis.drift_into(theta, x0, &mut b);
        for k in 0..d {
            let r = x1[k] - x0[k] + dt * b[k];
            total += r * r;
        }
    }
    Ok(total / traj.horizon())
}

/// `C_T = (1/n)·Σ X_{t_{i−1}} X_{t_{i−1}}ᵀ`. A single-state path gives `x·xᵀ`.
pub fn empirical_covariance(traj: &Trajectory) -> DMatrix<f64> {
    let d = traj.d();
    let count = traj.n().max(1);
    let mut c = DMatrix::zeros(d, d);
    for i in 0..count {
        let x = traj.state(i);
        for a in 0..d {
            for b in a..d {
                c[(a, b)] += x[a] * x[b];
            }
        }
    }
    for a in 0..d {
        for b in a..d {
            let v = c[(a, b)] / count as f64;
            c[(a, b)] = v;
            c[(b, a)] = v;
        }
    }
    c
}
