//! Ornstein–Uhlenbeck process `dX = −A·X dt + dW`.

use nalgebra::{Complex, DMatrix, DVector};

use super::Trajectory;
use crate::error::{Error, Result};
use crate::linalg;
use crate::rng;

const NEG_EIG_TOL: f64 = 1e-10;
const MAX_CONDITION: f64 = 1e12;

/// Interaction matrix with its spectral constants and stationary covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct OUModel {
    pub a: DMatrix<f64>,
    pub c_inf: DMatrix<f64>,
    /// Smallest real part of the spectrum of `A`.
    pub m_frak: f64,
    /// Condition number `‖P₀‖·‖P₀⁻¹‖` of a unit-column eigenvector basis.
    pub p_frak: f64,
    pub l_min: f64,
    pub l_max: f64,
    /// Largest diagonal entry of `C∞`.
    pub a_frak: f64,
    pub eigenvalues: Vec<Complex<f64>>,
}

impl OUModel {
    pub fn d(&self) -> usize {
        self.a.nrows()
    }
}

/// `C∞ = ∫₀^∞ e^{−sA} e^{−sAᵀ} ds`, the solution of `A·C + C·Aᵀ = I`.
pub fn stationary_covariance(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    linalg::ensure_stable(a)?;
    linalg::lyapunov_unit(a)
}

/// Covariance of `X_{t+dt}` given `X_t`.
pub fn transition_covariance(a: &DMatrix<f64>, dt: f64) -> Result<DMatrix<f64>> {
    linalg::ensure_stable(a)?;
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidInput(format!("dt must be positive, got {dt}")));
    }
    let (_, sigma) = linalg::ou_transition(a, dt);
    check_psd(&sigma)?;
    Ok(sigma)
}

fn check_psd(s: &DMatrix<f64>) -> Result<()> {
    let (lo, _) = linalg::sym_eigen_range(s);
    if lo < -NEG_EIG_TOL {
        return Err(Error::NumericDegeneracy(format!(
            "transition covariance has eigenvalue {lo:e}"
        )));
    }
    Ok(())
}

/// Exact sampler: `X_{i+1} = e^{−AΔ}·X_i + η_i`, `η_i ~ N(0, Σ_Δ)`.
pub fn simulate_ou_exact(
    a: &DMatrix<f64>,
    n: usize,
    delta_n: f64,
    seed: u64,
    stationary_init: bool,
) -> Result<Trajectory> {
    linalg::ensure_stable(a)?;
    if n == 0 {
        return Err(Error::InvalidInput("need at least one increment".into()));
    }
    if !(delta_n > 0.0 && delta_n.is_finite()) {
        return Err(Error::InvalidInput(format!("step must be positive, got {delta_n}")));
    }
    let d = a.nrows();
    let (f, sigma) = linalg::ou_transition(a, delta_n);
    check_psd(&sigma)?;
    let chol = linalg::psd_factor(&sigma, NEG_EIG_TOL)?;
    let mut rng = rng::rng(seed);
    let mut z = DVector::<f64>::zeros(d);
    let mut x = if stationary_init {
        let c = linalg::lyapunov_unit(a)?;
        let root = linalg::psd_factor(&c, NEG_EIG_TOL)?;
        rng::fill_normal(&mut rng, z.as_mut_slice());
        &root * &z
    } else {
        DVector::zeros(d)
    };
    let mut states = Vec::with_capacity((n + 1) * d);
    states.extend_from_slice(x.as_slice());
    for _ in 0..n {
        rng::fill_normal(&mut rng, z.as_mut_slice());
        x = &f * &x + &chol * &z;
        states.extend_from_slice(x.as_slice());
    }
    Trajectory::new(states, d, delta_n, seed)
}

/// Spectral constants of a stable, diagonalizable `A`.
pub fn ou_spectral_constants(a: &DMatrix<f64>) -> Result<OUModel> {
    let m_frak = linalg::ensure_stable(a)?;
    let d = a.nrows();
    let eigenvalues = linalg::eigenvalues(a)?;
    let scale = linalg::op_norm(a).max(1.0);

    let mut groups: Vec<(Complex<f64>, usize)> = Vec::new();
    for &z in &eigenvalues {
        match groups
            .iter_mut()
            .find(|(c, _)| (*c - z).norm() <= 1e-6 * scale)
        {
            Some(g) => g.1 += 1,
            None => groups.push((z, 1)),
        }
    }

    let ac: DMatrix<Complex<f64>> = a.map(|v| Complex::new(v, 0.0));
    let null_tol = 1e-7 * scale;
    let mut cols: Vec<DVector<Complex<f64>>> = Vec::with_capacity(d);
    for (tau, mult) in &groups {
        let shifted = &ac - DMatrix::<Complex<f64>>::identity(d, d) * *tau;
        let svd = shifted.svd(false, true);
        let v_t = svd
            .v_t
            .ok_or_else(|| Error::DiagonalizationFailed("SVD did not return vectors".into()))?;
        let sv = &svd.singular_values;
        for k in (d - mult)..d {
            if sv[k] > null_tol {
                return Err(Error::DiagonalizationFailed(format!(
                    "eigenvalue {tau} has algebraic multiplicity {mult} but a smaller eigenspace"
                )));
            }
            let v = v_t.row(k).adjoint();
            let norm = v.norm();
            cols.push(v / Complex::new(norm, 0.0));
        }
    }
    let p0 = DMatrix::from_columns(&cols);
    let sv = p0.singular_values();
    let smax = sv.iter().copied().fold(0.0, f64::max);
    let smin = sv.iter().copied().fold(f64::INFINITY, f64::min);
    let p_frak = smax / smin;
    if !(p_frak.is_finite() && p_frak < MAX_CONDITION) {
        return Err(Error::DiagonalizationFailed(format!(
            "eigenvector matrix condition {p_frak:e} is too large"
        )));
    }

    let c_inf = linalg::lyapunov_unit(a)?;
    let (l_min, l_max) = linalg::sym_eigen_range(&c_inf);
    if l_min <= 0.0 {
        return Err(Error::NumericDegeneracy(
            "stationary covariance is not positive definite".into(),
        ));
    }
    let a_frak = c_inf.diagonal().iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(OUModel {
        a: a.clone(),
        c_inf,
        m_frak,
        p_frak,
        l_min,
        l_max,
        a_frak,
        eigenvalues,
    })
}
