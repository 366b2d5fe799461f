//! Tuning constants, tail bounds and the rate-regime split.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{check_len, Error, Result};
use crate::model::{BasisFamily, DriftBasis};
use crate::simulate::OUModel;

/// Model constants entering the linear-model tuning parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModelConstants {
    /// Lipschitz constant of the true drift.
    pub l_drift: f64,
    /// Monotonicity constant.
    pub m_mono: f64,
    /// Moment-growth constant `R`.
    pub r: f64,
    pub h_dn: f64,
    pub k_dn: f64,
    pub c_b: f64,
    /// Restricted-eigenvalue lower bound `l`.
    pub l_re: f64,
    /// Norm-equivalence constant, `0 < k < √l`.
    pub k: f64,
    pub gamma: f64,
}

impl ModelConstants {
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.l_drift,
            self.m_mono,
            self.r,
            self.h_dn,
            self.k_dn,
            self.c_b,
            self.l_re,
            self.k,
            self.gamma,
        ];
        if all.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::InvalidInput(format!(
                "model constants must be finite and positive: {self:?}"
            )));
        }
        if self.k * self.k >= self.l_re {
            return Err(Error::InvalidInput(format!(
                "need k² < l, got k = {} and l = {}",
                self.k, self.l_re
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Dims {
    pub d: usize,
    pub p: usize,
    pub n: usize,
    pub s: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TuningConstants {
    pub lambda_11: f64,
    pub lambda_12: f64,
    pub lambda_1: f64,
    pub lambda_2: f64,
    pub t_1: f64,
    pub epsilon: f64,
}

impl TuningConstants {
    pub fn lambda(&self) -> f64 {
        self.lambda_1.max(self.lambda_2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OuTuningConstants {
    pub lambda_1: f64,
    pub lambda_2: f64,
    pub t_1: f64,
    /// `T₁` evaluated at `3ε/4`, the horizon threshold of the error bounds.
    pub t_1_three_quarter_eps: f64,
    pub ln_alpha: f64,
    pub beta: f64,
    pub epsilon: f64,
}

impl OuTuningConstants {
    pub fn lambda(&self) -> f64 {
        self.lambda_1.max(self.lambda_2)
    }
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidInput(format!("ε must lie in (0, 1), got {epsilon}")));
    }
    Ok(())
}

fn check_positive(what: &str, v: f64) -> Result<()> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(Error::InvalidInput(format!("{what} must be positive, got {v}")));
    }
    Ok(())
}

/// `23·√(d·R·Δₙ/n · log_term)` with `log_term = ln(2p) + ln(2/ε)`.
pub fn lambda_11(d: f64, r: f64, delta_n: f64, n: f64, log_term: f64) -> f64 {
    23.0 * (d * r * delta_n / n * log_term).sqrt()
}

/// `7·(d²·H·Δₙ/n³ · log_term³)^{1/4}`.
pub fn lambda_12(d: f64, h: f64, delta_n: f64, n: f64, log_term: f64) -> f64 {
    7.0 * (d * d * h * delta_n / (n * n * n) * log_term.powi(3)).powf(0.25)
}

/// `8e·√C_b·s·d·Δₙ^{3/2}·√log_term` with `log_term = ln p + ln(1/ε)`.
pub fn lambda_2(c_b: f64, s: f64, d: f64, delta_n: f64, log_term: f64) -> f64 {
    8.0 * std::f64::consts::E * c_b.sqrt() * s * d * delta_n.powf(1.5) * log_term.sqrt()
}

/// `ln(21^{2s}·(p^{2s} ∧ (ep/2s)^{2s}))`.
pub fn ln_cone_count(p: usize, s: usize) -> f64 {
    let (p, s) = (p as f64, s as f64);
    let tail = if s > 0.0 {
        p.ln().min((std::f64::consts::E * p / (2.0 * s)).ln())
    } else {
        0.0
    };
    2.0 * s * 21f64.ln() + 2.0 * s * tail
}

pub fn tuning_constants_linear(
    mc: &ModelConstants,
    dims: Dims,
    delta_n: f64,
    epsilon: f64,
) -> Result<TuningConstants> {
    mc.validate()?;
    check_epsilon(epsilon)?;
    check_positive("Δₙ", delta_n)?;
    if dims.d == 0 || dims.p == 0 || dims.n == 0 {
        return Err(Error::InvalidInput(format!("dimensions must be positive: {dims:?}")));
    }
    let (d, p, n, s) = (dims.d as f64, dims.p as f64, dims.n as f64, dims.s as f64);
    let log1 = (2.0 * p).ln() + (2.0 / epsilon).ln();
    let l11 = lambda_11(d, mc.r, delta_n, n, log1);
    let l12 = lambda_12(d, mc.h_dn, delta_n, n, log1);
    let l2 = lambda_2(mc.c_b, s, d, delta_n, p.ln() + (1.0 / epsilon).ln());
    let gap = mc.l_re - mc.k * mc.k;
    let t1 = 324.0 * d * mc.k_dn * (5.0 + 4.0 / mc.gamma).powi(4) / (gap * gap)
        * ((2.0 / epsilon).ln() + ln_cone_count(dims.p, dims.s));
    Ok(TuningConstants {
        lambda_11: l11,
        lambda_12: l12,
        lambda_1: l11.max(l12),
        lambda_2: l2,
        t_1: t1,
        epsilon,
    })
}

/// `√(32·Δₙ·(𝔞 + 𝔩min − k²)·log_term / n)` with `log_term = ln d² + ln(2/ε)`.
pub fn lambda_1_ou(delta_n: f64, spread: f64, n: f64, log_term: f64) -> f64 {
    (32.0 * delta_n * spread * log_term / n).sqrt()
}

pub fn beta_ou(gamma: f64) -> f64 {
    9.0 * (5.0 + 4.0 / gamma).powi(2)
}

/// `ln α` with `α = 21^{2s}·2d·(d^{4s} ∧ (ed²/2s)^{2s})`.
pub fn ln_alpha_ou(d: usize, s: usize) -> f64 {
    let (d, s) = (d as f64, s as f64);
    let tail = if s > 0.0 {
        (4.0 * s * d.ln()).min(2.0 * s * (std::f64::consts::E * d * d / (2.0 * s)).ln())
    } else {
        0.0
    };
    2.0 * s * 21f64.ln() + (2.0 * d).ln() + tail
}

/// `T₁^OU(ε, α, β)` from `ln α`.
pub fn t1_ou(ou: &OUModel, k: f64, beta: f64, ln_alpha: f64, epsilon: f64) -> f64 {
    let gap = ou.l_min - k * k;
    8.0 * ou.p_frak * ou.l_max * beta * (gap + beta * ou.l_max) / (ou.m_frak * gap * gap)
        * (ln_alpha + (1.0 / epsilon).ln())
}

#[allow(clippy::too_many_arguments)]
pub fn tuning_constants_ou(
    ou: &OUModel,
    d: usize,
    n: usize,
    s: usize,
    delta_n: f64,
    epsilon: f64,
    gamma: f64,
    k: f64,
    c_b_ou: f64,
) -> Result<OuTuningConstants> {
    check_epsilon(epsilon)?;
    check_positive("Δₙ", delta_n)?;
    check_positive("γ", gamma)?;
    check_positive("k", k)?;
    check_positive("C_b", c_b_ou)?;
    if d == 0 || n == 0 {
        return Err(Error::InvalidInput("d and n must be positive".into()));
    }
    if k * k >= ou.l_min {
        return Err(Error::InvalidInput(format!(
            "need k² < 𝔩min, got k = {k} and 𝔩min = {}",
            ou.l_min
        )));
    }
    let df = d as f64;
    let dsq_ln = (df * df).ln();
    let l1 = lambda_1_ou(
        delta_n,
        ou.a_frak + ou.l_min - k * k,
        n as f64,
        dsq_ln + (2.0 / epsilon).ln(),
    );
    let l2 = 8.0
        * std::f64::consts::E
        * c_b_ou.sqrt()
        * df
        * delta_n.powf(1.5)
        * (dsq_ln + (1.0 / epsilon).ln()).sqrt();
    let beta = beta_ou(gamma);
    let ln_alpha = ln_alpha_ou(d, s);
    Ok(OuTuningConstants {
        lambda_1: l1,
        lambda_2: l2,
        t_1: t1_ou(ou, k, beta, ln_alpha, epsilon),
        t_1_three_quarter_eps: t1_ou(ou, k, beta, ln_alpha, 0.75 * epsilon),
        ln_alpha,
        beta,
        epsilon,
    })
}

/// `H₀(x) = 𝔪/(8𝔭₀𝔩max) · x²/(x + 𝔩max)`.
pub fn h0_raw(x: f64, m_frak: f64, p_frak: f64, l_max: f64) -> f64 {
    m_frak / (8.0 * p_frak * l_max) * x * x / (x + l_max)
}

pub fn h0(x: f64, ou: &OUModel) -> Result<f64> {
    check_positive("x", x)?;
    Ok(h0_raw(x, ou.m_frak, ou.p_frak, ou.l_max))
}

/// `2·exp(−n·Δₙ·H₀(x))`.
pub fn ou_concentration_bound(x: f64, n: usize, delta_n: f64, ou: &OUModel) -> f64 {
    2.0 * (-(n as f64) * delta_n * h0_raw(x, ou.m_frak, ou.p_frak, ou.l_max)).exp()
}

/// The finite-`n` form of the covariance concentration bound.
pub fn ou_concentration_bound_finite(x: f64, n: usize, delta_n: f64, ou: &OUModel) -> f64 {
    let nf = n as f64;
    let num = x * x * nf * (1.0 - (-ou.m_frak * delta_n).exp()) / (x + ou.l_max);
    let den = 8.0 * ou.p_frak * ou.l_max * (1.0 - (-(nf + 1.0) * ou.m_frak * delta_n).exp());
    2.0 * (-num / den).exp()
}

/// `exp(−r²·n·(1−e^{−MΔₙ})² / (64·d·‖f‖²·Δₙ·e^{4LΔₙ}))`.
pub fn linear_concentration_bound(
    r: f64,
    n: usize,
    delta_n: f64,
    d: usize,
    f_lip: f64,
    m_mono: f64,
    l_drift: f64,
) -> f64 {
    let contraction = 1.0 - (-m_mono * delta_n).exp();
    let exponent = r * r * n as f64 * contraction * contraction
        / (64.0 * d as f64 * f_lip * f_lip * delta_n * (4.0 * l_drift * delta_n).exp());
    (-exponent).exp()
}

/// `32·Δₙ²·e^{4LΔₙ}·max_j L̃_j² / (1 − e^{−MΔₙ})²`, where `L̃_j` bounds the
/// Lipschitz constant of the components of `x ↦ ‖φ_j(x)‖²`.
pub fn h_delta(tilde_lipschitz: &[f64], l_drift: f64, m_mono: f64, delta_n: f64) -> f64 {
    let lmax = tilde_lipschitz.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let c = 1.0 - (-m_mono * delta_n).exp();
    32.0 * delta_n * delta_n * (4.0 * l_drift * delta_n).exp() * lmax * lmax / (c * c)
}

/// `16·Δₙ²·e^{4LΔₙ}·‖M_Lip‖²_op / (1 − e^{−MΔₙ})²`.
pub fn k_delta(m_lip: &DMatrix<f64>, l_drift: f64, m_mono: f64, delta_n: f64) -> f64 {
    let op = crate::linalg::op_norm(m_lip);
    let c = 1.0 - (-m_mono * delta_n).exp();
    16.0 * delta_n * delta_n * (4.0 * l_drift * delta_n).exp() * op * op / (c * c)
}

/// `R = max_{j,k} 2·C_j²·(1 + E|X^k|²)`.
pub fn r_constant(growth: &[f64], second_moments: &[f64]) -> f64 {
    let cmax = growth.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let emax = second_moments.iter().fold(0.0_f64, |m, v| m.max(*v));
    2.0 * cmax * cmax * (1.0 + emax)
}

/// Per-coordinate empirical second moments along a path.
pub fn second_moments(states: &[f64], d: usize) -> Vec<f64> {
    let rows = states.len() / d;
    let mut out = vec![0.0; d];
    for row in states.chunks_exact(d) {
        for (o, v) in out.iter_mut().zip(row) {
            *o += v * v;
        }
    }
    out.iter_mut().for_each(|v| *v /= rows as f64);
    out
}

/// Lipschitz bound of the true drift `b_{θ₀}`: `L₀ + Σ|θ_j|·L_j`.
pub fn drift_lipschitz(basis: &DriftBasis, theta0: &[f64]) -> Result<f64> {
    check_len("parameter length", basis.p(), theta0.len())?;
    let l = basis.lipschitz_constants();
    Ok(l[0] + theta0.iter().zip(&l[1..]).map(|(t, lj)| t.abs() * lj).sum::<f64>())
}

/// Monotonicity lower bound `L₀ − Σ|θ_j|·L_j` for a strongly monotone anchor,
/// when positive.
pub fn monotonicity_bound(basis: &DriftBasis, theta0: &[f64]) -> Result<Option<f64>> {
    check_len("parameter length", basis.p(), theta0.len())?;
    if !matches!(basis.family(), BasisFamily::Cosine { .. }) {
        return Ok(None);
    }
    let l = basis.lipschitz_constants();
    let m = l[0] - theta0.iter().zip(&l[1..]).map(|(t, lj)| t.abs() * lj).sum::<f64>();
    Ok((m > 0.0).then_some(m))
}

/// Matrix of Lipschitz bounds of `⟨φ_i, φ_j⟩`, taken as `L_i + L_j` per component.
pub fn inner_product_lipschitz(basis: &DriftBasis) -> DMatrix<f64> {
    let l = basis.lipschitz_constants();
    let p = basis.p();
    DMatrix::from_fn(p, p, |i, j| l[i + 1] + l[j + 1])
}

/// Declared Lipschitz bounds of `‖φ_j‖²` componentwise; for the cosine family
/// `cos²((j+1)x)` has derivative bounded by `j+1`.
pub fn squared_norm_lipschitz(basis: &DriftBasis) -> Vec<f64> {
    basis.lipschitz_constants()[1..].to_vec()
}

/// `4λ²·s·(2+γ)² / (k²·γ·Δₙ²)`.
pub fn oracle_rhs(lambda: f64, s: usize, gamma: f64, k: f64, delta_n: f64) -> f64 {
    4.0 * lambda * lambda * s as f64 * (2.0 + gamma).powi(2) / (k * k * gamma * delta_n * delta_n)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    DiscretizationDominated,
    MartingaleDominated,
    Boundary,
}

impl Regime {
    pub fn as_str(&self) -> &'static str {
        match self {
            Regime::DiscretizationDominated => "discretization-dominated",
            Regime::MartingaleDominated => "martingale-dominated",
            Regime::Boundary => "boundary",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegimeInfo {
    pub value: f64,
    pub regime: Regime,
}

fn classify(value: f64) -> RegimeInfo {
    let regime = if value > 10.0 {
        Regime::DiscretizationDominated
    } else if value < 0.1 {
        Regime::MartingaleDominated
    } else {
        Regime::Boundary
    };
    RegimeInfo { value, regime }
}

/// Linear model: `s²·d·n·Δₙ²`.
pub fn rate_regime_linear(s: usize, d: usize, n: usize, delta_n: f64) -> RegimeInfo {
    classify((s * s * d) as f64 * n as f64 * delta_n * delta_n)
}

/// OU model: `d²·n·Δₙ²`.
pub fn rate_regime_ou(d: usize, n: usize, delta_n: f64) -> RegimeInfo {
    classify((d * d) as f64 * n as f64 * delta_n * delta_n)
}
