use std::time::Instant;

use drift_lasso::estimate::{build_gram, cross_validate, log_grid, CvResult, GramSystem, LassoConfig};
use drift_lasso::linalg;
use drift_lasso::rng;
use drift_lasso::simulate::{ou_spectral_constants, simulate_linear, simulate_ou_exact, OUModel, SimulationConfig};
use drift_lasso::theory::constants::{
    drift_lipschitz, h_delta, inner_product_lipschitz, k_delta, monotonicity_bound, r_constant,
    second_moments, squared_norm_lipschitz,
};
use drift_lasso::theory::{
    compatibility_bound, tuning_constants_linear, tuning_constants_ou, Dims, ModelConstants,
    OuTuningConstants, TuningConstants,
};
use drift_lasso::{DriftBasis, SparseParam, Trajectory};
use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::Serialize;

use crate::config::{ExperimentConfig, Family, LambdaRule};
use crate::error::CliError;
use crate::output::OutputDir;

const THETA_SALT: u64 = 0x7468_6574_615f_3000;

/// Seed of replication `rep` within group `group` (a p-value or horizon index).
pub fn rep_seed(base: u64, group: usize, rep: usize) -> u64 {
    base ^ ((group as u64) << 40) ^ rep as u64
}

/// `round(frac·p)` zeros at shuffled positions, the rest `Uniform[low, high]`.
pub fn generate_theta(p: usize, frac: f64, nonzero: [f64; 2], seed: u64) -> Vec<f64> {
    let mut r = rng::stream(seed ^ THETA_SALT, 0);
    let zeros = ((frac * p as f64).round() as usize).min(p);
    let mut idx: Vec<usize> = (0..p).collect();
    idx.shuffle(&mut r);
    let mut theta = vec![0.0; p];
    for &j in &idx[..p - zeros] {
        theta[j] = if nonzero[1] > nonzero[0] {
            r.random_range(nonzero[0]..nonzero[1])
        } else {
            nonzero[0]
        };
    }
    theta
}

pub fn support_size(theta: &[f64]) -> usize {
    theta.iter().filter(|v| **v != 0.0).count()
}

pub fn lasso_config(cfg: &ExperimentConfig) -> LassoConfig {
    LassoConfig {
        tol: cfg.estimation.tol,
        max_sweeps: cfg.estimation.max_sweeps,
        snap: cfg.estimation.snap,
    }
}

/// A cosine-family instance: basis, true parameter and its sparsity.
pub struct Instance {
    pub basis: DriftBasis,
    pub theta0: Vec<f64>,
    pub s: usize,
}

pub fn cosine_instance(cfg: &ExperimentConfig, p: usize, seed: u64) -> Result<Instance, CliError> {
    let m = &cfg.model;
    let theta0 = generate_theta(p, m.sparsity, m.nonzero, seed);
    let s = support_size(&theta0);
    let anchor = m.s_anchor.unwrap_or(s.max(1) as f64);
    Ok(Instance {
        basis: DriftBasis::cosine(m.d, p, anchor)?,
        theta0,
        s,
    })
}

pub fn ou_matrix(cfg: &ExperimentConfig) -> Result<DMatrix<f64>, CliError> {
    let d = cfg.model.d;
    match (&cfg.model.a, &cfg.model.a_diag) {
        (Some(rows), _) => Ok(DMatrix::from_fn(d, d, |i, j| rows[i][j])),
        (None, Some(diag)) => Ok(DMatrix::from_fn(d, d, |i, j| if i == j { diag[i] } else { 0.0 })),
        (None, None) => Err(CliError::Config("`model.a_diag`: the OU family needs a matrix".into())),
    }
}

/// OU instance seen through the ou-linear basis, `θ₀ = vec(A)`.
pub fn ou_instance(cfg: &ExperimentConfig) -> Result<(Instance, DMatrix<f64>), CliError> {
    let a = ou_matrix(cfg)?;
    let theta0 = a.as_slice().to_vec();
    let s = support_size(&theta0);
    Ok((
        Instance {
            basis: DriftBasis::ou_linear(cfg.model.d)?,
            theta0,
            s,
        },
        a,
    ))
}

pub fn instance(cfg: &ExperimentConfig, seed: u64) -> Result<Instance, CliError> {
    match cfg.model.family {
        Family::Cosine => cosine_instance(cfg, cfg.model.p, seed),
        Family::Ou => Ok(ou_instance(cfg)?.0),
    }
}

pub fn sim_config(cfg: &ExperimentConfig, n: usize, delta_n: f64, seed: u64) -> SimulationConfig {
    let mut sim = SimulationConfig::new(n, delta_n, seed).with_substeps(cfg.sampling.substeps);
    if let Some(b) = cfg.sampling.burn_in {
        sim = sim.with_burn_in(b);
    }
    sim
}

/// Simulates the configured model: exact sampling for OU when requested,
/// Euler–Maruyama otherwise.
pub fn simulate(
    cfg: &ExperimentConfig,
    inst: &Instance,
    n: usize,
    delta_n: f64,
    seed: u64,
) -> Result<Trajectory, CliError> {
    if cfg.model.family == Family::Ou && cfg.sampling.ou_exact {
        let a = ou_matrix(cfg)?;
        return Ok(simulate_ou_exact(&a, n, delta_n, seed, true)?);
    }
    let theta = SparseParam::new(inst.theta0.clone());
    let (traj, _) = simulate_linear(&inst.basis, &theta, &sim_config(cfg, n, delta_n, seed))?;
    Ok(traj)
}

pub fn cv_grid(cfg: &ExperimentConfig, gram: &GramSystem) -> Vec<f64> {
    let top = gram.linear_sup().max(f64::MIN_POSITIVE);
    log_grid(top, cfg.estimation.grid_ratio, cfg.estimation.grid_points)
}

pub fn cv_lambda(
    cfg: &ExperimentConfig,
    traj: &Trajectory,
    basis: &DriftBasis,
    gram: &GramSystem,
) -> Result<CvResult, CliError> {
    let grid = cv_grid(cfg, gram);
    Ok(cross_validate(traj, basis, &grid, cfg.estimation.folds, &lasso_config(cfg))?)
}

/// Linear-model constants assembled from configuration, the basis and a path.
pub fn linear_model_constants(
    cfg: &ExperimentConfig,
    inst: &Instance,
    traj: &Trajectory,
    gram: &GramSystem,
    seed: u64,
) -> Result<ModelConstants, CliError> {
    let a = &cfg.audit;
    let dt = traj.delta_n();
    let l_drift = drift_lipschitz(&inst.basis, &inst.theta0)?;
    let m_mono = match a.m_mono {
        Some(m) => m,
        None => match monotonicity_bound(&inst.basis, &inst.theta0)? {
            Some(m) => m,
            None => {
                return Err(CliError::Config(
                    "`audit.m_mono`: the drift is not provably monotone from its Lipschitz constants; set M".into(),
                ))
            }
        },
    };
    let r = match a.r {
        Some(r) => r,
        None => r_constant(&inst.basis.growth_constants(), &second_moments(traj.states(), traj.d())),
    };
    let l_re = match a.l_re {
        Some(l) => l,
        None => {
            let k_hat = compatibility_bound(&gram.gram, inst.s.max(1), a.gamma, a.budget, seed)?.k_hat;
            if !(k_hat > 0.0) {
                return Err(CliError::Numeric(
                    "restricted eigenvalue estimate is zero; set `audit.l_re`".into(),
                ));
            }
            k_hat * k_hat
        }
    };
    Ok(ModelConstants {
        l_drift,
        m_mono,
        r,
        h_dn: h_delta(&squared_norm_lipschitz(&inst.basis), l_drift, m_mono, dt),
        k_dn: k_delta(&inner_product_lipschitz(&inst.basis), l_drift, m_mono, dt),
        c_b: a.c_b,
        l_re,
        k: a.k.unwrap_or(l_re.sqrt() / 2.0),
        gamma: a.gamma,
    })
}

pub fn linear_tuning(
    cfg: &ExperimentConfig,
    inst: &Instance,
    traj: &Trajectory,
    gram: &GramSystem,
    seed: u64,
) -> Result<(ModelConstants, TuningConstants), CliError> {
    let mc = linear_model_constants(cfg, inst, traj, gram, seed)?;
    let dims = Dims {
        d: inst.basis.d(),
        p: inst.basis.p(),
        n: traj.n(),
        s: inst.s,
    };
    let t = tuning_constants_linear(&mc, dims, traj.delta_n(), cfg.audit.epsilon)?;
    Ok((mc, t))
}

/// OU spectral constants, the norm-equivalence constant used and the tuning constants.
pub fn ou_tuning(
    cfg: &ExperimentConfig,
    a: &DMatrix<f64>,
    n: usize,
    delta_n: f64,
) -> Result<(OUModel, f64, OuTuningConstants), CliError> {
    let ou = ou_spectral_constants(a)?;
    let l = cfg.audit.l_re.unwrap_or(ou.l_min);
    let k = cfg.audit.k.unwrap_or(l.sqrt() / 2.0);
    let s = support_size(a.as_slice());
    let t = tuning_constants_ou(
        &ou,
        a.nrows(),
        n,
        s,
        delta_n,
        cfg.audit.epsilon,
        cfg.audit.gamma,
        k,
        cfg.audit.c_b,
    )?;
    Ok((ou, k, t))
}

/// λ under the configured rule. For `cv` the full-data Gram system supplies
/// the grid top.
pub fn choose_lambda(
    cfg: &ExperimentConfig,
    inst: &Instance,
    traj: &Trajectory,
    gram: &GramSystem,
    seed: u64,
) -> Result<f64, CliError> {
    match cfg.estimation.lambda_rule {
        LambdaRule::Fixed => cfg
            .estimation
            .lambda
            .ok_or_else(|| CliError::Config("`estimation.lambda`: required by the fixed rule".into())),
        LambdaRule::Cv => Ok(cv_lambda(cfg, traj, &inst.basis, gram)?.lambda_star),
        LambdaRule::Formula => match cfg.model.family {
            Family::Ou => {
                let a = ou_matrix(cfg)?;
                Ok(ou_tuning(cfg, &a, traj.n(), traj.delta_n())?.2.lambda())
            }
            Family::Cosine => Ok(linear_tuning(cfg, inst, traj, gram, seed)?.1.lambda()),
        },
    }
}

pub fn full_gram(traj: &Trajectory, basis: &DriftBasis) -> Result<GramSystem, CliError> {
    Ok(build_gram(traj, basis)?)
}

pub fn frobenius_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> (f64, f64) {
    let diff = a - b;
    (diff.iter().map(|v| v.abs()).sum(), diff.norm())
}

pub fn op_norm(a: &DMatrix<f64>) -> f64 {
    linalg::op_norm(a)
}

/// Warns when the declared per-replication cost exceeds the wall-clock budget.
pub fn budget_guard(out: &mut OutputDir, cfg: &ExperimentConfig, total_reps: usize) {
    let projected = total_reps as f64 * cfg.budget.cost_per_rep;
    if projected > cfg.budget.seconds {
        out.warn(format!(
            "projected cost {projected:.0} s ({total_reps} replications × {} s) exceeds the {} s budget",
            cfg.budget.cost_per_rep, cfg.budget.seconds
        ));
    }
}

#[derive(Serialize)]
pub struct Timing {
    pub total_seconds: f64,
    pub replication_seconds: Vec<f64>,
}

pub struct Stopwatch(Instant);

impl Stopwatch {
    pub fn start() -> Self {
        Self(Instant::now())
    }

    pub fn seconds(&self) -> f64 {
        self.0.elapsed().as_secs_f64()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generator_counts() {
        let t = generate_theta(30, 0.7, [2.0, 3.0], 1);
        assert_eq!(support_size(&t), 9);
        assert!(t.iter().all(|v| *v == 0.0 || (2.0..3.0).contains(v)));
        assert_eq!(t, generate_theta(30, 0.7, [2.0, 3.0], 1));
        assert_eq!(support_size(&generate_theta(10, 1.0, [2.0, 3.0], 1)), 0);
        assert_eq!(support_size(&generate_theta(10, 0.0, [2.0, 3.0], 1)), 10);
    }
}
