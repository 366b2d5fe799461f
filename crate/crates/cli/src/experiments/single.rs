//! Single-path commands: simulate, estimate, cross-validate and report constants.

use std::path::Path;

use drift_lasso::estimate::{lasso_solve, mle_solve, CvResult, EstimationResult};
use drift_lasso::metrics::error_norms;
use drift_lasso::simulate::io;
use drift_lasso::theory::{ModelConstants, OuTuningConstants, TuningConstants};
use drift_lasso::{DriftBasis, Trajectory};
use serde::Serialize;

use super::common::{self, Instance};
use crate::config::{ExperimentConfig, Family, LambdaRule};
use crate::error::CliError;
use crate::output::OutputDir;

#[derive(Serialize)]
struct ThetaRow {
    j: usize,
    value: f64,
}

#[derive(Serialize)]
struct EstimateRow {
    j: usize,
    lasso: f64,
    mle: f64,
    truth: Option<f64>,
}

#[derive(Serialize)]
pub struct EstimateReport {
    pub lambda: f64,
    pub lambda_rule: LambdaRule,
    pub n: usize,
    pub delta_n: f64,
    pub sweeps: usize,
    pub kkt_residual: f64,
    pub converged: bool,
    pub pinned: usize,
    pub nonzeros: usize,
    pub lasso_l1: Option<f64>,
    pub lasso_l2: Option<f64>,
    pub mle_l2: Option<f64>,
}

#[derive(Serialize)]
struct CvScoreRow {
    lambda: f64,
    fold: usize,
    score: f64,
}

#[derive(Serialize)]
struct CvMeanRow {
    lambda: f64,
    mean_score: f64,
    selected: bool,
}

/// Path under study: read from `input` or simulated from the configured
/// model. The instance carries the truth only when simulated.
struct Data {
    inst: Instance,
    traj: Trajectory,
    simulated: bool,
}

fn data(cfg: &ExperimentConfig, input: Option<&Path>) -> Result<Data, CliError> {
    match input {
        None => {
            let inst = common::instance(cfg, cfg.seed)?;
            let traj = common::simulate(cfg, &inst, cfg.n(), cfg.sampling.delta_n, cfg.seed)?;
            Ok(Data {
                inst,
                traj,
                simulated: true,
            })
        }
        Some(path) => {
            let file = std::fs::File::open(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            let traj = io::read_csv(std::io::BufReader::new(file), cfg.seed)?;
            let d = traj.d();
            let basis = match cfg.model.family {
                Family::Ou => DriftBasis::ou_linear(d)?,
                Family::Cosine => {
                    let anchor = cfg.model.s_anchor.ok_or_else(|| {
                        CliError::Config("`model.s_anchor`: required when reading a trajectory".into())
                    })?;
                    DriftBasis::cosine(d, cfg.model.p, anchor)?
                }
            };
            let p = basis.p();
            Ok(Data {
                inst: Instance {
                    basis,
                    theta0: vec![0.0; p],
                    s: 0,
                },
                traj,
                simulated: false,
            })
        }
    }
}

pub fn simulate(cfg: &ExperimentConfig, out: &mut OutputDir) -> Result<Trajectory, CliError> {
    let d = data(cfg, None)?;
    let mut bytes = Vec::new();
    io::write_csv(&d.traj, &mut bytes)?;
    out.write_bytes("trajectory.csv", &bytes)?;
    let theta: Vec<ThetaRow> = d
        .inst
        .theta0
        .iter()
        .enumerate()
        .map(|(j, &value)| ThetaRow { j: j + 1, value })
        .collect();
    out.write_csv("theta0.csv", &theta)?;
    Ok(d.traj)
}

fn lambda_for(cfg: &ExperimentConfig, d: &Data, gram: &drift_lasso::estimate::GramSystem) -> Result<f64, CliError> {
    if !d.simulated && cfg.estimation.lambda_rule == LambdaRule::Formula && cfg.model.family == Family::Cosine {
        return Err(CliError::Config(
            "`estimation.lambda_rule`: the cosine formula needs the true parameter; use cv or fixed with --input".into(),
        ));
    }
    common::choose_lambda(cfg, &d.inst, &d.traj, gram, cfg.seed)
}

pub fn estimate(
    cfg: &ExperimentConfig,
    input: Option<&Path>,
    out: &mut OutputDir,
) -> Result<(EstimationResult, EstimateReport), CliError> {
    let d = data(cfg, input)?;
    let gram = common::full_gram(&d.traj, &d.inst.basis)?;
    let lambda = lambda_for(cfg, &d, &gram)?;
    let lasso = lasso_solve(&gram, lambda, &common::lasso_config(cfg))?;
    let mle = mle_solve(&gram)?;
    if !lasso.converged {
        out.warn(format!("Lasso stopped after {} sweeps without certifying the optimum", lasso.sweeps_used));
    }
    let truth = d.simulated.then_some(&d.inst.theta0);
    let rows: Vec<EstimateRow> = (0..gram.p())
        .map(|j| EstimateRow {
            j: j + 1,
            lasso: lasso.theta_hat[j],
            mle: mle.theta_hat[j],
            truth: truth.map(|t| t[j]),
        })
        .collect();
    let (lasso_err, mle_err) = match truth {
        Some(t) => (Some(error_norms(&lasso.theta_hat, t)?), Some(error_norms(&mle.theta_hat, t)?)),
        None => (None, None),
    };
    let report = EstimateReport {
        lambda,
        lambda_rule: cfg.estimation.lambda_rule,
        n: d.traj.n(),
        delta_n: d.traj.delta_n(),
        sweeps: lasso.sweeps_used,
        kkt_residual: lasso.kkt_residual,
        converged: lasso.converged,
        pinned: lasso.pinned.len(),
        nonzeros: lasso.theta_hat.iter().filter(|v| **v != 0.0).count(),
        lasso_l1: lasso_err.map(|e| e.l1),
        lasso_l2: lasso_err.map(|e| e.l2),
        mle_l2: mle_err.map(|e| e.l2),
    };
    out.write_csv("estimate.csv", &rows)?;
    out.write_json("estimate.json", &report)?;
    Ok((lasso, report))
}

pub fn cv(cfg: &ExperimentConfig, input: Option<&Path>, out: &mut OutputDir) -> Result<CvResult, CliError> {
    let d = data(cfg, input)?;
    let gram = common::full_gram(&d.traj, &d.inst.basis)?;
    let res = common::cv_lambda(cfg, &d.traj, &d.inst.basis, &gram)?;
    if res.short_block {
        out.warn("some validation block has fewer increments than parameters");
    }
    let long: Vec<CvScoreRow> = res
        .lambdas
        .iter()
        .zip(&res.scores)
        .flat_map(|(&lambda, folds)| {
            folds.iter().enumerate().map(move |(k, &score)| CvScoreRow {
                lambda,
                fold: k + 1,
                score,
            })
        })
        .collect();
    let means: Vec<CvMeanRow> = res
        .lambdas
        .iter()
        .zip(&res.mean_scores)
        .map(|(&lambda, &mean_score)| CvMeanRow {
            lambda,
            mean_score,
            selected: lambda == res.lambda_star,
        })
        .collect();
    out.write_csv("cv_scores.csv", &long)?;
    out.write_csv("cv_summary.csv", &means)?;
    Ok(res)
}

#[derive(Serialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum ConstantsReport {
    Cosine {
        n: usize,
        delta_n: f64,
        s: usize,
        model: ModelConstants,
        tuning: TuningConstants,
        lambda: f64,
    },
    Ou {
        n: usize,
        delta_n: f64,
        s: usize,
        m_frak: f64,
        p_frak: f64,
        l_min: f64,
        l_max: f64,
        a_frak: f64,
        k: f64,
        tuning: OuTuningConstants,
        lambda: f64,
    },
}

pub fn constants(cfg: &ExperimentConfig, out: &mut OutputDir) -> Result<ConstantsReport, CliError> {
    let n = cfg.n();
    let dt = cfg.sampling.delta_n;
    let report = match cfg.model.family {
        Family::Ou => {
            let a = common::ou_matrix(cfg)?;
            let (ou, k, tuning) = common::ou_tuning(cfg, &a, n, dt)?;
            ConstantsReport::Ou {
                n,
                delta_n: dt,
                s: common::support_size(a.as_slice()),
                m_frak: ou.m_frak,
                p_frak: ou.p_frak,
                l_min: ou.l_min,
                l_max: ou.l_max,
                a_frak: ou.a_frak,
                k,
                lambda: tuning.lambda(),
                tuning,
            }
        }
        Family::Cosine => {
            let d = data(cfg, None)?;
            let gram = common::full_gram(&d.traj, &d.inst.basis)?;
            let (model, tuning) = common::linear_tuning(cfg, &d.inst, &d.traj, &gram, cfg.seed)?;
            ConstantsReport::Cosine {
                n,
                delta_n: dt,
                s: d.inst.s,
                model,
                lambda: tuning.lambda(),
                tuning,
            }
        }
    };
    out.write_json("constants.json", &report)?;
    Ok(report)
}
