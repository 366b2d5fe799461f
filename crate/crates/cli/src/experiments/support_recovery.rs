//! Lasso against the unpenalized estimator on the cosine design: error norms
//! and support recovery per replication.

use drift_lasso::estimate::{lasso_solve, mle_solve, EstimationResult};
use drift_lasso::metrics::{error_norms, median, support_score};
use rayon::prelude::*;
use serde::Serialize;

use super::common::{self, Stopwatch, Timing};
use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::output::OutputDir;
use crate::svg;

#[derive(Debug, Clone, Serialize)]
pub struct ReplicationRow {
    pub rep: usize,
    pub seed: u64,
    pub estimator: &'static str,
    pub lambda: f64,
    pub l1: f64,
    pub l2: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub threshold: f64,
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
    pub sweeps: usize,
    pub kkt_residual: f64,
    pub converged: bool,
    pub rank_deficient: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SummaryRow {
    pub estimator: &'static str,
    pub reps: usize,
    pub median_l1: f64,
    pub median_l2: f64,
    pub median_precision: f64,
    pub median_recall: f64,
    pub median_f1: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CoefficientRow {
    pub j: usize,
    pub truth: f64,
    pub mle: f64,
    pub lasso: f64,
}

pub struct Outcome {
    pub rows: Vec<ReplicationRow>,
    pub summary: Vec<SummaryRow>,
    pub coefficients: Vec<CoefficientRow>,
}

impl Outcome {
    pub fn summary_for(&self, estimator: &str) -> Option<&SummaryRow> {
        self.summary.iter().find(|s| s.estimator == estimator)
    }
}

struct Replication {
    rows: [ReplicationRow; 2],
    coefficients: Vec<CoefficientRow>,
    seconds: f64,
}

fn row(
    rep: usize,
    seed: u64,
    estimator: &'static str,
    fit: &EstimationResult,
    theta0: &[f64],
    threshold: f64,
) -> Result<ReplicationRow, CliError> {
    let e = error_norms(&fit.theta_hat, theta0)?;
    let sc = support_score(&fit.theta_hat, theta0, threshold)?;
    Ok(ReplicationRow {
        rep,
        seed,
        estimator,
        lambda: fit.lambda,
        l1: e.l1,
        l2: e.l2,
        precision: sc.precision,
        recall: sc.recall,
        f1: sc.f1,
        threshold,
        true_positives: sc.true_positives,
        false_positives: sc.false_positives,
        false_negatives: sc.false_negatives,
        sweeps: fit.sweeps_used,
        kkt_residual: fit.kkt_residual,
        converged: fit.converged,
        rank_deficient: fit.rank_deficient,
    })
}

fn replicate(cfg: &ExperimentConfig, rep: usize) -> Result<Replication, CliError> {
    let clock = Stopwatch::start();
    let seed = common::rep_seed(cfg.seed, 0, rep);
    let inst = common::cosine_instance(cfg, cfg.model.p, seed)?;
    let traj = common::simulate(cfg, &inst, cfg.n(), cfg.sampling.delta_n, seed)?;
    let gram = common::full_gram(&traj, &inst.basis)?;
    let lambda = common::choose_lambda(cfg, &inst, &traj, &gram, seed)?;
    let lasso = lasso_solve(&gram, lambda, &common::lasso_config(cfg))?;
    let mle = mle_solve(&gram)?;
    let coefficients = (0..inst.theta0.len())
        .map(|j| CoefficientRow {
            j: j + 1,
            truth: inst.theta0[j],
            mle: mle.theta_hat[j],
            lasso: lasso.theta_hat[j],
        })
        .collect();
    Ok(Replication {
        rows: [
            row(rep, seed, "lasso", &lasso, &inst.theta0, 0.0)?,
            row(rep, seed, "mle", &mle, &inst.theta0, cfg.estimation.mle_threshold)?,
        ],
        coefficients,
        seconds: clock.seconds(),
    })
}

pub fn summarize(rows: &[ReplicationRow]) -> Vec<SummaryRow> {
    ["lasso", "mle"]
        .into_iter()
        .map(|est| {
            let pick = |f: fn(&ReplicationRow) -> f64| -> Vec<f64> {
                rows.iter().filter(|r| r.estimator == est).map(f).collect()
            };
            let l1 = pick(|r| r.l1);
            SummaryRow {
                estimator: est,
                reps: l1.len(),
                median_l1: median(&l1),
                median_l2: median(&pick(|r| r.l2)),
                median_precision: median(&pick(|r| r.precision)),
                median_recall: median(&pick(|r| r.recall)),
                median_f1: median(&pick(|r| r.f1)),
            }
        })
        .collect()
}

pub fn run(cfg: &ExperimentConfig, out: &mut OutputDir) -> Result<Outcome, CliError> {
    let clock = Stopwatch::start();
    common::budget_guard(out, cfg, cfg.reps);
    let reps: Vec<Replication> = (0..cfg.reps)
        .into_par_iter()
        .map(|r| replicate(cfg, r))
        .collect::<Result<_, _>>()?;

    let mut rows = Vec::with_capacity(2 * reps.len());
    for r in &reps {
        rows.extend(r.rows.iter().cloned());
    }
    let unconverged = rows.iter().filter(|r| r.estimator == "lasso" && !r.converged).count();
    if unconverged > 0 {
        out.warn(format!("{unconverged} Lasso fits stopped at the sweep limit"));
    }
    let summary = summarize(&rows);
    let coefficients = reps.first().map(|r| r.coefficients.clone()).unwrap_or_default();

    out.write_csv("replications.csv", &rows)?;
    out.write_csv("summary.csv", &summary)?;
    out.write_csv("coefficients.csv", &coefficients)?;
    if !coefficients.is_empty() {
        let truth: Vec<f64> = coefficients.iter().map(|c| c.truth).collect();
        let mle: Vec<f64> = coefficients.iter().map(|c| c.mle).collect();
        let lasso: Vec<f64> = coefficients.iter().map(|c| c.lasso).collect();
        let limit = truth.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
        let figure = svg::heatmap_panels(
            &[("true θ₀", &truth), ("MLE", &mle), ("Lasso", &lasso)],
            10,
            limit,
        );
        out.write_bytes("coefficients.svg", figure.as_bytes())?;
    }
    out.write_json(
        "timing.json",
        &Timing {
            total_seconds: clock.seconds(),
            replication_seconds: reps.iter().map(|r| r.seconds).collect(),
        },
    )?;
    Ok(Outcome {
        rows,
        summary,
        coefficients,
    })
}
