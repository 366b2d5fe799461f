//! OU Lasso error against the horizon with `Δₙ` shrinking as `T` grows.

use drift_lasso::estimate::lasso_ou;
use drift_lasso::metrics::{mean_sd, rate_fit, RateFit};
use drift_lasso::theory::{rate_regime_ou, Regime};
use rayon::prelude::*;
use serde::Serialize;

use super::common::{self, Stopwatch, Timing};
use crate::config::{ExperimentConfig, LambdaRule};
use crate::error::CliError;
use crate::output::OutputDir;
use crate::svg::{Plot, Series};

#[derive(Debug, Clone, Serialize)]
pub struct RateRow {
    pub horizon: f64,
    pub rep: usize,
    pub seed: u64,
    pub delta_n: f64,
    pub n: usize,
    pub lambda: f64,
    pub l1: f64,
    pub frobenius: f64,
    pub operator: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct RateSummary {
    pub horizon: f64,
    pub delta_n: f64,
    pub n: usize,
    pub lambda: f64,
    pub reps: usize,
    pub mean_frobenius: f64,
    pub sd_frobenius: f64,
    pub mean_l1: f64,
    pub mean_operator: f64,
    pub regime_value: f64,
    pub regime: &'static str,
}

#[derive(Debug, Clone, Serialize)]
pub struct FitRow {
    pub metric: &'static str,
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub regime_contaminated: bool,
}

pub struct Outcome {
    pub rows: Vec<RateRow>,
    pub summary: Vec<RateSummary>,
    pub fit: RateFit,
    pub contaminated: bool,
}

/// Step and sample count for horizon `t`: `Δₙ = scale/T`, `n = T/Δₙ`.
pub fn schedule(t: f64, scale: f64) -> (f64, usize) {
    let dt = scale / t;
    (dt, (t / dt).round() as usize)
}

fn horizon_lambda(cfg: &ExperimentConfig, n: usize, dt: f64) -> Result<Option<f64>, CliError> {
    match cfg.estimation.lambda_rule {
        LambdaRule::Fixed => Ok(cfg.estimation.lambda),
        LambdaRule::Formula => {
            let a = common::ou_matrix(cfg)?;
            Ok(Some(common::ou_tuning(cfg, &a, n, dt)?.2.lambda()))
        }
        LambdaRule::Cv => Ok(None),
    }
}

fn replicate(
    cfg: &ExperimentConfig,
    group: usize,
    t: f64,
    rep: usize,
    fixed_lambda: Option<f64>,
) -> Result<(RateRow, f64), CliError> {
    let clock = Stopwatch::start();
    let (dt, n) = schedule(t, cfg.rate.delta_scale);
    let seed = common::rep_seed(cfg.seed, group, rep);
    let (inst, a) = common::ou_instance(cfg)?;
    let traj = common::simulate(cfg, &inst, n, dt, seed)?;
    let lambda = match fixed_lambda {
        Some(l) => l,
        None => {
            let gram = common::full_gram(&traj, &inst.basis)?;
            common::cv_lambda(cfg, &traj, &inst.basis, &gram)?.lambda_star
        }
    };
    let est = lasso_ou(&traj, lambda, &common::lasso_config(cfg))?;
    let (l1, frobenius) = common::frobenius_diff(&est.a_hat.a, &a);
    Ok((
        RateRow {
            horizon: t,
            rep,
            seed,
            delta_n: dt,
            n,
            lambda,
            l1,
            frobenius,
            operator: common::op_norm(&(&est.a_hat.a - &a)),
            converged: est.result.converged,
        },
        clock.seconds(),
    ))
}

pub fn run(cfg: &ExperimentConfig, out: &mut OutputDir) -> Result<Outcome, CliError> {
    let clock = Stopwatch::start();
    let hs = &cfg.rate.horizons;
    common::budget_guard(out, cfg, cfg.reps * hs.len());
    let d = cfg.model.d;
    let lambdas: Vec<Option<f64>> = hs
        .iter()
        .map(|&t| {
            let (dt, n) = schedule(t, cfg.rate.delta_scale);
            horizon_lambda(cfg, n, dt)
        })
        .collect::<Result<_, _>>()?;
    let jobs: Vec<(usize, f64, usize)> = hs
        .iter()
        .enumerate()
        .flat_map(|(g, &t)| (0..cfg.reps).map(move |r| (g, t, r)))
        .collect();
    let results: Vec<(RateRow, f64)> = jobs
        .par_iter()
        .map(|&(g, t, r)| replicate(cfg, g, t, r, lambdas[g]))
        .collect::<Result<_, _>>()?;
    let rows: Vec<RateRow> = results.iter().map(|r| r.0.clone()).collect();

    let mut summary = Vec::new();
    for &t in hs {
        let sel: Vec<&RateRow> = rows.iter().filter(|r| r.horizon == t).collect();
        let (dt, n) = schedule(t, cfg.rate.delta_scale);
        let regime = rate_regime_ou(d, n, dt);
        let (mean_frobenius, sd_frobenius) = mean_sd(&sel.iter().map(|r| r.frobenius).collect::<Vec<_>>());
        summary.push(RateSummary {
            horizon: t,
            delta_n: dt,
            n,
            lambda: mean_sd(&sel.iter().map(|r| r.lambda).collect::<Vec<_>>()).0,
            reps: sel.len(),
            mean_frobenius,
            sd_frobenius,
            mean_l1: mean_sd(&sel.iter().map(|r| r.l1).collect::<Vec<_>>()).0,
            mean_operator: mean_sd(&sel.iter().map(|r| r.operator).collect::<Vec<_>>()).0,
            regime_value: regime.value,
            regime: regime.regime.as_str(),
        });
    }
    let regimes: Vec<Regime> = hs
        .iter()
        .map(|&t| {
            let (dt, n) = schedule(t, cfg.rate.delta_scale);
            rate_regime_ou(d, n, dt).regime
        })
        .collect();
    let contaminated = regimes.iter().any(|r| *r != Regime::MartingaleDominated);
    if contaminated {
        let straddles = regimes.iter().any(|r| *r != regimes[0]);
        out.warn(format!(
            "rate fit is regime-contaminated: d²·n·Δₙ² = {:.3} at the first horizon{}",
            summary.first().map_or(f64::NAN, |s| s.regime_value),
            if straddles { ", and the horizons straddle regimes" } else { "" }
        ));
    }
    let points: Vec<(f64, f64)> = summary.iter().map(|s| (s.horizon, s.mean_frobenius)).collect();
    let fit = rate_fit(&points)?;

    out.write_csv("replications.csv", &rows)?;
    out.write_csv("summary.csv", &summary)?;
    out.write_csv(
        "fit.csv",
        &[FitRow {
            metric: "frobenius",
            slope: fit.slope,
            intercept: fit.intercept,
            r2: fit.r2,
            regime_contaminated: contaminated,
        }],
    )?;
    let reference = match (points.first(), points.last()) {
        (Some(&(t0, e0)), Some(&(t1, _))) => Some(((t0, e0), (t1, e0 * (t1 / t0).powf(-0.5)))),
        _ => None,
    };
    let plot = Plot {
        title: format!("OU Lasso error, fitted slope {:.3}", fit.slope),
        x_label: "horizon T".into(),
        y_label: "mean ‖Â − A‖_F".into(),
        log_axes: true,
        series: vec![Series {
            name: "Lasso".into(),
            points: points.iter().map(|&(t, e)| (t, e, 0.0)).collect(),
        }],
        reference,
    };
    out.write_bytes("rate.svg", plot.render().as_bytes())?;
    out.write_json(
        "timing.json",
        &Timing {
            total_seconds: clock.seconds(),
            replication_seconds: results.iter().map(|r| r.1).collect(),
        },
    )?;
    Ok(Outcome {
        rows,
        summary,
        fit,
        contaminated,
    })
}
