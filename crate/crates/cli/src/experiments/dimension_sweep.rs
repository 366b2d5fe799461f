//! Error norms of the Lasso and the unpenalized estimator as `p` grows.

use drift_lasso::estimate::{lasso_solve, mle_solve};
use drift_lasso::metrics::{error_norms, mean_sd};
use rayon::prelude::*;
use serde::Serialize;

use super::common::{self, Stopwatch, Timing};
use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::output::OutputDir;
use crate::svg::{Plot, Series};

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub p: usize,
    pub rep: usize,
    pub seed: u64,
    pub s: usize,
    pub estimator: &'static str,
    pub lambda: f64,
    pub l1: f64,
    pub l2: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepSummary {
    pub p: usize,
    pub estimator: &'static str,
    pub reps: usize,
    pub mean_l1: f64,
    pub sd_l1: f64,
    pub mean_l2: f64,
    pub sd_l2: f64,
}

pub struct Outcome {
    pub rows: Vec<SweepRow>,
    pub summary: Vec<SweepSummary>,
}

impl Outcome {
    pub fn series(&self, estimator: &str) -> Vec<&SweepSummary> {
        self.summary.iter().filter(|s| s.estimator == estimator).collect()
    }
}

fn replicate(cfg: &ExperimentConfig, group: usize, p: usize, rep: usize) -> Result<([SweepRow; 2], f64), CliError> {
    let clock = Stopwatch::start();
    let seed = common::rep_seed(cfg.seed, group, rep);
    let inst = common::cosine_instance(cfg, p, seed)?;
    let traj = common::simulate(cfg, &inst, cfg.n(), cfg.sampling.delta_n, seed)?;
    let gram = common::full_gram(&traj, &inst.basis)?;
    let lambda = common::choose_lambda(cfg, &inst, &traj, &gram, seed)?;
    let lasso = lasso_solve(&gram, lambda, &common::lasso_config(cfg))?;
    let mle = mle_solve(&gram)?;
    let el = error_norms(&lasso.theta_hat, &inst.theta0)?;
    let em = error_norms(&mle.theta_hat, &inst.theta0)?;
    let mk = |estimator, lambda, e: drift_lasso::metrics::ErrorNorms, converged| SweepRow {
        p,
        rep,
        seed,
        s: inst.s,
        estimator,
        lambda,
        l1: e.l1,
        l2: e.l2,
        converged,
    };
    Ok((
        [mk("lasso", lambda, el, lasso.converged), mk("mle", 0.0, em, mle.converged)],
        clock.seconds(),
    ))
}

pub fn run(cfg: &ExperimentConfig, out: &mut OutputDir) -> Result<Outcome, CliError> {
    let clock = Stopwatch::start();
    let ps = &cfg.sweep.p_values;
    common::budget_guard(out, cfg, cfg.reps * ps.len());
    let jobs: Vec<(usize, usize, usize)> = ps
        .iter()
        .enumerate()
        .flat_map(|(g, &p)| (0..cfg.reps).map(move |r| (g, p, r)))
        .collect();
    let results: Vec<([SweepRow; 2], f64)> = jobs
        .par_iter()
        .map(|&(g, p, r)| replicate(cfg, g, p, r))
        .collect::<Result<_, _>>()?;
    let rows: Vec<SweepRow> = results.iter().flat_map(|(r, _)| r.iter().cloned()).collect();

    let mut summary = Vec::new();
    for &p in ps {
        for est in ["lasso", "mle"] {
            let sel: Vec<&SweepRow> = rows.iter().filter(|r| r.p == p && r.estimator == est).collect();
            let (mean_l1, sd_l1) = mean_sd(&sel.iter().map(|r| r.l1).collect::<Vec<_>>());
            let (mean_l2, sd_l2) = mean_sd(&sel.iter().map(|r| r.l2).collect::<Vec<_>>());
            summary.push(SweepSummary {
                p,
                estimator: est,
                reps: sel.len(),
                mean_l1,
                sd_l1,
                mean_l2,
                sd_l2,
            });
        }
    }

    out.write_csv("replications.csv", &rows)?;
    out.write_csv("summary.csv", &summary)?;
    for (name, label, pick) in [
        ("error_l1.svg", "ℓ₁ error", (|s: &SweepSummary| (s.mean_l1, s.sd_l1)) as fn(&SweepSummary) -> (f64, f64)),
        ("error_l2.svg", "ℓ₂ error", |s: &SweepSummary| (s.mean_l2, s.sd_l2)),
    ] {
        let series = ["lasso", "mle"]
            .into_iter()
            .map(|est| Series {
                name: if est == "lasso" { "Lasso".into() } else { "MLE".into() },
                points: summary
                    .iter()
                    .filter(|s| s.estimator == est)
                    .map(|s| {
                        let (m, sd) = pick(s);
                        (s.p as f64, m, sd)
                    })
                    .collect(),
            })
            .collect();
        let plot = Plot {
            title: format!("{label} against dimension"),
            x_label: "p".into(),
            y_label: format!("mean {label} (± 1 sd)"),
            log_axes: false,
            series,
            reference: None,
        };
        out.write_bytes(name, plot.render().as_bytes())?;
    }
    out.write_json(
        "timing.json",
        &Timing {
            total_seconds: clock.seconds(),
            replication_seconds: results.iter().map(|r| r.1).collect(),
        },
    )?;
    Ok(Outcome { rows, summary })
}
