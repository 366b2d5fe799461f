//! Monte Carlo checks of the event sets, the oracle inequality and the
//! concentration bounds.

use drift_lasso::estimate::lasso_solve;
use drift_lasso::simulate::{ou_spectral_constants, simulate_linear, Record};
use drift_lasso::theory::{
    audit_directions, binomial_se, concentration_audit_linear, concentration_audit_ou,
    event_statistics, oracle_check, AuditRow, LinearAuditSpec, LipschitzFn,
};
use drift_lasso::{DriftBasis, SparseParam};
use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use super::common::{self, Instance, Stopwatch, Timing};
use crate::config::{ExperimentConfig, Family, LambdaRule};
use crate::error::CliError;
use crate::output::OutputDir;

const PILOT_SALT: u64 = 0x7069_6c6f_7400;

#[derive(Debug, Clone, Serialize)]
pub struct EventRow {
    pub rep: usize,
    pub seed: u64,
    pub lambda: f64,
    pub k: f64,
    pub stat_t: f64,
    pub stat_tp: f64,
    pub k_hat: f64,
    pub holds_t: bool,
    pub holds_tp: bool,
    pub holds_tpp: bool,
    pub holds_all: bool,
    pub oracle_lhs: f64,
    pub oracle_rhs: f64,
    pub oracle_holds: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct EventSummary {
    pub event: &'static str,
    pub frequency: f64,
    pub target: f64,
    pub se: f64,
    pub reps: usize,
    pub passes: bool,
}

pub struct SetsOutcome {
    pub rows: Vec<EventRow>,
    pub summary: Vec<EventSummary>,
    pub lambda: f64,
    pub k: f64,
}

impl SetsOutcome {
    pub fn event(&self, name: &str) -> Option<&EventSummary> {
        self.summary.iter().find(|s| s.event == name)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct AuditCsvRow {
    pub level: f64,
    pub empirical: f64,
    pub bound: f64,
    pub se: f64,
    pub reps: usize,
    pub passes: bool,
}

impl From<&AuditRow> for AuditCsvRow {
    fn from(r: &AuditRow) -> Self {
        Self {
            level: r.level,
            empirical: r.empirical,
            bound: r.bound,
            se: r.se,
            reps: r.reps,
            passes: r.passes(),
        }
    }
}

pub struct ConcentrationOutcome {
    pub linear: Vec<AuditRow>,
    pub ou: Vec<AuditRow>,
}

/// λ and the compatibility constant `k` at which the sets are evaluated.
fn set_constants(cfg: &ExperimentConfig, inst: &Instance) -> Result<(f64, f64), CliError> {
    let n = cfg.n();
    let dt = cfg.sampling.delta_n;
    let (formula_lambda, k) = match cfg.model.family {
        Family::Ou => {
            let a = common::ou_matrix(cfg)?;
            let (_, k, t) = common::ou_tuning(cfg, &a, n, dt)?;
            (t.lambda(), k)
        }
        Family::Cosine => {
            let pilot_seed = cfg.seed ^ PILOT_SALT;
            let theta = SparseParam::new(inst.theta0.clone());
            let (pilot, _) = simulate_linear(&inst.basis, &theta, &common::sim_config(cfg, n, dt, pilot_seed))?;
            let gram = common::full_gram(&pilot, &inst.basis)?;
            let (mc, t) = common::linear_tuning(cfg, inst, &pilot, &gram, pilot_seed)?;
            (t.lambda(), mc.k)
        }
    };
    let lambda = match cfg.estimation.lambda_rule {
        LambdaRule::Formula => formula_lambda,
        LambdaRule::Fixed => cfg
            .estimation
            .lambda
            .ok_or_else(|| CliError::Config("`estimation.lambda`: required by the fixed rule".into()))?,
        LambdaRule::Cv => {
            return Err(CliError::Config(
                "`estimation.lambda_rule`: event sets are evaluated at a fixed λ; use formula or fixed".into(),
            ))
        }
    };
    Ok((lambda, k))
}

fn summary_row(event: &'static str, hits: usize, reps: usize, target: f64) -> EventSummary {
    let frequency = hits as f64 / reps as f64;
    let se = binomial_se(frequency, reps);
    EventSummary {
        event,
        frequency,
        target,
        se,
        reps,
        passes: frequency >= target - 3.0 * se,
    }
}

pub fn run_sets(cfg: &ExperimentConfig, out: &mut OutputDir) -> Result<SetsOutcome, CliError> {
    let clock = Stopwatch::start();
    common::budget_guard(out, cfg, cfg.reps);
    let inst = common::instance(cfg, cfg.seed)?;
    let (lambda, k) = set_constants(cfg, &inst)?;
    let n = cfg.n();
    let dt = cfg.sampling.delta_n;
    let theta0 = SparseParam::new(inst.theta0.clone());
    let s = inst.s;
    let lasso_cfg = common::lasso_config(cfg);

    let results: Vec<(EventRow, f64)> = (0..cfg.reps)
        .into_par_iter()
        .map(|rep| {
            let rc = Stopwatch::start();
            let seed = common::rep_seed(cfg.seed, 0, rep);
            let sim = common::sim_config(cfg, n, dt, seed).recording(Record {
                noise: true,
                fine: true,
            });
            let (traj, rec) = simulate_linear(&inst.basis, &theta0, &sim)?;
            let rec = rec.ok_or_else(|| CliError::Numeric("simulation did not record noise".into()))?;
            let stats = event_statistics(
                &traj,
                &rec,
                &inst.basis,
                &theta0,
                s,
                cfg.audit.gamma,
                cfg.audit.budget,
                seed,
            )?;
            let flags = stats.flags(lambda, k);
            let gram = common::full_gram(&traj, &inst.basis)?;
            let fit = lasso_solve(&gram, lambda, &lasso_cfg)?;
            let oracle = oracle_check(&gram, &fit.theta_hat, &inst.theta0, lambda, s, cfg.audit.gamma, k)?;
            Ok((
                EventRow {
                    rep,
                    seed,
                    lambda,
                    k,
                    stat_t: stats.stat_t,
                    stat_tp: stats.stat_tp,
                    k_hat: stats.k_hat,
                    holds_t: flags.holds_t,
                    holds_tp: flags.holds_tp,
                    holds_tpp: flags.holds_tpp,
                    holds_all: flags.holds_t && flags.holds_tp && flags.holds_tpp,
                    oracle_lhs: oracle.lhs,
                    oracle_rhs: oracle.rhs,
                    oracle_holds: oracle.holds,
                },
                rc.seconds(),
            ))
        })
        .collect::<Result<_, CliError>>()?;
    let rows: Vec<EventRow> = results.iter().map(|r| r.0.clone()).collect();

    let reps = rows.len();
    let eps = cfg.audit.epsilon;
    let count = |f: fn(&EventRow) -> bool| rows.iter().filter(|r| f(r)).count();
    let summary = vec![
        summary_row("martingale", count(|r| r.holds_t), reps, 1.0 - eps),
        summary_row("approximation", count(|r| r.holds_tp), reps, 1.0 - eps),
        summary_row("compatibility", count(|r| r.holds_tpp), reps, 1.0 - eps),
        summary_row("all", count(|r| r.holds_all), reps, 1.0 - 3.0 * eps),
        summary_row("oracle", count(|r| r.oracle_holds), reps, 1.0 - 3.0 * eps),
    ];
    for s in summary.iter().filter(|s| !s.passes) {
        out.warn(format!(
            "{} frequency {:.3} is below its target {:.3} by more than 3 standard errors",
            s.event, s.frequency, s.target
        ));
    }
    out.write_csv("events.csv", &rows)?;
    out.write_csv("event_summary.csv", &summary)?;
    out.write_json(
        "timing.json",
        &Timing {
            total_seconds: clock.seconds(),
            replication_seconds: results.iter().map(|r| r.1).collect(),
        },
    )?;
    Ok(SetsOutcome {
        rows,
        summary,
        lambda,
        k,
    })
}

fn diag(values: &[f64]) -> DMatrix<f64> {
    DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(values))
}

fn clipped_first(x: &[f64]) -> f64 {
    x[0].clamp(-10.0, 10.0)
}

/// Linear-model audit on the ou-linear basis with a diagonal matrix, whose
/// monotonicity and Lipschitz constants are its smallest and largest
/// diagonal entries.
pub fn run_concentration(cfg: &ExperimentConfig, out: &mut OutputDir) -> Result<ConcentrationOutcome, CliError> {
    let clock = Stopwatch::start();
    let c = &cfg.concentration;
    common::budget_guard(out, cfg, 2 * c.reps);

    let lin = diag(&c.linear_a_diag);
    let basis = DriftBasis::ou_linear(lin.nrows())?;
    let theta0 = SparseParam::new(lin.as_slice().to_vec());
    let m_mono = c.linear_a_diag.iter().copied().fold(f64::INFINITY, f64::min);
    let l_drift = c.linear_a_diag.iter().copied().fold(0.0f64, |m, v| m.max(v.abs()));
    if !(m_mono > 0.0) {
        return Err(CliError::Config(
            "`concentration.linear_a_diag`: entries must be positive".into(),
        ));
    }
    let sim = common::sim_config(cfg, c.linear_n, c.linear_delta_n, cfg.seed).with_substeps(c.linear_substeps);
    let spec = LinearAuditSpec {
        basis: &basis,
        theta0: &theta0,
        sim,
        m_mono,
        l_drift,
    };
    let f = LipschitzFn {
        f: &clipped_first,
        lipschitz: 1.0,
    };
    let linear = concentration_audit_linear(&spec, &f, &c.r_grid, c.reps, cfg.seed)?;

    let ou = ou_spectral_constants(&diag(&c.ou_a_diag))?;
    let dirs = audit_directions(ou.d(), c.extra_directions, cfg.seed);
    let ou_rows = concentration_audit_ou(&ou, c.ou_n, c.ou_delta_n, &c.x_grid, c.reps, &dirs, cfg.seed)?;

    for (name, rows) in [("linear", &linear), ("OU", &ou_rows)] {
        let failing = rows.iter().filter(|r| !r.passes()).count();
        if failing > 0 {
            out.warn(format!("{name} concentration audit exceeds its bound at {failing} levels"));
        }
    }
    out.write_csv(
        "concentration_linear.csv",
        &linear.iter().map(AuditCsvRow::from).collect::<Vec<_>>(),
    )?;
    out.write_csv(
        "concentration_ou.csv",
        &ou_rows.iter().map(AuditCsvRow::from).collect::<Vec<_>>(),
    )?;
    out.write_json(
        "timing.json",
        &Timing {
            total_seconds: clock.seconds(),
            replication_seconds: Vec::new(),
        },
    )?;
    Ok(ConcentrationOutcome { linear, ou: ou_rows })
}
