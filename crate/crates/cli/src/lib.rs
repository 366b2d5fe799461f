//! Configuration-driven experiments for sparse drift estimation.

pub mod config;
pub mod error;
pub mod experiments;
pub mod output;
pub mod svg;

use std::fmt::Write as _;
use std::path::PathBuf;

use config::{ExperimentConfig, Kind};
use error::CliError;
use experiments::{dimension_sweep, rate_study, single, support_recovery, verify};
use output::OutputDir;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Simulate,
    Estimate,
    Cv,
    SupportRecovery,
    DimensionSweep,
    RateStudy,
    Verify,
    Constants,
}

impl Command {
    pub fn default_kind(self) -> Kind {
        match self {
            Command::Simulate | Command::Estimate | Command::Cv => Kind::EstimateSingle,
            Command::Constants => Kind::VerifySets,
            Command::SupportRecovery => Kind::SupportRecovery,
            Command::DimensionSweep => Kind::DimensionSweep,
            Command::RateStudy => Kind::RateStudy,
            Command::Verify => Kind::VerifySets,
        }
    }

    fn accepts(self, kind: Kind) -> bool {
        match self {
            Command::Simulate | Command::Estimate | Command::Cv | Command::Constants => true,
            Command::Verify => matches!(kind, Kind::VerifySets | Kind::VerifyConcentration),
            _ => kind == self.default_kind(),
        }
    }
}

/// Everything a run needs besides the configuration file contents.
#[derive(Debug, Clone, Default)]
pub struct Invocation {
    pub config: Option<PathBuf>,
    pub sets: Vec<String>,
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
    pub out: Option<PathBuf>,
    pub input: Option<PathBuf>,
}

pub fn load_config(command: Command, inv: &Invocation) -> Result<ExperimentConfig, CliError> {
    let mut sets = inv.sets.clone();
    if let Some(seed) = inv.seed {
        sets.push(format!("seed={seed}"));
    }
    if let Some(out) = &inv.out {
        let out = out.to_str().ok_or_else(|| CliError::Config("`out`: path is not UTF-8".into()))?;
        sets.push(format!("out=\"{}\"", out.replace('\\', "\\\\").replace('"', "\\\"")));
    }
    let cfg = ExperimentConfig::load(command.default_kind(), inv.config.as_deref(), &sets)?;
    if !command.accepts(cfg.kind) {
        return Err(CliError::Config(format!(
            "`kind`: {} does not match this command",
            cfg.kind.as_str()
        )));
    }
    Ok(cfg)
}

/// Runs `command` on a dedicated thread pool and writes the manifest.
/// Returns a short human-readable report.
pub fn execute(command: Command, inv: &Invocation) -> Result<String, CliError> {
    let cfg = load_config(command, inv)?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = inv.jobs {
        if j == 0 {
            return Err(CliError::Config("`--jobs`: must be at least 1".into()));
        }
        builder = builder.num_threads(j);
    }
    let pool = builder
        .build()
        .map_err(|e| CliError::Config(format!("`--jobs`: {e}")))?;
    pool.install(|| run(command, &cfg, inv))
}

fn run(command: Command, cfg: &ExperimentConfig, inv: &Invocation) -> Result<String, CliError> {
    let mut out = OutputDir::create(&cfg.out)?;
    let mut report = String::new();
    let input = inv.input.as_deref();
    match command {
        Command::Simulate => {
            let traj = single::simulate(cfg, &mut out)?;
            let _ = writeln!(report, "simulated {} observations in dimension {}", traj.n(), traj.d());
        }
        Command::Estimate => {
            let (_, r) = single::estimate(cfg, input, &mut out)?;
            report.push_str(&serde_json::to_string_pretty(&r)?);
            report.push('\n');
        }
        Command::Cv => {
            let r = single::cv(cfg, input, &mut out)?;
            let _ = writeln!(report, "selected lambda {}", r.lambda_star);
        }
        Command::Constants => {
            let r = single::constants(cfg, &mut out)?;
            report.push_str(&serde_json::to_string_pretty(&r)?);
            report.push('\n');
        }
        Command::SupportRecovery => {
            let o = support_recovery::run(cfg, &mut out)?;
            for s in &o.summary {
                let _ = writeln!(
                    report,
                    "{:<6} median l2 {:.4}  median f1 {:.3}",
                    s.estimator, s.median_l2, s.median_f1
                );
            }
        }
        Command::DimensionSweep => {
            let o = dimension_sweep::run(cfg, &mut out)?;
            for s in &o.summary {
                let _ = writeln!(
                    report,
                    "p={:<3} {:<6} mean l1 {:.4}  mean l2 {:.4}",
                    s.p, s.estimator, s.mean_l1, s.mean_l2
                );
            }
        }
        Command::RateStudy => {
            let o = rate_study::run(cfg, &mut out)?;
            let _ = writeln!(
                report,
                "slope {:.4} (r² {:.3}){}",
                o.fit.slope,
                o.fit.r2,
                if o.contaminated { ", regime-contaminated" } else { "" }
            );
        }
        Command::Verify => match cfg.kind {
            Kind::VerifyConcentration => {
                let o = verify::run_concentration(cfg, &mut out)?;
                let pass = |rows: &[drift_lasso::theory::AuditRow]| rows.iter().all(|r| r.passes());
                let _ = writeln!(
                    report,
                    "linear audit {}, OU audit {}",
                    if pass(&o.linear) { "within bounds" } else { "exceeds bounds" },
                    if pass(&o.ou) { "within bounds" } else { "exceeds bounds" }
                );
            }
            _ => {
                let o = verify::run_sets(cfg, &mut out)?;
                let _ = writeln!(report, "lambda {:.6}, k {:.6}", o.lambda, o.k);
                for s in &o.summary {
                    let _ = writeln!(
                        report,
                        "{:<14} {:.3} (target {:.3}) {}",
                        s.event,
                        s.frequency,
                        s.target,
                        if s.passes { "pass" } else { "fail" }
                    );
                }
            }
        },
    }
    let manifest = out.finish(cfg.kind.as_str(), &cfg.to_toml())?;
    let _ = writeln!(report, "wrote {}", manifest.display());
    Ok(report)
}
