use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use drift_lasso_cli::{execute, Command, Invocation};

#[derive(Parser)]
#[command(name = "drift-lasso", version, about = "Sparse drift estimation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// TOML configuration merged over the built-in defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Dotted override, e.g. `--set model.p=40`. Repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    sets: Vec<String>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Simulate one path and write it as CSV.
    Simulate,
    /// Fit the Lasso and the unpenalized estimator to one path.
    Estimate {
        /// Trajectory CSV to fit instead of a simulated path.
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Blocked cross-validation over a λ grid.
    Cv {
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Support recovery, Lasso against the unpenalized estimator.
    SupportRecovery,
    /// Error norms as the number of parameters grows.
    DimensionSweep,
    /// OU error rate against the horizon.
    RateStudy,
    /// Event sets and oracle inequality, or concentration audits with `--set kind=verify-concentration`.
    Verify,
    /// Tuning constants for the configured model.
    Constants,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, input) = match cli.command {
        Cmd::Simulate => (Command::Simulate, None),
        Cmd::Estimate { input } => (Command::Estimate, input),
        Cmd::Cv { input } => (Command::Cv, input),
        Cmd::SupportRecovery => (Command::SupportRecovery, None),
        Cmd::DimensionSweep => (Command::DimensionSweep, None),
        Cmd::RateStudy => (Command::RateStudy, None),
        Cmd::Verify => (Command::Verify, None),
        Cmd::Constants => (Command::Constants, None),
    };
    let inv = Invocation {
        config: cli.common.config,
        sets: cli.common.sets,
        seed: cli.common.seed,
        jobs: cli.common.jobs,
        out: cli.common.out,
        input,
    };
    match execute(command, &inv) {
        Ok(report) => {
            print!("{report}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
