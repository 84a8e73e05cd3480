//! `spinrpa`: field sweeps of mean-field plus RPA entanglement, exact
//! oracle runs and RPA-vs-exact comparison reports.
//!
//! Exit codes: 0 success, 1 config or output error, 2 numerical failure,
//! 3 tolerance failure in `compare`.

mod commands;
mod compute;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{Format, Methods, Plan, SweepConfig, Tolerances};
use error::CliError;

#[derive(Parser)]
#[command(
    name = "spinrpa",
    version,
    about = "Mean-field plus RPA entanglement sweeps for spin arrays"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Field sweep with the methods named in the config.
    Sweep(RunArgs),
    /// RPA against the exact oracle (and the closed forms when they apply).
    Compare(CompareArgs),
    /// Mode frequencies, Bogoliubov amplitudes and vacuum coefficients.
    Modes(RunArgs),
    /// Exact ground states only.
    Exact(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// TOML config, or JSON when the name ends in `.json`.
    config: PathBuf,
    /// Output file; overrides `output.path`. Standard output when neither is set.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Worker threads for the field points.
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    run: RunArgs,
    /// One tolerance for every compared quantity, replacing `[compare]`.
    #[arg(long)]
    tolerance: Option<f64>,
}

fn load(args: &RunArgs, methods: Option<Methods>) -> Result<(Plan, Option<PathBuf>), CliError> {
    let mut config = SweepConfig::load(&args.config)?;
    if let Some(m) = methods {
        config = config.with_methods(m);
    }
    if let Some(f) = args.format {
        config.output.format = f;
    }
    let output = args.output.clone().or_else(|| config.output.path.clone());
    Ok((config.plan()?, output))
}

fn pool(workers: Option<usize>) -> Result<rayon::ThreadPool, CliError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(k) = workers {
        if k == 0 {
            return Err(CliError::Config("--workers must be positive".into()));
        }
        builder = builder.num_threads(k);
    }
    builder
        .build()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Sweep(args) => {
            let (plan, out) = load(&args, None)?;
            pool(args.workers)?.install(|| commands::sweep(&plan, out.as_deref()))
        }
        Command::Exact(args) => {
            let (plan, out) = load(&args, Some(Methods::Exact))?;
            pool(args.workers)?.install(|| commands::exact(&plan, out.as_deref()))
        }
        Command::Modes(args) => {
            let (plan, out) = load(&args, Some(Methods::Rpa))?;
            pool(args.workers)?.install(|| commands::modes(&plan, out.as_deref()))
        }
        Command::Compare(args) => {
            let (plan, out) = load(&args.run, Some(Methods::All))?;
            let tolerances = match args.tolerance {
                Some(t) if !(t >= 0.0) => {
                    return Err(CliError::Config(format!(
                        "--tolerance {t} must be nonnegative"
                    )))
                }
                Some(t) => Tolerances::uniform(t),
                None => plan.config.compare.clone(),
            };
            pool(args.run.workers)?
                .install(|| commands::compare(&plan, &tolerances, out.as_deref()))
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("spinrpa: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
