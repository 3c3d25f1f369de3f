use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;
mod config;

use config::RunConfig;

#[derive(Debug)]
pub enum CliError {
    /// Bad configuration or arguments; exit code 2.
    Validation(String),
    /// A computation failed or a verification check did not pass; exit code 3.
    Numerical(String),
    /// Filesystem or serialization failure; exit code 1.
    Io(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Io(_) => 1,
            CliError::Validation(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Validation(m) => write!(f, "invalid configuration: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl From<warpnls::Error> for CliError {
    fn from(e: warpnls::Error) -> Self {
        if e.is_numerical() {
            CliError::Numerical(e.to_string())
        } else {
            CliError::Validation(e.to_string())
        }
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "warpnls",
    version,
    about = "Solvers and experiments for time-degenerate Schrödinger equations"
)]
struct Cli {
    /// Configuration file of `key = value` lines.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides `output.dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Master seed; overrides `seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for parallel sweeps.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Extra `key=value` overrides applied after the file.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Reduce variable coefficients `a_j(x_j)` to constant coefficients.
    Reduce,
    /// Free evolution of the datum under the warped flow.
    Propagate,
    /// Nonlinear solve by split-step or Picard iteration.
    Solve,
    /// Run a verification suite: substitution, growth, bilinear, xsb, identities or all.
    Verify { suite: String },
    /// Norms of the datum and of its localized free evolution.
    Norms,
    /// Print the resolved configuration and numerical plan.
    Describe,
}

fn load(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut config = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            RunConfig::parse(&text)?
        }
        None => RunConfig::default(),
    };
    for item in &cli.overrides {
        let (key, value) = item.split_once('=').ok_or_else(|| {
            CliError::Validation(format!("--set expects KEY=VALUE, got `{item}`"))
        })?;
        config.set(key.trim(), value.trim())?;
    }
    if let Some(seed) = cli.seed {
        config.set("seed", &seed.to_string())?;
    }
    if let Some(out) = &cli.out {
        config.set("output.dir", &out.display().to_string())?;
    }
    Ok(config)
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(jobs) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.max(1))
            .build_global()
            .map_err(|e| CliError::Validation(format!("--jobs: {e}")))?;
    }
    let config = load(&cli)?;
    let ctx = commands::Context {
        out: PathBuf::from(config.get("output.dir")),
        config,
    };
    match &cli.command {
        Command::Reduce => commands::reduce(&ctx),
        Command::Propagate => commands::propagate_cmd(&ctx),
        Command::Solve => commands::solve(&ctx),
        Command::Verify { suite } => commands::verify(&ctx, suite),
        Command::Norms => commands::norms(&ctx),
        Command::Describe => {
            print!("{}", commands::describe(&ctx.config)?);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
