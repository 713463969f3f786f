//! `solwave` — drive solitary-wave computations from TOML configs.
//!
//! Every subcommand reads one config file, runs, and writes its artifacts
//! into `--out`. Runs are deterministic: the same config and seed produce
//! byte-identical artifacts. Exit codes: 0 success, 1 a computation failed,
//! 2 bad configuration, 3 a required input file is missing.

mod commands;
mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::ExperimentConfig;

#[derive(Debug)]
pub enum CliError {
    /// The config (or a flag) is wrong; nothing was run.
    Config(String),
    /// A required input artifact does not exist.
    MissingInput(String),
    /// The run itself failed.
    Run(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Run(_) => 1,
            CliError::Config(_) => 2,
            CliError::MissingInput(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::MissingInput(m) => write!(f, "missing input: {m}"),
            CliError::Run(m) => write!(f, "{m}"),
        }
    }
}

/// Load a solve manifest, mapping a missing file onto the dedicated exit
/// code so callers can tell "run the solve first" from a broken file.
pub(crate) fn load_manifest(path: &Path) -> Result<solwave::SolveResult64, CliError> {
    match solwave::SolveResult64::load(path) {
        Ok(res) => Ok(res),
        Err(solwave::Error::Io(e)) if e.kind() == std::io::ErrorKind::NotFound => Err(
            CliError::MissingInput(format!("manifest {} does not exist", path.display())),
        ),
        Err(e) => Err(CliError::Run(format!("cannot load manifest {}: {e}", path.display()))),
    }
}

#[derive(Parser)]
#[command(
    name = "solwave",
    version,
    about = "Solitary waves of nonlocal dispersive equations: constrained \
             solves, time evolution, stability and commutator experiments"
)]
struct Cli {
    /// Experiment configuration (TOML).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Directory artifacts are written into.
    #[arg(long, global = true, value_name = "DIR", default_value = "out")]
    out: PathBuf,

    /// Override the config's random seed.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,

    /// Worker threads for parallel runs (default: all cores).
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,

    /// Fail on warnings (e.g. sweep rows that did not converge).
    #[arg(long, global = true)]
    strict: bool,

    /// Overwrite existing artifacts.
    #[arg(long, global = true)]
    force: bool,

    /// Keep going (and exit 0) when the computation reports failure.
    #[arg(long, global = true)]
    allow_failure: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a constrained minimization for a solitary-wave profile.
    Solve,
    /// Evolve an initial state under one of the flows.
    Evolve,
    /// Perturb a computed wave and track its orbital distance.
    Stability,
    /// Commutator decay scan, or the jump-symbol counter-example.
    Commutator,
    /// Solve along a parameter grid and check the scaling laws.
    Sweep,
    /// Check a configuration and report admissible exponent ranges.
    Validate,
}

/// Everything a command needs besides the config itself.
pub struct Context {
    pub out: PathBuf,
    /// Directory of the config file; relative paths in the config resolve
    /// against it.
    pub config_dir: PathBuf,
    pub seed: Option<u64>,
    pub strict: bool,
    pub force: bool,
    pub allow_failure: bool,
}

fn run(cli: Cli) -> Result<i32, CliError> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("--threads: {e}")))?;
    }
    let config_path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::Config("--config <PATH> is required".into()))?;
    let config = ExperimentConfig::load(config_path)?;
    let config_dir = config_path.parent().map_or_else(|| PathBuf::from("."), Path::to_path_buf);
    let ctx = Context {
        out: cli.out,
        config_dir,
        seed: cli.seed,
        strict: cli.strict,
        force: cli.force,
        allow_failure: cli.allow_failure,
    };
    match cli.command {
        Command::Solve => commands::cmd_solve(&ctx, &config),
        Command::Evolve => commands::cmd_evolve(&ctx, &config),
        Command::Stability => commands::cmd_stability(&ctx, &config),
        Command::Commutator => commands::cmd_commutator(&ctx, &config),
        Command::Sweep => commands::cmd_sweep(&ctx, &config),
        Command::Validate => commands::cmd_validate(&ctx, &config),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
