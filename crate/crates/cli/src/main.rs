//! `tandem`: batch runner for tandem network experiments.

mod config;
mod output;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::info;

use config::{Config, ConfigError, ExperimentKind};

#[derive(Parser)]
#[command(name = "tandem", version, about = "Design and evaluate tandem detection networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Design networks and compare them with the reference curves.
    Design(Common),
    /// Closed-form reference curves only.
    Baseline(Common),
    /// Exhaustive search on tiny instances.
    Oracle(Common),
    /// Design networks and simulate them.
    Montecarlo(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `[output].dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides `[network].seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Record wall-clock times in the CSV instead of zeros.
    #[arg(long)]
    timing: bool,
}

#[derive(Debug)]
pub enum RunError {
    Config(String),
    Infeasible(String),
    Invariant(String),
    Io(anyhow::Error),
}

impl RunError {
    fn exit_code(&self) -> u8 {
        match self {
            Self::Config(_) => 2,
            Self::Infeasible(_) => 3,
            Self::Invariant(_) => 4,
            Self::Io(_) => 1,
        }
    }
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Config(m) => write!(f, "config error: {m}"),
            Self::Infeasible(m) => write!(f, "infeasible request: {m}"),
            Self::Invariant(m) => write!(f, "invariant violated: {m}"),
            Self::Io(e) => write!(f, "{e:#}"),
        }
    }
}

fn execute(kind: ExperimentKind, args: &Common) -> Result<Vec<PathBuf>, RunError> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| RunError::Config(format!("{}: {e}", args.config.display())))?;
    let located = |e: ConfigError| RunError::Config(format!("{}: {e}", args.config.display()));
    let mut config = Config::parse(&text).map_err(located)?;
    if config.experiment != kind {
        return Err(RunError::Config(format!(
            "{}: experiment kind is {} but the {} command was run",
            args.config.display(),
            config.experiment.name(),
            kind.name()
        )));
    }
    if let Some(seed) = args.seed {
        config.network.seed = seed;
    }
    let dir = match (&args.out, &config.output.dir) {
        (Some(d), _) => d.clone(),
        (None, Some(d)) => PathBuf::from(d),
        (None, None) => return Err(RunError::Config("no output directory: pass --out or set [output].dir".into())),
    };
    let outcome = run::run(&config, args.timing)?;
    output::write_all(&dir, kind.name(), &config, &text, &outcome).map_err(RunError::Io)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let (kind, args) = match &cli.command {
        Command::Design(a) => (ExperimentKind::Design, a),
        Command::Baseline(a) => (ExperimentKind::Baseline, a),
        Command::Oracle(a) => (ExperimentKind::Oracle, a),
        Command::Montecarlo(a) => (ExperimentKind::Montecarlo, a),
    };
    match execute(kind, args) {
        Ok(files) => {
            for f in files {
                info!("wrote {}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("tandem: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
