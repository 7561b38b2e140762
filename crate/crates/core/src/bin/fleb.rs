//! Configuration-driven experiment runner.
//!
//! One subcommand per experiment kind; the config file is the source of
//! truth and `--seed` overrides only the config's seed field. Exit codes:
//! 0 success, 2 validation error, 3 resolution or coverage error, 4 I/O.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use fleb_core::config::ExperimentConfig;
use fleb_core::report::{emit, run, Format};
use fleb_core::Error;

#[derive(Parser)]
#[command(name = "fleb", version, about = "Schrödinger propagator experiment runner")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Free evolution with unitarity tracking and the Gaussian oracle.
    Propagate(RunArgs),
    /// Fourier-Lebesgue norm of a datum.
    Norms(RunArgs),
    /// Maximal-function mixed norm over the datum norm.
    MaximalRatio(RunArgs),
    /// Dyadic counterexample sweep and blow-up fit.
    Counterexample(RunArgs),
    /// Randomization diagnostics and Khintchine moments.
    Randomize(RunArgs),
    /// Monte Carlo tail probabilities of the randomized defect.
    Tails(RunArgs),
    /// Deterministic convergence sweep toward t = 0.
    Convergence(RunArgs),
}

impl Cmd {
    fn kind(&self) -> &'static str {
        match self {
            Cmd::Propagate(_) => "propagate",
            Cmd::Norms(_) => "norms",
            Cmd::MaximalRatio(_) => "maximal_ratio",
            Cmd::Counterexample(_) => "counterexample",
            Cmd::Randomize(_) => "randomize",
            Cmd::Tails(_) => "tails",
            Cmd::Convergence(_) => "convergence",
        }
    }

    fn args(&self) -> &RunArgs {
        match self {
            Cmd::Propagate(a)
            | Cmd::Norms(a)
            | Cmd::MaximalRatio(a)
            | Cmd::Counterexample(a)
            | Cmd::Randomize(a)
            | Cmd::Tails(a)
            | Cmd::Convergence(a) => a,
        }
    }
}

#[derive(Args)]
struct RunArgs {
    /// Experiment configuration file (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Override the config's seed (randomized experiments only).
    #[arg(long)]
    seed: Option<u64>,
    /// Report format.
    #[arg(long, value_enum, default_value_t = FormatArg::Json)]
    format: FormatArg,
    /// Worker threads (performance only; never affects results).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Format {
        match f {
            FormatArg::Json => Format::Json,
            FormatArg::Csv => Format::Csv,
        }
    }
}

fn execute(cmd: &Cmd) -> Result<(), Error> {
    let args = cmd.args();
    let text = std::fs::read_to_string(&args.config)?;
    let mut config = ExperimentConfig::from_json(&text)?;
    if config.kind() != cmd.kind() {
        return Err(Error::Validation(format!(
            "config declares experiment '{}' but the '{}' subcommand was invoked",
            config.kind(),
            cmd.kind()
        )));
    }
    if let Some(seed) = args.seed {
        config.set_seed(seed);
    }
    let report = run(&config)?;
    emit(&report, args.format.into(), &args.out)?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let threads = cli.cmd.args().threads;
    let result = match threads {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(n).build();
            match pool {
                Ok(pool) => pool.install(|| execute(&cli.cmd)),
                Err(e) => Err(Error::Validation(format!("cannot build thread pool: {e}"))),
            }
        }
        None => execute(&cli.cmd),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let record = serde_json::json!({
                "error": e.to_string(),
                "exit_code": e.exit_code(),
            });
            eprintln!("{record}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
