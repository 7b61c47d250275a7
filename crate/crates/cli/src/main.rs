use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gfvi_cli::error::{EXIT_OK, EXIT_TEST_FAILURE};
use gfvi_cli::{emit_report, run, CliError, ExperimentConfig, ExperimentKind};

#[derive(Parser)]
#[command(name = "gfvi", version, about = "Distinguished coalescents and GFVI experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Block counts of the backward and forward flows.
    SimulateCoalescent(Common),
    /// Immigrant mass and type moments of the lookdown population.
    SimulateGfvi(Common),
    /// Monte Carlo against exact dual expectations.
    DualityCheck(Common),
    /// Chi-square test of the forward partition's marginal law.
    MarginalCheck(Common),
    /// Coming down from infinity, extinction, and fixation bounds.
    CdiReport(Common),
    /// Jump rates of every partition at a small resolution.
    RatesTable(Common),
}

#[derive(Args)]
struct Common {
    /// TOML experiment configuration.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; defaults to the configured one, then `out`.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    replicates: Option<usize>,
    /// Worker threads. Results do not depend on this.
    #[arg(long)]
    threads: Option<usize>,
}

impl Command {
    fn split(self) -> (ExperimentKind, Common) {
        match self {
            Command::SimulateCoalescent(c) => (ExperimentKind::SimulateCoalescent, c),
            Command::SimulateGfvi(c) => (ExperimentKind::SimulateGfvi, c),
            Command::DualityCheck(c) => (ExperimentKind::DualityCheck, c),
            Command::MarginalCheck(c) => (ExperimentKind::MarginalCheck, c),
            Command::CdiReport(c) => (ExperimentKind::CdiReport, c),
            Command::RatesTable(c) => (ExperimentKind::RatesTable, c),
        }
    }
}

fn execute(kind: ExperimentKind, args: Common) -> Result<bool, CliError> {
    let mut config = ExperimentConfig::load(&args.config)?;
    match config.experiment {
        Some(k) if k != kind => {
            return Err(CliError::Config(format!("config is for {k}, not {kind}")));
        }
        _ => config.experiment = Some(kind),
    }
    if let Some(seed) = args.seed {
        config.seed = Some(seed);
    }
    if let Some(r) = args.replicates {
        config.replicates = r;
    }
    if let Some(threads) = args.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    }
    let out_dir = args
        .out
        .or_else(|| config.output.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    let output = run(&config)?;
    for path in emit_report(&out_dir, &output)? {
        eprintln!("wrote {}", path.display());
    }
    let s = &output.summary;
    println!("{}: {} rows, {} passed, {} failed, verdict {}", s.experiment, s.rows, s.passed, s.failed, s.verdict);
    Ok(!output.failed())
}

fn main() -> ExitCode {
    let (kind, args) = Cli::parse().command.split();
    let code = match execute(kind, args) {
        Ok(true) => EXIT_OK,
        Ok(false) => EXIT_TEST_FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}
