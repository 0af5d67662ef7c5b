use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use muxsim::commands;

/// Closed-loop multi-stream rate allocation simulator.
#[derive(Parser)]
#[command(name = "muxsim", version, about)]
struct Cli {
    /// Worker threads for seed sweeps (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a synthetic scenario and write per-GOP and summary reports.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Override the config's seed (disables any seed sweep).
        #[arg(long)]
        seed: Option<u64>,
        /// Override the allocator list, e.g. --allocators lam,lfam,oracle.
        #[arg(long, value_delimiter = ',')]
        allocators: Option<Vec<String>>,
    },
    /// Replay a measured R-D trace through the allocation loop.
    Replay {
        #[arg(long)]
        trace: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_delimiter = ',')]
        allocators: Option<Vec<String>>,
    },
    /// Fit the hyperbolic R-D law to a trace and emit per-stream σ and r².
    Fit {
        #[arg(long)]
        trace: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Aggregate run summaries (or a variance-grid fixture) into the
    /// cross-class comparison table.
    Report {
        /// Directories containing summary.csv from earlier runs.
        run_dirs: Vec<PathBuf>,
        /// CSV fixture with columns measure,class,variance_baseline,variance_candidate.
        #[arg(long)]
        fixture: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> muxsim::Result<()> {
    if let Some(jobs) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| muxsim::Error::InvalidArgument(format!("--jobs: {e}")))?;
    }
    match cli.command {
        Command::Simulate { config, out, seed, allocators } => {
            commands::cmd_simulate(&config, &out, seed, allocators.as_deref())
        }
        Command::Replay { trace, config, out, seed, allocators } => {
            commands::cmd_replay(&trace, &config, &out, seed, allocators.as_deref())
        }
        Command::Fit { trace, out } => commands::cmd_fit(&trace, &out),
        Command::Report { run_dirs, fixture, out } => {
            commands::cmd_report(&run_dirs, fixture.as_deref(), &out)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_input_error() { 2 } else { 1 })
        }
    }
}
