use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use twobody_qsl::reference::{GraphKind, StateFamily};
use twobody_qsl::states::TargetState;

mod commands;
mod config;
mod error;
mod output;

use commands::{SweepArgs, TimeRange};
use config::Overrides;
use error::{CliError, CliResult};

/// Minimal preparation times of entangled states under two-body Hamiltonians.
#[derive(Debug, Parser)]
#[command(name = "twobody-qsl", version)]
struct Cli {
    /// Worker threads for the optimizer (default: available parallelism).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Maximize fidelity along a time grid and write curve, summary and manifest.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        restarts: Option<usize>,
        /// Fidelity convergence threshold: unit fidelity means F >= 1 - tolerance.
        #[arg(long)]
        tolerance: Option<f64>,
        /// Stream progress events as JSON lines on stderr.
        #[arg(long)]
        progress: bool,
    },
    /// Evolve a catalog Hamiltonian and check its claimed minimal time.
    Verify {
        family: StateFamily,
        sites: usize,
        #[arg(default_value = "complete")]
        graph: GraphKind,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Speed-limit estimates for a target state at unit bandwidth.
    Bound {
        state: TargetState,
        sites: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Overlaps with the target and the Dicke states along a catalog evolution.
    Components {
        family: StateFamily,
        sites: usize,
        #[arg(long, default_value = "complete")]
        graph: GraphKind,
        #[arg(long, default_value_t = 0.0)]
        start: f64,
        /// Defaults to the claimed minimal time.
        #[arg(long)]
        end: Option<f64>,
        #[arg(long, default_value_t = 0.01)]
        step: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Energy range needed to finish within each time of a range.
    Tradeoff {
        family: StateFamily,
        sites: usize,
        #[arg(long, default_value_t = 0.0)]
        start: f64,
        #[arg(long)]
        end: f64,
        #[arg(long, default_value_t = 0.1)]
        step: f64,
        /// Minimal time at unit bandwidth; overrides --summary and built-in values.
        #[arg(long)]
        t_min: Option<f64>,
        /// summary.json of a previous sweep supplying the minimal time.
        #[arg(long)]
        summary: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write the reference Hamiltonians as JSON.
    CatalogDump {
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> CliResult<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Internal(e.to_string()))?;
    }
    match cli.command {
        Command::Sweep {
            config,
            out,
            seed,
            restarts,
            tolerance,
            progress,
        } => commands::sweep(&SweepArgs {
            config,
            out,
            overrides: Overrides {
                seed,
                restarts,
                tolerance,
            },
            progress,
        }),
        Command::Verify {
            family,
            sites,
            graph,
            out,
        } => commands::verify(family, sites, graph, out.as_deref()),
        Command::Bound { state, sites, out } => commands::bound(state, sites, out.as_deref()),
        Command::Components {
            family,
            sites,
            graph,
            start,
            end,
            step,
            out,
        } => commands::components(
            family,
            sites,
            graph,
            &TimeRange { start, end, step },
            out.as_deref(),
        ),
        Command::Tradeoff {
            family,
            sites,
            start,
            end,
            step,
            t_min,
            summary,
            out,
        } => {
            let t_min = commands::resolve_t_min(family, sites, t_min, summary.as_deref())?;
            commands::tradeoff(
                family,
                sites,
                t_min,
                &TimeRange {
                    start,
                    end: Some(end),
                    step,
                },
                out.as_deref(),
            )
        }
        Command::CatalogDump { out } => commands::catalog_dump(out.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
