mod commands;
mod config;
mod failure;
mod report;
mod rundir;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rdagg::FeedbackConfig;

use config::{required, CommonArgs, Settings};
use failure::{CliResult, EXIT_VALIDATION};

/// Representative-day aggregation and feedback re-clustering for expansion planning.
#[derive(Parser)]
#[command(name = "rdagg", version)]
struct Cli {
    #[command(flatten)]
    common: CommonArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Cluster the year into K representative days.
    Cluster {
        #[arg(short, long)]
        k: Option<usize>,
    },
    /// Plan investments on a reduced set (default: the run's reduced_set.json).
    Plan {
        #[arg(long)]
        set: Option<PathBuf>,
        /// Also write every enumerated decision to plan_trace.csv.
        #[arg(long)]
        trace: bool,
    },
    /// Plan on the full year; cached in the run directory.
    Reference,
    /// Cost a fixed decision on the full year or a given set.
    Evaluate {
        /// Bit string, candidate lines first (default: the run's plan).
        #[arg(long)]
        decision: Option<String>,
        #[arg(long)]
        set: Option<PathBuf>,
        /// Also write the hourly dispatch to dispatch.csv.
        #[arg(long)]
        dispatch: bool,
    },
    /// Iteratively re-cluster the representatives with the largest errors.
    Feedback {
        #[arg(long)]
        n0: Option<usize>,
        #[arg(long)]
        n_loop: Option<usize>,
        #[arg(long)]
        n_step: Option<usize>,
        #[arg(long)]
        n_bad: Option<usize>,
    },
    /// Write error tables, the clustering sweep and a markdown summary.
    Report {
        /// Representative counts for the direct-clustering sweep.
        #[arg(long, value_delimiter = ',')]
        rd_counts: Option<Vec<usize>>,
    },
    /// Write a synthetic system and time series to --system and --timeseries.
    Synth {
        /// Fixture size: 3, 4 or 6 buses.
        #[arg(long, default_value_t = 3)]
        buses: u8,
        #[arg(long, default_value_t = 30)]
        days: usize,
        #[arg(long, default_value_t = 4)]
        peaks: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

fn run(cli: Cli) -> CliResult<()> {
    let s = Settings::resolve(&cli.common)?;
    let f = &s.file;
    match cli.command {
        Command::Cluster { k } => commands::cluster(&s, required(k, &f.k, "k")?),
        Command::Plan { set, trace } => commands::plan_cmd(&s, set, trace),
        Command::Reference => commands::reference(&s),
        Command::Evaluate {
            decision,
            set,
            dispatch,
        } => commands::evaluate(&s, decision, set, dispatch),
        Command::Feedback {
            n0,
            n_loop,
            n_step,
            n_bad,
        } => {
            let cfg = FeedbackConfig {
                n0: required(n0, &f.n0, "n0")?,
                n_loop: required(n_loop, &f.n_loop, "n-loop")?,
                n_step: n_step.or(f.n_step).unwrap_or(1),
                n_bad: n_bad.or(f.n_bad).unwrap_or(1),
            };
            commands::feedback(&s, cfg)
        }
        Command::Report { rd_counts } => commands::report(&s, rd_counts),
        Command::Synth {
            buses,
            days,
            peaks,
            seed,
        } => commands::synth(&s, buses, days, peaks, seed),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_VALIDATION)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code)
        }
    }
}
