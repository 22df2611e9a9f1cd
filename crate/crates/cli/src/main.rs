//! `avc` — decide symmetrizability of a finite arbitrarily varying channel,
//! bracket its maximum-error capacity under block-restricted jamming, build
//! binary output quantizers, and simulate coded transmission against
//! worst-case jammers.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use avc_core::Error;

#[derive(Parser)]
#[command(name = "avc", version, about, max_term_width = 100)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Report format on standard output.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,

    /// Cap on concurrent workers (default: available parallelism).
    #[arg(long, global = true)]
    workers: Option<usize>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Structured,
}

#[derive(Subcommand)]
enum Command {
    /// Decide maximum-error and average-error symmetrizability and
    /// left-invertibility.
    Check {
        /// Channel-spec document (JSON).
        #[arg(long)]
        spec: PathBuf,
    },
    /// Compute the lower/upper capacity bracket under J-block-restricted
    /// jamming.
    Bounds {
        #[arg(long)]
        spec: PathBuf,
        /// Jammer block length.
        #[arg(long = "J", default_value_t = 1)]
        j: usize,
    },
    /// Construct the best binary output quantizer and its reduction trace.
    Quantize {
        #[arg(long)]
        spec: PathBuf,
    },
    /// Simulate a repetition code of length n against J-block-restricted
    /// jamming, exactly or by sampling.
    Simulate {
        #[arg(long)]
        spec: PathBuf,
        /// Jammer block length.
        #[arg(long = "J", default_value_t = 1)]
        j: usize,
        /// Code length (defaults to J).
        #[arg(long)]
        n: Option<usize>,
        /// Number of messages (codewords).
        #[arg(long, default_value_t = 2)]
        messages: usize,
        /// Monte-Carlo trials per message and jammer word; 0 selects exact
        /// evaluation.
        #[arg(long, default_value_t = 0)]
        trials: u64,
        /// Sampling seed for Monte-Carlo mode.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(workers) = cli.workers {
        // Ignored if a global pool already exists (tests may install one).
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global();
    }
    let structured = cli.format == Format::Structured;
    let outcome = match cli.command {
        Command::Check { spec } => commands::check(&spec, structured),
        Command::Bounds { spec, j } => commands::bounds(&spec, j, structured),
        Command::Quantize { spec } => commands::quantize(&spec, structured),
        Command::Simulate {
            spec,
            j,
            n,
            messages,
            trials,
            seed,
        } => commands::simulate(&spec, j, n.unwrap_or(j), messages, trials, seed, structured),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}

fn exit_code(err: &commands::CliError) -> u8 {
    match err {
        commands::CliError::Io(_) => 1,
        commands::CliError::Core(core) => match core {
            Error::Parse(_)
            | Error::InvalidInput(_)
            | Error::InvalidDist { .. }
            | Error::DimensionMismatch { .. }
            | Error::HypothesisViolation(_) => 1,
            Error::GuardExceeded { .. } => 2,
            Error::NonConvergence { .. } | Error::StageVerification { .. } | Error::Internal(_) => {
                3
            }
        },
    }
}
