use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use sacsp_cli::commands::{cmd_eval, cmd_export, cmd_synth, cmd_train, EvalArgs};
use sacsp_cli::CliError;
use sacsp_core::algorithms::AlgoTag;
use sacsp_core::eval::Protocol;

/// Spectrally adaptive spatial filtering for two-class epoch data.
///
/// Exit codes: 2 config, 3 training, 4 evaluation, 5 I/O.
/// SACSP_THREADS caps the number of worker threads.
#[derive(Parser)]
#[command(name = "sacsp", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a calibration/online pair of synthetic epoch files.
    Synth {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory (receives calib.epd and online.epd).
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a filter bank and classifier on an epoch file.
    Train {
        /// Epoch file to train on.
        #[arg(long)]
        epochs: PathBuf,
        #[arg(long, default_value = "sacsp")]
        algo: AlgoTag,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Model file to write.
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate an algorithm (or a trained model) and write report.json / report.csv.
    Eval {
        #[arg(long, conflicts_with = "algo")]
        model: Option<PathBuf>,
        #[arg(long)]
        algo: Option<AlgoTag>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        calib: Option<PathBuf>,
        #[arg(long)]
        online: Option<PathBuf>,
        #[arg(long)]
        protocol: Option<Protocol>,
        #[arg(long)]
        repeats: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory for the report files.
        #[arg(long)]
        out: PathBuf,
    },
    /// Export spectral filters and spatial patterns as CSV and SVG.
    Export {
        #[arg(long)]
        model: PathBuf,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("SACSP_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .parse()
        .ok()
        .filter(|&n| n >= 1)
        .ok_or_else(|| CliError::Config(format!("SACSP_THREADS must be a positive integer, got {v:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(format!("cannot size the worker pool: {e}")))
}

fn run(cli: Cli) -> Result<String, CliError> {
    configure_threads()?;
    match cli.command {
        Command::Synth { config, seed, out } => cmd_synth(config.as_deref(), seed, &out),
        Command::Train { epochs, algo, config, out } => cmd_train(&epochs, algo, config.as_deref(), &out),
        Command::Eval { model, algo, config, calib, online, protocol, repeats, seed, out } => cmd_eval(&EvalArgs {
            model,
            algo,
            config,
            calib,
            online,
            protocol,
            repeats,
            seed,
            out,
        }),
        Command::Export { model, out } => cmd_export(&model, &out),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("sacsp: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
