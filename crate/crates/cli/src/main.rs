//! `mesd`: audit tabular classifiers for explanation-stability disparity and
//! search hyperparameters for a utility / fairness trade-off.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use mesd_cli::commands::{self, Format, Outcome};
use mesd_cli::config::RunConfig;
use mesd_core::{Error, Result};

#[derive(Parser)]
#[command(name = "mesd", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct RunArgs {
    /// JSON run configuration; defaults apply to anything omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the master seed of the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (overrides the configuration).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Maximum number of worker threads.
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Table,
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic dataset as CSV.
    Synth(RunArgs),
    /// Train or load one model and write its fairness report.
    Audit(RunArgs),
    /// Run the three-objective search and audit the selected model.
    Optimize(RunArgs),
    /// Compare run directories.
    Report {
        #[arg(required = true)]
        runs: Vec<PathBuf>,
        #[arg(long, value_enum, default_value = "table")]
        format: FormatArg,
        /// Directory for plot-ready CSV exports.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        workers: Option<usize>,
    },
}

fn load_config(args: &RunArgs) -> Result<(RunConfig, PathBuf)> {
    let mut cfg = match &args.config {
        Some(path) => RunConfig::read(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = args.seed {
        cfg.master_seed = seed;
    }
    if let Some(out) = &args.out {
        cfg.output_dir = Some(out.clone());
    }
    let cfg = cfg.resolve()?;
    let out = cfg
        .output_dir
        .clone()
        .ok_or_else(|| Error::Config("no output directory: pass --out or set output_dir".into()))?;
    Ok((cfg, out))
}

fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    match workers {
        None => f(),
        Some(0) => Err(Error::Config("--workers must be ≥ 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(e.to_string()))?
            .install(f),
    }
}

fn run_with(args: &RunArgs, f: fn(&RunConfig, &Path) -> Result<Outcome>) -> Result<Outcome> {
    let (cfg, out) = load_config(args)?;
    with_workers(args.workers, || f(&cfg, &out))
}

fn run(cli: Cli) -> Result<Outcome> {
    match cli.command {
        Command::Synth(args) => run_with(&args, commands::synth),
        Command::Audit(args) => run_with(&args, commands::audit),
        Command::Optimize(args) => run_with(&args, commands::optimize),
        Command::Report {
            runs,
            format,
            out,
            workers,
        } => {
            let format = match format {
                FormatArg::Table => Format::Table,
                FormatArg::Csv => Format::Csv,
                FormatArg::Json => Format::Json,
            };
            with_workers(workers, || commands::report(&runs, format, out.as_deref()))
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(outcome) => {
            for w in &outcome.warnings {
                eprintln!("warning: {w}");
            }
            for line in &outcome.stdout {
                println!("{line}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            let doc = serde_json::json!({
                "error": { "kind": e.kind(), "message": e.to_string(), "exit_code": e.exit_code() }
            });
            eprintln!("{doc}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
