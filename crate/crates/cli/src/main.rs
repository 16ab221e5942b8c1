mod commands;
mod config;
mod manifest;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};

use crate::commands::Ctx;
use crate::config::{ConfigError, Mode, RunConfig};
use crate::manifest::StaleInput;

#[derive(Debug, Parser)]
#[command(
    name = "bodyresp",
    version,
    about = "Detect autonomic arousal episodes from wrist-worn sensor streams"
)]
struct Cli {
    /// TOML run configuration; `BODYRESP_*` variables override it.
    #[arg(short, long, global = true)]
    config: Option<PathBuf>,
    /// Master seed for synthesis, training and permutations.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Decision threshold preset.
    #[arg(long, value_enum, global = true)]
    mode: Option<Mode>,
    /// Worker threads (0 lets the pool decide).
    #[arg(short, long, global = true)]
    jobs: Option<usize>,
    /// Raw dataset directory.
    #[arg(long, global = true)]
    data: Option<PathBuf>,
    /// Root directory for derived stages.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Generate a synthetic dataset into the data directory.
    Synth,
    /// Minute tables and confounder masks.
    Preprocess,
    /// Window features for every covered minute.
    Featurize,
    /// Leave-one-subject-out cross-validation and the final cascade.
    Train,
    /// Cascade predictions and smoothed events.
    Predict,
    /// Adjusted event metrics with a permutation null.
    Evaluate,
    /// Metric table and ribbon plot.
    Report,
}

fn load(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = RunConfig::load(cli.config.as_deref(), std::env::vars())?;
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(m) = cli.mode {
        cfg.mode = m;
    }
    if let Some(j) = cli.jobs {
        cfg.jobs = j;
    }
    if let Some(d) = &cli.data {
        cfg.paths.data = d.clone();
    }
    if let Some(o) = &cli.out {
        cfg.paths.out = o.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<()> {
    let cfg = load(cli)?;
    if cfg.jobs > 0 {
        rayon::ThreadPoolBuilder::new().num_threads(cfg.jobs).build_global()?;
    }
    let ctx = Ctx::new(cfg)?;
    match cli.command {
        Command::Synth => commands::synth(&ctx),
        Command::Preprocess => commands::preprocess(&ctx),
        Command::Featurize => commands::featurize(&ctx),
        Command::Train => commands::train(&ctx),
        Command::Predict => commands::predict(&ctx),
        Command::Evaluate => commands::evaluate(&ctx),
        Command::Report => commands::report(&ctx),
    }
}

/// 1 for configuration and schema problems, 2 for bad or stale data,
/// 3 for anything else.
fn exit_code(err: &anyhow::Error) -> u8 {
    use bodyresp_core::Error as E;
    for cause in err.chain() {
        if cause.is::<ConfigError>() {
            return 1;
        }
        if cause.is::<StaleInput>() || cause.is::<std::io::Error>() {
            return 2;
        }
        if let Some(e) = cause.downcast_ref::<E>() {
            return match e {
                E::Config(_) | E::Json(_) => 1,
                E::Parse { line, .. } if *line <= 1 => 1,
                e if e.is_data_error() => 2,
                _ => 3,
            };
        }
    }
    3
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
