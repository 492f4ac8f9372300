//! `oodkit` command-line pipeline.
//!
//! Every subcommand reads flat files, writes its reports into `--out-dir`
//! and echoes its resolved configuration into each report. Settings are
//! taken from flags first, then `OODKIT_*` environment variables, then the
//! TOML file given with `--config`, then built-in defaults.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

mod commands;
mod config;
mod error;
mod output;

pub use config::FileConfig;
pub use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "oodkit", version, about = "Instance-level OOD benchmark pipeline")]
pub struct Cli {
    /// Master seed for every randomized step.
    #[arg(long, global = true, env = "OODKIT_SEED")]
    pub seed: Option<u64>,

    /// TOML file with per-subcommand settings.
    #[arg(long, global = true, env = "OODKIT_CONFIG")]
    pub config: Option<PathBuf>,

    /// Directory for output files (created if missing).
    #[arg(long, global = true, env = "OODKIT_OUT_DIR")]
    pub out_dir: Option<PathBuf>,

    /// Worker thread cap; 0 uses all cores.
    #[arg(long, global = true, env = "OODKIT_THREADS")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Split image–label pairs into ID / OOD-Simple / OOD-Hard.
    Divide(commands::divide::Args),
    /// Generate contain / not-contain questions and BAP samples.
    GenQuestions(commands::questions::Args),
    /// Parse transcripts and compute metrics.
    Score(commands::score::Args),
    /// Overlap rates and population bounds.
    Popstats(commands::popstats::Args),
    /// MMD, permutation, degradation and equivalence tests.
    Shifttests(commands::shift::Args),
    /// Focal-loss hard-sample mining and hard-vs-OOD evidence.
    Hardmine(commands::hardmine::Args),
    /// Match-probability histograms from verdict files.
    Report(commands::report::Args),
    /// Validate input files against a label space.
    Validate(commands::validate::Args),
    /// Find excluded labels in downstream files.
    Lint(commands::validate::LintArgs),
    /// Write a synthetic corpus for trying the pipeline.
    Synth(commands::synth::Args),
    /// Write synthetic transcripts for a question file.
    Simulate(commands::synth::SimulateArgs),
}

/// Shared settings resolved from the global flags and config file.
#[derive(Debug, Clone)]
pub struct Context {
    pub seed: u64,
    pub out_dir: PathBuf,
    pub file: FileConfig,
}

pub const DEFAULT_SEED: u64 = 0;

fn execute(cli: Cli, argv: Vec<String>) -> Result<(), CliError> {
    let file = match &cli.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let threads = cli.threads.or(file.threads).unwrap_or(0);
    if threads > 0 {
        // a pool may already exist when called repeatedly in-process
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }
    let ctx = Context {
        seed: cli.seed.or(file.seed).unwrap_or(DEFAULT_SEED),
        out_dir: cli
            .out_dir
            .clone()
            .or_else(|| file.out_dir.clone())
            .unwrap_or_else(|| PathBuf::from(".")),
        file,
    };
    let writes_reports = !matches!(cli.command, Command::Validate(_) | Command::Lint(_));
    match cli.command {
        Command::Divide(a) => commands::divide::run(&ctx, a),
        Command::GenQuestions(a) => commands::questions::run(&ctx, a),
        Command::Score(a) => commands::score::run(&ctx, a),
        Command::Popstats(a) => commands::popstats::run(&ctx, a),
        Command::Shifttests(a) => commands::shift::run(&ctx, a),
        Command::Hardmine(a) => commands::hardmine::run(&ctx, a),
        Command::Report(a) => commands::report::run(&ctx, a),
        Command::Validate(a) => commands::validate::run(&ctx, a),
        Command::Lint(a) => commands::validate::lint(&ctx, a),
        Command::Synth(a) => commands::synth::run(&ctx, a),
        Command::Simulate(a) => commands::synth::simulate(&ctx, a),
    }?;
    if writes_reports {
        output::write_run_meta(&ctx.out_dir, &argv)?;
    }
    Ok(())
}

/// Parse arguments, run, and return the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let argv = args.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { error::EXIT_USAGE } else { 0 };
        }
    };
    match execute(cli, argv) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
