//! The `r2g` command line: alignment, grasp precomputation, demonstration
//! generation, evaluation, the stepping server, reports and dataset stats.

use std::fmt;

use clap::{Parser, Subcommand};

pub mod commands;
pub mod inputs;
pub mod plot;
pub mod protocol;

/// Exit status for bad input: unreadable files, invalid configs, bad flags.
pub const EXIT_VALIDATION: i32 = 2;
/// Exit status for failures while running.
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug)]
pub enum Failure {
    Validation(anyhow::Error),
    Runtime(anyhow::Error),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Validation(_) => EXIT_VALIDATION,
            Failure::Runtime(_) => EXIT_RUNTIME,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Validation(e) => write!(f, "invalid input: {e:#}"),
            Failure::Runtime(e) => write!(f, "{e:#}"),
        }
    }
}

pub type CmdResult<T = ()> = Result<T, Failure>;

/// Tags an error as a validation or runtime failure with some context.
pub trait Classify<T> {
    fn invalid(self, context: impl fmt::Display) -> CmdResult<T>;
    fn runtime(self, context: impl fmt::Display) -> CmdResult<T>;
}

impl<T, E: Into<anyhow::Error>> Classify<T> for Result<T, E> {
    fn invalid(self, context: impl fmt::Display) -> CmdResult<T> {
        self.map_err(|e| Failure::Validation(e.into().context(context.to_string())))
    }

    fn runtime(self, context: impl fmt::Display) -> CmdResult<T> {
        self.map_err(|e| Failure::Runtime(e.into().context(context.to_string())))
    }
}

pub fn invalid(msg: impl fmt::Display) -> Failure {
    Failure::Validation(anyhow::anyhow!("{msg}"))
}

#[derive(Debug, Parser)]
#[command(name = "r2g", version, about = "Generate robot demonstrations from one object-centric trajectory")]
pub struct Cli {
    /// Worker threads; defaults to the available cores.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Align canonical meshes to a reference observation.
    #[command(subcommand)]
    Align(commands::align::AlignCommand),
    /// Precompute antipodal grasps for metric meshes.
    Grasps(commands::grasps::GraspsArgs),
    /// Generate a demonstration dataset with the scripted expert.
    Generate(commands::generate::GenerateArgs),
    /// Evaluate a controller over several seeds.
    Eval(commands::eval::EvalArgs),
    /// Serve the stepping interface as newline-delimited JSON.
    Serve(commands::serve::ServeArgs),
    /// Summarize evaluation CSVs into tables and plots.
    Report(commands::report::ReportArgs),
    /// Print dataset statistics as JSON.
    Stats(commands::stats::StatsArgs),
}

pub fn run(cli: Cli) -> CmdResult {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(invalid("--threads must be positive"));
        }
        // fails only when a pool already exists, as in tests calling run twice
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match cli.command {
        Command::Align(c) => commands::align::run(c),
        Command::Grasps(a) => commands::grasps::run(a),
        Command::Generate(a) => commands::generate::run(a),
        Command::Eval(a) => commands::eval::run(a),
        Command::Serve(a) => commands::serve::run(a),
        Command::Report(a) => commands::report::run(a),
        Command::Stats(a) => commands::stats::run(a),
    }
}
