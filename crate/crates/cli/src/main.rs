#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod config;
mod lipschitz;
mod output;
mod recover;
mod render;
mod verify;
mod widths;

use config::ConfigFile;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, config or preconditions: exit 2.
    Usage(String),
    /// A checked property failed: exit 1.
    Violation(String),
}

impl From<adarec::Error> for CliError {
    fn from(e: adarec::Error) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Usage(format!("i/o: {e}"))
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Usage(format!("csv: {e}"))
    }
}

#[derive(Parser)]
#[command(name = "adarec")]
#[command(about = "Recover vectors from few adaptive 1-Lipschitz measurements")]
struct Cli {
    /// Flat `key = value` file; flags override it
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Worker threads for trial loops (0 = one per core)
    #[arg(long, global = true)]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run recovery trials and check the error bound and query budget
    Recover(recover::RecoverArgs),
    /// Check partition properties against brute-force oracles
    Verify(verify::VerifyArgs),
    /// Draw the planar coloring as SVG
    Render(render::RenderArgs),
    /// Wrap diagonal-operator sketches and compare against s-numbers
    Widths(widths::WidthsArgs),
    /// Measure Lipschitz constants of every measurement functional
    Lipschitz(lipschitz::LipschitzArgs),
}

/// Partition parameters shared by several subcommands.
#[derive(Args, Clone, Debug, Default)]
pub struct SpecArgs {
    /// Dimension
    #[arg(long)]
    pub m: Option<usize>,
    /// Precision ε (decimal or p/q)
    #[arg(long)]
    pub eps: Option<String>,
    /// Schedule override δ_0,…,δ_m
    #[arg(long)]
    pub delta: Option<String>,
    /// Separation constant override
    #[arg(long)]
    pub c: Option<String>,
}

pub const SPEC_KEYS: [&str; 4] = ["m", "eps", "delta", "c"];

pub struct Context {
    pub config: ConfigFile,
    pub workers: usize,
}

impl Context {
    pub fn pool(&self) -> Result<rayon::ThreadPool, CliError> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.workers)
            .build()
            .map_err(|e| CliError::Usage(format!("worker pool: {e}")))
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let config = match &cli.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    let workers = config.resolve(cli.workers, "workers", 0)?;
    let ctx = Context { config, workers };
    match cli.command {
        Command::Recover(args) => recover::run(&ctx, args),
        Command::Verify(args) => verify::run(&ctx, args),
        Command::Render(args) => render::run(&ctx, args),
        Command::Widths(args) => widths::run(&ctx, args),
        Command::Lipschitz(args) => lipschitz::run(&ctx, args),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Violation(msg)) => {
            eprintln!("FAIL: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
