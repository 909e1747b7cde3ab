use std::io::Write;
use std::path::PathBuf;

use adarec::widths::{
    s_numbers, speedup_eps, speedup_input, speedup_problem, speedup_report, speedup_trial, DiagonalOperator,
    SpeedupReport,
};
use clap::{Args, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::split_list;
use crate::output::{resolve_path, sink};
use crate::{CliError, Context};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Weights {
    /// σ_k = 2^{−k}
    Geometric,
    /// σ_k = 1/k
    Harmonic,
}

impl std::str::FromStr for Weights {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        <Self as ValueEnum>::from_str(s, true)
    }
}

#[derive(Args, Debug)]
pub struct WidthsArgs {
    /// Adaptive query counts, comma separated
    #[arg(long)]
    n: Option<String>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Truncation dimension
    #[arg(long)]
    d: Option<usize>,
    #[arg(long, value_enum)]
    weights: Option<Weights>,
    /// Per-trial CSV (stdout when absent)
    #[arg(long)]
    csv: Option<PathBuf>,
    /// JSON summary, one object per line
    #[arg(long)]
    json: Option<PathBuf>,
}

const KEYS: [&str; 9] = ["n", "eps", "trials", "seed", "d", "weights", "csv", "json", "workers"];

pub fn run(ctx: &Context, args: WidthsArgs) -> Result<(), CliError> {
    ctx.config.check_keys("widths", &KEYS)?;
    let cfg = &ctx.config;
    let ns: Vec<usize> = split_list(&cfg.resolve(args.n.clone(), "n", "4,5,6".to_string())?)
        .iter()
        .map(|v| v.parse().map_err(|e| CliError::Usage(format!("n `{v}`: {e}"))))
        .collect::<Result<_, _>>()?;
    let eps = cfg.resolve(args.eps, "eps", 1e-3)?;
    let trials = cfg.resolve(args.trials, "trials", 1000)?;
    let seed = cfg.resolve(args.seed, "seed", 1)?;
    let d = cfg.resolve(args.d, "d", 64)?;
    let op = match cfg.resolve(args.weights, "weights", Weights::Geometric)? {
        Weights::Geometric => DiagonalOperator::geometric(d)?,
        Weights::Harmonic => DiagonalOperator::harmonic(d)?,
    };
    let eps_exact = speedup_eps(eps)?;
    let pool = ctx.pool()?;
    let mut reports = Vec::new();
    for &n in &ns {
        let problem = speedup_problem(&op, n)?;
        let rows = pool.install(|| {
            (0..trials)
                .into_par_iter()
                .map(|t| speedup_trial(&op, &problem, &eps_exact, t, &speedup_input(d, seed, t)))
                .collect::<adarec::Result<Vec<_>>>()
        })?;
        reports.push(speedup_report(&op, n, eps, rows)?);
    }

    let csv_path = resolve_path(ctx, args.csv.clone(), "csv")?;
    let to_stdout = csv_path.is_none();
    let mut w = csv::Writer::from_writer(sink(csv_path.as_deref())?);
    w.write_record(["trial", "m", "n", "queries", "error", "bound"])?;
    for r in &reports {
        for t in &r.trials {
            w.write_record([
                t.trial.to_string(),
                r.m.to_string(),
                r.n.to_string(),
                t.queries.to_string(),
                format!("{:e}", t.error),
                format!("{:e}", r.bound),
            ])?;
        }
    }
    w.flush()?;

    if let Some(path) = resolve_path(ctx, args.json.clone(), "json")? {
        let mut out = sink(Some(&path))?;
        for r in &reports {
            let (b, dn) = s_numbers(&op, r.n)?;
            let line = serde_json::to_string(&Summary {
                n: r.n,
                m: r.m,
                d: r.d,
                eps: r.eps,
                trials: r.trials.len(),
                queries: r.queries,
                max_error: r.max_error,
                bound: r.bound,
                benchmark: r.benchmark,
                bernstein: b,
                kolmogorov: dn,
                truncation_error: r.truncation_error,
                passed: r.passed(),
                beats_benchmark: r.beats_benchmark(),
            })
            .expect("summary serializes");
            writeln!(out, "{line}")?;
        }
        out.flush()?;
    }

    let mut failed = Vec::new();
    for r in &reports {
        let line = summary(r);
        if to_stdout {
            eprintln!("{line}");
        } else {
            println!("{line}");
        }
        if !r.passed() {
            failed.push(format!("n={} exceeds the bound {:e}", r.n, r.bound));
        }
        if r.n >= 4 && !r.beats_benchmark() {
            failed.push(format!("n={} exceeds the benchmark {:e}", r.n, r.benchmark));
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Violation(failed.join("; ")))
    }
}

#[derive(Serialize)]
struct Summary {
    n: usize,
    m: usize,
    d: usize,
    eps: f64,
    trials: usize,
    queries: usize,
    max_error: f64,
    bound: f64,
    benchmark: f64,
    bernstein: f64,
    kolmogorov: f64,
    truncation_error: Option<f64>,
    passed: bool,
    beats_benchmark: bool,
}

fn summary(r: &SpeedupReport) -> String {
    format!(
        "widths n={} m={} d={}: max error {:e} (bound {:e}), non-adaptive benchmark σ_{} = {:e}, truncation σ_{} = {}, queries {} ≤ {}",
        r.n,
        r.m,
        r.d,
        r.max_error,
        r.bound,
        r.n + 1,
        r.benchmark,
        r.d + 1,
        r.truncation_error.map(|t| format!("{t:e}")).unwrap_or_else(|| "unknown".into()),
        r.trials.iter().map(|t| t.queries).max().unwrap_or(0),
        r.n + 1
    )
}
