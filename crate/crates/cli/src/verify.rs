use std::path::PathBuf;

use adarec::partition::PartitionSpec;
use adarec::verify::{
    run_exhaustive_validation, run_fuzz_validation, ValidationOptions, ValidationReport, MAX_EXHAUSTIVE_DIM,
};
use adarec::{Exact, Scalar};
use clap::{Args, ValueEnum};

use crate::output::{build_spec, parse_scalar, resolve_path, sink};
use crate::{CliError, Context, SpecArgs, SPEC_KEYS};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Method {
    /// Exhaustive grids for m ≤ 3, fuzzing above
    Auto,
    Exhaustive,
    Fuzz,
}

impl std::str::FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        <Self as ValueEnum>::from_str(s, true)
    }
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[command(flatten)]
    spec: SpecArgs,
    /// Grid spacing h; 1/h must be an integer
    #[arg(long)]
    resolution: Option<String>,
    #[arg(long, value_enum)]
    method: Option<Method>,
    /// Random queries per distance function
    #[arg(long)]
    queries: Option<usize>,
    /// Random points for the membership check
    #[arg(long)]
    membership: Option<usize>,
    /// Random pairs per Lipschitz check
    #[arg(long)]
    pairs: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// CSV report (stdout when absent)
    #[arg(long)]
    report: Option<PathBuf>,
}

const KEYS: [&str; 8] = [
    "resolution",
    "method",
    "queries",
    "membership",
    "pairs",
    "seed",
    "report",
    "workers",
];

pub fn run(ctx: &Context, args: VerifyArgs) -> Result<(), CliError> {
    let allowed: Vec<&str> = SPEC_KEYS.iter().chain(KEYS.iter()).copied().collect();
    ctx.config.check_keys("verify", &allowed)?;
    let spec: PartitionSpec<Exact> = build_spec(ctx, &args.spec, 2, "1")?;
    let defaults = ValidationOptions::default();
    let inv_h = match ctx.config.resolve_opt(args.resolution.clone(), "resolution")? {
        None => None,
        Some(text) => {
            let h: Exact = parse_scalar(&text, "resolution")?;
            let inv = <Exact as Scalar>::one() / h.clone();
            match (h > <Exact as Scalar>::zero() && inv.is_integer())
                .then(|| inv.to_integer().to_string().parse::<i64>().ok())
                .flatten()
            {
                Some(v) => Some(v),
                None => {
                    return Err(CliError::Usage(format!(
                        "resolution {text} is not 1/k for an integer k"
                    )))
                }
            }
        }
    };
    let opts = ValidationOptions {
        inv_h,
        distance_queries: ctx.config.resolve(args.queries, "queries", defaults.distance_queries)?,
        membership_points: ctx
            .config
            .resolve(args.membership, "membership", defaults.membership_points)?,
        lipschitz_pairs: ctx.config.resolve(args.pairs, "pairs", defaults.lipschitz_pairs)?,
        seed: ctx.config.resolve(args.seed, "seed", defaults.seed)?,
    };
    let method = ctx.config.resolve(args.method, "method", Method::Auto)?;
    let m = spec.m();
    let exhaustive = match method {
        Method::Fuzz => false,
        Method::Auto => m <= MAX_EXHAUSTIVE_DIM,
        Method::Exhaustive if m <= MAX_EXHAUSTIVE_DIM => true,
        Method::Exhaustive => {
            eprintln!("exhaustive validation needs m ≤ {MAX_EXHAUSTIVE_DIM}, got m = {m}; running fuzz mode");
            false
        }
    };
    if !exhaustive && method == Method::Auto {
        eprintln!("m = {m} is above {MAX_EXHAUSTIVE_DIM}: exhaustive mode rejected, running fuzz mode");
    }
    let report = if exhaustive {
        run_exhaustive_validation(&spec, &opts)?
    } else {
        run_fuzz_validation(&spec, &opts)?
    };
    let path = resolve_path(ctx, args.report.clone(), "report")?;
    let to_stdout = path.is_none();
    write_report(&report, path)?;
    let failed = report.rows.iter().filter(|r| !r.pass).count();
    let summary = format!(
        "verify m={m} mode={} c={}: {} checks, {failed} failed",
        if report.exhaustive { "exhaustive" } else { "fuzz" },
        report.spec.c(),
        report.rows.len()
    );
    if to_stdout {
        eprintln!("{summary}");
    } else {
        println!("{summary}");
    }
    if report.passed() {
        Ok(())
    } else {
        for r in report.rows.iter().filter(|r| !r.pass) {
            eprintln!(
                "{} {}: oracle {} module {}",
                r.operation, r.instance, r.oracle, r.module_value
            );
        }
        Err(CliError::Violation(format!("{failed} verification rows failed")))
    }
}

fn write_report(report: &ValidationReport, path: Option<PathBuf>) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(sink(path.as_deref())?);
    w.write_record(["operation", "instance", "oracle", "module_value", "pass"])?;
    for r in &report.rows {
        w.write_record([
            r.operation.as_str(),
            r.instance.as_str(),
            r.oracle.as_str(),
            r.module_value.as_str(),
            if r.pass { "true" } else { "false" },
        ])?;
    }
    w.flush()?;
    Ok(())
}
