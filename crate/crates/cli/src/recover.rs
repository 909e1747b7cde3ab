use std::io::Write;
use std::path::PathBuf;

use adarec::measurement::{make_oracle, Oracle};
use adarec::partition::PartitionSpec;
use adarec::recovery::{max_norm_distance, n_of, recover};
use adarec::{Exact, Mode, Scalar};
use clap::Args;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::output::{build_spec, fmt_vector, parse_scalar, parse_vector, resolve_path, sink};
use crate::{CliError, Context, SpecArgs, SPEC_KEYS};

#[derive(Args, Debug)]
pub struct RecoverArgs {
    #[command(flatten)]
    spec: SpecArgs,
    /// Number of random trials
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Lower corner of the sampling cube
    #[arg(long, allow_hyphen_values = true)]
    box_lo: Option<String>,
    /// Upper corner of the sampling cube
    #[arg(long, allow_hyphen_values = true)]
    box_hi: Option<String>,
    /// Explicit input vector, comma separated; replaces random trials
    #[arg(long, allow_hyphen_values = true)]
    x: Option<String>,
    /// exact or float64
    #[arg(long)]
    mode: Option<Mode>,
    /// CSV output (stdout when absent)
    #[arg(long)]
    csv: Option<PathBuf>,
    /// JSON-lines transcript output
    #[arg(long)]
    transcripts: Option<PathBuf>,
}

const KEYS: [&str; 9] = [
    "trials",
    "seed",
    "box-lo",
    "box-hi",
    "x",
    "mode",
    "csv",
    "transcripts",
    "workers",
];

/// Sampling resolution of random inputs: coordinates are `lo + (hi − lo)·k/GRAIN`.
const GRAIN: i64 = 1_000_000;

struct Trial<S> {
    index: usize,
    x: Vec<S>,
    x_hat: Option<Vec<S>>,
    error: Option<S>,
    queries: usize,
    transcript: String,
    failure: Option<String>,
}

pub fn run(ctx: &Context, args: RecoverArgs) -> Result<(), CliError> {
    let allowed: Vec<&str> = SPEC_KEYS.iter().chain(KEYS.iter()).copied().collect();
    ctx.config.check_keys("recover", &allowed)?;
    match ctx.config.resolve(args.mode, "mode", Mode::Exact)? {
        Mode::Exact => run_mode::<Exact>(ctx, &args),
        Mode::Float64 => run_mode::<f64>(ctx, &args),
    }
}

fn input<S: Scalar>(m: usize, lo: &S, hi: &S, seed: u64, index: usize) -> Vec<S> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    (0..m)
        .map(|_| {
            let k = rng.random_range(0..=GRAIN);
            lo.clone() + (hi.clone() - lo.clone()) * S::ratio(k, GRAIN)
        })
        .collect()
}

fn trial<S: Scalar>(spec: &PartitionSpec<S>, x: Vec<S>, index: usize) -> Trial<S> {
    let budget = n_of(spec.m());
    let mut oracle = match make_oracle(x.clone(), spec, budget) {
        Ok(o) => o,
        Err(e) => {
            return Trial {
                index,
                x,
                x_hat: None,
                error: None,
                queries: 0,
                transcript: String::new(),
                failure: Some(e.to_string()),
            }
        }
    };
    let result = recover(&mut oracle, spec);
    let transcript = oracle.transcript().to_json_lines_tagged(Some(index));
    let queries = oracle.transcript().consumed();
    match result {
        Ok(r) => {
            let error = max_norm_distance(&x, &r.x_hat);
            let failure = if !(error <= r.error_bound) {
                Some(format!("error {error} exceeds {}", r.error_bound))
            } else if queries > budget {
                Some(format!("{queries} queries exceed the budget {budget}"))
            } else {
                None
            };
            Trial {
                index,
                x,
                x_hat: Some(r.x_hat),
                error: Some(error),
                queries,
                transcript,
                failure,
            }
        }
        Err(e) => Trial {
            index,
            x,
            x_hat: None,
            error: None,
            queries,
            transcript,
            failure: Some(e.to_string()),
        },
    }
}

fn run_mode<S: Scalar>(ctx: &Context, args: &RecoverArgs) -> Result<(), CliError> {
    let spec: PartitionSpec<S> = build_spec(ctx, &args.spec, 2, "0.1")?;
    let m = spec.m();
    let explicit = ctx
        .config
        .resolve_opt(args.x.clone(), "x")?
        .map(|t| parse_vector::<S>(&t, "x"))
        .transpose()?;
    if let Some(x) = &explicit {
        if x.len() != m {
            return Err(CliError::Usage(format!(
                "--x has {} coordinates, expected {m}",
                x.len()
            )));
        }
    }
    let trials = match explicit {
        Some(_) => 1,
        None => ctx.config.resolve(args.trials, "trials", 100)?,
    };
    let seed = ctx.config.resolve(args.seed, "seed", 1)?;
    let lo: S = parse_scalar(
        &ctx.config.resolve(args.box_lo.clone(), "box-lo", "-10".into())?,
        "box-lo",
    )?;
    let hi: S = parse_scalar(
        &ctx.config.resolve(args.box_hi.clone(), "box-hi", "10".into())?,
        "box-hi",
    )?;
    if !(lo < hi) {
        return Err(CliError::Usage("box-lo must be below box-hi".into()));
    }
    let csv_path = resolve_path(ctx, args.csv.clone(), "csv")?;
    let transcript_path = resolve_path(ctx, args.transcripts.clone(), "transcripts")?;

    let rows: Vec<Trial<S>> = ctx.pool()?.install(|| {
        (0..trials)
            .into_par_iter()
            .map(|i| {
                let x = match &explicit {
                    Some(x) => x.clone(),
                    None => input(m, &lo, &hi, seed, i),
                };
                trial(&spec, x, i)
            })
            .collect()
    });

    let to_stdout = csv_path.is_none();
    let mut w = csv::Writer::from_writer(sink(csv_path.as_deref())?);
    w.write_record(["trial", "x", "x_hat", "error", "queries"])?;
    for r in &rows {
        w.write_record([
            r.index.to_string(),
            fmt_vector(&r.x),
            r.x_hat.as_deref().map(fmt_vector).unwrap_or_default(),
            r.error.as_ref().map(|e| e.to_string()).unwrap_or_default(),
            r.queries.to_string(),
        ])?;
    }
    w.flush()?;
    if let Some(path) = &transcript_path {
        let mut out = sink(Some(path))?;
        for r in &rows {
            out.write_all(r.transcript.as_bytes())?;
        }
        out.flush()?;
    }

    let failures: Vec<&Trial<S>> = rows.iter().filter(|r| r.failure.is_some()).collect();
    let max_queries = rows.iter().map(|r| r.queries).max().unwrap_or(0);
    let max_error = rows
        .iter()
        .filter_map(|r| r.error.clone())
        .fold(S::zero(), adarec::scalar::max_of);
    let summary = format!(
        "recover m={m} eps={} mode={} trials={trials}: {} passed, max error {}, max queries {max_queries} of {}",
        spec.eps(),
        spec.mode(),
        trials - failures.len(),
        max_error.to_f64(),
        n_of(m)
    );
    if to_stdout {
        eprintln!("{summary}");
    } else {
        println!("{summary}");
    }
    match failures.first() {
        None => Ok(()),
        Some(f) => {
            for f in &failures {
                eprintln!(
                    "trial {} x=[{}]: {}",
                    f.index,
                    fmt_vector(&f.x),
                    f.failure.as_deref().unwrap_or_default()
                );
                eprint!("{}", f.transcript);
            }
            Err(CliError::Violation(format!(
                "{} of {trials} trials failed, first is trial {}",
                failures.len(),
                f.index
            )))
        }
    }
}
