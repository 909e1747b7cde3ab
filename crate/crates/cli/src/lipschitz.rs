use std::path::PathBuf;

use adarec::measurement::MeasurementDescriptor;
use adarec::partition::{PartitionSpec, FLOAT_TOLERANCE};
use adarec::verify::lipschitz_sweep;
use adarec::{Exact, Mode, Scalar};
use clap::Args;

use crate::output::{build_spec, resolve_path, sink};
use crate::{CliError, Context, SpecArgs, SPEC_KEYS};

#[derive(Args, Debug)]
pub struct LipschitzArgs {
    #[command(flatten)]
    spec: SpecArgs,
    /// Random pairs per functional
    #[arg(long)]
    pairs: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// exact or float64
    #[arg(long)]
    mode: Option<Mode>,
    /// CSV output (stdout when absent)
    #[arg(long)]
    csv: Option<PathBuf>,
}

const KEYS: [&str; 5] = ["pairs", "seed", "mode", "csv", "workers"];

pub fn run(ctx: &Context, args: LipschitzArgs) -> Result<(), CliError> {
    let allowed: Vec<&str> = SPEC_KEYS.iter().chain(KEYS.iter()).copied().collect();
    ctx.config.check_keys("lipschitz", &allowed)?;
    match ctx.config.resolve(args.mode, "mode", Mode::Exact)? {
        Mode::Exact => run_mode::<Exact>(ctx, &args),
        Mode::Float64 => run_mode::<f64>(ctx, &args),
    }
}

fn describe(d: &MeasurementDescriptor) -> (&'static str, String) {
    match d {
        MeasurementDescriptor::ColorDistance(set) => (
            "colors",
            set.colors().iter().map(|c| c.to_string()).collect::<Vec<_>>().join(" "),
        ),
        MeasurementDescriptor::Separating { color } => ("sep", color.to_string()),
    }
}

fn run_mode<S: Scalar>(ctx: &Context, args: &LipschitzArgs) -> Result<(), CliError> {
    let spec: PartitionSpec<S> = build_spec(ctx, &args.spec, 2, "1")?;
    let pairs = ctx.config.resolve(args.pairs, "pairs", 10_000)?;
    let seed = ctx.config.resolve(args.seed, "seed", 1)?;
    let limit = match S::MODE {
        Mode::Exact => S::one(),
        Mode::Float64 => S::one() + S::from_f64(FLOAT_TOLERANCE).expect("finite"),
    };
    let entries = lipschitz_sweep(&spec, pairs, seed)?;
    let path = resolve_path(ctx, args.csv.clone(), "csv")?;
    let to_stdout = path.is_none();
    let mut w = csv::Writer::from_writer(sink(path.as_deref())?);
    w.write_record(["kind", "argument", "max_ratio", "pairs", "pass"])?;
    let mut failed = 0usize;
    let mut worst = S::zero();
    for e in &entries {
        let pass = e.max_ratio <= limit;
        failed += usize::from(!pass);
        worst = adarec::scalar::max_of(worst, e.max_ratio.clone());
        let (kind, arg) = describe(&e.descriptor);
        w.write_record([
            kind.to_string(),
            arg,
            e.max_ratio.to_string(),
            e.pairs.to_string(),
            pass.to_string(),
        ])?;
    }
    w.flush()?;
    let summary = format!(
        "lipschitz m={} mode={}: {} functionals, worst ratio {}, {failed} above {}",
        spec.m(),
        spec.mode(),
        entries.len(),
        worst,
        limit
    );
    if to_stdout {
        eprintln!("{summary}");
    } else {
        println!("{summary}");
    }
    if failed == 0 {
        Ok(())
    } else {
        Err(CliError::Violation(format!(
            "{failed} functionals exceed Lipschitz constant 1"
        )))
    }
}
