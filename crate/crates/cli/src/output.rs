use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use adarec::partition::{analytic_separation_bound, default_delta_schedule, PartitionSpec};
use adarec::Scalar;

use crate::config::split_list;
use crate::{CliError, Context, SpecArgs};

/// A file when a path is given, stdout otherwise.
pub fn sink(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => {
            Box::new(BufWriter::new(File::create(p).map_err(|e| {
                CliError::Usage(format!("cannot create {}: {e}", p.display()))
            })?))
        }
        None => Box::new(BufWriter::new(std::io::stdout().lock())),
    })
}

pub fn resolve_path(ctx: &Context, flag: Option<PathBuf>, key: &str) -> Result<Option<PathBuf>, CliError> {
    ctx.config.resolve_opt(flag, key)
}

pub fn parse_scalar<S: Scalar>(text: &str, what: &str) -> Result<S, CliError> {
    S::parse(text).map_err(|e| CliError::Usage(format!("{what} `{text}`: {e}")))
}

pub fn parse_vector<S: Scalar>(text: &str, what: &str) -> Result<Vec<S>, CliError> {
    split_list(text).iter().map(|v| parse_scalar(v, what)).collect()
}

pub fn fmt_vector<S: Scalar>(x: &[S]) -> String {
    x.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" ")
}

/// Builds the partition from flags, config and defaults.
pub fn build_spec<S: Scalar>(
    ctx: &Context,
    args: &SpecArgs,
    default_m: usize,
    default_eps: &str,
) -> Result<PartitionSpec<S>, CliError> {
    let m = ctx.config.resolve(args.m, "m", default_m)?;
    let eps_text = ctx.config.resolve(args.eps.clone(), "eps", default_eps.to_string())?;
    let eps: S = parse_scalar(&eps_text, "eps")?;
    let delta = ctx
        .config
        .resolve_opt(args.delta.clone(), "delta")?
        .map(|t| parse_vector::<S>(&t, "delta"))
        .transpose()?;
    let c = ctx
        .config
        .resolve_opt(args.c.clone(), "c")?
        .map(|t| parse_scalar::<S>(&t, "c"))
        .transpose()?;
    let spec = match (delta, c) {
        (None, None) => PartitionSpec::new(m, eps),
        (Some(delta), c) => {
            if delta.len() != m + 1 {
                return Err(CliError::Usage(format!(
                    "delta needs {} entries for m = {m}, got {}",
                    m + 1,
                    delta.len()
                )));
            }
            let c = c.unwrap_or_else(|| analytic_separation_bound(&delta));
            PartitionSpec::with_schedule(m, delta, c, eps)
        }
        (None, Some(c)) => PartitionSpec::with_schedule(m, default_delta_schedule(m), c, eps),
    };
    Ok(spec?)
}
