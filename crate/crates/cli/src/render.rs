use std::io::Write;
use std::path::PathBuf;

use adarec::partition::PartitionSpec;
use adarec::render::{render_svg, RenderWindow};
use adarec::Exact;
use clap::Args;

use crate::output::{build_spec, parse_vector, resolve_path, sink};
use crate::{CliError, Context, SpecArgs, SPEC_KEYS};

#[derive(Args, Debug)]
pub struct RenderArgs {
    #[command(flatten)]
    spec: SpecArgs,
    /// x0,x1,y0,y1
    #[arg(long, allow_hyphen_values = true)]
    window: Option<String>,
    /// Image width in pixels
    #[arg(long)]
    width: Option<u32>,
    /// SVG output (stdout when absent)
    #[arg(long)]
    out: Option<PathBuf>,
}

const KEYS: [&str; 4] = ["window", "width", "out", "workers"];

pub fn run(ctx: &Context, args: RenderArgs) -> Result<(), CliError> {
    let allowed: Vec<&str> = SPEC_KEYS.iter().chain(KEYS.iter()).copied().collect();
    ctx.config.check_keys("render", &allowed)?;
    let spec: PartitionSpec<Exact> = build_spec(ctx, &args.spec, 2, "1")?;
    let window = match ctx.config.resolve_opt(args.window.clone(), "window")? {
        None => RenderWindow::default_window(),
        Some(text) => {
            let v = parse_vector::<Exact>(&text, "window")?;
            let [x0, x1, y0, y1]: [Exact; 4] = v
                .try_into()
                .map_err(|_| CliError::Usage("window needs four values x0,x1,y0,y1".into()))?;
            RenderWindow::new(x0, x1, y0, y1)?
        }
    };
    let width = ctx.config.resolve(args.width, "width", 600)?;
    let rendering = render_svg(&spec, &window, width)?;
    let path = resolve_path(ctx, args.out.clone(), "out")?;
    let mut out = sink(path.as_deref())?;
    out.write_all(rendering.svg.as_bytes())?;
    out.flush()?;
    let colors: Vec<String> = rendering.colors.iter().map(|c| c.to_string()).collect();
    if path.is_some() {
        println!("render: colors {} present", colors.join(","));
    }
    Ok(())
}
