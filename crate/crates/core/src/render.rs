//! SVG drawing of the planar three-coloring: lattice-point squares, edge
//! bands and the interior cells.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::partition::{level_of, PartitionSpec};
use crate::scalar::{Exact, Scalar};

/// Fill per color, indexed by `color − 1`.
pub const FILLS: [&str; 3] = ["#d7301f", "#fdae61", "#4575b4"];

/// Upper bound on lattice points touched by one window.
pub const MAX_LATTICE_POINTS: i64 = 250_000;

#[derive(Clone, Debug, PartialEq)]
pub struct RenderWindow {
    pub x0: Exact,
    pub x1: Exact,
    pub y0: Exact,
    pub y1: Exact,
}

impl RenderWindow {
    pub fn new(x0: Exact, x1: Exact, y0: Exact, y1: Exact) -> Result<Self> {
        if !(x0 < x1 && y0 < y1) {
            return Err(Error::Contract("render window must have positive area".into()));
        }
        Ok(Self { x0, x1, y0, y1 })
    }

    /// `[−1/2, 5/2]²`.
    pub fn default_window() -> Self {
        let lo = <Exact as Scalar>::ratio(-1, 2);
        let hi = <Exact as Scalar>::ratio(5, 2);
        Self {
            x0: lo.clone(),
            x1: hi.clone(),
            y0: lo,
            y1: hi,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Rendering {
    pub svg: String,
    /// Colors with a region of positive area in the window, ascending.
    pub colors: Vec<usize>,
}

struct Rect {
    x0: Exact,
    x1: Exact,
    y0: Exact,
    y1: Exact,
}

fn clip(lo: Exact, hi: Exact, wlo: &Exact, whi: &Exact) -> Option<(Exact, Exact)> {
    let lo = if lo < *wlo { wlo.clone() } else { lo };
    let hi = if hi > *whi { whi.clone() } else { hi };
    (lo < hi).then_some((lo, hi))
}

fn lattice_range(lo: &Exact, hi: &Exact, eps: &Exact) -> Result<(i64, i64)> {
    let a = (lo.clone() / eps.clone())
        .floor_i64()
        .ok_or_else(|| Error::Unsupported("render window out of range".into()))?;
    let b = (hi.clone() / eps.clone())
        .floor_i64()
        .ok_or_else(|| Error::Unsupported("render window out of range".into()))?;
    Ok((a - 1, b + 2))
}

/// Colors present in the window, found by testing one interior point of
/// every cell of the grid spanned by all region boundaries.
fn present_colors(
    window: &RenderWindow,
    spec: &PartitionSpec<Exact>,
    xs: (i64, i64),
    ys: (i64, i64),
) -> Result<Vec<usize>> {
    let eps = spec.eps();
    let widths = [&spec.delta()[0], &spec.delta()[1]];
    let breaks = |lo: &Exact, hi: &Exact, (a0, a1): (i64, i64)| {
        let mut out = vec![lo.clone(), hi.clone()];
        for a in a0..=a1 {
            for w in widths {
                for v in [
                    (<Exact as Scalar>::from_i64(a) - w.clone()) * eps.clone(),
                    (<Exact as Scalar>::from_i64(a) + w.clone()) * eps.clone(),
                ] {
                    if v > *lo && v < *hi {
                        out.push(v);
                    }
                }
            }
        }
        out.sort();
        out.dedup();
        out.windows(2)
            .map(|w| (w[0].clone() + w[1].clone()) / <Exact as Scalar>::from_i64(2))
            .collect::<Vec<_>>()
    };
    let mx = breaks(&window.x0, &window.x1, xs);
    let my = breaks(&window.y0, &window.y1, ys);
    let mut seen = [false; 3];
    for x in &mx {
        for y in &my {
            let p = spec.unscale(&[x.clone(), y.clone()])?;
            seen[level_of(&p, spec)?] = true;
        }
    }
    Ok((1..=3).filter(|c| seen[c - 1]).collect())
}

/// Draws the coloring of `spec` (which must have `m = 2`) on `window`.
pub fn render_svg(spec: &PartitionSpec<Exact>, window: &RenderWindow, width_px: u32) -> Result<Rendering> {
    if spec.m() != 2 {
        return Err(Error::Unsupported(format!(
            "rendering needs m = 2, got m = {}",
            spec.m()
        )));
    }
    if width_px == 0 {
        return Err(Error::Contract("image width must be positive".into()));
    }
    let eps = spec.eps().clone();
    let xs = lattice_range(&window.x0, &window.x1, &eps)?;
    let ys = lattice_range(&window.y0, &window.y1, &eps)?;
    if (xs.1 - xs.0 + 1).saturating_mul(ys.1 - ys.0 + 1) > MAX_LATTICE_POINTS {
        return Err(Error::Unsupported("render window holds too many lattice points".into()));
    }
    let colors = present_colors(window, spec, xs, ys)?;
    let int = <Exact as Scalar>::from_i64;
    let d0 = spec.delta()[0].clone() * eps.clone();
    let d1 = spec.delta()[1].clone() * eps.clone();

    let mut layers: Vec<(usize, Vec<Rect>)> = Vec::new();
    if colors.contains(&3) {
        layers.push((
            3,
            vec![Rect {
                x0: window.x0.clone(),
                x1: window.x1.clone(),
                y0: window.y0.clone(),
                y1: window.y1.clone(),
            }],
        ));
    }
    if colors.contains(&2) {
        let mut bands = Vec::new();
        for a in xs.0..=xs.1 {
            let centre = int(a) * eps.clone();
            if let Some((x0, x1)) = clip(centre.clone() - d1.clone(), centre + d1.clone(), &window.x0, &window.x1) {
                bands.push(Rect {
                    x0,
                    x1,
                    y0: window.y0.clone(),
                    y1: window.y1.clone(),
                });
            }
        }
        for b in ys.0..=ys.1 {
            let centre = int(b) * eps.clone();
            if let Some((y0, y1)) = clip(centre.clone() - d1.clone(), centre + d1.clone(), &window.y0, &window.y1) {
                bands.push(Rect {
                    x0: window.x0.clone(),
                    x1: window.x1.clone(),
                    y0,
                    y1,
                });
            }
        }
        layers.push((2, bands));
    }
    if colors.contains(&1) {
        let mut squares = Vec::new();
        for a in xs.0..=xs.1 {
            let cx = int(a) * eps.clone();
            let Some((x0, x1)) = clip(cx.clone() - d0.clone(), cx + d0.clone(), &window.x0, &window.x1) else {
                continue;
            };
            for b in ys.0..=ys.1 {
                let cy = int(b) * eps.clone();
                if let Some((y0, y1)) = clip(cy.clone() - d0.clone(), cy + d0.clone(), &window.y0, &window.y1) {
                    squares.push(Rect {
                        x0: x0.clone(),
                        x1: x1.clone(),
                        y0,
                        y1,
                    });
                }
            }
        }
        layers.push((1, squares));
    }

    let span_x = window.x1.clone() - window.x0.clone();
    let span_y = window.y1.clone() - window.y0.clone();
    let scale = int(width_px as i64) / span_x;
    let height = (span_y * scale.clone()).to_f64();
    let px = |v: &Exact| ((v.clone() - window.x0.clone()) * scale.clone()).to_f64();
    let py = |v: &Exact| ((window.y1.clone() - v.clone()) * scale.clone()).to_f64();

    let mut svg = String::new();
    svg.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{width_px}\" height=\"{height:.3}\" viewBox=\"0 0 {width_px} {height:.3}\">"
    );
    let _ = writeln!(
        svg,
        "<title>Three-coloring of the plane on [{}, {}] x [{}, {}]</title>",
        window.x0, window.x1, window.y0, window.y1
    );
    for (color, rects) in &layers {
        let _ = writeln!(
            svg,
            "<g id=\"color-{color}\" fill=\"{}\" stroke=\"none\">",
            FILLS[color - 1]
        );
        for r in rects {
            let _ = writeln!(
                svg,
                "<rect x=\"{:.3}\" y=\"{:.3}\" width=\"{:.3}\" height=\"{:.3}\"/>",
                px(&r.x0),
                py(&r.y1),
                px(&r.x1) - px(&r.x0),
                py(&r.y0) - py(&r.y1)
            );
        }
        svg.push_str("</g>\n");
    }
    svg.push_str("</svg>\n");
    Ok(Rendering { svg, colors })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> Exact {
        <Exact as Scalar>::ratio(n, d)
    }

    fn fills_in(svg: &str) -> Vec<&str> {
        let mut out: Vec<&str> = FILLS.iter().copied().filter(|f| svg.contains(f)).collect();
        out.sort();
        out
    }

    #[test]
    fn default_window_shows_three_colors() {
        let spec = PartitionSpec::new(2, q(1, 1)).unwrap();
        let r = render_svg(&spec, &RenderWindow::default_window(), 600).unwrap();
        assert_eq!(r.colors, vec![1, 2, 3]);
        assert_eq!(fills_in(&r.svg).len(), 3);
        assert!(r.svg.starts_with("<?xml"));
        assert_eq!(r.svg.matches("<rect").count(), 1 + 6 + 9);
    }

    #[test]
    fn rendering_is_deterministic() {
        let spec = PartitionSpec::new(2, q(1, 1)).unwrap();
        let a = render_svg(&spec, &RenderWindow::default_window(), 600).unwrap();
        let b = render_svg(&spec, &RenderWindow::default_window(), 600).unwrap();
        assert_eq!(a.svg.as_bytes(), b.svg.as_bytes());
    }

    #[test]
    fn window_without_lattice_points() {
        let spec = PartitionSpec::new(2, q(1, 1)).unwrap();
        let w = RenderWindow::new(q(2, 5), q(3, 5), q(1, 10), q(9, 10)).unwrap();
        let r = render_svg(&spec, &w, 200).unwrap();
        assert_eq!(r.colors, vec![2, 3]);
        assert!(!r.svg.contains(FILLS[0]));
        let inner = RenderWindow::new(q(2, 5), q(3, 5), q(2, 5), q(3, 5)).unwrap();
        assert_eq!(render_svg(&spec, &inner, 200).unwrap().colors, vec![3]);
    }

    #[test]
    fn other_dimensions_are_unsupported() {
        let spec = PartitionSpec::new(3, q(1, 1)).unwrap();
        let err = render_svg(&spec, &RenderWindow::default_window(), 100).unwrap_err();
        assert!(matches!(err, Error::Unsupported(_)));
    }
}
