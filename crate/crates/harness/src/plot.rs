//! Minimal deterministic SVG line plots.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use oee_core::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColorRole {
    Ours,
    Truth,
    Simulator,
    Is,
    Mle,
    Oracle,
    Other(usize),
}

impl ColorRole {
    fn color(&self) -> &'static str {
        const PALETTE: [&str; 6] = ["#1f77b4", "#ff7f0e", "#8c564b", "#e377c2", "#7f7f7f", "#17becf"];
        match self {
            ColorRole::Ours => "#2ca02c",
            ColorRole::Truth => "#000000",
            ColorRole::Simulator => "#d62728",
            ColorRole::Is => "#1f77b4",
            ColorRole::Mle => "#ff7f0e",
            ColorRole::Oracle => "#9467bd",
            ColorRole::Other(i) => PALETTE[i % PALETTE.len()],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub role: ColorRole,
    pub points: Vec<(f64, f64)>,
    /// Optional `(low, high)` per point, drawn as a shaded band.
    pub band: Option<Vec<(f64, f64)>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FigureSpec {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
    pub path: PathBuf,
}

const W: f64 = 640.0;
const H: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 55.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn tick_label(v: f64) -> String {
    let r = (v * 1e4).round() / 1e4;
    let r = if r == 0.0 { 0.0 } else { r };
    format!("{r}")
}

fn padded(lo: f64, hi: f64) -> (f64, f64) {
    if hi - lo < 1e-12 {
        (lo - 1.0, hi + 1.0)
    } else {
        let pad = 0.05 * (hi - lo);
        (lo - pad, hi + pad)
    }
}

/// Renders the figure as a standalone SVG document.
pub fn render_svg(fig: &FigureSpec) -> Result<String> {
    if fig.series.is_empty() {
        return Err(Error::Argument("figure has no series".into()));
    }
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for s in &fig.series {
        if s.points.is_empty() {
            return Err(Error::Argument(format!("series {:?} has no points", s.name)));
        }
        if let Some(b) = &s.band {
            if b.len() != s.points.len() {
                return Err(Error::Argument(format!(
                    "band of series {:?} has the wrong length",
                    s.name
                )));
            }
        }
        let band = s.band.iter().flatten().flat_map(|(lo, hi)| [*lo, *hi]);
        for (x, y) in &s.points {
            if !x.is_finite() || !y.is_finite() {
                return Err(Error::Argument(format!("series {:?} has a non-finite point", s.name)));
            }
            x0 = x0.min(*x);
            x1 = x1.max(*x);
            y0 = y0.min(*y);
            y1 = y1.max(*y);
        }
        for v in band {
            if !v.is_finite() {
                return Err(Error::Argument(format!("series {:?} has a non-finite band", s.name)));
            }
            y0 = y0.min(v);
            y1 = y1.max(v);
        }
    }
    let (x0, x1) = padded(x0, x1);
    let (y0, y1) = padded(y0, y1);
    let px = |x: f64| LEFT + (x - x0) / (x1 - x0) * (W - LEFT - RIGHT);
    let py = |y: f64| H - BOTTOM - (y - y0) / (y1 - y0) * (H - TOP - BOTTOM);

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
        W / 2.0,
        escape(&fig.title)
    );
    // Axes and ticks.
    let (ax0, ax1, ay0, ay1) = (LEFT, W - RIGHT, H - BOTTOM, TOP);
    let _ = writeln!(
        out,
        r#"<path d="M{ax0},{ay1} L{ax0},{ay0} L{ax1},{ay0}" stroke="black" fill="none"/>"#
    );
    for i in 0..=4 {
        let f = i as f64 / 4.0;
        let xv = x0 + f * (x1 - x0);
        let yv = y0 + f * (y1 - y0);
        let (tx, ty) = (px(xv), py(yv));
        let _ = writeln!(
            out,
            r#"<line x1="{tx:.2}" y1="{ay0}" x2="{tx:.2}" y2="{:.2}" stroke="black"/><text x="{tx:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            ay0 + 5.0,
            ay0 + 18.0,
            tick_label(xv)
        );
        let _ = writeln!(
            out,
            r#"<line x1="{:.2}" y1="{ty:.2}" x2="{ax0}" y2="{ty:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            ax0 - 5.0,
            ax0 - 8.0,
            ty + 4.0,
            tick_label(yv)
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        (ax0 + ax1) / 2.0,
        H - 12.0,
        escape(&fig.x_label)
    );
    let _ = writeln!(
        out,
        r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">{}</text>"#,
        (ay0 + ay1) / 2.0,
        (ay0 + ay1) / 2.0,
        escape(&fig.y_label)
    );
    for s in &fig.series {
        let color = s.role.color();
        if let Some(band) = &s.band {
            let mut d = String::new();
            for ((x, _), (_, hi)) in s.points.iter().zip(band) {
                let _ = write!(d, "{:.2},{:.2} ", px(*x), py(*hi));
            }
            for ((x, _), (lo, _)) in s.points.iter().zip(band).rev() {
                let _ = write!(d, "{:.2},{:.2} ", px(*x), py(*lo));
            }
            let _ = writeln!(
                out,
                r#"<polygon points="{}" fill="{color}" fill-opacity="0.2" stroke="none"/>"#,
                d.trim_end()
            );
        }
        let pts: Vec<String> = s
            .points
            .iter()
            .map(|(x, y)| format!("{:.2},{:.2}", px(*x), py(*y)))
            .collect();
        let _ = writeln!(
            out,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
            pts.join(" ")
        );
    }
    for (i, s) in fig.series.iter().enumerate() {
        let y = TOP + 8.0 + 16.0 * i as f64;
        let x = W - RIGHT - 150.0;
        let _ = writeln!(
            out,
            r#"<line x1="{x}" y1="{y}" x2="{}" y2="{y}" stroke="{}" stroke-width="2"/><text x="{}" y="{}">{}</text>"#,
            x + 20.0,
            s.role.color(),
            x + 26.0,
            y + 4.0,
            escape(&s.name)
        );
    }
    out.push_str("</svg>\n");
    Ok(out)
}

/// Renders the figure and writes it to `fig.path`.
pub fn emit_svg_lineplot(fig: &FigureSpec) -> Result<()> {
    let svg = render_svg(fig)?;
    write_file(&fig.path, &svg)
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)?;
        }
    }
    std::fs::write(path, contents)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig(series: Vec<Series>) -> FigureSpec {
        FigureSpec {
            title: "t".into(),
            x_label: "x".into(),
            y_label: "y".into(),
            series,
            path: PathBuf::from("unused.svg"),
        }
    }

    fn line() -> Series {
        Series {
            name: "y=x".into(),
            role: ColorRole::Ours,
            points: vec![(0.0, 0.0), (1.0, 1.0), (2.0, 2.0)],
            band: None,
        }
    }

    #[test]
    fn single_series_gives_one_polyline_with_three_points() {
        let svg = render_svg(&fig(vec![line()])).unwrap();
        assert_eq!(svg.matches("<polyline").count(), 1);
        let start = svg.find("<polyline points=\"").unwrap() + "<polyline points=\"".len();
        let pts = &svg[start..start + svg[start..].find('"').unwrap()];
        assert_eq!(pts.split(' ').count(), 3);
    }

    #[test]
    fn empty_figures_are_rejected() {
        assert!(render_svg(&fig(vec![])).is_err());
        let mut s = line();
        s.points.clear();
        assert!(render_svg(&fig(vec![s])).is_err());
        let mut s = line();
        s.points[1].1 = f64::NAN;
        assert!(render_svg(&fig(vec![s])).is_err());
    }

    #[test]
    fn rendering_is_deterministic() {
        let mut s = line();
        s.band = Some(vec![(-0.1, 0.1), (0.9, 1.1), (1.8, 2.2)]);
        let f = fig(vec![s, line()]);
        assert_eq!(render_svg(&f).unwrap(), render_svg(&f).unwrap());
        assert!(render_svg(&f).unwrap().contains("<polygon"));
    }
}
