//! Static SVG figures from a finished run directory.
//!
//! Inputs (all in the run directory): `metrics.csv`, `source.csv`,
//! `target.csv`, `pushforward.csv`. Outputs: `fig1_scatter.svg`,
//! `fig1_arrows.svg`, `fig3_mse.svg`, each with a CSV of the plotted data.
//! Output bytes depend only on the input bytes.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::datasets::load_csv;
use crate::error::{Error, Result};
use crate::ot::EmpiricalMeasure;
use crate::training::{parse_metrics_csv, MetricRow};

pub const INPUT_FILES: [&str; 4] = ["metrics.csv", "source.csv", "target.csv", "pushforward.csv"];
pub const FIGURE_NAMES: [&str; 3] = ["fig1_scatter", "fig1_arrows", "fig3_mse"];

/// Arrows drawn in `fig1_arrows`.
pub const MAX_ARROWS: usize = 150;

const WIDTH: f64 = 480.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 48.0;

#[derive(Debug, Clone, Copy)]
struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn fit(xs: impl Iterator<Item = f64>, ys: impl Iterator<Item = f64>) -> Frame {
        let (x0, x1) = bounds(xs);
        let (y0, y1) = bounds(ys);
        Frame { x0, x1, y0, y1 }
    }

    fn px(&self, x: f64) -> f64 {
        MARGIN + (x - self.x0) / (self.x1 - self.x0) * (WIDTH - 2.0 * MARGIN)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - MARGIN - (y - self.y0) / (self.y1 - self.y0) * (HEIGHT - 2.0 * MARGIN)
    }
}

fn bounds(v: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = v.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    let pad = ((hi - lo) * 0.05).max(1e-9);
    (lo - pad, hi + pad)
}

fn svg_open(out: &mut String, title: &str) {
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    )
    .unwrap();
    writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#).unwrap();
    writeln!(
        out,
        r#"<text x="{:.1}" y="24" font-family="sans-serif" font-size="14" text-anchor="middle">{title}</text>"#,
        WIDTH / 2.0
    )
    .unwrap();
}

fn axes(out: &mut String, f: &Frame, xlabel: &str, ylabel: &str) {
    let (l, r, t, b) = (MARGIN, WIDTH - MARGIN, MARGIN, HEIGHT - MARGIN);
    writeln!(
        out,
        r#"<path d="M{l:.1},{t:.1} L{l:.1},{b:.1} L{r:.1},{b:.1}" fill="none" stroke="black"/>"#
    )
    .unwrap();
    for (v, x) in [(f.x0, l), (f.x1, r)] {
        writeln!(
            out,
            r#"<text x="{x:.1}" y="{:.1}" font-family="sans-serif" font-size="10" text-anchor="middle">{v:.3}</text>"#,
            b + 14.0
        )
        .unwrap();
    }
    for (v, y) in [(f.y0, b), (f.y1, t)] {
        writeln!(
            out,
            r#"<text x="{:.1}" y="{y:.1}" font-family="sans-serif" font-size="10" text-anchor="end">{v:.3}</text>"#,
            l - 4.0
        )
        .unwrap();
    }
    writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="12" text-anchor="middle">{xlabel}</text>"#,
        WIDTH / 2.0,
        HEIGHT - 10.0
    )
    .unwrap();
    writeln!(
        out,
        r#"<text x="14" y="{:.1}" font-family="sans-serif" font-size="12" text-anchor="middle" transform="rotate(-90 14 {:.1})">{ylabel}</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0
    )
    .unwrap();
}

fn legend(out: &mut String, entries: &[(&str, &str)]) {
    for (k, (label, color)) in entries.iter().enumerate() {
        let y = MARGIN + 8.0 + 16.0 * k as f64;
        let x = WIDTH - MARGIN - 110.0;
        writeln!(out, r#"<circle cx="{x:.1}" cy="{y:.1}" r="4" fill="{color}"/>"#).unwrap();
        writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="11">{label}</text>"#,
            x + 8.0,
            y + 4.0
        )
        .unwrap();
    }
}

fn planar(cloud: &EmpiricalMeasure, name: &str) -> Result<()> {
    if cloud.dim() < 2 {
        return Err(Error::Dimension(format!(
            "{name}: figures need points with at least 2 coordinates"
        )));
    }
    Ok(())
}

/// Scatter of `G♯P` over `Q` (first two coordinates).
pub fn scatter_svg(pushforward: &EmpiricalMeasure, target: &EmpiricalMeasure) -> Result<(String, String)> {
    planar(pushforward, "pushforward")?;
    planar(target, "target")?;
    let all = || pushforward.iter().chain(target.iter());
    let f = Frame::fit(all().map(|p| p[0]), all().map(|p| p[1]));
    let mut svg = String::new();
    let mut csv = String::from("series,x,y\n");
    svg_open(&mut svg, "G#P versus Q");
    axes(&mut svg, &f, "x1", "x2");
    for (name, cloud, color) in [("target", target, "#1f77b4"), ("pushforward", pushforward, "#d62728")] {
        writeln!(svg, r#"<g fill="{color}" fill-opacity="0.5">"#).unwrap();
        for p in cloud.iter() {
            writeln!(
                svg,
                r#"<circle cx="{:.2}" cy="{:.2}" r="1.6"/>"#,
                f.px(p[0]),
                f.py(p[1])
            )
            .unwrap();
            writeln!(csv, "{name},{:e},{:e}", p[0], p[1]).unwrap();
        }
        svg.push_str("</g>\n");
    }
    legend(&mut svg, &[("Q", "#1f77b4"), ("G#P", "#d62728")]);
    svg.push_str("</svg>\n");
    Ok((svg, csv))
}

/// Arrows `x_i → G(x_i)` for the first [`MAX_ARROWS`] source points, over `Q`.
pub fn arrows_svg(
    source: &EmpiricalMeasure,
    pushforward: &EmpiricalMeasure,
    target: &EmpiricalMeasure,
) -> Result<(String, String)> {
    planar(source, "source")?;
    planar(target, "target")?;
    if source.len() != pushforward.len() || source.dim() != pushforward.dim() {
        return Err(Error::Dimension(
            "source and pushforward must pair up row by row".into(),
        ));
    }
    let k = source.len().min(MAX_ARROWS);
    let all = || source.iter().chain(pushforward.iter()).chain(target.iter());
    let f = Frame::fit(all().map(|p| p[0]), all().map(|p| p[1]));
    let mut svg = String::new();
    let mut csv = String::from("x1,x2,g1,g2\n");
    svg_open(&mut svg, "Transport of source points");
    axes(&mut svg, &f, "x1", "x2");
    svg.push_str(
        r#"<defs><marker id="head" markerWidth="6" markerHeight="6" refX="5" refY="3" orient="auto"><path d="M0,0 L6,3 L0,6 z" fill="black"/></marker></defs>"#,
    );
    svg.push('\n');
    for (cloud, color) in [(target, "#1f77b4"), (source, "#2ca02c")] {
        writeln!(svg, r#"<g fill="{color}" fill-opacity="0.35">"#).unwrap();
        for p in cloud.iter() {
            writeln!(
                svg,
                r#"<circle cx="{:.2}" cy="{:.2}" r="1.4"/>"#,
                f.px(p[0]),
                f.py(p[1])
            )
            .unwrap();
        }
        svg.push_str("</g>\n");
    }
    svg.push_str("<g stroke=\"black\" stroke-width=\"0.8\">\n");
    for i in 0..k {
        let (x, g) = (source.point(i), pushforward.point(i));
        writeln!(
            svg,
            r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" marker-end="url(#head)"/>"#,
            f.px(x[0]),
            f.py(x[1]),
            f.px(g[0]),
            f.py(g[1])
        )
        .unwrap();
        writeln!(csv, "{:e},{:e},{:e},{:e}", x[0], x[1], g[0], g[1]).unwrap();
    }
    svg.push_str("</g>\n");
    legend(&mut svg, &[("P", "#2ca02c"), ("Q", "#1f77b4")]);
    svg.push_str("</svg>\n");
    Ok((svg, csv))
}

/// Held-out MSE against the logged step, or the quadratic cost when the run
/// had no ground-truth map.
pub fn mse_svg(log: &[MetricRow]) -> Result<(String, String)> {
    if log.is_empty() {
        return Err(Error::Data("metric log has no rows".into()));
    }
    let has_mse = log.iter().all(|r| r.holdout_mse.is_some());
    let (label, pts): (&str, Vec<(f64, f64)>) = if has_mse {
        (
            "holdout_mse",
            log.iter().map(|r| (r.step as f64, r.holdout_mse.unwrap())).collect(),
        )
    } else {
        ("quad_cost", log.iter().map(|r| (r.step as f64, r.quad_cost)).collect())
    };
    let f = Frame::fit(pts.iter().map(|p| p.0), pts.iter().map(|p| p.1));
    let mut svg = String::new();
    let mut csv = format!("step,{label}\n");
    svg_open(&mut svg, if has_mse { "Held-out MSE" } else { "Quadratic cost" });
    axes(&mut svg, &f, "generator step", label);
    let mut d = String::new();
    for (k, (s, v)) in pts.iter().enumerate() {
        write!(d, "{}{:.2},{:.2} ", if k == 0 { "M" } else { "L" }, f.px(*s), f.py(*v)).unwrap();
        writeln!(csv, "{},{v:e}", *s as usize).unwrap();
    }
    writeln!(
        svg,
        r##"<path d="{}" fill="none" stroke="#d62728" stroke-width="1.5"/>"##,
        d.trim_end()
    )
    .unwrap();
    svg.push_str("</svg>\n");
    Ok((svg, csv))
}

fn write(path: PathBuf, text: &str) -> Result<PathBuf> {
    std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

/// Reads the run directory and writes every figure and its CSV into `out_dir`.
/// Returns the written paths.
pub fn emit_figures(run_dir: impl AsRef<Path>, out_dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let run_dir = run_dir.as_ref();
    let out_dir = out_dir.as_ref();
    let missing: Vec<PathBuf> = INPUT_FILES
        .iter()
        .map(|f| run_dir.join(f))
        .filter(|p| !p.is_file())
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingInputs(missing));
    }
    let metrics_path = run_dir.join("metrics.csv");
    let metrics_text = std::fs::read_to_string(&metrics_path).map_err(|e| Error::io(&metrics_path, e))?;
    let log = parse_metrics_csv(&metrics_text)?;
    if log.is_empty() {
        return Err(Error::MissingInputs(vec![metrics_path]));
    }
    let source = load_csv(run_dir.join("source.csv"))?;
    let target = load_csv(run_dir.join("target.csv"))?;
    let pushforward = load_csv(run_dir.join("pushforward.csv"))?;

    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut written = Vec::new();
    let figures = [
        scatter_svg(&pushforward, &target)?,
        arrows_svg(&source, &pushforward, &target)?,
        mse_svg(&log)?,
    ];
    for (name, (svg, csv)) in FIGURE_NAMES.iter().zip(figures) {
        written.push(write(out_dir.join(format!("{name}.svg")), &svg)?);
        written.push(write(out_dir.join(format!("{name}.csv")), &csv)?);
    }
    Ok(written)
}
