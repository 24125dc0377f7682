//! Minimal standalone SVG line charts for traces.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::diagnostics::{rate_fit, TraceRow};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlotKind {
    /// `norm_vx` and `norm_vy` against the iteration, log y.
    GradNorms,
    /// The three MVI probes against the iteration, with a zero line.
    Mvi,
    /// `avg_sq_norm` against `N`, log-log, with the fitted slope.
    Rate,
}

impl PlotKind {
    pub fn name(self) -> &'static str {
        match self {
            PlotKind::GradNorms => "grad_norms",
            PlotKind::Mvi => "mvi",
            PlotKind::Rate => "rate",
        }
    }
}

impl FromStr for PlotKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "grad_norms" => Ok(PlotKind::GradNorms),
            "mvi" => Ok(PlotKind::Mvi),
            "rate" => Ok(PlotKind::Rate),
            other => Err(Error::InvalidArgument(format!(
                "unknown plot kind `{other}`, expected grad_norms, mvi or rate"
            ))),
        }
    }
}

/// A trace with the label used in the legend.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledTrace {
    pub label: String,
    pub rows: Vec<TraceRow>,
}

struct Series {
    label: String,
    points: Vec<(f64, f64)>,
}

const W: f64 = 720.0;
const H: f64 = 440.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 190.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;
const COLORS: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

/// Renders `traces` as an SVG file at `path`.
///
/// For `Rate`, each trace contributes one point (its length `N`, final
/// `avg_sq_norm`); a single trace is instead drawn as its running curve.
pub fn emit_plot(traces: &[LabeledTrace], kind: PlotKind, path: &Path) -> Result<()> {
    let svg = render(traces, kind)?;
    fs::write(path, svg).map_err(|e| Error::io(path, e))
}

pub fn render(traces: &[LabeledTrace], kind: PlotKind) -> Result<String> {
    if traces.is_empty() || traces.iter().any(|t| t.rows.is_empty()) {
        return Err(Error::InvalidArgument("nothing to plot: empty trace list".into()));
    }
    let mut series = Vec::new();
    let mut note = None;
    let (log_x, log_y, zero_line, x_label, y_label) = match kind {
        PlotKind::GradNorms => {
            for t in traces {
                for (name, f) in [
                    ("|Vx|", (|r: &TraceRow| r.norm_vx) as fn(&TraceRow) -> f64),
                    ("|Vy|", |r: &TraceRow| r.norm_vy),
                ] {
                    series.push(Series {
                        label: join_label(&t.label, name, traces.len()),
                        points: t.rows.iter().map(|r| (r.iter as f64, f(r))).collect(),
                    });
                }
            }
            (false, true, false, "iteration", "gradient norm")
        }
        PlotKind::Mvi => {
            for t in traces {
                for (name, f) in [
                    ("total", (|r: &TraceRow| r.mvi_total) as fn(&TraceRow) -> f64),
                    ("x-sided", |r: &TraceRow| r.mvi_x),
                    ("y-sided", |r: &TraceRow| r.mvi_y),
                ] {
                    series.push(Series {
                        label: join_label(&t.label, name, traces.len()),
                        points: t.rows.iter().map(|r| (r.iter as f64, f(r))).collect(),
                    });
                }
            }
            (false, false, true, "iteration", "MVI probe")
        }
        PlotKind::Rate => {
            let points: Vec<(f64, f64)> = if traces.len() == 1 {
                traces[0]
                    .rows
                    .iter()
                    .map(|r| (r.iter as f64 + 1.0, r.avg_sq_norm))
                    .collect()
            } else {
                traces
                    .iter()
                    .map(|t| {
                        let last = t.rows.last().expect("nonempty");
                        (last.iter as f64 + 1.0, last.avg_sq_norm)
                    })
                    .collect()
            };
            note = Some(match rate_fit(&points) {
                Ok(f) => format!("slope = {:.4} (r² = {:.4})", f.slope, f.r2),
                Err(_) => "slope = n/a".to_string(),
            });
            series.push(Series {
                label: "avg |V|²".into(),
                points,
            });
            (true, true, false, "N", "avg |V|²")
        }
    };
    Ok(draw(&series, log_x, log_y, zero_line, x_label, y_label, note.as_deref(), kind.name()))
}

fn join_label(trace: &str, series: &str, n: usize) -> String {
    if n == 1 || trace.is_empty() {
        series.to_string()
    } else {
        format!("{trace} {series}")
    }
}

#[allow(clippy::too_many_arguments)]
fn draw(
    series: &[Series],
    log_x: bool,
    log_y: bool,
    zero_line: bool,
    x_label: &str,
    y_label: &str,
    note: Option<&str>,
    title: &str,
) -> String {
    let tx = |v: f64| if log_x { v.log10() } else { v };
    let ty = |v: f64| if log_y { v.log10() } else { v };
    let usable = |(x, y): &(f64, f64)| {
        let (a, b) = (tx(*x), ty(*y));
        a.is_finite() && b.is_finite()
    };
    let mut xs = (f64::INFINITY, f64::NEG_INFINITY);
    let mut ys = (f64::INFINITY, f64::NEG_INFINITY);
    for p in series.iter().flat_map(|s| s.points.iter()).filter(|p| usable(p)) {
        xs = (xs.0.min(tx(p.0)), xs.1.max(tx(p.0)));
        ys = (ys.0.min(ty(p.1)), ys.1.max(ty(p.1)));
    }
    if zero_line {
        ys = (ys.0.min(0.0), ys.1.max(0.0));
    }
    if !xs.0.is_finite() {
        xs = (0.0, 1.0);
        ys = (0.0, 1.0);
    }
    let pad = |(lo, hi): (f64, f64)| if hi > lo { (lo, hi) } else { (lo - 0.5, hi + 0.5) };
    let (xs, ys) = (pad(xs), pad(ys));
    let pw = W - LEFT - RIGHT;
    let ph = H - TOP - BOTTOM;
    let px = |v: f64| LEFT + (tx(v) - xs.0) / (xs.1 - xs.0) * pw;
    let py = |v: f64| TOP + ph - (ty(v) - ys.0) / (ys.1 - ys.0) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="22" font-size="14">{}</text>"#, LEFT, esc(title));
    let _ = writeln!(
        s,
        r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    for (i, frac) in [0.0, 0.25, 0.5, 0.75, 1.0].iter().enumerate() {
        let xv = xs.0 + frac * (xs.1 - xs.0);
        let yv = ys.0 + frac * (ys.1 - ys.0);
        let xpos = LEFT + frac * pw;
        let ypos = TOP + ph - frac * ph;
        let _ = writeln!(
            s,
            r#"<text x="{xpos:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            TOP + ph + 16.0,
            tick(xv, log_x)
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
            LEFT - 6.0,
            ypos + 4.0,
            tick(yv, log_y)
        );
        if i > 0 && i < 4 {
            let _ = writeln!(
                s,
                r##"<line x1="{LEFT}" y1="{ypos:.1}" x2="{:.1}" y2="{ypos:.1}" stroke="#ddd"/>"##,
                LEFT + pw
            );
        }
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
        LEFT + pw / 2.0,
        H - 12.0,
        esc(x_label)
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">{}</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0,
        esc(y_label)
    );
    if zero_line {
        let y0 = TOP + ph - (0.0 - ys.0) / (ys.1 - ys.0) * ph;
        let _ = writeln!(
            s,
            r#"<line class="zero" x1="{LEFT}" y1="{y0:.2}" x2="{:.1}" y2="{y0:.2}" stroke="black" stroke-dasharray="4 3"/>"#,
            LEFT + pw
        );
    }
    for (i, ser) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let pts: Vec<String> = ser
            .points
            .iter()
            .filter(|p| usable(p))
            .map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline class="series" data-label="{}" fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            esc(&ser.label),
            pts.join(" ")
        );
        let ly = TOP + 10.0 + 18.0 * i as f64;
        let lx = W - RIGHT + 14.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{}" y="{}">{}</text>"#,
            lx + 20.0,
            lx + 26.0,
            ly + 4.0,
            esc(&ser.label)
        );
    }
    if let Some(n) = note {
        let _ = writeln!(
            s,
            r#"<text class="annotation" x="{:.1}" y="{:.1}">{}</text>"#,
            LEFT + 10.0,
            TOP + 18.0,
            esc(n)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn tick(v: f64, log: bool) -> String {
    if log {
        format!("1e{v:.1}")
    } else if v != 0.0 && (v.abs() < 1e-2 || v.abs() >= 1e4) {
        format!("{v:.2e}")
    } else {
        format!("{v:.3}")
    }
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}
