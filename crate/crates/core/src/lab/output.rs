//! CSV tables and log-log SVG plots of convergence reports.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::splitting::SchemeKind;

use super::study::ConvergenceReport;

pub const CSV_HEADER: &str = "scheme,tau,error,eoc";

/// One data row of an emitted CSV table.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvRow {
    pub scheme: String,
    pub tau: f64,
    pub error: f64,
    pub eoc: Option<f64>,
}

fn num(v: f64) -> String {
    format!("{v:.15e}")
}

/// CSV text of a report. Failed cells are omitted; the order column is
/// blank on the first row of each scheme and relates each row to the
/// previous one otherwise.
pub fn csv_string(r: &ConvergenceReport) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for s in &r.series {
        let mut prev: Option<(f64, f64)> = None;
        for (tau, e) in s.samples() {
            let eoc = prev.map(|(t0, e0)| super::study::eoc(e0, e, t0, tau));
            let _ = writeln!(
                out,
                "{},{},{},{}",
                s.scheme.name(),
                num(tau),
                num(e),
                eoc.map(num).unwrap_or_default()
            );
            prev = Some((tau, e));
        }
    }
    out
}

pub fn emit_csv(r: &ConvergenceReport, path: &Path) -> Result<()> {
    fs::write(path, csv_string(r)).map_err(|e| Error::io(path, e))
}

/// Parse text produced by [`csv_string`].
pub fn parse_csv(text: &str) -> Result<Vec<CsvRow>> {
    let bad = |line: usize, msg: String| Error::InvalidArgument(format!("csv line {line}: {msg}"));
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == CSV_HEADER => {}
        _ => return Err(bad(1, format!("expected header `{CSV_HEADER}`"))),
    }
    let mut rows = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(bad(
                i + 1,
                format!("expected 4 fields, found {}", fields.len()),
            ));
        }
        let parse = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|e| bad(i + 1, format!("`{s}`: {e}")))
        };
        rows.push(CsvRow {
            scheme: fields[0].to_string(),
            tau: parse(fields[1])?,
            error: parse(fields[2])?,
            eoc: match fields[3].trim() {
                "" => None,
                s => Some(parse(s)?),
            },
        });
    }
    Ok(rows)
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 60.0;
const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

struct Axes {
    x: (f64, f64),
    y: (f64, f64),
}

impl Axes {
    fn px(&self, tau: f64) -> f64 {
        LEFT + (tau.log10() - self.x.0) / (self.x.1 - self.x.0) * (WIDTH - LEFT - RIGHT)
    }

    fn py(&self, e: f64) -> f64 {
        HEIGHT - BOTTOM - (e.log10() - self.y.0) / (self.y.1 - self.y.0) * (HEIGHT - TOP - BOTTOM)
    }
}

fn decade_range(lo: f64, hi: f64) -> (f64, f64) {
    let (a, b) = (lo.log10().floor(), hi.log10().ceil());
    if a == b {
        (a, a + 1.0)
    } else {
        (a, b)
    }
}

/// Self-contained SVG with one polyline per scheme and dash-dotted slope-1
/// and slope-2 guides through the coarsest point of the corrected scheme.
pub fn svg_string(r: &ConvergenceReport) -> Result<String> {
    let data: Vec<(SchemeKind, Vec<(f64, f64)>)> = r
        .series
        .iter()
        .map(|s| (s.scheme, s.samples()))
        .filter(|(_, v)| !v.is_empty())
        .collect();
    if data.is_empty() {
        return Err(Error::InsufficientData("nothing to plot".into()));
    }
    let anchor_series = data
        .iter()
        .find(|(k, _)| k.is_corrected())
        .unwrap_or(&data[0]);
    let anchor = anchor_series
        .1
        .iter()
        .copied()
        .fold((0.0, 0.0), |a, p| if p.0 > a.0 { p } else { a });

    let all: Vec<(f64, f64)> = data.iter().flat_map(|(_, v)| v.iter().copied()).collect();
    let tau_lo = all.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let tau_hi = all.iter().map(|p| p.0).fold(0.0, f64::max);
    let guides: Vec<(u32, [(f64, f64); 2])> = [1u32, 2]
        .into_iter()
        .map(|p| {
            let at = |t: f64| anchor.1 * (t / anchor.0).powi(p as i32);
            (p, [(tau_hi, at(tau_hi)), (tau_lo, at(tau_lo))])
        })
        .collect();
    let mut e_lo = all.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let mut e_hi = all.iter().map(|p| p.1).fold(0.0, f64::max);
    for (_, seg) in &guides {
        for &(_, e) in seg {
            e_lo = e_lo.min(e);
            e_hi = e_hi.max(e);
        }
    }
    let axes = Axes {
        x: decade_range(tau_lo, tau_hi),
        y: decade_range(e_lo, e_hi),
    };

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(
        svg,
        r#"<title>{}: error at the final time</title>"#,
        xml_escape(&r.scenario_id)
    );
    let _ = writeln!(
        svg,
        r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );
    let (x0, x1) = (LEFT, WIDTH - RIGHT);
    let (y0, y1) = (TOP, HEIGHT - BOTTOM);
    let _ = writeln!(
        svg,
        r#"<rect class="frame" x="{x0}" y="{y0}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        x1 - x0,
        y1 - y0
    );
    for k in axes.x.0 as i32..=axes.x.1 as i32 {
        let x = axes.px(10f64.powi(k));
        let _ = writeln!(
            svg,
            r##"<line class="tick" x1="{x:.2}" y1="{y1}" x2="{x:.2}" y2="{y0}" stroke="#dddddd"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">1e{k}</text>"##,
            y1 + 18.0
        );
    }
    for k in axes.y.0 as i32..=axes.y.1 as i32 {
        let y = axes.py(10f64.powi(k));
        let _ = writeln!(
            svg,
            r##"<line class="tick" x1="{x0}" y1="{y:.2}" x2="{x1}" y2="{y:.2}" stroke="#dddddd"/><text x="{:.2}" y="{:.2}" text-anchor="end">1e{k}</text>"##,
            x0 - 6.0,
            y + 4.0
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">step size tau</text>"#,
        0.5 * (x0 + x1),
        HEIGHT - 15.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="20" y="{:.2}" text-anchor="middle" transform="rotate(-90 20 {:.2})">max-norm error</text>"#,
        0.5 * (y0 + y1),
        0.5 * (y0 + y1)
    );

    for (p, seg) in &guides {
        let _ = writeln!(
            svg,
            r##"<line class="guide" data-slope="{p}" x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#555555" stroke-dasharray="8 4 2 4"/>"##,
            axes.px(seg[0].0),
            axes.py(seg[0].1),
            axes.px(seg[1].0),
            axes.py(seg[1].1)
        );
    }
    for (i, (kind, pts)) in data.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let coords: Vec<String> = pts
            .iter()
            .map(|&(t, e)| format!("{:.2},{:.2}", axes.px(t), axes.py(e)))
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline class="series" data-scheme="{}" points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
            kind.name(),
            coords.join(" ")
        );
        for &(t, e) in pts {
            let _ = writeln!(
                svg,
                r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#,
                axes.px(t),
                axes.py(e)
            );
        }
        let ly = y0 + 15.0 + 20.0 * i as f64;
        let _ = writeln!(
            svg,
            r#"<line x1="{:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="1.5"/><text x="{:.2}" y="{:.2}">{}</text>"#,
            x1 + 10.0,
            x1 + 30.0,
            x1 + 35.0,
            ly + 4.0,
            kind.name()
        );
    }
    let base = y0 + 15.0 + 20.0 * data.len() as f64;
    for (j, (p, _)) in guides.iter().enumerate() {
        let ly = base + 20.0 * j as f64;
        let _ = writeln!(
            svg,
            r##"<line x1="{:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="#555555" stroke-dasharray="8 4 2 4"/><text x="{:.2}" y="{:.2}">slope {p}</text>"##,
            x1 + 10.0,
            x1 + 30.0,
            x1 + 35.0,
            ly + 4.0
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

pub fn emit_plot(r: &ConvergenceReport, path: &Path) -> Result<()> {
    let svg = svg_string(r)?;
    fs::write(path, svg).map_err(|e| Error::io(path, e))
}
