//! Static SVG line charts and CSV merging for the `report` command.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use clap::ValueEnum;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlotKind {
    /// Polylines through the data points.
    Line,
    /// Polylines with a marker at every point.
    Markers,
}

/// A CSV table whose first column is the x axis.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub stem: String,
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn load(path: &Path) -> Result<Self> {
        let ctx = path.display().to_string();
        let mut rdr = csv::Reader::from_path(path).map_err(|source| Error::Csv { context: ctx.clone(), source })?;
        let headers: Vec<String> =
            rdr.headers().map_err(|source| Error::Csv { context: ctx.clone(), source })?.iter().map(str::to_string).collect();
        let mut rows = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|source| Error::Csv { context: ctx.clone(), source })?;
            rows.push(rec.iter().map(str::to_string).collect());
        }
        if headers.len() < 2 || rows.is_empty() {
            return Err(Error::invalid(format!("{ctx}: needs a header with at least two columns and one data row")));
        }
        let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "table".into());
        Ok(Table { stem, headers, rows })
    }

    /// Values of column `j`, or `None` if any cell fails to parse.
    fn numeric(&self, j: usize) -> Option<Vec<f64>> {
        self.rows.iter().map(|r| r.get(j).and_then(|s| s.trim().parse().ok())).collect()
    }
}

/// One chart: a set of named series, optionally with a shaded band.
struct Chart {
    name: String,
    series: Vec<(String, Vec<f64>)>,
    band: Option<(Vec<f64>, Vec<f64>)>,
}

fn split_suffix(col: &str) -> (&str, &str) {
    match col.rsplit_once('_') {
        Some((stem, suffix)) => (stem, suffix),
        None => (col, ""),
    }
}

fn charts(t: &Table) -> Vec<Chart> {
    let numeric: Vec<Option<Vec<f64>>> = (0..t.headers.len()).map(|j| t.numeric(j)).collect();
    let mut grouped: BTreeMap<String, usize> = BTreeMap::new();
    let mut out: Vec<Chart> = Vec::new();
    for (j, col) in t.headers.iter().enumerate().skip(1) {
        if numeric[j].is_none() {
            continue;
        }
        let (stem, suffix) = split_suffix(col);
        if matches!(suffix, "mean" | "lo" | "hi" | "theory") {
            let idx = *grouped.entry(stem.to_string()).or_insert_with(|| {
                out.push(Chart { name: stem.to_string(), series: Vec::new(), band: None });
                out.len() - 1
            });
            let get = |s: &str| t.headers.iter().position(|h| h == &format!("{stem}_{s}")).and_then(|k| numeric[k].clone());
            match suffix {
                "lo" => {
                    if let (Some(lo), Some(hi)) = (get("lo"), get("hi")) {
                        out[idx].band = Some((lo, hi));
                    }
                }
                "hi" => {}
                _ => out[idx].series.push((col.clone(), numeric[j].clone().unwrap())),
            }
        } else {
            out.push(Chart { name: col.clone(), series: vec![(col.clone(), numeric[j].clone().unwrap())], band: None });
        }
    }
    out.retain(|c| !c.series.is_empty() || c.band.is_some());
    out
}

const W: f64 = 640.0;
const H: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 50.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in values.filter(|v| v.is_finite()) {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 * (1.0 + hi.abs()) {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

fn svg_chart(x_label: &str, xs: &[f64], chart: &Chart, kind: PlotKind) -> String {
    let (x0, x1) = range(xs.iter().copied());
    let band_vals = chart.band.iter().flat_map(|(lo, hi)| lo.iter().chain(hi.iter()).copied());
    let (y0, y1) = range(chart.series.iter().flat_map(|(_, v)| v.iter().copied()).chain(band_vals));
    let px = |x: f64| LEFT + (x - x0) / (x1 - x0) * (W - LEFT - RIGHT);
    let py = |y: f64| H - BOTTOM - (y - y0) / (y1 - y0) * (H - TOP - BOTTOM);

    let mut s = String::new();
    writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#).unwrap();
    writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#).unwrap();
    writeln!(s, r##"<rect x="{LEFT}" y="{TOP}" width="{}" height="{}" fill="none" stroke="#444"/>"##, W - LEFT - RIGHT, H - TOP - BOTTOM)
        .unwrap();
    for i in 0..=4 {
        let f = i as f64 / 4.0;
        let (xv, yv) = (x0 + f * (x1 - x0), y0 + f * (y1 - y0));
        writeln!(s, r#"<text x="{:.1}" y="{:.1}" font-size="11" text-anchor="middle">{}</text>"#, px(xv), H - BOTTOM + 16.0, tick(xv))
            .unwrap();
        writeln!(s, r#"<text x="{:.1}" y="{:.1}" font-size="11" text-anchor="end">{}</text>"#, LEFT - 6.0, py(yv) + 4.0, tick(yv)).unwrap();
    }
    writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" font-size="13" text-anchor="middle">{}</text>"#,
        (LEFT + W - RIGHT) / 2.0,
        H - 12.0,
        escape(x_label)
    )
    .unwrap();
    writeln!(
        s,
        r#"<text x="16" y="{:.1}" font-size="13" text-anchor="middle" transform="rotate(-90 16 {:.1})">{}</text>"#,
        (TOP + H - BOTTOM) / 2.0,
        (TOP + H - BOTTOM) / 2.0,
        escape(&chart.name)
    )
    .unwrap();

    if let Some((lo, hi)) = &chart.band {
        let mut pts = String::new();
        for (x, y) in xs.iter().zip(hi) {
            write!(pts, "{:.2},{:.2} ", px(*x), py(*y)).unwrap();
        }
        for (x, y) in xs.iter().zip(lo).rev() {
            write!(pts, "{:.2},{:.2} ", px(*x), py(*y)).unwrap();
        }
        writeln!(s, r##"<polygon points="{}" fill="#1f77b4" fill-opacity="0.2" stroke="none"/>"##, pts.trim_end()).unwrap();
    }
    for (k, (label, ys)) in chart.series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let pts: Vec<String> =
            xs.iter().zip(ys).filter(|(_, y)| y.is_finite()).map(|(x, y)| format!("{:.2},{:.2}", px(*x), py(*y))).collect();
        writeln!(s, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.8"/>"#, pts.join(" ")).unwrap();
        if kind == PlotKind::Markers {
            for p in &pts {
                let (cx, cy) = p.split_once(',').unwrap();
                writeln!(s, r#"<circle cx="{cx}" cy="{cy}" r="2.5" fill="{color}"/>"#).unwrap();
            }
        }
        writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" font-size="11" fill="{color}">{}</text>"#,
            LEFT + 8.0,
            TOP + 14.0 + 14.0 * k as f64,
            escape(label)
        )
        .unwrap();
    }
    s.push_str("</svg>\n");
    s
}

fn tick(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let a = v.abs();
    if !(1e-3..1e5).contains(&a) {
        format!("{v:.2e}")
    } else {
        let s = format!("{v:.4}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// One `(metric name, svg)` pair per plottable metric of `t`. Tables with a
/// non-numeric first column produce nothing.
pub fn render(t: &Table, kind: PlotKind) -> Vec<(String, String)> {
    let Some(xs) = t.numeric(0) else {
        return Vec::new();
    };
    charts(t)
        .into_iter()
        .map(|c| {
            let svg = svg_chart(&t.headers[0], &xs, &c, kind);
            (c.name.replace(|ch: char| !ch.is_ascii_alphanumeric() && ch != '_', "_"), svg)
        })
        .collect()
}

/// Outer join on the first column. Output columns are `x` then
/// `<stem>.<column>`; rows are sorted by numeric x where possible.
pub fn merge(tables: &[Table]) -> String {
    let mut names: Vec<String> = Vec::new();
    let mut seen: BTreeMap<String, usize> = BTreeMap::new();
    for t in tables {
        let n = seen.entry(t.stem.clone()).or_insert(0);
        *n += 1;
        names.push(if *n == 1 { t.stem.clone() } else { format!("{}{}", t.stem, n) });
    }
    let mut keys: Vec<String> = Vec::new();
    for t in tables {
        for r in &t.rows {
            if !keys.contains(&r[0]) {
                keys.push(r[0].clone());
            }
        }
    }
    keys.sort_by(|a, b| match (a.parse::<f64>(), b.parse::<f64>()) {
        (Ok(x), Ok(y)) => x.total_cmp(&y),
        _ => a.cmp(b),
    });
    let mut out = String::from("x");
    for (t, name) in tables.iter().zip(&names) {
        for h in &t.headers[1..] {
            write!(out, ",{name}.{h}").unwrap();
        }
    }
    out.push('\n');
    for k in &keys {
        out.push_str(k);
        for t in tables {
            let row = t.rows.iter().find(|r| &r[0] == k);
            for j in 1..t.headers.len() {
                out.push(',');
                if let Some(v) = row.and_then(|r| r.get(j)) {
                    out.push_str(v);
                }
            }
        }
        out.push('\n');
    }
    out
}
