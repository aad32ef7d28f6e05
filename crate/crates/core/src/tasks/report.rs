//! CSV tables and minimal SVG line plots for experiment results.

use std::fmt::Write as _;

use super::multiclass::MulticlassReport;
use super::roc::RocCurve;
use super::search::{DiscrepancySummary, PairDiscrepancy, SearchTable, SizeSummary};
use super::sweep::SweepRow;
use crate::error::{Error, Result};

pub fn format_float(v: f64) -> String {
    format!("{v:.6}")
}

fn table(header: &[String], rows: impl IntoIterator<Item = Vec<String>>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Data(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Data(e.to_string()))
}

fn strings(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

/// One row per combination: `combination,size` then `{m}_f,{m}_se,{m}_sp`
/// per method. Failed cells leave their fields empty.
pub fn search_csv(t: &SearchTable) -> Result<String> {
    let mut header = strings(&["combination", "size"]);
    for m in &t.methods {
        header.extend([format!("{m}_f"), format!("{m}_se"), format!("{m}_sp")]);
    }
    let mut rows = Vec::new();
    for chunk in t.cells.chunks(t.methods.len().max(1)) {
        let c = chunk[0].combination;
        let mut row = vec![c.to_string(), c.len().to_string()];
        for cell in chunk {
            match &cell.evaluation {
                Some(e) => row.extend(
                    [e.test.f_score, e.test.sensitivity, e.test.specificity].map(format_float),
                ),
                None => row.extend([String::new(), String::new(), String::new()]),
            }
        }
        rows.push(row);
    }
    table(&header, rows)
}

pub fn sizes_csv(s: &[SizeSummary]) -> Result<String> {
    table(
        &strings(&["method", "size", "mean_f", "min_f", "max_f", "count"]),
        s.iter().map(|r| {
            vec![
                r.method.to_string(),
                r.size.to_string(),
                format_float(r.mean_f),
                format_float(r.min_f),
                format_float(r.max_f),
                r.count.to_string(),
            ]
        }),
    )
}

pub fn like_for_like_csv(pairs: &[PairDiscrepancy]) -> Result<String> {
    table(
        &strings(&[
            "method",
            "combination",
            "mirror",
            "f",
            "mirror_f",
            "abs_delta",
        ]),
        pairs.iter().map(|p| {
            vec![
                p.method.to_string(),
                p.combination.to_string(),
                p.mirror.to_string(),
                format_float(p.f),
                format_float(p.mirror_f),
                format_float(p.abs_delta),
            ]
        }),
    )
}

pub fn discrepancy_csv(s: &[DiscrepancySummary]) -> Result<String> {
    table(
        &strings(&[
            "method",
            "pairs",
            "median_abs_delta",
            "max_abs_delta",
            "above_0_01",
            "above_0_025",
        ]),
        s.iter().map(|d| {
            vec![
                d.method.to_string(),
                d.pairs.to_string(),
                format_float(d.median_abs_delta),
                format_float(d.max_abs_delta),
                d.above_0_01.to_string(),
                d.above_0_025.to_string(),
            ]
        }),
    )
}

pub fn multiclass_csv(r: &MulticlassReport) -> Result<String> {
    table(
        &strings(&["class", "sensitivity", "specificity"]),
        r.mean.iter().map(|c| {
            vec![
                c.class.label().to_string(),
                format_float(c.sensitivity),
                format_float(c.specificity),
            ]
        }),
    )
}

pub fn roc_csv(r: &RocCurve) -> Result<String> {
    table(
        &strings(&["boundary", "fpr", "tpr"]),
        r.points.iter().map(|p| {
            [p.boundary, p.false_positive_rate, p.true_positive_rate]
                .map(format_float)
                .to_vec()
        }),
    )
}

pub fn sweep_csv(rows: &[SweepRow]) -> Result<String> {
    table(
        &strings(&["size", "vessel", "train_f", "test_f"]),
        rows.iter().map(|r| {
            vec![
                r.size.to_string(),
                r.vessel.to_string(),
                format_float(r.train_f),
                format_float(r.test_f),
            ]
        }),
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN: f64 = 50.0;
const COLORS: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b",
];

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| {
        (a.min(v), b.max(v))
    });
    if !lo.is_finite() {
        (0.0, 1.0)
    } else if hi - lo < 1e-12 {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

/// Polylines over a shared pair of axes. Non-finite points are skipped.
pub fn line_plot_svg(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let finite = |&&(x, y): &&(f64, f64)| x.is_finite() && y.is_finite();
    let pts = || series.iter().flat_map(|s| s.points.iter().filter(finite));
    let (x0, x1) = range(pts().map(|p| p.0));
    let (y0, y1) = range(pts().map(|p| p.1));
    let sx = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
    let sy = |y: f64| HEIGHT - MARGIN - (y - y0) / (y1 - y0) * (HEIGHT - 2.0 * MARGIN);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="20" text-anchor="middle">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
    let (left, right, top, bottom) = (MARGIN, WIDTH - MARGIN, MARGIN, HEIGHT - MARGIN);
    let _ = writeln!(
        s,
        r#"<path d="M{left} {top} L{left} {bottom} L{right} {bottom}" fill="none" stroke="black"/>"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        WIDTH / 2.0,
        HEIGHT - 12.0,
        escape(x_label)
    );
    let _ = writeln!(
        s,
        r#"<text x="14" y="{}" text-anchor="middle" transform="rotate(-90 14 {})">{}</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0,
        escape(y_label)
    );
    for (v, x, anchor) in [(x0, left, "start"), (x1, right, "end")] {
        let _ = writeln!(
            s,
            r#"<text x="{x}" y="{}" text-anchor="{anchor}">{}</text>"#,
            bottom + 16.0,
            tick(v)
        );
    }
    for (v, y) in [(y0, bottom), (y1, top)] {
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{y}" text-anchor="end">{}</text>"#,
            left - 4.0,
            tick(v)
        );
    }
    for (i, series) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let coords: Vec<String> = series
            .points
            .iter()
            .filter(finite)
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
            coords.join(" ")
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" fill="{color}">{}</text>"#,
            right - 100.0,
            top + 14.0 * (i + 1) as f64,
            escape(&series.name)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn tick(v: f64) -> String {
    if v.abs() >= 100.0 {
        format!("{v:.0}")
    } else {
        format!("{v:.2}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}
