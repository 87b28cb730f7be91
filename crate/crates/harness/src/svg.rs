//! Error-versus-k panels as standalone SVG, one per operator.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use lod_core::OperatorKind;

use crate::error::Result;
use crate::experiment::ResultRow;

const WIDTH: f64 = 560.0;
const HEIGHT: f64 = 400.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 130.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;

const PALETTE: [&str; 8] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
];

/// One panel: title plus the rows to draw.
pub fn render_panel(title: &str, rows: &[ResultRow]) -> String {
    let points: Vec<&ResultRow> = rows
        .iter()
        .filter(|r| r.is_ok() && r.rel_energy_error > 0.0 && r.rel_energy_error.is_finite())
        .collect();
    let (kmin, kmax) = match (points.iter().map(|r| r.k).min(), points.iter().map(|r| r.k).max()) {
        (Some(a), Some(b)) if a < b => (a as f64, b as f64),
        (Some(a), Some(_)) => (a as f64 - 1.0, a as f64 + 1.0),
        _ => (1.0, 6.0),
    };
    let logs: Vec<f64> = points.iter().map(|r| r.rel_energy_error.log10()).collect();
    let (ymin, ymax) = match logs.iter().cloned().reduce(f64::min).zip(logs.iter().cloned().reduce(f64::max)) {
        Some((lo, hi)) if hi.ceil() > lo.floor() => (lo.floor(), hi.ceil()),
        Some((lo, _)) => (lo.floor() - 1.0, lo.floor() + 1.0),
        None => (-6.0, 0.0),
    };
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let sx = |k: f64| LEFT + (k - kmin) / (kmax - kmin) * plot_w;
    let sy = |l: f64| TOP + (ymax - l) / (ymax - ymin) * plot_h;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="22" text-anchor="middle" font-size="15">{}</text>"#,
        LEFT + plot_w / 2.0,
        escape(title)
    );
    // Axes and grid.
    let _ = writeln!(
        s,
        r#"<rect x="{LEFT}" y="{TOP}" width="{plot_w}" height="{plot_h}" fill="none" stroke="black"/>"#
    );
    let mut decade = ymin;
    while decade <= ymax + 1e-9 {
        let y = sy(decade);
        let _ = writeln!(
            s,
            r##"<line x1="{LEFT}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#dddddd"/>"##,
            LEFT + plot_w
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">1e{}</text>"#,
            LEFT - 6.0,
            y + 4.0,
            decade as i64
        );
        decade += 1.0;
    }
    let mut k = kmin.ceil();
    while k <= kmax + 1e-9 {
        let x = sx(k);
        let _ = writeln!(
            s,
            r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            TOP + plot_h + 18.0,
            k as i64
        );
        k += 1.0;
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">k</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 10.0
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">relative energy error</text>"#,
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0
    );

    let mut alphas: Vec<f64> = points.iter().map(|r| r.alpha).collect();
    alphas.sort_by(|a, b| b.total_cmp(a));
    alphas.dedup();
    for (i, &alpha) in alphas.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let mut series: Vec<&&ResultRow> = points.iter().filter(|r| r.alpha == alpha).collect();
        series.sort_by_key(|r| r.k);
        let coords: Vec<(f64, f64)> = series
            .iter()
            .map(|r| (sx(r.k as f64), sy(r.rel_energy_error.log10())))
            .collect();
        if coords.len() > 1 {
            let pts: Vec<String> = coords.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
            let _ = writeln!(
                s,
                r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
                pts.join(" ")
            );
        }
        for (x, y) in &coords {
            let _ = writeln!(s, r#"<circle cx="{x:.2}" cy="{y:.2}" r="3" fill="{color}"/>"#);
        }
        let ly = TOP + 10.0 + 18.0 * i as f64;
        let lx = LEFT + plot_w + 12.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/>"#,
            lx + 18.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}">alpha = {alpha:e}</text>"#,
            lx + 24.0,
            ly + 4.0
        );
    }
    s.push_str("</svg>\n");
    s
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Panels keyed by file stem. Without rows a single empty panel is returned.
pub fn emit_svg(rows: &[ResultRow]) -> Vec<(String, String)> {
    if rows.is_empty() {
        return vec![("empty".to_string(), render_panel("no data", rows))];
    }
    OperatorKind::ALL
        .into_iter()
        .filter_map(|op| {
            let subset: Vec<ResultRow> = rows.iter().filter(|r| r.operator == op).cloned().collect();
            (!subset.is_empty()).then(|| (op.name().to_string(), render_panel(op.name(), &subset)))
        })
        .collect()
}

pub fn write_svgs(rows: &[ResultRow], dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    emit_svg(rows)
        .into_iter()
        .map(|(stem, svg)| {
            let path = dir.join(format!("{stem}.svg"));
            std::fs::write(&path, svg)?;
            Ok(path)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(op: OperatorKind, alpha: f64, k: usize) -> ResultRow {
        ResultRow {
            operator: op,
            alpha,
            k,
            coarse_h: 0.0625,
            fine_h: 0.0078125,
            rel_energy_error: alpha.sqrt() * 10f64.powi(-(k as i32)),
            wall_time_s: 0.0,
            seed: 0,
            status: "ok".into(),
        }
    }

    #[test]
    fn empty_panel_has_axes_only() {
        let panels = emit_svg(&[]);
        assert_eq!(panels.len(), 1);
        let svg = &panels[0].1;
        assert!(svg.contains("<rect x="));
        assert!(!svg.contains("<polyline"));
        assert!(!svg.contains("<circle"));
    }

    #[test]
    fn single_row_is_one_marker() {
        let svg = render_panel("SZ", &[row(OperatorKind::ScottZhang, 0.1, 2)]);
        assert_eq!(svg.matches("<circle").count(), 1);
        assert_eq!(svg.matches("<polyline").count(), 0);
    }

    #[test]
    fn full_panel_counts_and_determinism() {
        let mut rows = Vec::new();
        for a in [1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6] {
            for k in 1..=6 {
                rows.push(row(OperatorKind::Ih, a, k));
            }
        }
        let panels = emit_svg(&rows);
        assert_eq!(panels.len(), 1);
        let svg = &panels[0].1;
        assert_eq!(svg.matches("<polyline").count(), 6);
        assert_eq!(svg.matches("<circle").count(), 36);
        assert_eq!(emit_svg(&rows), panels);
    }
}
