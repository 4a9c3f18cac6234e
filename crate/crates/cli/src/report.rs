//! Markdown and SVG views of a trace file.

use std::fmt::Write;
use std::path::Path;

use crate::experiment::{Summary, SUMMARY_FILE};
use crate::trace_csv::{TraceRow, TraceTable};

/// Labels from a `summary.json` next to the trace, if there is one.
pub fn labels_beside(trace_path: &Path) -> Option<Vec<String>> {
    let dir = trace_path.parent()?;
    let text = std::fs::read_to_string(dir.join(SUMMARY_FILE)).ok()?;
    serde_json::from_str::<Summary>(&text).ok().map(|s| s.labels)
}

/// Column labels for the frequency columns; falls back to `group i`.
pub fn group_labels(n: usize, labels: Option<&[String]>) -> Vec<String> {
    match labels {
        Some(l) if l.len() == n => l.to_vec(),
        _ => (0..n).map(|i| format!("group {i}")).collect(),
    }
}

fn best(rows: &[TraceRow]) -> &TraceRow {
    rows.iter()
        .fold(&rows[0], |b, r| if r.kl < b.kl { r } else { b })
}

/// One row per iteration with per-group frequency and loss. Iterations with
/// several evaluations are averaged.
pub fn markdown(table: &TraceTable, labels: &[String]) -> String {
    let rows = table.per_iteration();
    let mut s = String::new();
    let _ = writeln!(s, "| iter | {} | KL |", labels.join(" | "));
    let _ = writeln!(s, "|---:|{}---:|", "---:|".repeat(labels.len()));
    for r in &rows {
        let freqs: Vec<String> = r.freq.iter().map(|f| format!("{f:.3}")).collect();
        let _ = writeln!(s, "| {} | {} | {:.4} |", r.iter, freqs.join(" | "), r.kl);
    }
    let b = best(&rows);
    s.push('\n');
    if rows.len() < table.rows.len() {
        let _ = writeln!(
            s,
            "{} evaluations over {} iterations; frequencies and KL are per-iteration means.",
            table.rows.len(),
            rows.len()
        );
    }
    let _ = writeln!(s, "Best iteration: {} (KL {:.4})", b.iter, b.kl);
    s
}

const W: f64 = 640.0;
const H: f64 = 400.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 20.0;
const BOTTOM: f64 = 50.0;

/// Line chart of (mean) KL loss against iteration.
pub fn svg(table: &TraceTable) -> String {
    let rows = table.per_iteration();
    let x_max = rows.last().map_or(1, |r| r.iter).max(1) as f64;
    let y_max = rows.iter().map(|r| r.kl).fold(0.0, f64::max).max(1e-6) * 1.05;
    let px = |x: f64| LEFT + x / x_max * (W - LEFT - RIGHT);
    let py = |y: f64| H - BOTTOM - y / y_max * (H - TOP - BOTTOM);

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let (x0, y0, x1, y1) = (px(0.0), py(0.0), px(x_max), py(y_max));
    let _ = writeln!(s, r#"<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/>"#);
    let _ = writeln!(s, r#"<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black"/>"#);
    for k in 0..=4 {
        let xv = x_max * k as f64 / 4.0;
        let yv = y_max * k as f64 / 4.0;
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            px(xv),
            y0 + 18.0,
            xv.round()
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{:.3}</text>"#,
            x0 - 6.0,
            py(yv) + 4.0,
            yv
        );
    }
    let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">Iteration</text>"#, (x0 + x1) / 2.0, H - 12.0);
    let _ = writeln!(
        s,
        r#"<text x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">KL loss</text>"#,
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0
    );
    let points: Vec<String> = rows.iter().map(|r| format!("{:.2},{:.2}", px(r.iter as f64), py(r.kl))).collect();
    let _ = writeln!(s, r#"<polyline fill="none" stroke="steelblue" stroke-width="2" points="{}"/>"#, points.join(" "));
    if rows.len() <= 50 {
        for r in &rows {
            let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="steelblue"/>"#, px(r.iter as f64), py(r.kl));
        }
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(text: &str) -> TraceTable {
        TraceTable::read(text.as_bytes()).unwrap()
    }

    #[test]
    fn three_rows_three_lines_plus_header() {
        let t = table(
            "iter,kl,a_0,a_1,freq_0,freq_1\n0,0.120090291,0,0,0.74,0.26\n1,0.0008,0.24,-0.24,0.48,0.52\n2,0.0002,0.22,-0.22,0.49,0.51\n",
        );
        let md = markdown(&t, &group_labels(2, Some(&["male".into(), "female".into()])));
        let lines: Vec<&str> = md.lines().collect();
        assert_eq!(lines[0], "| iter | male | female | KL |");
        assert_eq!(lines[2], "| 0 | 0.740 | 0.260 | 0.1201 |");
        assert_eq!(lines.iter().filter(|l| l.starts_with("| ")).count(), 4);
        assert!(md.contains("Best iteration: 2"));
    }

    #[test]
    fn six_groups_get_six_columns() {
        let t = table("iter,kl,a_0,a_1,a_2,a_3,a_4,a_5,freq_0,freq_1,freq_2,freq_3,freq_4,freq_5\n0,0.2,0,0,0,0,0,0,0.4,0.2,0.1,0.1,0.1,0.1\n");
        let md = markdown(&t, &group_labels(6, None));
        assert_eq!(md.lines().next().unwrap().matches("group").count(), 6);
        assert_eq!(md.lines().nth(1).unwrap().matches("---:").count(), 8);
    }

    #[test]
    fn svg_has_one_vertex_per_iteration() {
        let t = table("iter,kl,a_0,a_1,freq_0,freq_1\n0,0.3,0,0,0.8,0.2\n0,0.1,0,0,0.6,0.4\n1,0.05,0,0,0.6,0.4\n");
        let s = svg(&t);
        assert!(s.starts_with("<svg"));
        assert_eq!(s.matches("<circle").count(), 2);
        assert!(s.contains("KL loss") && s.contains("Iteration"));
    }
}
