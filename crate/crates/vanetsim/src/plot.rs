//! Deterministic SVG bar charts from a metrics CSV, one bar per row.

use crate::error::{Error, Result};
use std::fmt::Write as _;

pub const COLUMNS: [&str; 2] = ["pdf", "avg_pkts_s"];

const BAR_W: f64 = 60.0;
const GAP: f64 = 30.0;
const PLOT_H: f64 = 280.0;
const MARGIN_L: f64 = 60.0;
const MARGIN_T: f64 = 30.0;
const MARGIN_B: f64 = 50.0;

/// Render `column` ("pdf" or "avg_pkts_s") from a metrics CSV as a
/// self-contained SVG bar chart labelled by the `nodes` column.
pub fn render_bar_chart(metrics_csv: &str, column: &str) -> Result<String> {
    let mut lines = metrics_csv.lines();
    let header: Vec<&str> = lines
        .next()
        .ok_or_else(|| Error::Validation("empty metrics CSV".into()))?
        .split(',')
        .collect();
    let col = header
        .iter()
        .position(|&h| h == column)
        .ok_or_else(|| Error::Validation(format!("no column '{column}' in metrics CSV")))?;
    let label_col = header.iter().position(|&h| h == "nodes").unwrap_or(0);

    let mut bars: Vec<(String, f64)> = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != header.len() {
            return Err(Error::Parse {
                line: i + 2,
                msg: format!("expected {} fields, got {}", header.len(), fields.len()),
            });
        }
        let value: f64 = fields[col].parse().map_err(|_| Error::Parse {
            line: i + 2,
            msg: format!("non-numeric value '{}' in column '{column}'", fields[col]),
        })?;
        bars.push((fields[label_col].to_string(), value));
    }
    if bars.is_empty() {
        return Err(Error::Validation("metrics CSV has no data rows".into()));
    }

    let max = bars.iter().map(|(_, v)| *v).fold(0.0_f64, f64::max).max(1e-12);
    let width = MARGIN_L + bars.len() as f64 * (BAR_W + GAP) + GAP;
    let height = MARGIN_T + PLOT_H + MARGIN_B;

    let mut svg = String::new();
    writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}">"#
    )
    .unwrap();
    writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#).unwrap();
    writeln!(
        svg,
        r#"<text x="{:.1}" y="{:.1}" font-size="14" text-anchor="middle" transform="rotate(-90 16 {mid:.1})">{column}</text>"#,
        16.0,
        MARGIN_T + PLOT_H / 2.0,
        mid = MARGIN_T + PLOT_H / 2.0
    )
    .unwrap();
    // axes
    writeln!(
        svg,
        r#"<line x1="{l:.1}" y1="{t:.1}" x2="{l:.1}" y2="{b:.1}" stroke="black"/>"#,
        l = MARGIN_L,
        t = MARGIN_T,
        b = MARGIN_T + PLOT_H
    )
    .unwrap();
    writeln!(
        svg,
        r#"<line x1="{l:.1}" y1="{b:.1}" x2="{r:.1}" y2="{b:.1}" stroke="black"/>"#,
        l = MARGIN_L,
        b = MARGIN_T + PLOT_H,
        r = width - GAP / 2.0
    )
    .unwrap();

    for (i, (label, value)) in bars.iter().enumerate() {
        let h = PLOT_H * value / max;
        let x = MARGIN_L + GAP + i as f64 * (BAR_W + GAP);
        let y = MARGIN_T + PLOT_H - h;
        writeln!(
            svg,
            r#"<rect x="{x:.1}" y="{y:.1}" width="{BAR_W:.1}" height="{h:.1}" fill="steelblue"/>"#
        )
        .unwrap();
        writeln!(
            svg,
            r#"<text x="{cx:.1}" y="{vy:.1}" font-size="12" text-anchor="middle">{value}</text>"#,
            cx = x + BAR_W / 2.0,
            vy = y - 6.0
        )
        .unwrap();
        writeln!(
            svg,
            r#"<text x="{cx:.1}" y="{ly:.1}" font-size="12" text-anchor="middle">{label}</text>"#,
            cx = x + BAR_W / 2.0,
            ly = MARGIN_T + PLOT_H + 18.0
        )
        .unwrap();
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

#[cfg(test)]
mod tests {
    use super::*;

    const TABLE1: &str = "nodes,sent,received,pdf,avg_pkts_s,avg_bits_s\n\
        10,10000,8626,0.8626,2.44,9994\n\
        20,10000,9338,0.9338,2.43,9953\n\
        30,10000,8924,0.8924,7.01,28713\n\
        40,10000,8858,0.8858,3.62,14827\n\
        50,10000,9088,0.9088,4.04,16548\n";

    #[test]
    fn five_row_table_gives_five_bars() {
        let svg = render_bar_chart(TABLE1, "pdf").unwrap();
        assert_eq!(svg.matches("<rect").count(), 6); // background + 5 bars
        for v in ["0.8626", "0.9338", "0.8924", "0.8858", "0.9088"] {
            assert!(svg.contains(v), "missing {v}");
        }
    }

    #[test]
    fn single_row_single_bar() {
        let svg = render_bar_chart(
            "nodes,sent,received,pdf,avg_pkts_s,avg_bits_s\n10,1,1,1,1,1\n",
            "avg_pkts_s",
        )
        .unwrap();
        assert_eq!(svg.matches("<rect").count(), 2);
    }

    #[test]
    fn non_numeric_cell_is_an_error() {
        let err = render_bar_chart(
            "nodes,sent,received,pdf,avg_pkts_s,avg_bits_s\n10,1,1,oops,1,1\n",
            "pdf",
        )
        .unwrap_err();
        assert!(err.to_string().contains("oops"), "{err}");
    }

    #[test]
    fn empty_csv_is_an_error() {
        assert!(render_bar_chart("nodes,sent,received,pdf,avg_pkts_s,avg_bits_s\n", "pdf").is_err());
        assert!(render_bar_chart("", "pdf").is_err());
    }

    #[test]
    fn output_is_deterministic() {
        let a = render_bar_chart(TABLE1, "pdf").unwrap();
        let b = render_bar_chart(TABLE1, "pdf").unwrap();
        assert_eq!(a, b);
    }
}
