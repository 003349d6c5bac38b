// SPDX-License-Identifier: Apache-2.0

//! Stacked small-multiple SVG charts: one panel per group with yearly ratio
//! bars, the loess curve and a pie inset showing the group's share of all
//! commits.

use std::fmt::Write as _;

use crate::aggregate::TrendPoint;

use super::{fmt_sig9, ReportError};

#[derive(Clone, Debug, PartialEq)]
pub struct ChartPanel {
    pub label: String,
    /// Commits in the group over all years; orders panels and sizes the
    /// share inset.
    pub volume: u64,
    pub points: Vec<TrendPoint>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChartSpec {
    pub title: String,
    pub width: f64,
    pub panel_height: f64,
}

impl Default for ChartSpec {
    fn default() -> Self {
        ChartSpec {
            title: String::new(),
            width: 900.0,
            panel_height: 110.0,
        }
    }
}

/// Rounds up to one significant digit: 0.237 → 0.3, 0.3 → 0.3, 7 → 7.
pub fn nice_ceil(x: f64) -> f64 {
    if !x.is_finite() || x <= 0.0 {
        return 0.0;
    }
    let e = x.log10().floor() as i32;
    let scale = |m: f64| if e >= 0 { m * 10f64.powi(e) } else { m / 10f64.powi(-e) };
    let unscale = |v: f64| if e >= 0 { v / 10f64.powi(e) } else { v * 10f64.powi(-e) };
    let m = unscale(x);
    // guards against 0.3 / 0.1 = 2.9999999999999996 style residue
    let digit = (m - 1e-9).ceil().max(1.0);
    scale(digit)
}

fn esc(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

fn n2(x: f64) -> String {
    let s = format!("{x:.2}");
    if s == "-0.00" {
        "0.00".into()
    } else {
        s
    }
}

const LEFT: f64 = 190.0;
const RIGHT: f64 = 110.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 36.0;
const PAD: f64 = 14.0;

/// Renders panels ordered by volume (descending, then label). Panels
/// without any defined ratio are left out with a warning.
pub fn render_stacked_chart(panels: &[ChartPanel], spec: &ChartSpec) -> Result<String, ReportError> {
    let total: u64 = panels.iter().map(|p| p.volume).sum();
    let mut kept: Vec<&ChartPanel> = Vec::new();
    for p in panels {
        if p.points.iter().any(|pt| pt.ratio.is_some()) {
            kept.push(p);
        } else {
            log::warn!(
                "chart {:?}: panel {:?} has no defined ratio, omitted",
                spec.title,
                p.label
            );
        }
    }
    if kept.is_empty() {
        return Err(ReportError::NothingToPlot);
    }
    kept.sort_by(|a, b| b.volume.cmp(&a.volume).then_with(|| a.label.cmp(&b.label)));

    let first_year = kept
        .iter()
        .flat_map(|p| p.points.iter().map(|pt| pt.year))
        .min()
        .unwrap_or(0);
    let last_year = kept
        .iter()
        .flat_map(|p| p.points.iter().map(|pt| pt.year))
        .max()
        .unwrap_or(0);
    let n_years = f64::from(last_year - first_year + 1);
    let plot_w = (spec.width - LEFT - RIGHT).max(50.0);
    let slot = plot_w / n_years;
    let ph = spec.panel_height;
    let height = TOP + kept.len() as f64 * (ph + PAD) + BOTTOM;
    let x_of = |year: i32| LEFT + (f64::from(year - first_year) + 0.5) * slot;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#,
        w = n2(spec.width),
        h = n2(height)
    );
    let _ = writeln!(s, "<title>{}</title>", esc(&spec.title));
    s.push_str(
        "<style>text{font-family:sans-serif;font-size:11px}.title{font-size:14px;font-weight:bold}\
.bar{fill:#7a9cc6}.loess{fill:none;stroke:#c0392b;stroke-width:1.5}.axis{stroke:#444;stroke-width:0.5}\
.pie-bg{fill:#e5e5e5}.pie-wedge{fill:#2c3e50}</style>\n",
    );
    let _ = writeln!(
        s,
        r#"<text class="title" x="{}" y="22">{}</text>"#,
        n2(LEFT),
        esc(&spec.title)
    );

    for (i, panel) in kept.iter().enumerate() {
        let top = TOP + i as f64 * (ph + PAD);
        let base = top + ph;
        let data_max = panel
            .points
            .iter()
            .flat_map(|p| [p.ratio, p.loess])
            .flatten()
            .fold(0.0f64, f64::max);
        let y_max = match nice_ceil(data_max) {
            m if m > 0.0 => m,
            _ => 1.0,
        };
        let y_of = |v: f64| base - (v.clamp(0.0, y_max) / y_max) * ph;
        let share = if total > 0 {
            panel.volume as f64 / total as f64
        } else {
            0.0
        };

        let _ = writeln!(
            s,
            r#"<g class="panel" data-group="{}" data-volume="{}" data-ymax="{}">"#,
            esc(&panel.label),
            panel.volume,
            fmt_sig9(y_max)
        );
        let _ = writeln!(
            s,
            r#"<text class="label" x="10" y="{}">{}</text>"#,
            n2(top + ph / 2.0),
            esc(&panel.label)
        );
        let _ = writeln!(
            s,
            r#"<line class="axis" x1="{l}" y1="{b}" x2="{r}" y2="{b}"/><line class="axis" x1="{l}" y1="{t}" x2="{l}" y2="{b}"/>"#,
            l = n2(LEFT),
            r = n2(LEFT + plot_w),
            t = n2(top),
            b = n2(base)
        );
        let _ = writeln!(
            s,
            r#"<text class="ymax" x="{}" y="{}" text-anchor="end">{}</text>"#,
            n2(LEFT - 4.0),
            n2(top + 10.0),
            fmt_sig9(y_max)
        );
        for p in &panel.points {
            let Some(r) = p.ratio else { continue };
            let y = y_of(r);
            let _ = writeln!(
                s,
                r#"<rect class="bar" x="{}" y="{}" width="{}" height="{}" data-year="{}" data-ratio="{}"/>"#,
                n2(x_of(p.year) - slot * 0.4),
                n2(y),
                n2(slot * 0.8),
                n2(base - y),
                p.year,
                fmt_sig9(r)
            );
        }
        let curve: Vec<String> = panel
            .points
            .iter()
            .filter_map(|p| p.loess.map(|v| format!("{},{}", n2(x_of(p.year)), n2(y_of(v)))))
            .collect();
        if curve.len() >= 2 {
            let _ = writeln!(s, r#"<polyline class="loess" points="{}"/>"#, curve.join(" "));
        }
        write_pie(
            &mut s,
            LEFT + plot_w + RIGHT / 2.0,
            top + ph / 2.0 - 6.0,
            (ph / 2.0 - 18.0).max(8.0),
            share,
        );
        s.push_str("</g>\n");
    }

    let axis_y = TOP + kept.len() as f64 * (ph + PAD) + 4.0;
    s.push_str("<g class=\"xaxis\">\n");
    let step = ((n_years / 12.0).ceil() as i32).max(1);
    let mut year = first_year;
    while year <= last_year {
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle">{year}</text>"#,
            n2(x_of(year)),
            n2(axis_y + 12.0)
        );
        year += step;
    }
    s.push_str("</g>\n</svg>\n");
    Ok(s)
}

fn write_pie(s: &mut String, cx: f64, cy: f64, r: f64, share: f64) {
    let _ = writeln!(s, r#"<g class="share" data-share="{}">"#, fmt_sig9(share));
    let _ = writeln!(
        s,
        r#"<circle class="pie-bg" cx="{}" cy="{}" r="{}"/>"#,
        n2(cx),
        n2(cy),
        n2(r)
    );
    if share >= 1.0 {
        let _ = writeln!(
            s,
            r#"<circle class="pie-wedge" cx="{}" cy="{}" r="{}"/>"#,
            n2(cx),
            n2(cy),
            n2(r)
        );
    } else if share > 0.0 {
        let angle = share * std::f64::consts::TAU;
        let (ex, ey) = (cx + r * angle.sin(), cy - r * angle.cos());
        let large = u8::from(share > 0.5);
        let _ = writeln!(
            s,
            r#"<path class="pie-wedge" d="M{cx},{cy} L{cx},{top} A{r},{r} 0 {large} 1 {ex},{ey} Z"/>"#,
            cx = n2(cx),
            cy = n2(cy),
            top = n2(cy - r),
            r = n2(r),
            ex = n2(ex),
            ey = n2(ey)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">{}%</text>"#,
        n2(cx),
        n2(cy + r + 13.0),
        fmt_sig9((share * 1000.0).round() / 10.0)
    );
    s.push_str("</g>\n");
}
