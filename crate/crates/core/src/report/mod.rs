// SPDX-License-Identifier: Apache-2.0

//! End-to-end orchestration, table output and SVG charts.

mod chart;
mod pipeline;
mod stages;

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::PathBuf;

pub use chart::{nice_ceil, render_stacked_chart, ChartPanel, ChartSpec};
pub use pipeline::{check_input, open_input, run_pipeline, Coverage, PipelineConfig, PipelineSummary};
pub use stages::{aggregate_stage, classify_stage, geolocate_stage, ingest_stage, report_stage, AggregateOptions};

use crate::aggregate::{AggregateCell, CellSet, GroupKey, Grouping, GrowthFit, Metric, TrendSeries};
use crate::civil::YearRange;
use crate::gender::AuthorGender;

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("nothing to plot: no group has a defined ratio")]
    NothingToPlot,
    #[error("{}: {reason}", path.display())]
    BadTable { path: PathBuf, reason: String },
    #[error("{0}")]
    Csv(#[from] csv::Error),
    #[error("{0}")]
    Json(#[from] serde_json::Error),
}

/// Marker written for undefined values.
pub const UNDEFINED: &str = "NA";

/// Formats with 9 significant digits, `%g` style: fixed notation for
/// decimal exponents in [-4, 9), scientific otherwise, trailing zeros
/// trimmed.
pub fn fmt_sig9(x: f64) -> String {
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    if (-4..9).contains(&exp) {
        let decimals = (8 - exp) as usize;
        trim_fraction(&format!("{x:.decimals$}")).to_owned()
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_fraction(mantissa), exp.abs())
    }
}

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(|| UNDEFINED.to_owned(), fmt_sig9)
}

/// Trend of one group under one metric.
#[derive(Clone, Debug, PartialEq)]
pub struct GroupTrend {
    pub grouping: Grouping,
    pub metric: Metric,
    pub group: GroupKey,
    pub series: TrendSeries,
}

/// Female-ratio trends of every group, for each metric.
pub fn compute_trends(set: &CellSet, span: f64) -> crate::Result<Vec<GroupTrend>> {
    let mut out = Vec::new();
    for metric in Metric::ALL {
        for (group, raw) in set.ratio_series(metric) {
            out.push(GroupTrend {
                grouping: set.grouping,
                metric,
                group,
                series: TrendSeries::new(&raw, span, 1)?,
            });
        }
    }
    Ok(out)
}

pub const CELLS_HEADER: [&str; 6] = ["year", "grouping", "group", "gender", "commit_count", "author_count"];
pub const RATIOS_HEADER: [&str; 6] = ["year", "grouping", "group", "metric", "ratio", "loess"];
pub const GROWTH_HEADER: [&str; 5] = ["series", "a", "b", "residual", "range"];

pub fn write_cells_csv<W: Write>(out: W, sets: &[CellSet]) -> Result<(), ReportError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CELLS_HEADER)?;
    for set in sets {
        for c in &set.cells {
            w.write_record([
                c.year.to_string(),
                set.grouping.to_string(),
                c.group.to_string(),
                c.gender.to_string(),
                c.commit_count.to_string(),
                c.author_count.to_string(),
            ])?;
        }
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Rows ordered by grouping, group, metric, year.
pub fn write_ratios_csv<W: Write>(out: W, trends: &[GroupTrend]) -> Result<(), ReportError> {
    let mut sorted: Vec<&GroupTrend> = trends.iter().collect();
    sorted.sort_by_key(|t| (t.grouping, t.group, t.metric.as_str()));
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RATIOS_HEADER)?;
    for t in sorted {
        for p in &t.series.points {
            w.write_record([
                p.year.to_string(),
                t.grouping.to_string(),
                t.group.to_string(),
                t.metric.to_string(),
                fmt_opt(p.ratio),
                fmt_opt(p.loess),
            ])?;
        }
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// One growth row per series; a skipped fit is written as undefined.
#[derive(Clone, Debug, PartialEq)]
pub struct GrowthRow {
    pub series: Metric,
    pub fit: Option<GrowthFit>,
    pub range: YearRange,
}

pub fn write_growth_csv<W: Write>(out: W, rows: &[GrowthRow]) -> Result<(), ReportError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(GROWTH_HEADER)?;
    for row in rows {
        let (a, b, r) = match &row.fit {
            Some(f) => (fmt_sig9(f.a), fmt_sig9(f.b), fmt_sig9(f.residual)),
            None => (UNDEFINED.into(), UNDEFINED.into(), UNDEFINED.into()),
        };
        w.write_record([row.series.to_string(), a, b, r, row.range.to_string()])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Reads `cells.csv` back into one cell set per grouping present.
pub fn read_cells_csv<R: Read>(input: R, path: &std::path::Path) -> Result<Vec<CellSet>, ReportError> {
    let bad = |reason: String| ReportError::BadTable {
        path: path.to_owned(),
        reason,
    };
    let mut r = csv::Reader::from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
    if header != CELLS_HEADER {
        return Err(bad(format!("unexpected header {header:?}")));
    }
    let mut by_grouping: BTreeMap<Grouping, Vec<AggregateCell>> = BTreeMap::new();
    for (i, row) in r.records().enumerate() {
        let row = row?;
        let line = i + 2;
        let field = |j: usize| row.get(j).unwrap_or_default();
        let grouping: Grouping = field(1).parse().map_err(|e| bad(format!("line {line}: {e}")))?;
        let cell = AggregateCell {
            year: field(0).parse().map_err(|_| bad(format!("line {line}: bad year")))?,
            group: GroupKey::parse(grouping, field(2)).map_err(|e| bad(format!("line {line}: {e}")))?,
            gender: field(3)
                .parse::<AuthorGender>()
                .map_err(|e| bad(format!("line {line}: {e}")))?,
            commit_count: field(4)
                .parse()
                .map_err(|_| bad(format!("line {line}: bad commit_count")))?,
            author_count: field(5)
                .parse()
                .map_err(|_| bad(format!("line {line}: bad author_count")))?,
        };
        by_grouping.entry(grouping).or_default().push(cell);
    }
    Ok(by_grouping
        .into_iter()
        .map(|(g, cells)| CellSet::from_cells(g, cells))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sig9_formatting() {
        assert_eq!(fmt_sig9(0.0), "0");
        assert_eq!(fmt_sig9(0.1), "0.1");
        assert_eq!(fmt_sig9(1.0 / 3.0), "0.333333333");
        assert_eq!(fmt_sig9(2.0 / 3.0), "0.666666667");
        assert_eq!(fmt_sig9(100.0), "100");
        assert_eq!(fmt_sig9(-0.01), "-0.01");
        assert_eq!(fmt_sig9(123456789.0), "123456789");
        assert_eq!(fmt_sig9(1234567891.0), "1.23456789e+09");
        assert_eq!(fmt_sig9(0.00001234), "1.234e-05");
        assert_eq!(fmt_sig9(0.0001234), "0.0001234");
        assert_eq!(fmt_sig9(0.3000000000000004), "0.3");
        assert_eq!(fmt_opt(None), "NA");
    }

    #[test]
    fn cells_round_trip() {
        use crate::refdata::Region;
        let cells = vec![
            AggregateCell {
                year: 2001,
                group: GroupKey::Region(Region::AustraliaNewZealand),
                gender: AuthorGender::Female,
                commit_count: 7,
                author_count: 1,
            },
            AggregateCell {
                year: 2000,
                group: GroupKey::Region(Region::Europe),
                gender: AuthorGender::Male,
                commit_count: 3,
                author_count: 0,
            },
        ];
        let offset = CellSet::from_cells(
            Grouping::Offset,
            vec![AggregateCell {
                year: 2000,
                group: GroupKey::Offset(-210),
                gender: AuthorGender::Unknown,
                commit_count: 2,
                author_count: 0,
            }],
        );
        let sets = vec![offset, CellSet::from_cells(Grouping::Region, cells)];
        let mut buf = Vec::new();
        write_cells_csv(&mut buf, &sets).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("year,grouping,group,gender,commit_count,author_count\n"));
        assert!(text.contains("2000,offset,-210,Unknown,2,0\n"));
        let back = read_cells_csv(buf.as_slice(), std::path::Path::new("cells.csv")).unwrap();
        assert_eq!(back, sets);
    }
}
