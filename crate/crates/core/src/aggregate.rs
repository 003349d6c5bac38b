// SPDX-License-Identifier: Apache-2.0

//! Yearly gender breakdowns per UTC offset or per region, female ratios,
//! loess trends, year-over-year deltas and the exponential growth fit.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::civil::YearRange;
use crate::gender::AuthorGender;
use crate::refdata::Region;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AggregateError {
    #[error("non-finite value at point {index}")]
    NonFinite { index: usize },
    #[error("{n} points given, at least {need} needed")]
    TooFewPoints { n: usize, need: usize },
    #[error("span {0} outside (0, 1]")]
    BadSpan(f64),
    #[error("unsupported loess degree {0} (expected 0 or 1)")]
    BadDegree(u32),
    #[error("count in year {year} is {count}; the growth fit needs positive counts over {range}")]
    NonPositiveCount { year: i32, count: f64, range: YearRange },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Grouping {
    Offset,
    Region,
}

impl Grouping {
    pub const ALL: [Grouping; 2] = [Grouping::Offset, Grouping::Region];

    pub fn as_str(self) -> &'static str {
        match self {
            Grouping::Offset => "offset",
            Grouping::Region => "region",
        }
    }
}

impl fmt::Display for Grouping {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Grouping {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "offset" => Ok(Grouping::Offset),
            "region" => Ok(Grouping::Region),
            other => Err(format!("unknown grouping {other:?} (expected offset or region)")),
        }
    }
}

/// Group of a cell: a UTC offset in minutes or a region.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GroupKey {
    Offset(i32),
    Region(Region),
}

impl GroupKey {
    pub fn grouping(self) -> Grouping {
        match self {
            GroupKey::Offset(_) => Grouping::Offset,
            GroupKey::Region(_) => Grouping::Region,
        }
    }

    pub fn parse(grouping: Grouping, s: &str) -> Result<Self, String> {
        match grouping {
            Grouping::Offset => s
                .parse()
                .map(GroupKey::Offset)
                .map_err(|_| format!("bad offset group {s:?}")),
            Grouping::Region => s.parse().map(GroupKey::Region),
        }
    }

    /// Short identifier for file names and SVG ids.
    pub fn slug(self) -> String {
        match self {
            GroupKey::Offset(m) => format!(
                "utc{}{:02}{:02}",
                if m < 0 { 'm' } else { 'p' },
                m.abs() / 60,
                m.abs() % 60
            ),
            GroupKey::Region(r) => r
                .name()
                .chars()
                .map(|c| {
                    if c.is_ascii_alphanumeric() {
                        c.to_ascii_lowercase()
                    } else {
                        '_'
                    }
                })
                .collect(),
        }
    }

    /// Human label: `UTC+05:30` or the region name.
    pub fn label(self) -> String {
        match self {
            GroupKey::Offset(m) => format!(
                "UTC{}{:02}:{:02}",
                if m < 0 { '-' } else { '+' },
                m.abs() / 60,
                m.abs() % 60
            ),
            GroupKey::Region(r) => r.name().to_owned(),
        }
    }
}

impl Serialize for GroupKey {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

/// Offsets print as signed minutes, regions by name.
impl fmt::Display for GroupKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroupKey::Offset(m) => write!(f, "{m}"),
            GroupKey::Region(r) => f.write_str(r.name()),
        }
    }
}

/// A commit after gender and region inference, reduced to what the cells
/// need. `author` is a dense id for the author's (name, email) key.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ClassifiedCommit {
    pub author: u32,
    pub year: i32,
    pub offset: i32,
    pub gender: AuthorGender,
    pub region: Option<Region>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdScope {
    /// Commits counted within each (year, group).
    #[default]
    Group,
    /// Commits counted over the whole year, across groups.
    Year,
}

impl FromStr for ThresholdScope {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "group" => Ok(ThresholdScope::Group),
            "year" => Ok(ThresholdScope::Year),
            other => Err(format!("unknown threshold scope {other:?} (expected group or year)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Commits,
    Authors,
}

impl Metric {
    pub const ALL: [Metric; 2] = [Metric::Commits, Metric::Authors];

    pub fn as_str(self) -> &'static str {
        match self {
            Metric::Commits => "commits",
            Metric::Authors => "authors",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Metric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "commits" => Ok(Metric::Commits),
            "authors" => Ok(Metric::Authors),
            other => Err(format!("unknown metric {other:?}")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct AggregateCell {
    pub year: i32,
    pub group: GroupKey,
    pub gender: AuthorGender,
    pub commit_count: u64,
    pub author_count: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
struct GroupTally {
    authors: HashMap<u32, (AuthorGender, u64)>,
}

/// Mergeable partial state for one grouping.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CellAccumulator {
    grouping: Grouping,
    groups: BTreeMap<(i32, GroupKey), GroupTally>,
    author_year: HashMap<(i32, u32), u64>,
    unresolved: BTreeMap<i32, u64>,
}

impl CellAccumulator {
    pub fn new(grouping: Grouping) -> Self {
        CellAccumulator {
            grouping,
            groups: BTreeMap::new(),
            author_year: HashMap::new(),
            unresolved: BTreeMap::new(),
        }
    }

    pub fn grouping(&self) -> Grouping {
        self.grouping
    }

    pub fn add(&mut self, c: &ClassifiedCommit) {
        *self.author_year.entry((c.year, c.author)).or_default() += 1;
        let key = match self.grouping {
            Grouping::Offset => GroupKey::Offset(c.offset),
            Grouping::Region => match c.region {
                Some(r) => GroupKey::Region(r),
                None => {
                    *self.unresolved.entry(c.year).or_default() += 1;
                    return;
                }
            },
        };
        let slot = self
            .groups
            .entry((c.year, key))
            .or_default()
            .authors
            .entry(c.author)
            .or_insert((c.gender, 0));
        debug_assert_eq!(slot.0, c.gender, "author {} has two genders", c.author);
        slot.1 += 1;
    }

    pub fn merge(&mut self, other: CellAccumulator) {
        assert_eq!(
            self.grouping, other.grouping,
            "merging accumulators of different groupings"
        );
        for (key, tally) in other.groups {
            let mine = self.groups.entry(key).or_default();
            for (author, (gender, n)) in tally.authors {
                mine.authors.entry(author).or_insert((gender, 0)).1 += n;
            }
        }
        for (key, n) in other.author_year {
            *self.author_year.entry(key).or_default() += n;
        }
        for (year, n) in other.unresolved {
            *self.unresolved.entry(year).or_default() += n;
        }
    }

    /// Region-grouping commits without a region, per year.
    pub fn unresolved(&self) -> &BTreeMap<i32, u64> {
        &self.unresolved
    }

    /// Emits three cells (one per gender) for every (year, group) seen.
    pub fn finish(&self, threshold: u64, scope: ThresholdScope) -> CellSet {
        let mut cells = Vec::with_capacity(self.groups.len() * 3);
        for (&(year, group), tally) in &self.groups {
            let mut commits = [0u64; 3];
            let mut authors = [0u64; 3];
            for (&author, &(gender, n)) in &tally.authors {
                commits[gender.index()] += n;
                let active = match scope {
                    ThresholdScope::Group => n,
                    ThresholdScope::Year => self.author_year[&(year, author)],
                };
                if active >= threshold {
                    authors[gender.index()] += 1;
                }
            }
            for gender in AuthorGender::ALL {
                cells.push(AggregateCell {
                    year,
                    group,
                    gender,
                    commit_count: commits[gender.index()],
                    author_count: authors[gender.index()],
                });
            }
        }
        CellSet {
            grouping: self.grouping,
            cells,
            unresolved: self.unresolved.clone(),
        }
    }
}

/// Cells of one grouping, sorted by (year, group, gender).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CellSet {
    pub grouping: Grouping,
    pub cells: Vec<AggregateCell>,
    pub unresolved: BTreeMap<i32, u64>,
}

impl CellSet {
    pub fn from_cells(grouping: Grouping, mut cells: Vec<AggregateCell>) -> Self {
        cells.sort_by_key(|c| (c.year, c.group, c.gender));
        CellSet {
            grouping,
            cells,
            unresolved: BTreeMap::new(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Distinct groups, ordered.
    pub fn groups(&self) -> Vec<GroupKey> {
        let mut g: Vec<GroupKey> = self.cells.iter().map(|c| c.group).collect();
        g.sort_unstable();
        g.dedup();
        g
    }

    pub fn years(&self) -> Vec<i32> {
        let mut y: Vec<i32> = self.cells.iter().map(|c| c.year).collect();
        y.dedup();
        y
    }

    /// Cells of one (year, group), in gender order.
    pub fn at(&self, year: i32, group: GroupKey) -> &[AggregateCell] {
        let lo = self.cells.partition_point(|c| (c.year, c.group) < (year, group));
        let hi = self.cells.partition_point(|c| (c.year, c.group) <= (year, group));
        &self.cells[lo..hi]
    }

    /// Total commits per group over all years and genders.
    pub fn group_volumes(&self) -> BTreeMap<GroupKey, u64> {
        let mut v = BTreeMap::new();
        for c in &self.cells {
            *v.entry(c.group).or_default() += c.commit_count;
        }
        v
    }

    /// Total commits per year over all groups and genders.
    pub fn year_totals(&self) -> BTreeMap<i32, u64> {
        let mut v = BTreeMap::new();
        for c in &self.cells {
            *v.entry(c.year).or_default() += c.commit_count;
        }
        v
    }

    /// Distinct authors counted per year, summed over groups.
    pub fn year_author_totals(&self) -> BTreeMap<i32, u64> {
        let mut v = BTreeMap::new();
        for c in &self.cells {
            *v.entry(c.year).or_default() += c.author_count;
        }
        v
    }

    /// (year, ratio) per group, one point for every year the group has cells.
    pub fn ratio_series(&self, metric: Metric) -> BTreeMap<GroupKey, Vec<(i32, Option<f64>)>> {
        let mut out: BTreeMap<GroupKey, Vec<(i32, Option<f64>)>> = BTreeMap::new();
        let mut i = 0;
        while i < self.cells.len() {
            let (year, group) = (self.cells[i].year, self.cells[i].group);
            let j = i + self.cells[i..]
                .iter()
                .take_while(|c| (c.year, c.group) == (year, group))
                .count();
            out.entry(group)
                .or_default()
                .push((year, female_ratio(&self.cells[i..j], metric)));
            i = j;
        }
        out
    }
}

/// Builds the cells of one grouping in a single pass.
pub fn build_cells<'a, I>(records: I, grouping: Grouping, threshold: u64, scope: ThresholdScope) -> CellSet
where
    I: IntoIterator<Item = &'a ClassifiedCommit>,
{
    let mut acc = CellAccumulator::new(grouping);
    for c in records {
        acc.add(c);
    }
    acc.finish(threshold, scope)
}

fn metric_value(c: &AggregateCell, metric: Metric) -> u64 {
    match metric {
        Metric::Commits => c.commit_count,
        Metric::Authors => c.author_count,
    }
}

/// F / (F + M) over the given cells; `None` when F + M is zero.
pub fn female_ratio(cells: &[AggregateCell], metric: Metric) -> Option<f64> {
    let (mut f, mut m) = (0u64, 0u64);
    for c in cells {
        match c.gender {
            AuthorGender::Female => f += metric_value(c, metric),
            AuthorGender::Male => m += metric_value(c, metric),
            AuthorGender::Unknown => {}
        }
    }
    (f + m > 0).then(|| f as f64 / (f + m) as f64)
}

// ---------------------------------------------------------------------------

/// Locally weighted regression with tricube weights.
///
/// At each x the q = max(⌈span·n⌉, degree + 2) nearest points (capped at
/// n) form the window; dmax is the distance to the farthest of them. A
/// weighted polynomial of the given degree (0 or 1) is fitted and evaluated
/// at x. A window whose weighted x-variance vanishes falls back to the
/// weighted mean.
pub fn loess_smooth(points: &[(f64, f64)], span: f64, degree: u32) -> Result<Vec<f64>, AggregateError> {
    if !(span > 0.0 && span <= 1.0) {
        return Err(AggregateError::BadSpan(span));
    }
    if degree > 1 {
        return Err(AggregateError::BadDegree(degree));
    }
    if let Some(index) = points.iter().position(|(x, y)| !x.is_finite() || !y.is_finite()) {
        return Err(AggregateError::NonFinite { index });
    }
    let n = points.len();
    let need = (degree as usize + 2).max(3);
    if n < need {
        return Err(AggregateError::TooFewPoints { n, need });
    }
    let q = ((span * n as f64).ceil() as usize).max(degree as usize + 2).min(n);

    let mut dist = Vec::with_capacity(n);
    let mut out = Vec::with_capacity(n);
    for &(x0, _) in points {
        dist.clear();
        dist.extend(points.iter().map(|(x, _)| (x - x0).abs()));
        let mut sorted = dist.clone();
        sorted.select_nth_unstable_by(q - 1, f64::total_cmp);
        let dmax = sorted[q - 1];

        let (mut sw, mut swx, mut swy) = (0.0, 0.0, 0.0);
        let weights: Vec<f64> = dist.iter().map(|&d| tricube(d, dmax)).collect();
        for (&w, &(x, y)) in weights.iter().zip(points) {
            sw += w;
            swx += w * x;
            swy += w * y;
        }
        let xbar = swx / sw;
        let ybar = swy / sw;
        if degree == 0 {
            out.push(ybar);
            continue;
        }
        let (mut sxx, mut sxy) = (0.0, 0.0);
        for (&w, &(x, y)) in weights.iter().zip(points) {
            sxx += w * (x - xbar) * (x - xbar);
            sxy += w * (x - xbar) * (y - ybar);
        }
        let scale = weights.iter().zip(points).map(|(w, (x, _))| w * x * x).sum::<f64>();
        if sxx <= 1e-12 * scale.max(f64::MIN_POSITIVE) {
            out.push(ybar);
        } else {
            out.push(ybar + sxy / sxx * (x0 - xbar));
        }
    }
    Ok(out)
}

fn tricube(d: f64, dmax: f64) -> f64 {
    if dmax <= 0.0 {
        return if d == 0.0 { 1.0 } else { 0.0 };
    }
    let u = d / dmax;
    if u >= 1.0 {
        0.0
    } else {
        let t = 1.0 - u * u * u;
        t * t * t
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TrendPoint {
    pub year: i32,
    pub ratio: Option<f64>,
    pub loess: Option<f64>,
}

/// Yearly ratios with their loess curve. Years with an undefined ratio keep
/// an undefined smoothed value.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct TrendSeries {
    pub points: Vec<TrendPoint>,
}

impl TrendSeries {
    /// Smooths the defined points; series with too few defined points keep
    /// undefined loess values.
    pub fn new(raw: &[(i32, Option<f64>)], span: f64, degree: u32) -> Result<Self, AggregateError> {
        let defined: Vec<(f64, f64)> = raw.iter().filter_map(|(y, r)| r.map(|r| (f64::from(*y), r))).collect();
        let smooth = match loess_smooth(&defined, span, degree) {
            Ok(v) => v,
            Err(AggregateError::TooFewPoints { .. }) => Vec::new(),
            Err(e) => return Err(e),
        };
        let mut smooth = smooth.into_iter();
        let points = raw
            .iter()
            .map(|&(year, ratio)| TrendPoint {
                year,
                ratio,
                loess: ratio.and_then(|_| smooth.next()),
            })
            .collect();
        Ok(TrendSeries { points })
    }

    pub fn ratio(&self, year: i32) -> Option<f64> {
        self.points.iter().find(|p| p.year == year).and_then(|p| p.ratio)
    }
}

/// `ratio(year_b) − ratio(year_a)`; `None` if either is undefined.
pub fn ratio_delta(series: &TrendSeries, year_a: i32, year_b: i32) -> Option<f64> {
    Some(series.ratio(year_b)? - series.ratio(year_a)?)
}

// ---------------------------------------------------------------------------

/// `count(y) ≈ a·exp(b·(y − 1970))`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GrowthFit {
    pub a: f64,
    pub b: f64,
    /// Root-mean-square error of the fit in log space.
    pub residual: f64,
    pub range: YearRange,
}

/// Least squares of ln(count) on (year − 1970) over every year in `range`.
/// A year in range that is missing from `totals` counts as zero.
pub fn exp_fit(totals: &BTreeMap<i32, u64>, range: YearRange) -> Result<GrowthFit, AggregateError> {
    let real: BTreeMap<i32, f64> = totals.iter().map(|(&y, &c)| (y, c as f64)).collect();
    exp_fit_real(&real, range)
}

/// [`exp_fit`] over real-valued totals.
pub fn exp_fit_real(totals: &BTreeMap<i32, f64>, range: YearRange) -> Result<GrowthFit, AggregateError> {
    let mut pts = Vec::with_capacity(range.len());
    for year in range.years() {
        let count = totals.get(&year).copied().unwrap_or(0.0);
        if !(count > 0.0 && count.is_finite()) {
            return Err(AggregateError::NonPositiveCount { year, count, range });
        }
        pts.push((f64::from(year - 1970), count.ln()));
    }
    if pts.len() < 2 {
        return Err(AggregateError::TooFewPoints { n: pts.len(), need: 2 });
    }
    let n = pts.len() as f64;
    let xbar = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let ybar = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - xbar) * (p.0 - xbar)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - xbar) * (p.1 - ybar)).sum();
    let b = sxy / sxx;
    let ln_a = ybar - b * xbar;
    let sse: f64 = pts.iter().map(|p| (p.1 - ln_a - b * p.0).powi(2)).sum();
    Ok(GrowthFit {
        a: ln_a.exp(),
        b,
        residual: (sse / n).sqrt(),
        range,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn commit(author: u32, year: i32, offset: i32, gender: AuthorGender, region: Option<Region>) -> ClassifiedCommit {
        ClassifiedCommit {
            author,
            year,
            offset,
            gender,
            region,
        }
    }

    fn cell(set: &CellSet, year: i32, group: GroupKey, gender: AuthorGender) -> (u64, u64) {
        let c = set.at(year, group).iter().find(|c| c.gender == gender).unwrap();
        (c.commit_count, c.author_count)
    }

    #[test]
    fn threshold_boundary() {
        let five: Vec<_> = (0..5)
            .map(|_| commit(1, 2010, 60, AuthorGender::Female, None))
            .collect();
        let set = build_cells(&five, Grouping::Offset, 5, ThresholdScope::Group);
        assert_eq!(cell(&set, 2010, GroupKey::Offset(60), AuthorGender::Female), (5, 1));
        let set = build_cells(&five[..4], Grouping::Offset, 5, ThresholdScope::Group);
        assert_eq!(cell(&set, 2010, GroupKey::Offset(60), AuthorGender::Female), (4, 0));
    }

    #[test]
    fn three_author_hand_count() {
        use AuthorGender::*;
        let eu = Some(Region::Europe);
        let mut v = Vec::new();
        v.extend((0..6).map(|_| commit(1, 2015, 60, Female, eu)));
        v.extend((0..3).map(|_| commit(1, 2015, 120, Female, eu)));
        v.extend((0..7).map(|_| commit(2, 2015, 60, Male, None)));
        v.extend((0..2).map(|_| commit(3, 2015, 60, Unknown, eu)));
        v.extend((0..5).map(|_| commit(3, 2016, 60, Unknown, eu)));

        let by_off = build_cells(&v, Grouping::Offset, 5, ThresholdScope::Group);
        assert_eq!(cell(&by_off, 2015, GroupKey::Offset(60), Female), (6, 1));
        assert_eq!(cell(&by_off, 2015, GroupKey::Offset(60), Male), (7, 1));
        assert_eq!(cell(&by_off, 2015, GroupKey::Offset(60), Unknown), (2, 0));
        assert_eq!(cell(&by_off, 2015, GroupKey::Offset(120), Female), (3, 0));
        assert_eq!(cell(&by_off, 2016, GroupKey::Offset(60), Unknown), (5, 1));
        assert_eq!(by_off.cells.len(), 9);

        let by_year = build_cells(&v, Grouping::Offset, 5, ThresholdScope::Year);
        assert_eq!(cell(&by_year, 2015, GroupKey::Offset(120), Female), (3, 1));

        let by_reg = build_cells(&v, Grouping::Region, 5, ThresholdScope::Group);
        let eu = GroupKey::Region(Region::Europe);
        assert_eq!(cell(&by_reg, 2015, eu, Female), (9, 1));
        assert_eq!(cell(&by_reg, 2015, eu, Male), (0, 0));
        assert_eq!(by_reg.unresolved[&2015], 7);

        assert_eq!(
            female_ratio(by_off.at(2015, GroupKey::Offset(60)), Metric::Commits),
            Some(6.0 / 13.0)
        );
        assert_eq!(
            female_ratio(by_off.at(2015, GroupKey::Offset(60)), Metric::Authors),
            Some(0.5)
        );
        assert_eq!(
            female_ratio(by_off.at(2016, GroupKey::Offset(60)), Metric::Commits),
            None
        );
    }

    #[test]
    fn ratio_examples() {
        let mk = |g, n| AggregateCell {
            year: 2000,
            group: GroupKey::Offset(0),
            gender: g,
            commit_count: n,
            author_count: 0,
        };
        assert_eq!(
            female_ratio(
                &[mk(AuthorGender::Female, 1), mk(AuthorGender::Male, 9)],
                Metric::Commits
            ),
            Some(0.1)
        );
        assert_eq!(female_ratio(&[mk(AuthorGender::Unknown, 7)], Metric::Commits), None);
    }

    #[test]
    fn group_key_text() {
        assert_eq!(GroupKey::Offset(330).label(), "UTC+05:30");
        assert_eq!(GroupKey::Offset(-210).label(), "UTC-03:30");
        assert_eq!(GroupKey::Offset(-210).slug(), "utcm0330");
        assert_eq!(
            GroupKey::Region(Region::AustraliaNewZealand).slug(),
            "australia_and_new_zealand"
        );
        assert_eq!(
            GroupKey::parse(Grouping::Offset, "-300").unwrap(),
            GroupKey::Offset(-300)
        );
        assert_eq!(
            GroupKey::parse(Grouping::Region, "China").unwrap(),
            GroupKey::Region(Region::China)
        );
    }

    #[test]
    fn loess_constant_and_linear() {
        let c: Vec<_> = (0..9).map(|i| (f64::from(i), 0.37)).collect();
        for s in loess_smooth(&c, 0.75, 1).unwrap() {
            assert!((s - 0.37).abs() < 1e-12);
        }
        let l: Vec<_> = (0..9)
            .map(|i| (f64::from(i) * 1.5, 2.0 * f64::from(i) * 1.5 + 1.0))
            .collect();
        for (s, (x, _)) in loess_smooth(&l, 1.0, 1).unwrap().iter().zip(&l) {
            assert!((s - (2.0 * x + 1.0)).abs() < 1e-9);
        }
    }

    #[test]
    fn loess_errors() {
        assert!(matches!(
            loess_smooth(&[(0.0, 1.0), (1.0, 2.0)], 0.75, 1),
            Err(AggregateError::TooFewPoints { .. })
        ));
        assert!(matches!(
            loess_smooth(&[(0.0, 1.0), (1.0, f64::NAN), (2.0, 0.0)], 0.75, 1),
            Err(AggregateError::NonFinite { index: 1 })
        ));
        assert!(matches!(
            loess_smooth(&[(0.0, 1.0); 4], 0.0, 1),
            Err(AggregateError::BadSpan(_))
        ));
        assert!(matches!(
            loess_smooth(&[(0.0, 1.0); 4], 0.5, 3),
            Err(AggregateError::BadDegree(3))
        ));
    }

    #[test]
    fn trend_series_keeps_support() {
        let raw = [
            (2000, Some(0.1)),
            (2001, None),
            (2002, Some(0.2)),
            (2003, Some(0.3)),
            (2004, Some(0.25)),
        ];
        let t = TrendSeries::new(&raw, 0.75, 1).unwrap();
        assert_eq!(t.points.len(), 5);
        assert!(t.points[1].loess.is_none());
        assert!(t.points.iter().filter(|p| p.ratio.is_some()).all(|p| p.loess.is_some()));
        assert!((ratio_delta(&t, 2003, 2004).unwrap() + 0.05).abs() < 1e-12);
        assert_eq!(ratio_delta(&t, 2000, 2001), None);
        let short = TrendSeries::new(&raw[..2], 0.75, 1).unwrap();
        assert!(short.points.iter().all(|p| p.loess.is_none()));
    }

    #[test]
    fn delta_examples() {
        let t = TrendSeries {
            points: vec![
                TrendPoint {
                    year: 2019,
                    ratio: Some(0.08),
                    loess: None,
                },
                TrendPoint {
                    year: 2020,
                    ratio: Some(0.07),
                    loess: None,
                },
            ],
        };
        assert!((ratio_delta(&t, 2019, 2020).unwrap() + 0.01).abs() < 1e-15);
        assert_eq!(ratio_delta(&t, 2019, 2019), Some(0.0));
    }

    #[test]
    fn exp_fit_rejects_zero_year() {
        let mut totals: BTreeMap<i32, u64> = (1971..=1975).map(|y| (y, 10)).collect();
        totals.insert(1973, 0);
        let err = exp_fit(&totals, YearRange::new(1971, 1975).unwrap()).unwrap_err();
        assert!(matches!(err, AggregateError::NonPositiveCount { year: 1973, .. }));
        totals.remove(&1973);
        assert!(matches!(
            exp_fit(&totals, YearRange::new(1971, 1975).unwrap()),
            Err(AggregateError::NonPositiveCount { year: 1973, .. })
        ));
    }

    #[test]
    fn exp_fit_constant() {
        let totals: BTreeMap<i32, u64> = (1971..=2019).map(|y| (y, 42)).collect();
        let fit = exp_fit(&totals, YearRange::GROWTH_FIT).unwrap();
        assert!(fit.b.abs() < 1e-9);
        assert!((fit.a - 42.0).abs() < 1e-9);
    }

    fn commits() -> impl Strategy<Value = Vec<ClassifiedCommit>> {
        let gender = prop_oneof![
            Just(AuthorGender::Male),
            Just(AuthorGender::Female),
            Just(AuthorGender::Unknown)
        ];
        let genders = proptest::collection::vec(gender, 8);
        (
            genders,
            proptest::collection::vec((0u32..8, 2000i32..2004, 0i32..3, 0usize..4), 0..200),
        )
            .prop_map(|(g, raw)| {
                raw.into_iter()
                    .map(|(a, y, o, r)| ClassifiedCommit {
                        author: a,
                        year: y,
                        offset: o * 60,
                        gender: g[a as usize],
                        region: [None, Some(Region::Europe), Some(Region::China), Some(Region::Africa)][r],
                    })
                    .collect()
            })
    }

    proptest! {
        #[test]
        fn threshold_monotone(v in commits(), t in 1u64..10, scope in prop_oneof![Just(ThresholdScope::Group), Just(ThresholdScope::Year)]) {
            for grouping in Grouping::ALL {
                let lo = build_cells(&v, grouping, t, scope);
                let hi = build_cells(&v, grouping, t + 1, scope);
                for (a, b) in lo.cells.iter().zip(&hi.cells) {
                    prop_assert_eq!((a.year, a.group, a.gender), (b.year, b.group, b.gender));
                    prop_assert!(b.author_count <= a.author_count);
                    prop_assert_eq!(a.commit_count, b.commit_count);
                }
            }
        }

        #[test]
        fn sharded_merge_equals_whole(v in commits(), cut1 in 0usize..200, cut2 in 0usize..200) {
            let (c1, c2) = (cut1.min(v.len()).min(cut2.min(v.len())), cut1.min(v.len()).max(cut2.min(v.len())));
            for grouping in Grouping::ALL {
                let whole = build_cells(&v, grouping, 3, ThresholdScope::Group);
                let mut parts: Vec<CellAccumulator> = [&v[..c1], &v[c1..c2], &v[c2..]]
                    .iter()
                    .map(|s| { let mut a = CellAccumulator::new(grouping); s.iter().for_each(|c| a.add(c)); a })
                    .collect();
                let last = parts.pop().unwrap();
                let mid = parts.pop().unwrap();
                let mut first = parts.pop().unwrap();
                let mut right = mid;
                right.merge(last);
                first.merge(right);
                prop_assert_eq!(first.finish(3, ThresholdScope::Group), whole);
            }
        }

        #[test]
        fn ratios_bounded_and_complementary(v in commits()) {
            let set = build_cells(&v, Grouping::Offset, 2, ThresholdScope::Group);
            for metric in Metric::ALL {
                for (group, series) in set.ratio_series(metric) {
                    for (year, r) in series {
                        let Some(r) = r else { continue };
                        prop_assert!((0.0..=1.0).contains(&r));
                        let mirrored: Vec<AggregateCell> = set
                            .at(year, group)
                            .iter()
                            .map(|c| AggregateCell { gender: c.gender.mirrored(), ..*c })
                            .collect();
                        let male = female_ratio(&mirrored, metric).unwrap();
                        prop_assert!((r + male - 1.0).abs() < 1e-12);
                    }
                }
            }
            let total: u64 = set.cells.iter().map(|c| c.commit_count).sum();
            prop_assert_eq!(total, v.len() as u64);
        }

        #[test]
        fn exp_fit_scale_equivariant(counts in proptest::collection::vec(1u64..1_000_000, 10), k in 1u64..1000) {
            let range = YearRange::new(1990, 1999).unwrap();
            let base: BTreeMap<i32, u64> = (1990..).zip(counts.iter().copied()).collect();
            let scaled: BTreeMap<i32, u64> = base.iter().map(|(y, c)| (*y, c * k)).collect();
            let f1 = exp_fit(&base, range).unwrap();
            let f2 = exp_fit(&scaled, range).unwrap();
            prop_assert!((f1.b - f2.b).abs() < 1e-9);
            prop_assert!((f2.a / f1.a - k as f64).abs() < 1e-9 * k as f64);
        }
    }
}
