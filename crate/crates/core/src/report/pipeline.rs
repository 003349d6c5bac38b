// SPDX-License-Identifier: Apache-2.0

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::{self, File};
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::aggregate::{exp_fit, CellAccumulator, CellSet, ClassifiedCommit, Grouping, Metric, ThresholdScope};
use crate::civil::{utc_year, YearRange};
use crate::exec::Parallelism;
use crate::gender::{infer_author_gender, tokenize_name, AuthorGender, MajorityRule};
use crate::geo::{email_region, GeoMethod, NameFootprint, Strategy};
use crate::ingest::{parse_commit_stream, AuthorKey, IngestOptions, IngestStats, InputFormat};
use crate::refdata::{RefData, Region};
use crate::{Error, Result};

use super::{
    compute_trends, fmt_sig9, render_stacked_chart, write_cells_csv, write_growth_csv, write_ratios_csv, ChartPanel,
    ChartSpec, GroupTrend, GrowthRow, ReportError,
};

/// Everything one end-to-end run needs. Serialized into `config.json`.
#[derive(Clone, Debug, Serialize)]
pub struct PipelineConfig {
    /// Commit stream; `-` reads standard input.
    pub input: PathBuf,
    pub format: InputFormat,
    pub refdata: PathBuf,
    pub strategy: Strategy,
    pub threshold: u64,
    pub threshold_scope: ThresholdScope,
    pub years: YearRange,
    pub groupings: Vec<Grouping>,
    pub majority: MajorityRule,
    pub span: f64,
    pub fit_years: YearRange,
    pub out_dir: PathBuf,
    pub strict: bool,
    #[serde(skip)]
    pub parallelism: Parallelism,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            input: PathBuf::from("-"),
            format: InputFormat::Ndjson,
            refdata: PathBuf::from("refdata"),
            strategy: Strategy::Mixed,
            threshold: 5,
            threshold_scope: ThresholdScope::Group,
            years: YearRange::STUDY,
            groupings: Grouping::ALL.to_vec(),
            majority: MajorityRule::Gendered,
            span: 0.75,
            fit_years: YearRange::GROWTH_FIT,
            out_dir: PathBuf::from("out"),
            strict: false,
            parallelism: Parallelism::default(),
        }
    }
}

impl PipelineConfig {
    /// Checks settings and paths without touching the output directory.
    pub fn validate(&self) -> Result<()> {
        if !(self.span > 0.0 && self.span <= 1.0) {
            return Err(Error::Config(format!("span {} outside (0, 1]", self.span)));
        }
        if self.threshold == 0 {
            return Err(Error::Config("threshold must be at least 1".into()));
        }
        if self.years.clamp_to(&YearRange::STUDY) != Some(self.years) {
            return Err(Error::Config(format!(
                "years {} outside {}",
                self.years,
                YearRange::STUDY
            )));
        }
        if self.groupings.is_empty() {
            return Err(Error::Config("no grouping selected".into()));
        }
        if !self.refdata.is_dir() {
            return Err(Error::RefData(crate::refdata::RefDataError::Io {
                path: self.refdata.clone(),
                source: io::Error::new(io::ErrorKind::NotFound, "reference data directory not found"),
            }));
        }
        check_input(&self.input)
    }

    fn groupings_sorted(&self) -> Vec<Grouping> {
        let mut g = self.groupings.clone();
        g.sort_unstable();
        g.dedup();
        g
    }
}

/// Fails unless `path` is `-` or an existing file.
pub fn check_input(path: &Path) -> Result<()> {
    if path.as_os_str() == "-" || path.is_file() {
        Ok(())
    } else {
        Err(Error::Input {
            path: path.to_owned(),
            source: io::Error::new(io::ErrorKind::NotFound, "input file not found"),
        })
    }
}

/// Opens a file, or standard input for `-`.
pub fn open_input(path: &Path) -> Result<Box<dyn BufRead>> {
    if path.as_os_str() == "-" {
        return Ok(Box::new(BufReader::new(io::stdin())));
    }
    let file = File::open(path).map_err(|source| Error::Input {
        path: path.to_owned(),
        source,
    })?;
    Ok(Box::new(BufReader::with_capacity(1 << 20, file)))
}

/// Inference results for one ⟨name, email⟩ identity.
#[derive(Clone, Debug)]
pub(crate) struct AuthorProfile {
    pub gender: AuthorGender,
    pub footprint: NameFootprint,
    pub email_region: Option<Region>,
}

impl AuthorProfile {
    pub fn new(name: &str, email: &[u8], refs: &RefData, majority: MajorityRule) -> Self {
        let tokens = tokenize_name(name);
        AuthorProfile {
            gender: infer_author_gender(&tokens, &refs.gender, majority),
            footprint: NameFootprint::from_refs(&tokens, refs),
            email_region: email_region(email, &refs.cctld),
        }
    }
}

/// Region found by each technique for one commit, and the one the strategy
/// keeps.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct GeoOutcome {
    pub email: Option<Region>,
    pub tzname: Option<Region>,
    pub region: Option<Region>,
    pub method: GeoMethod,
}

pub(crate) fn resolve(profile: &AuthorProfile, ts: i64, offset: i32, refs: &RefData, strategy: Strategy) -> GeoOutcome {
    let email = profile.email_region;
    let tzname = profile.footprint.resolve_tzname(ts, offset, &refs.tz).region;
    let use_email = match strategy {
        Strategy::Email => true,
        Strategy::Tzname => false,
        Strategy::Mixed => offset == 0,
    };
    let (region, method) = match (use_email, email, tzname) {
        (true, Some(r), _) => (Some(r), GeoMethod::Email),
        (false, _, Some(r)) => (Some(r), GeoMethod::Tzname),
        _ => (None, GeoMethod::Unresolved),
    };
    GeoOutcome {
        email,
        tzname,
        region,
        method,
    }
}

/// Running totals of a run.
pub(crate) struct Tally {
    pub accs: Vec<CellAccumulator>,
    pub gender_commits: [u64; 3],
    pub methods: [u64; 3],
    pub email_resolved: u64,
    pub tzname_resolved: u64,
    pub agreement: BTreeMap<(Region, Region), u64>,
    pub year_commits: BTreeMap<i32, u64>,
    pub year_zero_offset: BTreeMap<i32, u64>,
    pub year_authors: HashSet<(i32, u32)>,
}

impl Tally {
    pub fn new(groupings: &[Grouping]) -> Self {
        Tally {
            accs: groupings.iter().map(|g| CellAccumulator::new(*g)).collect(),
            gender_commits: [0; 3],
            methods: [0; 3],
            email_resolved: 0,
            tzname_resolved: 0,
            agreement: BTreeMap::new(),
            year_commits: BTreeMap::new(),
            year_zero_offset: BTreeMap::new(),
            year_authors: HashSet::new(),
        }
    }

    pub fn add(&mut self, c: &ClassifiedCommit) {
        for acc in &mut self.accs {
            acc.add(c);
        }
        self.gender_commits[c.gender.index()] += 1;
        *self.year_commits.entry(c.year).or_default() += 1;
        if c.offset == 0 {
            *self.year_zero_offset.entry(c.year).or_default() += 1;
        }
        self.year_authors.insert((c.year, c.author));
    }

    pub fn add_geo(&mut self, g: &GeoOutcome) {
        self.methods[g.method as usize] += 1;
        self.email_resolved += u64::from(g.email.is_some());
        self.tzname_resolved += u64::from(g.tzname.is_some());
        if let (Some(e), Some(t)) = (g.email, g.tzname) {
            *self.agreement.entry((e, t)).or_default() += 1;
        }
    }

    pub fn year_author_counts(&self) -> BTreeMap<i32, u64> {
        let mut out = BTreeMap::new();
        for (year, _) in &self.year_authors {
            *out.entry(*year).or_default() += 1;
        }
        out
    }
}

fn round9(x: f64) -> f64 {
    fmt_sig9(x).parse().unwrap_or(x)
}

fn share(n: u64, d: u64) -> Option<f64> {
    (d > 0).then(|| round9(n as f64 / d as f64))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GenderCounts {
    pub male: u64,
    pub female: u64,
    pub unknown: u64,
    /// Share with a detected gender.
    pub detected: Option<f64>,
}

impl GenderCounts {
    fn new(c: [u64; 3]) -> Self {
        let total = c.iter().sum();
        GenderCounts {
            male: c[AuthorGender::Male.index()],
            female: c[AuthorGender::Female.index()],
            unknown: c[AuthorGender::Unknown.index()],
            detected: share(total - c[AuthorGender::Unknown.index()], total),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Recall {
    pub resolved: u64,
    pub share: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GeoCoverage {
    pub strategy: Strategy,
    /// Commits per method actually used by the strategy.
    pub methods: BTreeMap<&'static str, u64>,
    /// Commits each technique resolves when run on every commit.
    pub recall: BTreeMap<&'static str, Recall>,
    /// Email region (outer) against tz region (inner) where both resolve.
    pub agreement: BTreeMap<String, BTreeMap<String, u64>>,
    pub agreement_share: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Conservation {
    pub records_read: u64,
    pub rejected_malformed: u64,
    pub rejected_name: u64,
    pub rejected_timestamp: u64,
    pub records_kept: u64,
    /// Commits in the cells of each grouping.
    pub aggregated: BTreeMap<&'static str, u64>,
    /// Region-grouping commits without a region.
    pub unresolved_region: u64,
    pub balanced: bool,
}

/// Per-run diagnostics written to `coverage.json`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Coverage {
    pub ingest: IngestStats,
    pub gender_authors: GenderCounts,
    pub gender_commits: GenderCounts,
    pub geolocation: GeoCoverage,
    /// Share of commits at UTC offset 0 per year; null for years without
    /// commits.
    pub tzz_share: BTreeMap<String, Option<f64>>,
    pub conservation: Conservation,
}

#[derive(Clone, Debug)]
pub struct PipelineSummary {
    pub stats: IngestStats,
    pub coverage: Coverage,
    pub cells: Vec<CellSet>,
    pub outputs: Vec<PathBuf>,
}

const CHUNK: usize = 1 << 16;

/// Parses, classifies, geolocates and aggregates the input, then writes
/// every artifact into `config.out_dir`.
pub fn run_pipeline(config: &PipelineConfig) -> Result<PipelineSummary> {
    config.validate()?;
    let refs = RefData::load(&config.refdata)?;
    let reader = open_input(&config.input)?;
    let groupings = config.groupings_sorted();

    let opts = IngestOptions {
        format: config.format,
        strict: config.strict,
        years: config.years,
    };
    let mut stream = parse_commit_stream(reader, opts);
    let mut interner: HashMap<AuthorKey, u32> = HashMap::new();
    let mut profiles: Vec<AuthorProfile> = Vec::new();
    let mut tally = Tally::new(&groupings);
    let par = config.parallelism;

    loop {
        let chunk = stream.next_chunk(CHUNK, par)?;
        if chunk.is_empty() {
            if stream.is_done() {
                break;
            }
            continue;
        }
        let mut ids = Vec::with_capacity(chunk.len());
        let mut fresh: Vec<usize> = Vec::new();
        for (i, c) in chunk.iter().enumerate() {
            let next = (profiles.len() + fresh.len()) as u32;
            let id = *interner.entry(c.author_key()).or_insert_with(|| {
                fresh.push(i);
                next
            });
            ids.push(id);
        }
        let new_profiles = par.map(&fresh, |&i| {
            AuthorProfile::new(&chunk[i].name, &chunk[i].record.author_email, &refs, config.majority)
        });
        profiles.extend(new_profiles);

        let resolved = par.map(&ids.iter().copied().zip(&chunk).collect::<Vec<_>>(), |&(id, c)| {
            let profile = &profiles[id as usize];
            let ts = c.record.author_timestamp;
            let offset = c.record.utc_offset_minutes;
            let geo = resolve(profile, ts, offset, &refs, config.strategy);
            let commit = ClassifiedCommit {
                author: id,
                year: utc_year(ts),
                offset,
                gender: profile.gender,
                region: geo.region,
            };
            (commit, geo)
        });
        for (commit, geo) in &resolved {
            tally.add(commit);
            tally.add_geo(geo);
        }
    }
    let stats = stream.into_stats();
    log::info!(
        "read {} records, kept {}, {} distinct authors",
        stats.records_read,
        stats.records_kept,
        profiles.len()
    );

    let mut author_genders = [0u64; 3];
    for p in &profiles {
        author_genders[p.gender.index()] += 1;
    }
    let artifacts = Artifacts::build(
        &tally,
        config.threshold,
        config.threshold_scope,
        config.span,
        config.fit_years,
    )?;
    let coverage = coverage(&stats, &tally, &artifacts.cells, author_genders, config);

    fs::create_dir_all(&config.out_dir).map_err(|source| Error::Output {
        path: config.out_dir.clone(),
        source,
    })?;
    let mut outputs = artifacts.write(&config.out_dir)?;
    outputs.push(write_json(&config.out_dir.join("coverage.json"), &coverage)?);
    outputs.push(write_json(&config.out_dir.join("config.json"), config)?);
    Ok(PipelineSummary {
        stats,
        coverage,
        cells: artifacts.cells,
        outputs,
    })
}

fn coverage(
    stats: &IngestStats,
    tally: &Tally,
    cells: &[CellSet],
    author_genders: [u64; 3],
    config: &PipelineConfig,
) -> Coverage {
    let kept = stats.records_kept;
    let methods = GeoMethod::ALL
        .into_iter()
        .map(|m| (m.as_str(), tally.methods[m as usize]))
        .collect();
    let resolved = tally.methods[GeoMethod::Email as usize] + tally.methods[GeoMethod::Tzname as usize];
    let recall = BTreeMap::from([
        (
            "email",
            Recall {
                resolved: tally.email_resolved,
                share: share(tally.email_resolved, kept),
            },
        ),
        (
            "tzname",
            Recall {
                resolved: tally.tzname_resolved,
                share: share(tally.tzname_resolved, kept),
            },
        ),
        (
            "strategy",
            Recall {
                resolved,
                share: share(resolved, kept),
            },
        ),
    ]);
    let mut agreement: BTreeMap<String, BTreeMap<String, u64>> = BTreeMap::new();
    let (mut both, mut same) = (0, 0);
    for (&(e, t), &n) in &tally.agreement {
        agreement.entry(e.to_string()).or_default().insert(t.to_string(), n);
        both += n;
        if e == t {
            same += n;
        }
    }
    let tzz_share = config
        .years
        .years()
        .map(|y| {
            let total = tally.year_commits.get(&y).copied().unwrap_or(0);
            let zero = tally.year_zero_offset.get(&y).copied().unwrap_or(0);
            (y.to_string(), share(zero, total))
        })
        .collect();

    let mut aggregated = BTreeMap::new();
    let mut unresolved_region = 0;
    let mut balanced = stats.is_balanced();
    for set in cells {
        let in_cells: u64 = set.cells.iter().map(|c| c.commit_count).sum();
        let unresolved: u64 = set.unresolved.values().sum();
        aggregated.insert(set.grouping.as_str(), in_cells);
        if set.grouping == Grouping::Region {
            unresolved_region = unresolved;
        }
        balanced &= in_cells + unresolved == kept;
    }
    Coverage {
        ingest: stats.clone(),
        gender_authors: GenderCounts::new(author_genders),
        gender_commits: GenderCounts::new(tally.gender_commits),
        geolocation: GeoCoverage {
            strategy: config.strategy,
            methods,
            recall,
            agreement,
            agreement_share: share(same, both),
        },
        tzz_share,
        conservation: Conservation {
            records_read: stats.records_read,
            rejected_malformed: stats.rejected_malformed,
            rejected_name: stats.rejected_name,
            rejected_timestamp: stats.rejected_timestamp,
            records_kept: kept,
            aggregated,
            unresolved_region,
            balanced,
        },
    }
}

/// Tables and charts derived from a tally.
pub(crate) struct Artifacts {
    pub cells: Vec<CellSet>,
    pub trends: Vec<GroupTrend>,
    pub growth: Vec<GrowthRow>,
}

impl Artifacts {
    pub fn build(
        tally: &Tally,
        threshold: u64,
        scope: ThresholdScope,
        span: f64,
        fit_years: YearRange,
    ) -> Result<Self> {
        let cells: Vec<CellSet> = tally.accs.iter().map(|a| a.finish(threshold, scope)).collect();
        let mut trends = Vec::new();
        for set in &cells {
            trends.extend(compute_trends(set, span)?);
        }
        let growth = vec![
            growth_row(Metric::Commits, &tally.year_commits, fit_years),
            growth_row(Metric::Authors, &tally.year_author_counts(), fit_years),
        ];
        Ok(Artifacts { cells, trends, growth })
    }

    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        let mut outputs = Vec::new();
        let cells = dir.join("cells.csv");
        write_file(&cells, |w| write_cells_csv(w, &self.cells))?;
        outputs.push(cells);
        let ratios = dir.join("ratios.csv");
        write_file(&ratios, |w| write_ratios_csv(w, &self.trends))?;
        outputs.push(ratios);
        let growth = dir.join("growth.csv");
        write_file(&growth, |w| write_growth_csv(w, &self.growth))?;
        outputs.push(growth);
        outputs.extend(write_charts(dir, &self.cells, &self.trends)?);
        Ok(outputs)
    }
}

fn growth_row(series: Metric, totals: &BTreeMap<i32, u64>, fit_years: YearRange) -> GrowthRow {
    let present = match (totals.keys().next(), totals.keys().next_back()) {
        (Some(&a), Some(&b)) => YearRange::new(a, b),
        _ => None,
    };
    let range = present.and_then(|p| fit_years.clamp_to(&p));
    let fit = match range {
        Some(r) if r.len() >= 2 => match exp_fit(totals, r) {
            Ok(fit) => Some(fit),
            Err(e) => {
                log::warn!("growth fit of {series} skipped: {e}");
                None
            }
        },
        _ => {
            log::warn!("growth fit of {series} skipped: fewer than two years of data inside {fit_years}");
            None
        }
    };
    GrowthRow {
        series,
        fit,
        range: range.unwrap_or(fit_years),
    }
}

fn chart_title(grouping: Grouping, metric: Metric) -> String {
    let what = match metric {
        Metric::Commits => "commits",
        Metric::Authors => "active authors",
    };
    format!("Female share of {what} by {grouping}")
}

/// Writes `charts/{grouping}_{metric}.svg` for every cell set with data.
pub(crate) fn write_charts(dir: &Path, cells: &[CellSet], trends: &[GroupTrend]) -> Result<Vec<PathBuf>> {
    let mut outputs = Vec::new();
    let chart_dir = dir.join("charts");
    for set in cells {
        if set.is_empty() {
            log::warn!("no {} cells, charts skipped", set.grouping);
            continue;
        }
        let volumes = set.group_volumes();
        for metric in Metric::ALL {
            let panels: Vec<ChartPanel> = trends
                .iter()
                .filter(|t| t.grouping == set.grouping && t.metric == metric)
                .map(|t| ChartPanel {
                    label: t.group.label(),
                    volume: volumes.get(&t.group).copied().unwrap_or(0),
                    points: t.series.points.clone(),
                })
                .collect();
            let spec = ChartSpec {
                title: chart_title(set.grouping, metric),
                ..ChartSpec::default()
            };
            let svg = match render_stacked_chart(&panels, &spec) {
                Ok(svg) => svg,
                Err(ReportError::NothingToPlot) => {
                    log::warn!("{}: no defined ratios, chart skipped", spec.title);
                    continue;
                }
                Err(e) => return Err(e.into()),
            };
            fs::create_dir_all(&chart_dir).map_err(|source| Error::Output {
                path: chart_dir.clone(),
                source,
            })?;
            let path = chart_dir.join(format!("{}_{}.svg", set.grouping, metric));
            fs::write(&path, svg).map_err(|source| Error::Output {
                path: path.clone(),
                source,
            })?;
            outputs.push(path);
        }
    }
    Ok(outputs)
}

pub(crate) fn write_file<F>(path: &Path, f: F) -> Result<()>
where
    F: FnOnce(&mut BufWriter<File>) -> std::result::Result<(), ReportError>,
{
    let file = File::create(path).map_err(|source| Error::Output {
        path: path.to_owned(),
        source,
    })?;
    let mut w = BufWriter::new(file);
    f(&mut w)?;
    w.flush().map_err(|source| Error::Output {
        path: path.to_owned(),
        source,
    })
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<PathBuf> {
    write_file(path, |w| {
        serde_json::to_writer_pretty(&mut *w, value)?;
        w.write_all(b"\n").map_err(serde_json::Error::io)?;
        Ok(())
    })?;
    Ok(path.to_owned())
}
