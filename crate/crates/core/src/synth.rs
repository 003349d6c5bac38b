// SPDX-License-Identifier: Apache-2.0

//! Synthetic commit corpora with a ground-truth ledger.
//!
//! Every author gets a name built from tokens that only occur in one
//! region's places, a home place where the name has positive incidence, and
//! commits whose UTC offset is the home place's offset at the commit
//! instant. A few "TZZ" authors record every commit at offset 0. Under the
//! mixed strategy and the gendered majority rule the inferred labels are
//! therefore known in advance, and the ledger predicts every cell exactly.
//!
//! The female share of each region follows a linear trend; in regions with
//! an embedded dip the last year's share drops by a fixed amount and the
//! region is regenerated until both the commit and the author ratio fall.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::aggregate::{AggregateCell, CellSet, GroupKey, Grouping, Metric};
use crate::civil::{utc_year, year_start, YearRange};
use crate::gender::{AuthorGender, GenderClass};
use crate::ingest::{IngestStats, NameRejection};
use crate::refdata::{title_case, PlaceIdx, RefData, Region};
use crate::report::{fmt_opt, write_cells_csv};
use crate::{Error, Result};

#[derive(Clone, Debug, Serialize)]
pub struct CorpusSpec {
    /// Valid commits to emit (reject lines come on top).
    pub commits: usize,
    pub years: YearRange,
    pub seed: u64,
    /// Regions whose last-year female share drops by `dip`.
    pub dip_regions: Vec<Region>,
    pub dip: f64,
    /// Fraction of authors recording every commit at offset 0.
    pub tzz_noise: f64,
    pub unknown_share: f64,
    /// Author threshold the ledger is computed for.
    pub threshold: u64,
    /// Lines per reject kind; `None` scales with `commits`.
    pub rejects_per_kind: Option<usize>,
}

impl Default for CorpusSpec {
    fn default() -> Self {
        CorpusSpec {
            commits: 50_000,
            years: YearRange {
                first: 2000,
                last: 2020,
            },
            seed: 0x5eed,
            dip_regions: Region::ALL.to_vec(),
            dip: 0.06,
            tzz_noise: 0.05,
            unknown_share: 0.12,
            threshold: 5,
            rejects_per_kind: None,
        }
    }
}

impl CorpusSpec {
    fn rejects(&self) -> usize {
        self.rejects_per_kind.unwrap_or((self.commits / 5000).max(1))
    }
}

/// Ground truth of one generated author.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AuthorTruth {
    pub name: String,
    pub email: String,
    pub gender: AuthorGender,
    pub region: Region,
    pub home: String,
    /// Email resolves to `region` through its ccTLD.
    pub cctld_email: bool,
    pub tzz: bool,
}

#[derive(Clone, Copy, Debug)]
struct SynthCommit {
    author: u32,
    ts: i64,
    offset: i32,
}

/// Expected outputs of a run with the default pipeline settings.
#[derive(Clone, Debug, Serialize)]
pub struct Ledger {
    pub spec: CorpusSpec,
    pub strategy: &'static str,
    pub majority: &'static str,
    pub ingest: IngestStats,
    pub authors: usize,
    /// Region-grouping commits expected to stay unresolved, per year.
    pub unresolved: BTreeMap<i32, u64>,
    /// Realized female ratios of the last two years per dip region.
    pub dips: BTreeMap<String, DipCheck>,
    #[serde(skip)]
    pub cells: Vec<CellSet>,
}

#[derive(Clone, Debug, Serialize)]
pub struct DipCheck {
    pub commits: [Option<f64>; 2],
    pub authors: [Option<f64>; 2],
    pub attempts: u32,
}

pub struct Corpus {
    pub authors: Vec<AuthorTruth>,
    commits: Vec<SynthCommit>,
    ids: Vec<[u8; 20]>,
    rejects: Vec<String>,
    order: Vec<u32>,
    pub ledger: Ledger,
}

/// Tokens usable for one region.
#[derive(Debug, Default)]
struct RegionPools {
    male: Vec<String>,
    female: Vec<String>,
    andy: Vec<String>,
    surnames: Vec<String>,
    tlds: Vec<String>,
}

fn plain_token(t: &str) -> bool {
    !t.is_empty() && t.chars().all(char::is_alphabetic) && title_case(t).to_lowercase() == t
}

fn build_pools(refs: &RefData) -> Vec<RegionPools> {
    let mut token_regions: BTreeMap<&str, BTreeSet<Region>> = BTreeMap::new();
    for table in [&refs.forenames, &refs.surnames] {
        for token in table.tokens() {
            let set = token_regions.entry(token).or_default();
            for &(place, inc) in table.entries(token) {
                if inc > 0.0 {
                    set.insert(refs.places.get(place).region);
                }
            }
        }
    }
    let mut pools: Vec<RegionPools> = Region::ALL.iter().map(|_| RegionPools::default()).collect();
    for (token, regions) in &token_regions {
        if regions.len() != 1 || !plain_token(token) {
            continue;
        }
        let region = *regions.iter().next().expect("one region");
        let pool = &mut pools[region.index()];
        let class = refs.gender.lookup(token);
        if !refs.forenames.entries(token).is_empty() {
            match class {
                GenderClass::Male | GenderClass::MostlyMale => pool.male.push(token.to_string()),
                GenderClass::Female | GenderClass::MostlyFemale => pool.female.push(token.to_string()),
                GenderClass::Andy => pool.andy.push(token.to_string()),
                GenderClass::Unknown => {}
            }
        }
        if !refs.surnames.entries(token).is_empty() && matches!(class, GenderClass::Unknown) {
            pool.surnames.push(token.to_string());
        }
    }
    for region in Region::ALL {
        pools[region.index()].tlds = refs.cctld.tlds_for(region).into_iter().map(str::to_owned).collect();
    }
    pools
}

const REGION_WEIGHTS: [f64; Region::COUNT] = [2.0, 1.0, 3.0, 2.0, 4.0, 3.0, 5.0, 5.0, 1.0, 2.0, 2.0, 3.0];
const GROWTH: f64 = 1.08;
const CELL_FLOOR: usize = 40;
const GENERIC_DOMAINS: [&str; 4] = [
    "example.com",
    "mail.example.org",
    "devs.example.net",
    "users.example.com",
];

/// Commit quota per (region, year) by largest remainder.
fn quotas(spec: &CorpusSpec) -> Vec<Vec<usize>> {
    let years = spec.years.len();
    let cells = Region::COUNT * years;
    let floor = CELL_FLOOR.min(spec.commits / cells);
    let rest = spec.commits - floor * cells;
    let weights: Vec<f64> = (0..cells)
        .map(|i| REGION_WEIGHTS[i / years] * GROWTH.powi((i % years) as i32))
        .collect();
    let total: f64 = weights.iter().sum();
    let exact: Vec<f64> = weights.iter().map(|w| rest as f64 * w / total).collect();
    let mut q: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let mut left = rest - q.iter().sum::<usize>();
    let mut by_frac: Vec<usize> = (0..cells).collect();
    by_frac.sort_by(|&a, &b| {
        (exact[b] - exact[b].floor())
            .total_cmp(&(exact[a] - exact[a].floor()))
            .then(a.cmp(&b))
    });
    for &i in &by_frac {
        if left == 0 {
            break;
        }
        q[i] += 1;
        left -= 1;
    }
    (0..Region::COUNT)
        .map(|r| (0..years).map(|y| q[r * years + y] + floor).collect())
        .collect()
}

fn female_share(spec: &CorpusSpec, region: Region, year: i32) -> f64 {
    let base = 0.08 + 0.015 * (region.index() % 5) as f64;
    let trend = |y: i32| base + 0.005 * f64::from(y - spec.years.first);
    if year == spec.years.last && spec.dip_regions.contains(&region) && spec.years.len() >= 2 {
        (trend(year - 1) - spec.dip).max(0.0)
    } else {
        trend(year)
    }
}

struct RegionRun {
    authors: Vec<AuthorTruth>,
    homes: Vec<PlaceIdx>,
    commits: Vec<SynthCommit>,
}

fn email_slug(name: &str) -> String {
    name.chars()
        .filter_map(|c| match c {
            ' ' => Some('.'),
            c if c.is_ascii_alphanumeric() => Some(c.to_ascii_lowercase()),
            _ => None,
        })
        .collect()
}

#[allow(clippy::too_many_arguments)]
fn new_author(
    rng: &mut ChaCha8Rng,
    refs: &RefData,
    pools: &RegionPools,
    region: Region,
    gender: AuthorGender,
    serial: usize,
    tzz_noise: f64,
    zero_capable: &[bool],
) -> Result<(AuthorTruth, PlaceIdx)> {
    let missing = |what: &str| Error::Config(format!("no region-exclusive {what} for {region} in the reference data"));
    let surname = pools.surnames.choose(rng).ok_or_else(|| missing("surnames"))?;
    let forename = match gender {
        AuthorGender::Male => Some(pools.male.choose(rng).ok_or_else(|| missing("male forenames"))?),
        AuthorGender::Female => Some(pools.female.choose(rng).ok_or_else(|| missing("female forenames"))?),
        AuthorGender::Unknown if !pools.andy.is_empty() && rng.random_bool(0.5) => pools.andy.choose(rng),
        AuthorGender::Unknown => None,
    };
    let mut homes: Vec<PlaceIdx> = Vec::new();
    for token in forename.into_iter().chain([surname]) {
        for table in [&refs.forenames, &refs.surnames] {
            homes.extend(
                table
                    .entries(token)
                    .iter()
                    .filter(|(_, inc)| *inc > 0.0)
                    .map(|(p, _)| *p),
            );
        }
    }
    homes.sort_unstable();
    homes.dedup();
    let home = *homes.choose(rng).ok_or_else(|| missing("name incidences"))?;
    let name = match forename {
        Some(f) => format!("{} {}", title_case(f), title_case(surname)),
        None => title_case(surname),
    };
    let tzz = rng.random_bool(tzz_noise);
    let cctld_email = if tzz {
        rng.random_bool(0.5)
    } else {
        zero_capable[home.get()] || rng.random_bool(0.4)
    };
    let domain = if cctld_email {
        let tld = pools.tlds.choose(rng).ok_or_else(|| missing("ccTLDs"))?;
        format!("example.{tld}")
    } else {
        GENERIC_DOMAINS.choose(rng).expect("non-empty").to_string()
    };
    let email = format!("{}.r{}n{serial}@{domain}", email_slug(&name), region.index());
    Ok((
        AuthorTruth {
            name,
            email,
            gender,
            region,
            home: refs.places.get(home).id.clone(),
            cctld_email,
            tzz,
        },
        home,
    ))
}

fn generate_region(
    spec: &CorpusSpec,
    refs: &RefData,
    pools: &RegionPools,
    region: Region,
    quota: &[usize],
    zero_capable: &[bool],
    rng: &mut ChaCha8Rng,
) -> Result<RegionRun> {
    let mut run = RegionRun {
        authors: Vec::new(),
        homes: Vec::new(),
        commits: Vec::new(),
    };
    let mut by_gender: [Vec<u32>; 3] = Default::default();
    for (yi, year) in spec.years.years().enumerate() {
        let start = year_start(year);
        let len = year_start(year + 1) - start;
        let female = female_share(spec, region, year);
        let mut used: HashSet<u32> = HashSet::new();
        let mut remaining = quota[yi];
        while remaining > 0 {
            let u: f64 = rng.random();
            let gender = if u < spec.unknown_share {
                AuthorGender::Unknown
            } else if u < spec.unknown_share + (1.0 - spec.unknown_share) * female {
                AuthorGender::Female
            } else {
                AuthorGender::Male
            };
            let k = if rng.random_bool(0.7) {
                rng.random_range(5..=12)
            } else {
                rng.random_range(1..=4)
            };
            let k = k.min(remaining);
            let candidates: Vec<u32> = by_gender[gender.index()]
                .iter()
                .copied()
                .filter(|a| !used.contains(a))
                .collect();
            let author = match candidates.choose(rng) {
                Some(&a) if rng.random_bool(0.65) => a,
                _ => {
                    let serial = run.authors.len();
                    let (truth, home) =
                        new_author(rng, refs, pools, region, gender, serial, spec.tzz_noise, zero_capable)?;
                    run.authors.push(truth);
                    run.homes.push(home);
                    by_gender[gender.index()].push(serial as u32);
                    serial as u32
                }
            };
            used.insert(author);
            for _ in 0..k {
                let ts = start + rng.random_range(0..len);
                let offset = if run.authors[author as usize].tzz {
                    0
                } else {
                    refs.tz.offset_at(run.homes[author as usize], ts)
                };
                run.commits.push(SynthCommit { author, ts, offset });
            }
            remaining -= k;
        }
    }
    Ok(run)
}

/// Region the default pipeline is expected to assign to a commit.
fn expected_region(author: &AuthorTruth, offset: i32) -> Option<Region> {
    if offset != 0 || author.cctld_email {
        Some(author.region)
    } else {
        None
    }
}

/// Brute-force cell recount for one grouping.
fn recount(authors: &[AuthorTruth], commits: &[SynthCommit], grouping: Grouping, threshold: u64) -> CellSet {
    let mut per_author: BTreeMap<(i32, GroupKey, u32), u64> = BTreeMap::new();
    for c in commits {
        let a = &authors[c.author as usize];
        let group = match grouping {
            Grouping::Offset => GroupKey::Offset(c.offset),
            Grouping::Region => match expected_region(a, c.offset) {
                Some(r) => GroupKey::Region(r),
                None => continue,
            },
        };
        *per_author.entry((utc_year(c.ts), group, c.author)).or_default() += 1;
    }
    let mut cells: BTreeMap<(i32, GroupKey), [(u64, u64); 3]> = BTreeMap::new();
    for (&(year, group, author), &n) in &per_author {
        let slot = &mut cells.entry((year, group)).or_default()[authors[author as usize].gender.index()];
        slot.0 += n;
        slot.1 += u64::from(n >= threshold);
    }
    let cells = cells
        .into_iter()
        .flat_map(|((year, group), counts)| {
            AuthorGender::ALL.into_iter().map(move |gender| AggregateCell {
                year,
                group,
                gender,
                commit_count: counts[gender.index()].0,
                author_count: counts[gender.index()].1,
            })
        })
        .collect();
    CellSet::from_cells(grouping, cells)
}

fn ledger_ratio(set: &CellSet, year: i32, group: GroupKey, metric: Metric) -> Option<f64> {
    let (mut f, mut m) = (0u64, 0u64);
    for c in set.cells.iter().filter(|c| c.year == year && c.group == group) {
        let v = match metric {
            Metric::Commits => c.commit_count,
            Metric::Authors => c.author_count,
        };
        match c.gender {
            AuthorGender::Female => f += v,
            AuthorGender::Male => m += v,
            AuthorGender::Unknown => {}
        }
    }
    (f + m > 0).then(|| f as f64 / (f + m) as f64)
}

fn dip_holds(run: &RegionRun, spec: &CorpusSpec, region: Region) -> (bool, DipCheck) {
    let set = recount(&run.authors, &run.commits, Grouping::Region, spec.threshold);
    let g = GroupKey::Region(region);
    let (a, b) = (spec.years.last - 1, spec.years.last);
    let commits = [
        ledger_ratio(&set, a, g, Metric::Commits),
        ledger_ratio(&set, b, g, Metric::Commits),
    ];
    let authors = [
        ledger_ratio(&set, a, g, Metric::Authors),
        ledger_ratio(&set, b, g, Metric::Authors),
    ];
    let falls = |v: [Option<f64>; 2]| matches!(v, [Some(x), Some(y)] if y < x);
    (
        falls(commits) && falls(authors),
        DipCheck {
            commits,
            authors,
            attempts: 0,
        },
    )
}

const MAX_ATTEMPTS: u32 = 500;

/// Generates a corpus and its ledger from the reference tables.
pub fn generate(spec: &CorpusSpec, refs: &RefData) -> Result<Corpus> {
    if spec.commits < Region::COUNT * spec.years.len() {
        return Err(Error::Config(format!(
            "need at least {} commits for {} regions over {}",
            Region::COUNT * spec.years.len(),
            Region::COUNT,
            spec.years
        )));
    }
    if spec.years.clamp_to(&YearRange::STUDY) != Some(spec.years) {
        return Err(Error::Config(format!(
            "years {} outside {}",
            spec.years,
            YearRange::STUDY
        )));
    }
    let pools = build_pools(refs);
    let zero_capable: Vec<bool> = refs
        .places
        .iter()
        .map(|(idx, _)| refs.tz.transitions(idx).iter().any(|(_, off)| *off == 0))
        .collect();
    let quotas = quotas(spec);

    let mut authors = Vec::new();
    let mut commits = Vec::new();
    let mut dips = BTreeMap::new();
    for region in Region::ALL {
        let mut attempt = 0u32;
        let run = loop {
            attempt += 1;
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            rng.set_stream((region.index() as u64) << 32 | u64::from(attempt));
            let run = generate_region(
                spec,
                refs,
                &pools[region.index()],
                region,
                &quotas[region.index()],
                &zero_capable,
                &mut rng,
            )?;
            if !spec.dip_regions.contains(&region) {
                break run;
            }
            let (ok, mut check) = dip_holds(&run, spec, region);
            if ok {
                check.attempts = attempt;
                dips.insert(region.to_string(), check);
                break run;
            }
            if attempt == MAX_ATTEMPTS {
                return Err(Error::Config(format!(
                    "could not realize the {} dip in {region} within {MAX_ATTEMPTS} attempts; use more commits",
                    spec.dip
                )));
            }
        };
        let base = authors.len() as u32;
        authors.extend(run.authors);
        commits.extend(run.commits.into_iter().map(|c| SynthCommit {
            author: c.author + base,
            ..c
        }));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(u64::MAX);
    let mut seen = HashSet::with_capacity(commits.len());
    let ids: Vec<[u8; 20]> = (0..commits.len())
        .map(|_| loop {
            let mut id = [0u8; 20];
            rng.fill_bytes(&mut id);
            if seen.insert(id) {
                break id;
            }
        })
        .collect();

    let (rejects, ingest_extra) = reject_lines(spec, &mut rng, &ids);
    let mut ingest = IngestStats {
        records_read: commits.len() as u64,
        records_kept: commits.len() as u64,
        ..IngestStats::default()
    };
    ingest.merge(&ingest_extra);

    let total = commits.len() + rejects.len();
    let mut order: Vec<u32> = (0..total as u32).collect();
    order.shuffle(&mut rng);

    let cells: Vec<CellSet> = Grouping::ALL
        .into_iter()
        .map(|g| recount(&authors, &commits, g, spec.threshold))
        .collect();
    let mut unresolved = BTreeMap::new();
    for c in &commits {
        if expected_region(&authors[c.author as usize], c.offset).is_none() {
            *unresolved.entry(utc_year(c.ts)).or_default() += 1;
        }
    }
    let ledger = Ledger {
        spec: spec.clone(),
        strategy: "mixed",
        majority: "gendered",
        ingest,
        authors: authors.len(),
        unresolved,
        dips,
        cells,
    };
    Ok(Corpus {
        authors,
        commits,
        ids,
        rejects,
        order,
        ledger,
    })
}

fn hex(id: &[u8; 20]) -> String {
    id.iter().map(|b| format!("{b:02x}")).collect()
}

/// Lines that the ingest stage must reject, with the stats they produce.
fn reject_lines(spec: &CorpusSpec, rng: &mut ChaCha8Rng, valid_ids: &[[u8; 20]]) -> (Vec<String>, IngestStats) {
    let n = spec.rejects();
    let mut stats = IngestStats::default();
    let mut lines = Vec::new();
    let mut next_id = || {
        let mut id = [0u8; 20];
        rng.fill_bytes(&mut id);
        id[0] = 0xff;
        hex(&id)
    };
    let window = (year_start(spec.years.first), year_start(spec.years.last + 1));
    let obj = |id: &str, name: serde_json::Value, ts: i64, offset: i64| {
        serde_json::json!({
            "id": id,
            "author_name": name,
            "author_email": "someone@example.com",
            "author_date_unix": ts,
            "author_tz_offset_min": offset,
        })
        .to_string()
    };
    let long_name = "a".repeat(101);
    for i in 0..n {
        let ts = window.0 + (i as i64 * 7919) % (window.1 - window.0);
        let names: [(NameRejection, serde_json::Value); 5] = [
            (
                NameRejection::NotUtf8,
                serde_json::json!([0xff, 0xfe, 0x41, 0x64, 0x61]),
            ),
            (NameRejection::EmailAddress, "jdoe@example.com".into()),
            (NameRejection::Blank, "   ".into()),
            (NameRejection::NonLetters, "####!!".into()),
            (NameRejection::TooLong, long_name.clone().into()),
        ];
        for (rule, name) in names {
            lines.push(obj(&next_id(), name, ts, 0));
            stats.rejected_name += 1;
            stats.rejected_name_by_rule.record(rule);
        }
        lines.push(obj(&next_id(), "Ada Lovelace".into(), -1 - i as i64, 0));
        lines.push(obj(&next_id(), "Ada Lovelace".into(), year_start(2021) + i as i64, 0));
        stats.rejected_timestamp += 2;

        lines.push(obj(&next_id(), "Ada Lovelace".into(), ts, 7));
        lines.push(obj(&next_id(), "Ada Lovelace".into(), ts, 1500));
        lines.push(obj("xyz", "Ada Lovelace".into(), ts, 0));
        lines.push(format!(
            r#"{{"id":"{}","author_email":"a@b.org","author_date_unix":{ts},"author_tz_offset_min":0}}"#,
            next_id()
        ));
        lines.push("this is not json".to_owned());
        stats.rejected_malformed += 5;
        if let Some(dup) = valid_ids.get(i) {
            lines.push(format!("DUP:{}", hex(dup)));
            stats.rejected_malformed += 1;
        }
    }
    stats.records_read = stats.rejected_name + stats.rejected_timestamp + stats.rejected_malformed;
    (lines, stats)
}

impl Corpus {
    pub fn commit_count(&self) -> usize {
        self.commits.len()
    }

    fn commit_line(&self, i: usize) -> String {
        let c = &self.commits[i];
        let a = &self.authors[c.author as usize];
        let mut line = serde_json::json!({
            "id": hex(&self.ids[i]),
            "author_name": a.name,
            "author_email": a.email,
            "author_date_unix": c.ts,
            "author_tz_offset_min": c.offset,
        });
        if i.is_multiple_of(3) {
            line["committer_name"] = a.name.clone().into();
            line["committer_date_unix"] = (c.ts + 60).into();
        }
        line.to_string()
    }

    /// Writes the shuffled corpus as NDJSON. Duplicate-id reject lines copy
    /// the original commit's line verbatim, so either copy may come first.
    pub fn write_ndjson<W: Write>(&self, mut out: W) -> io::Result<()> {
        let index: HashMap<[u8; 20], usize> = self.ids.iter().enumerate().map(|(i, id)| (*id, i)).collect();
        for &k in &self.order {
            let k = k as usize;
            if k < self.commits.len() {
                writeln!(out, "{}", self.commit_line(k))?;
            } else {
                let line = &self.rejects[k - self.commits.len()];
                match line.strip_prefix("DUP:") {
                    Some(id) => {
                        let mut raw = [0u8; 20];
                        for (j, b) in raw.iter_mut().enumerate() {
                            *b = u8::from_str_radix(&id[2 * j..2 * j + 2], 16).expect("hex id");
                        }
                        writeln!(out, "{}", self.commit_line(index[&raw]))?;
                    }
                    None => writeln!(out, "{line}")?,
                }
            }
        }
        out.flush()
    }

    /// Expected `cells.csv` for the default pipeline settings.
    pub fn write_ledger_cells<W: Write>(&self, out: W) -> Result<()> {
        Ok(write_cells_csv(out, &self.ledger.cells)?)
    }

    /// Expected ratios: year, grouping, group, metric, ratio.
    pub fn write_ledger_ratios<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let csv_err = |e: csv::Error| Error::Report(e.into());
        w.write_record(["year", "grouping", "group", "metric", "ratio"])
            .map_err(csv_err)?;
        for set in &self.ledger.cells {
            for group in set.groups() {
                for metric in Metric::ALL {
                    for year in set.years() {
                        if set.cells.iter().any(|c| c.year == year && c.group == group) {
                            let r = ledger_ratio(set, year, group, metric);
                            w.write_record([
                                year.to_string(),
                                set.grouping.to_string(),
                                group.to_string(),
                                metric.to_string(),
                                fmt_opt(r),
                            ])
                            .map_err(csv_err)?;
                        }
                    }
                }
            }
        }
        w.flush().map_err(|e| csv_err(e.into()))
    }

    pub fn write_truth<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let csv_err = |e: csv::Error| Error::Report(e.into());
        w.write_record([
            "author",
            "name",
            "email",
            "gender",
            "region",
            "home",
            "cctld_email",
            "tzz",
        ])
        .map_err(csv_err)?;
        for (i, a) in self.authors.iter().enumerate() {
            w.write_record([
                i.to_string(),
                a.name.clone(),
                a.email.clone(),
                a.gender.to_string(),
                a.region.to_string(),
                a.home.clone(),
                a.cctld_email.to_string(),
                a.tzz.to_string(),
            ])
            .map_err(csv_err)?;
        }
        w.flush().map_err(|e| csv_err(e.into()))
    }

    /// Writes `corpus.ndjson`, `ledger_cells.csv`, `ledger_ratios.csv`,
    /// `ledger.json` and `truth.csv` into `dir`.
    pub fn write_all(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir).map_err(|source| Error::Output {
            path: dir.to_owned(),
            source,
        })?;
        let create = |name: &str| {
            let path = dir.join(name);
            File::create(&path)
                .map(|f| (BufWriter::new(f), path.clone()))
                .map_err(|source| Error::Output { path, source })
        };
        let (w, corpus) = create("corpus.ndjson")?;
        self.write_ndjson(w).map_err(|source| Error::Output {
            path: corpus.clone(),
            source,
        })?;
        let (w, cells) = create("ledger_cells.csv")?;
        self.write_ledger_cells(w)?;
        let (w, ratios) = create("ledger_ratios.csv")?;
        self.write_ledger_ratios(w)?;
        let (w, truth) = create("truth.csv")?;
        self.write_truth(w)?;
        let (mut w, ledger) = create("ledger.json")?;
        serde_json::to_writer_pretty(&mut w, &self.ledger).map_err(|e| Error::Report(e.into()))?;
        w.write_all(b"\n")
            .and_then(|_| w.flush())
            .map_err(|source| Error::Output {
                path: ledger.clone(),
                source,
            })?;
        Ok(vec![corpus, cells, ratios, truth, ledger])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quotas_sum_and_floor() {
        let spec = CorpusSpec::default();
        let q = quotas(&spec);
        assert_eq!(q.iter().flatten().sum::<usize>(), spec.commits);
        assert!(q.iter().flatten().all(|&n| n >= CELL_FLOOR));
        let small = CorpusSpec {
            commits: 300,
            ..CorpusSpec::default()
        };
        assert_eq!(quotas(&small).iter().flatten().sum::<usize>(), 300);
    }

    #[test]
    fn dip_share_is_below_previous_year() {
        let spec = CorpusSpec::default();
        for r in Region::ALL {
            assert!(female_share(&spec, r, 2020) < female_share(&spec, r, 2019));
            assert!(female_share(&spec, r, 2019) > female_share(&spec, r, 2018));
        }
    }

    #[test]
    fn slugs_are_ascii() {
        assert_eq!(email_slug("Élodie Dupont"), "lodie.dupont");
        assert_eq!(email_slug("Ada"), "ada");
    }
}
