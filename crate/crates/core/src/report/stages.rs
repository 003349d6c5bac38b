// SPDX-License-Identifier: Apache-2.0

//! Single-stage commands. Stages exchange NDJSON commit records: `ingest`
//! normalizes them, `classify` adds `gender`, `geolocate` adds `region` and
//! `method`, and `aggregate` turns labelled records into tables.

use std::collections::HashMap;
use std::fs;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use serde_json::{Map, Value};

use crate::aggregate::{ClassifiedCommit, Grouping, ThresholdScope};
use crate::civil::{utc_year, YearRange};
use crate::gender::{AuthorGender, MajorityRule};
use crate::geo::Strategy;
use crate::ingest::{
    parse_commit_stream, AcceptedCommit, AuthorKey, IngestError, IngestOptions, IngestStats, InputFormat,
};
use crate::refdata::{RefData, Region};
use crate::{Error, Result};

use super::pipeline::{resolve, write_charts, Artifacts, AuthorProfile, Tally};
use super::{compute_trends, read_cells_csv};

fn bytes_value(b: &[u8]) -> Value {
    match std::str::from_utf8(b) {
        Ok(s) => Value::String(s.to_owned()),
        Err(_) => Value::Array(b.iter().map(|x| Value::from(*x)).collect()),
    }
}

fn canonical(c: &AcceptedCommit) -> Map<String, Value> {
    let r = &c.record;
    let mut m = Map::new();
    m.insert("id".into(), Value::String(r.id.clone()));
    m.insert("author_name".into(), bytes_value(&r.author_name));
    m.insert("author_email".into(), bytes_value(&r.author_email));
    m.insert("author_date_unix".into(), Value::from(r.author_timestamp));
    m.insert("author_tz_offset_min".into(), Value::from(r.utc_offset_minutes));
    m
}

/// Streams accepted commits as JSON objects, keeping any extra fields of
/// NDJSON input.
fn for_each_commit<R, F>(input: R, opts: IngestOptions, mut f: F) -> Result<IngestStats>
where
    R: BufRead,
    F: FnMut(&AcceptedCommit, Map<String, Value>, u64) -> Result<()>,
{
    let mut stream = parse_commit_stream(input, opts);
    while let Some(item) = stream.next() {
        let commit = item?;
        let object = match opts.format {
            InputFormat::Ndjson => serde_json::from_slice(stream.current_line()).unwrap_or_else(|_| canonical(&commit)),
            InputFormat::Gitlog => canonical(&commit),
        };
        f(&commit, object, stream.line_number())?;
    }
    Ok(stream.into_stats())
}

fn emit<W: Write>(out: &mut W, object: &Map<String, Value>) -> Result<()> {
    let io_err = |source| Error::Output {
        path: PathBuf::from("-"),
        source,
    };
    serde_json::to_writer(&mut *out, object).map_err(|e| io_err(e.into()))?;
    out.write_all(b"\n").map_err(io_err)
}

/// Applies the ingest rules and writes accepted commits as NDJSON.
pub fn ingest_stage<R: BufRead, W: Write>(input: R, opts: IngestOptions, mut out: W) -> Result<IngestStats> {
    let stats = for_each_commit(input, opts, |c, _, _| emit(&mut out, &canonical(c)))?;
    out.flush().map_err(|source| Error::Output {
        path: PathBuf::from("-"),
        source,
    })?;
    Ok(stats)
}

/// Adds `gender` to every accepted commit.
pub fn classify_stage<R: BufRead, W: Write>(
    input: R,
    opts: IngestOptions,
    refs: &RefData,
    majority: MajorityRule,
    mut out: W,
) -> Result<IngestStats> {
    let mut cache: HashMap<String, AuthorGender> = HashMap::new();
    for_each_commit(input, opts, |c, mut object, _| {
        let gender = *cache.entry(c.name.clone()).or_insert_with(|| {
            let tokens = crate::gender::tokenize_name(&c.name);
            crate::gender::infer_author_gender(&tokens, &refs.gender, majority)
        });
        object.insert("gender".into(), Value::String(gender.to_string()));
        emit(&mut out, &object)
    })
}

/// Adds `region` (null when unresolved) and `method` to every accepted commit.
pub fn geolocate_stage<R: BufRead, W: Write>(
    input: R,
    opts: IngestOptions,
    refs: &RefData,
    strategy: Strategy,
    mut out: W,
) -> Result<IngestStats> {
    let mut cache: HashMap<AuthorKey, AuthorProfile> = HashMap::new();
    for_each_commit(input, opts, |c, mut object, _| {
        let profile = cache
            .entry(c.author_key())
            .or_insert_with(|| AuthorProfile::new(&c.name, &c.record.author_email, refs, MajorityRule::Gendered));
        let geo = resolve(
            profile,
            c.record.author_timestamp,
            c.record.utc_offset_minutes,
            refs,
            strategy,
        );
        object.insert(
            "region".into(),
            geo.region.map_or(Value::Null, |r| Value::String(r.to_string())),
        );
        object.insert("method".into(), Value::String(geo.method.to_string()));
        emit(&mut out, &object)
    })
}

#[derive(Clone, Debug)]
pub struct AggregateOptions {
    pub ingest: IngestOptions,
    pub threshold: u64,
    pub threshold_scope: ThresholdScope,
    pub groupings: Vec<Grouping>,
    pub span: f64,
    pub fit_years: YearRange,
    pub out_dir: PathBuf,
}

/// Builds `cells.csv`, `ratios.csv`, `growth.csv` and the charts from
/// records labelled by `classify` (and `geolocate` for region grouping).
pub fn aggregate_stage<R: BufRead>(input: R, opts: &AggregateOptions) -> Result<(IngestStats, Vec<PathBuf>)> {
    if !(opts.span > 0.0 && opts.span <= 1.0) {
        return Err(Error::Config(format!("span {} outside (0, 1]", opts.span)));
    }
    if opts.threshold == 0 {
        return Err(Error::Config("threshold must be at least 1".into()));
    }
    let mut groupings = opts.groupings.clone();
    groupings.sort_unstable();
    groupings.dedup();
    let need_region = groupings.contains(&Grouping::Region);
    let mut tally = Tally::new(&groupings);
    let mut authors: HashMap<AuthorKey, u32> = HashMap::new();

    let stats = for_each_commit(input, opts.ingest, |c, object, line| {
        let malformed = |reason: String| Error::Ingest(IngestError::Malformed { line, reason });
        let gender = match object.get("gender") {
            Some(Value::String(s)) => s.parse::<AuthorGender>().map_err(malformed)?,
            _ => return Err(malformed("missing `gender` field; run classify first".into())),
        };
        let region = match object.get("region") {
            Some(Value::String(s)) => Some(s.parse::<Region>().map_err(malformed)?),
            Some(Value::Null) => None,
            None if !need_region => None,
            _ => return Err(malformed("missing `region` field; run geolocate first".into())),
        };
        let next = authors.len() as u32;
        let author = *authors.entry(c.author_key()).or_insert(next);
        tally.add(&ClassifiedCommit {
            author,
            year: utc_year(c.record.author_timestamp),
            offset: c.record.utc_offset_minutes,
            gender,
            region,
        });
        Ok(())
    })?;

    let artifacts = Artifacts::build(&tally, opts.threshold, opts.threshold_scope, opts.span, opts.fit_years)?;
    fs::create_dir_all(&opts.out_dir).map_err(|source| Error::Output {
        path: opts.out_dir.clone(),
        source,
    })?;
    Ok((stats, artifacts.write(&opts.out_dir)?))
}

/// Renders charts from an existing `cells.csv` in `dir`.
pub fn report_stage(dir: &Path, span: f64) -> Result<Vec<PathBuf>> {
    let path = dir.join("cells.csv");
    let file = fs::File::open(&path).map_err(|source| Error::Input {
        path: path.clone(),
        source,
    })?;
    let sets = read_cells_csv(std::io::BufReader::new(file), &path)?;
    let mut trends = Vec::new();
    for set in &sets {
        trends.extend(compute_trends(set, span)?);
    }
    write_charts(dir, &sets, &trends)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(id: u8, name: &str, ts: i64) -> String {
        format!(
            r#"{{"id":"{}","author_name":"{name}","author_email":"a@b.org","author_date_unix":{ts},"author_tz_offset_min":60,"extra":1}}"#,
            format!("{id:02x}").repeat(20)
        )
    }

    #[test]
    fn ingest_keeps_only_accepted() {
        let input = [line(1, "Ada Lovelace", 10), line(2, "####!!", 10), line(3, "Ada", -5)].join("\n");
        let mut out = Vec::new();
        let stats = ingest_stage(input.as_bytes(), IngestOptions::default(), &mut out).unwrap();
        assert_eq!(
            (
                stats.records_read,
                stats.records_kept,
                stats.rejected_name,
                stats.rejected_timestamp
            ),
            (3, 1, 1, 1)
        );
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text.lines().count(), 1);
        assert!(!text.contains("extra"));
    }

    #[test]
    fn aggregate_requires_labels() {
        let input = line(1, "Ada", 10);
        let dir = tempfile::tempdir().unwrap();
        let opts = AggregateOptions {
            ingest: IngestOptions::default(),
            threshold: 1,
            threshold_scope: ThresholdScope::Group,
            groupings: vec![Grouping::Offset],
            span: 0.75,
            fit_years: YearRange::GROWTH_FIT,
            out_dir: dir.path().to_owned(),
        };
        let err = aggregate_stage(input.as_bytes(), &opts).unwrap_err();
        assert!(err.to_string().contains("gender"), "{err}");
    }
}
