// SPDX-License-Identifier: Apache-2.0

//! Commit-metadata stream parsing, author-name plausibility filtering and
//! author deduplication.
//!
//! Two input formats are understood:
//!
//! * NDJSON, one object per line with the fields `id`, `author_name`,
//!   `author_email`, `author_date_unix` and `author_tz_offset_min`. Other
//!   fields (committer data, stage annotations) are ignored. `author_name`
//!   and `author_email` may be JSON strings or arrays of byte values, the
//!   latter carrying raw bytes that are not valid UTF-8.
//! * `git log --format=%H%x00%an%x00%ae%x00%at%x00%z`, i.e. five
//!   NUL-separated fields per line.
//!
//! Blank lines are skipped without being counted.

use std::borrow::Cow;
use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::io::BufRead;
use std::str::FromStr;

use serde::de::{self, Deserializer, SeqAccess, Visitor};
use serde::{Deserialize, Serialize};

use crate::civil::YearRange;
use crate::exec::Parallelism;

pub const COMMIT_ID_HEX_LEN: usize = 40;
pub const MAX_NAME_CHARS: usize = 100;
pub const MAX_OFFSET_MINUTES: i32 = 1440;

/// Author-side metadata of one commit.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CommitRecord {
    /// Lowercase 40-hex-digit commit digest.
    pub id: String,
    pub author_name: Vec<u8>,
    pub author_email: Vec<u8>,
    /// Seconds since the Unix epoch, UTC.
    pub author_timestamp: i64,
    pub utc_offset_minutes: i32,
}

/// A commit that survived every ingest filter, with its sanitized name.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AcceptedCommit {
    pub record: CommitRecord,
    pub name: String,
}

impl AcceptedCommit {
    pub fn author_key(&self) -> AuthorKey {
        AuthorKey::new(&self.name, &self.record.author_email)
    }
}

/// Deduplicated author identity.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct AuthorKey {
    pub name: String,
    pub email: String,
}

impl AuthorKey {
    pub fn new(name: &str, email: &[u8]) -> Self {
        AuthorKey {
            name: name.to_owned(),
            email: String::from_utf8_lossy(email).to_lowercase(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NameRejection {
    NotUtf8,
    EmailAddress,
    Blank,
    NonLetters,
    TooLong,
}

impl NameRejection {
    pub const ALL: [NameRejection; 5] = [
        NameRejection::NotUtf8,
        NameRejection::EmailAddress,
        NameRejection::Blank,
        NameRejection::NonLetters,
        NameRejection::TooLong,
    ];
}

/// Per-rule breakdown of rejected author names.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct NameRejections {
    pub not_utf8: u64,
    pub email_address: u64,
    pub blank: u64,
    pub non_letters: u64,
    pub too_long: u64,
}

impl NameRejections {
    fn slot(&mut self, rule: NameRejection) -> &mut u64 {
        match rule {
            NameRejection::NotUtf8 => &mut self.not_utf8,
            NameRejection::EmailAddress => &mut self.email_address,
            NameRejection::Blank => &mut self.blank,
            NameRejection::NonLetters => &mut self.non_letters,
            NameRejection::TooLong => &mut self.too_long,
        }
    }

    pub fn count(&self, rule: NameRejection) -> u64 {
        match rule {
            NameRejection::NotUtf8 => self.not_utf8,
            NameRejection::EmailAddress => self.email_address,
            NameRejection::Blank => self.blank,
            NameRejection::NonLetters => self.non_letters,
            NameRejection::TooLong => self.too_long,
        }
    }

    pub fn record(&mut self, rule: NameRejection) {
        *self.slot(rule) += 1;
    }

    pub fn total(&self) -> u64 {
        NameRejection::ALL.iter().map(|r| self.count(*r)).sum()
    }

    pub fn merge(&mut self, other: &NameRejections) {
        for rule in NameRejection::ALL {
            *self.slot(rule) += other.count(rule);
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestStats {
    pub records_read: u64,
    pub records_kept: u64,
    pub rejected_name: u64,
    pub rejected_timestamp: u64,
    pub rejected_malformed: u64,
    pub rejected_name_by_rule: NameRejections,
}

impl IngestStats {
    /// Associative, commutative combination of shard statistics.
    pub fn merge(&mut self, other: &IngestStats) {
        self.records_read += other.records_read;
        self.records_kept += other.records_kept;
        self.rejected_name += other.rejected_name;
        self.rejected_timestamp += other.rejected_timestamp;
        self.rejected_malformed += other.rejected_malformed;
        self.rejected_name_by_rule.merge(&other.rejected_name_by_rule);
    }

    pub fn is_balanced(&self) -> bool {
        self.records_read == self.records_kept + self.rejected_name + self.rejected_timestamp + self.rejected_malformed
            && self.rejected_name == self.rejected_name_by_rule.total()
    }
}

/// Applies the author-name plausibility rules in order: UTF-8 decoding,
/// email-address check, blank check, non-letter ratio, length. Returns the
/// trimmed name or the first rule it violates.
pub fn check_author_name(raw: &[u8]) -> Result<String, NameRejection> {
    let decoded = std::str::from_utf8(raw).map_err(|_| NameRejection::NotUtf8)?;
    let name = decoded.trim();
    if looks_like_email(name) {
        return Err(NameRejection::EmailAddress);
    }
    if name.is_empty() {
        return Err(NameRejection::Blank);
    }
    let mut non_blank = 0usize;
    let mut non_letters = 0usize;
    for c in name.chars().filter(|c| !c.is_whitespace()) {
        non_blank += 1;
        if !counts_as_letter(c) {
            non_letters += 1;
        }
    }
    // At most 10% of the non-blank characters may be non-letters.
    if non_letters * 10 > non_blank {
        return Err(NameRejection::NonLetters);
    }
    if name.chars().count() > MAX_NAME_CHARS {
        return Err(NameRejection::TooLong);
    }
    Ok(name.to_owned())
}

pub fn sanitize_author_name(raw: &[u8]) -> Option<String> {
    check_author_name(raw).ok()
}

// Hyphens and apostrophes are part of legal names.
fn counts_as_letter(c: char) -> bool {
    c.is_alphabetic() || matches!(c, '-' | '\'' | '\u{2010}' | '\u{2011}' | '\u{2019}')
}

/// Loose `local@domain.tld` detection on any blank-separated word.
pub fn looks_like_email(s: &str) -> bool {
    s.split_whitespace().any(|word| {
        let Some((local, domain)) = word.split_once('@') else {
            return false;
        };
        !local.is_empty()
            && domain
                .split_once('.')
                .is_some_and(|(host, rest)| !host.is_empty() && !rest.is_empty())
    })
}

/// Whether `ts` lies within 1970-01-01T00:00:00Z ..= 2020-12-31T23:59:59Z.
pub fn in_study_window(ts: i64) -> bool {
    YearRange::STUDY.contains_ts(ts)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum InputFormat {
    #[default]
    Ndjson,
    Gitlog,
}

impl FromStr for InputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ndjson" => Ok(InputFormat::Ndjson),
            "gitlog" => Ok(InputFormat::Gitlog),
            other => Err(format!("unknown input format {other:?}")),
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct IngestOptions {
    pub format: InputFormat,
    /// Abort on the first malformed line instead of counting it.
    pub strict: bool,
    pub years: YearRange,
}

impl Default for IngestOptions {
    fn default() -> Self {
        IngestOptions {
            format: InputFormat::Ndjson,
            strict: false,
            years: YearRange::STUDY,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("failed to read input: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {reason}")]
    Malformed { line: u64, reason: String },
}

/// Streaming parser over a commit-metadata source. Yields accepted commits
/// in input order and keeps [`IngestStats`] for everything it saw.
pub struct CommitStream<R> {
    reader: R,
    opts: IngestOptions,
    line_no: u64,
    buf: Vec<u8>,
    stats: IngestStats,
    seen_ids: HashSet<[u8; 20]>,
    done: bool,
}

pub fn parse_commit_stream<R: BufRead>(reader: R, opts: IngestOptions) -> CommitStream<R> {
    CommitStream {
        reader,
        opts,
        line_no: 0,
        buf: Vec::with_capacity(256),
        stats: IngestStats::default(),
        seen_ids: HashSet::new(),
        done: false,
    }
}

impl<R> CommitStream<R> {
    pub fn stats(&self) -> &IngestStats {
        &self.stats
    }

    pub fn into_stats(self) -> IngestStats {
        self.stats
    }

    /// 1-based number of the most recently read line.
    pub fn line_number(&self) -> u64 {
        self.line_no
    }

    /// Raw bytes of the line behind the most recently yielded commit.
    pub fn current_line(&self) -> &[u8] {
        trim_line_end(&self.buf)
    }
}

/// Outcome of the checks that depend on one line alone: the record, its
/// decoded id and the name verdict, or why the line is malformed.
type Examined = Result<(CommitRecord, [u8; 20], Result<String, NameRejection>), String>;

fn examine(line: &[u8], format: InputFormat) -> Examined {
    let rec = parse_line(line, format)?;
    let digest = decode_digest(&rec.id)?;
    let name = check_author_name(&rec.author_name);
    Ok((rec, digest, name))
}

impl<R> CommitStream<R> {
    /// Applies the order-dependent checks (duplicate ids, counters) to one
    /// examined line.
    fn admit(&mut self, examined: Examined, line_no: u64) -> Option<Result<AcceptedCommit, IngestError>> {
        self.stats.records_read += 1;
        let parsed = examined.and_then(|(rec, digest, name)| {
            if self.seen_ids.insert(digest) {
                Ok((rec, name))
            } else {
                Err(format!("duplicate commit id {}", rec.id))
            }
        });
        let (record, name) = match parsed {
            Ok(ok) => ok,
            Err(reason) => {
                self.stats.rejected_malformed += 1;
                if self.opts.strict {
                    self.done = true;
                    return Some(Err(IngestError::Malformed { line: line_no, reason }));
                }
                return None;
            }
        };
        let name = match name {
            Ok(name) => name,
            Err(rule) => {
                self.stats.rejected_name += 1;
                self.stats.rejected_name_by_rule.record(rule);
                return None;
            }
        };
        if !self.opts.years.contains_ts(record.author_timestamp) {
            self.stats.rejected_timestamp += 1;
            return None;
        }
        self.stats.records_kept += 1;
        Some(Ok(AcceptedCommit { record, name }))
    }
}

impl<R: BufRead> CommitStream<R> {
    /// Reads the next raw line into `buf`; `false` at end of input.
    fn read_line(&mut self) -> Result<bool, IngestError> {
        self.buf.clear();
        match self.reader.read_until(b'\n', &mut self.buf) {
            Ok(0) => {
                self.done = true;
                Ok(false)
            }
            Ok(_) => {
                self.line_no += 1;
                Ok(true)
            }
            Err(e) => {
                self.done = true;
                Err(e.into())
            }
        }
    }

    /// Reads up to `max_lines` non-blank lines and returns the accepted
    /// commits among them. Per-line parsing runs under `par`; the result
    /// and the stats are the same as iterating one commit at a time. An
    /// empty vector with `is_done()` means the input is exhausted.
    pub fn next_chunk(&mut self, max_lines: usize, par: Parallelism) -> Result<Vec<AcceptedCommit>, IngestError> {
        let mut lines: Vec<(u64, Vec<u8>)> = Vec::with_capacity(max_lines);
        while !self.done && lines.len() < max_lines {
            if !self.read_line()? {
                break;
            }
            let line = trim_line_end(&self.buf);
            if !line.iter().all(u8::is_ascii_whitespace) {
                lines.push((self.line_no, line.to_vec()));
            }
        }
        let format = self.opts.format;
        let examined = par.map(&lines, |(_, line)| examine(line, format));
        let mut out = Vec::with_capacity(lines.len());
        for ((line_no, _), ex) in lines.iter().zip(examined) {
            if let Some(item) = self.admit(ex, *line_no) {
                out.push(item?);
            }
        }
        Ok(out)
    }

    pub fn is_done(&self) -> bool {
        self.done
    }
}

impl<R: BufRead> Iterator for CommitStream<R> {
    type Item = Result<AcceptedCommit, IngestError>;

    fn next(&mut self) -> Option<Self::Item> {
        while !self.done {
            match self.read_line() {
                Ok(true) => {}
                Ok(false) => return None,
                Err(e) => return Some(Err(e)),
            }
            let line = trim_line_end(&self.buf);
            if line.iter().all(u8::is_ascii_whitespace) {
                continue;
            }
            let examined = examine(line, self.opts.format);
            if let Some(item) = self.admit(examined, self.line_no) {
                return Some(item);
            }
        }
        None
    }
}

fn trim_line_end(mut line: &[u8]) -> &[u8] {
    while let [rest @ .., b'\n' | b'\r'] = line {
        line = rest;
    }
    line
}

fn decode_digest(id: &str) -> Result<[u8; 20], String> {
    let bytes = id.as_bytes();
    if bytes.len() != COMMIT_ID_HEX_LEN {
        return Err(format!("commit id {id:?} is not {COMMIT_ID_HEX_LEN} hex digits"));
    }
    let mut out = [0u8; 20];
    for (i, pair) in bytes.chunks_exact(2).enumerate() {
        let hi = hex_val(pair[0]);
        let lo = hex_val(pair[1]);
        match (hi, lo) {
            (Some(hi), Some(lo)) => out[i] = hi << 4 | lo,
            _ => return Err(format!("commit id {id:?} is not hexadecimal")),
        }
    }
    Ok(out)
}

fn hex_val(b: u8) -> Option<u8> {
    match b {
        b'0'..=b'9' => Some(b - b'0'),
        b'a'..=b'f' => Some(b - b'a' + 10),
        b'A'..=b'F' => Some(b - b'A' + 10),
        _ => None,
    }
}

fn validate_offset(minutes: i64) -> Result<i32, String> {
    if minutes.abs() > i64::from(MAX_OFFSET_MINUTES) {
        return Err(format!("UTC offset {minutes} outside ±{MAX_OFFSET_MINUTES}"));
    }
    if minutes % 15 != 0 {
        return Err(format!("UTC offset {minutes} is not a multiple of 15 minutes"));
    }
    Ok(minutes as i32)
}

/// Parses a single input line (without its newline) into a record. The
/// error is a human-readable reason.
pub fn parse_line(line: &[u8], format: InputFormat) -> Result<CommitRecord, String> {
    match format {
        InputFormat::Ndjson => parse_ndjson_line(line),
        InputFormat::Gitlog => parse_gitlog_line(line),
    }
}

#[derive(Deserialize)]
struct NdjsonCommit<'a> {
    #[serde(borrow)]
    id: Cow<'a, str>,
    author_name: RawBytes,
    author_email: RawBytes,
    author_date_unix: i64,
    author_tz_offset_min: i64,
}

fn parse_ndjson_line(line: &[u8]) -> Result<CommitRecord, String> {
    let raw: NdjsonCommit<'_> = serde_json::from_slice(line).map_err(|e| e.to_string())?;
    let id = raw.id.to_ascii_lowercase();
    decode_digest(&id)?;
    Ok(CommitRecord {
        id,
        author_name: raw.author_name.0,
        author_email: raw.author_email.0,
        author_timestamp: raw.author_date_unix,
        utc_offset_minutes: validate_offset(raw.author_tz_offset_min)?,
    })
}

fn parse_gitlog_line(line: &[u8]) -> Result<CommitRecord, String> {
    let fields: Vec<&[u8]> = line.split(|b| *b == 0).collect();
    let [id, name, email, ts, tz] = fields.as_slice() else {
        return Err(format!("expected 5 NUL-separated fields, got {}", fields.len()));
    };
    let id = std::str::from_utf8(id)
        .map_err(|_| "commit id is not UTF-8".to_owned())?
        .to_ascii_lowercase();
    decode_digest(&id)?;
    let ts = std::str::from_utf8(ts)
        .ok()
        .and_then(|s| s.trim().parse::<i64>().ok())
        .ok_or_else(|| "author timestamp is not an integer".to_owned())?;
    Ok(CommitRecord {
        id,
        author_name: name.to_vec(),
        author_email: email.to_vec(),
        author_timestamp: ts,
        utc_offset_minutes: validate_offset(parse_git_tz(tz)?)?,
    })
}

/// `+hhmm` / `-hhmm` to signed minutes.
fn parse_git_tz(tz: &[u8]) -> Result<i64, String> {
    let bad = || format!("bad UTC offset {:?}", String::from_utf8_lossy(tz));
    let (sign, digits) = match tz {
        [b'+', rest @ ..] => (1, rest),
        [b'-', rest @ ..] => (-1, rest),
        _ => return Err(bad()),
    };
    if digits.len() != 4 || !digits.iter().all(u8::is_ascii_digit) {
        return Err(bad());
    }
    let n = |i: usize| i64::from(digits[i] - b'0');
    let hours = n(0) * 10 + n(1);
    let minutes = n(2) * 10 + n(3);
    if minutes >= 60 {
        return Err(bad());
    }
    Ok(sign * (hours * 60 + minutes))
}

/// A JSON string or array of bytes, decoded to raw bytes.
struct RawBytes(Vec<u8>);

impl<'de> Deserialize<'de> for RawBytes {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct RawVisitor;

        impl<'de> Visitor<'de> for RawVisitor {
            type Value = RawBytes;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a string or an array of bytes")
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<RawBytes, E> {
                Ok(RawBytes(v.as_bytes().to_vec()))
            }

            fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> Result<RawBytes, A::Error> {
                let mut out = Vec::with_capacity(seq.size_hint().unwrap_or(0));
                while let Some(b) = seq.next_element::<u8>()? {
                    out.push(b);
                }
                Ok(RawBytes(out))
            }
        }

        deserializer.deserialize_any(RawVisitor)
    }
}

/// Commit counts per distinct ⟨name, email⟩ pair.
pub fn dedupe_authors<'a, I>(records: I) -> BTreeMap<AuthorKey, u64>
where
    I: IntoIterator<Item = &'a AcceptedCommit>,
{
    let mut out = BTreeMap::new();
    for commit in records {
        *out.entry(commit.author_key()).or_insert(0) += 1;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const ID_A: &str = "0123456789abcdef0123456789abcdef01234567";
    const ID_B: &str = "1123456789abcdef0123456789abcdef01234567";
    const ID_C: &str = "2123456789abcdef0123456789abcdef01234567";

    fn ndjson(id: &str, name: &str, email: &str, ts: i64, off: i32) -> String {
        format!(
            r#"{{"id":"{id}","author_name":"{name}","author_email":"{email}","author_date_unix":{ts},"author_tz_offset_min":{off}}}"#
        )
    }

    fn run(input: &str, opts: IngestOptions) -> (Vec<AcceptedCommit>, IngestStats) {
        let mut stream = parse_commit_stream(input.as_bytes(), opts);
        let out = stream.by_ref().collect::<Result<Vec<_>, _>>().unwrap();
        (out, stream.into_stats())
    }

    #[test]
    fn single_well_formed_line() {
        let input = ndjson(ID_A, "Ada Lovelace", "ada@example.org", 1_000_000_000, 60);
        let (out, stats) = run(&input, IngestOptions::default());
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].name, "Ada Lovelace");
        assert_eq!(out[0].record.utc_offset_minutes, 60);
        assert_eq!((stats.records_read, stats.records_kept), (1, 1));
        assert!(stats.is_balanced());
    }

    #[test]
    fn empty_input_is_empty() {
        let (out, stats) = run("", IngestOptions::default());
        assert!(out.is_empty());
        assert_eq!(stats, IngestStats::default());
    }

    #[test]
    fn missing_field_counts_as_malformed() {
        let missing =
            format!(r#"{{"id":"{ID_B}","author_email":"b@x.org","author_date_unix":5,"author_tz_offset_min":0}}"#);
        let input = [
            ndjson(ID_A, "Ada", "a@x.org", 5, 0),
            missing,
            ndjson(ID_C, "Cy", "c@x.org", 5, 0),
        ]
        .join("\n");
        let (out, stats) = run(&input, IngestOptions::default());
        assert_eq!(out.len(), 2);
        assert_eq!(stats.rejected_malformed, 1);
        assert_eq!(stats.records_read, 3);
        assert!(stats.is_balanced());
    }

    #[test]
    fn strict_mode_names_the_line() {
        let input = format!("{}\n\nnot json\n", ndjson(ID_A, "Ada", "a@x.org", 5, 0));
        let opts = IngestOptions {
            strict: true,
            ..Default::default()
        };
        let mut stream = parse_commit_stream(input.as_bytes(), opts);
        assert!(stream.next().unwrap().is_ok());
        match stream.next() {
            Some(Err(IngestError::Malformed { line, .. })) => assert_eq!(line, 3),
            other => panic!("expected malformed error, got {other:?}"),
        }
        assert!(stream.next().is_none());
    }

    #[test]
    fn offsets_are_validated() {
        for (off, ok) in [
            (0, true),
            (345, true),
            (-1440, true),
            (1440, true),
            (7, false),
            (1455, false),
        ] {
            let input = ndjson(ID_A, "Ada", "a@x.org", 5, off);
            let (_, stats) = run(&input, IngestOptions::default());
            assert_eq!(stats.records_kept == 1, ok, "offset {off}");
        }
    }

    #[test]
    fn duplicate_ids_are_malformed() {
        let input = [
            ndjson(ID_A, "Ada", "a@x.org", 5, 0),
            ndjson(ID_A, "Bob", "b@x.org", 6, 0),
        ]
        .join("\n");
        let (out, stats) = run(&input, IngestOptions::default());
        assert_eq!(out.len(), 1);
        assert_eq!(stats.rejected_malformed, 1);
    }

    #[test]
    fn non_utf8_names_via_byte_arrays() {
        let input = format!(
            r#"{{"id":"{ID_A}","author_name":[255,254,65],"author_email":"a@x.org","author_date_unix":5,"author_tz_offset_min":0}}"#
        );
        let (out, stats) = run(&input, IngestOptions::default());
        assert!(out.is_empty());
        assert_eq!(stats.rejected_name_by_rule.not_utf8, 1);
    }

    #[test]
    fn timestamps_outside_window() {
        let input = [
            ndjson(ID_A, "Ada", "a@x.org", -1, 0),
            ndjson(ID_B, "Ada", "a@x.org", 1_609_459_199, 0),
            ndjson(ID_C, "Ada", "a@x.org", 1_609_459_200, 0),
        ]
        .join("\n");
        let (out, stats) = run(&input, IngestOptions::default());
        assert_eq!(out.len(), 1);
        assert_eq!(stats.rejected_timestamp, 2);
    }

    #[test]
    fn gitlog_lines() {
        let line =
            format!("{ID_A}\0Jean Dupont\0jean@exemple.fr\01300000000\0+0530\n{ID_B}\0X\0x@y.z\0notanumber\0+0000\n");
        let opts = IngestOptions {
            format: InputFormat::Gitlog,
            ..Default::default()
        };
        let (out, stats) = run(&line, opts);
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].record.utc_offset_minutes, 330);
        assert_eq!(out[0].record.author_email, b"jean@exemple.fr");
        assert_eq!(stats.rejected_malformed, 1);
        assert_eq!(parse_git_tz(b"-0800").unwrap(), -480);
        assert!(parse_git_tz(b"0800").is_err());
        assert!(parse_git_tz(b"+0875").is_err());
    }

    #[test]
    fn name_rules() {
        assert_eq!(check_author_name(b"Ada Lovelace").unwrap(), "Ada Lovelace");
        assert_eq!(check_author_name(b"  Ada  ").unwrap(), "Ada");
        assert_eq!(check_author_name(b"jdoe@example.com"), Err(NameRejection::EmailAddress));
        assert_eq!(check_author_name(&[b'a'; 101]), Err(NameRejection::TooLong));
        assert!(check_author_name(&[b'a'; 100]).is_ok());
        assert_eq!(check_author_name(b"####!!"), Err(NameRejection::NonLetters));
        assert_eq!(check_author_name(b" \t "), Err(NameRejection::Blank));
        assert_eq!(check_author_name(&[0xc3, 0x28]), Err(NameRejection::NotUtf8));
        assert!(check_author_name("Mary-Jane O'Neil".as_bytes()).is_ok());
        assert!(check_author_name("José Ñúñez".as_bytes()).is_ok());
        // 1 digit in 10 non-blank chars is exactly 10%.
        assert!(check_author_name(b"Abcde Fghi1").is_ok());
        assert_eq!(check_author_name(b"Abcd Fghi12"), Err(NameRejection::NonLetters));
    }

    #[test]
    fn email_pattern_is_loose_but_needs_a_domain_dot() {
        assert!(looks_like_email("jdoe@example.com"));
        assert!(looks_like_email("John jdoe@example.com"));
        assert!(!looks_like_email("@example.com"));
        assert!(!looks_like_email("jdoe@localhost"));
        assert!(!looks_like_email("jdoe@example."));
        assert!(!looks_like_email("Ada Lovelace"));
    }

    #[test]
    fn study_window_edges() {
        assert!(in_study_window(0));
        assert!(in_study_window(1_609_459_199));
        assert!(!in_study_window(-1));
    }

    #[test]
    fn dedupe_counts_by_pair() {
        let mk = |id: &str, name: &str, email: &str| AcceptedCommit {
            record: CommitRecord {
                id: id.into(),
                author_name: name.as_bytes().to_vec(),
                author_email: email.as_bytes().to_vec(),
                author_timestamp: 0,
                utc_offset_minutes: 0,
            },
            name: name.into(),
        };
        let commits = vec![
            mk(ID_A, "A", "a@x"),
            mk(ID_B, "A", "a@x"),
            mk(ID_C, "A", "A@X"),
            mk(ID_A, "B", "b@y"),
            mk(ID_A, "A", "other@x"),
        ];
        let map = dedupe_authors(&commits);
        assert_eq!(map.len(), 3);
        assert_eq!(map[&AuthorKey::new("A", b"a@x")], 3);
        assert_eq!(map[&AuthorKey::new("B", b"b@y")], 1);
        assert_eq!(map[&AuthorKey::new("A", b"other@x")], 1);
        assert_eq!(map.values().sum::<u64>(), commits.len() as u64);
        assert!(dedupe_authors(&[]).is_empty());
    }

    mod chunked {
        use super::*;
        use proptest::prelude::*;

        fn line_strategy() -> impl Strategy<Value = String> {
            let ids = prop::sample::select(vec![ID_A, ID_B, ID_C, "zz", "0123456789abcdef0123456789abcdef0123456f"]);
            let names = prop::sample::select(vec!["Ada Lovelace", "####!!", "a@b.org", "   ", "Grace"]);
            let ts = prop::sample::select(vec![0i64, 1_500_000_000, -1, 1_700_000_000_000]);
            let offs = prop::sample::select(vec![0i32, 60, 7, -330]);
            prop_oneof![
                4 => (ids, names, ts, offs).prop_map(|(i, n, t, o)| ndjson(i, n, "x@y.org", t, o)),
                1 => Just("not json".to_owned()),
                1 => Just(String::new()),
            ]
        }

        proptest! {
            #[test]
            fn chunks_match_iteration(lines in prop::collection::vec(line_strategy(), 0..40), size in 1usize..8, par in any::<bool>()) {
                let input = lines.join("\n");
                let par = if par { Parallelism::Parallel } else { Parallelism::Sequential };
                let mut one = parse_commit_stream(input.as_bytes(), IngestOptions::default());
                let expected: Vec<String> = one.by_ref().map(|c| c.unwrap().record.id).collect();
                let mut chunked = parse_commit_stream(input.as_bytes(), IngestOptions::default());
                let mut got = Vec::new();
                while !chunked.is_done() {
                    got.extend(chunked.next_chunk(size, par).unwrap().into_iter().map(|c| c.record.id));
                }
                prop_assert_eq!(got, expected);
                prop_assert_eq!(chunked.stats(), one.stats());
            }
        }

        #[test]
        fn strict_chunk_reports_line() {
            let input = [ndjson(ID_A, "Ada", "a@b.org", 5, 0), String::new(), "oops".to_owned()].join("\n");
            let opts = IngestOptions {
                strict: true,
                ..IngestOptions::default()
            };
            let mut s = parse_commit_stream(input.as_bytes(), opts);
            match s.next_chunk(10, Parallelism::Parallel) {
                Err(IngestError::Malformed { line, .. }) => assert_eq!(line, 3),
                other => panic!("{other:?}"),
            }
        }
    }
}
