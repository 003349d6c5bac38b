// SPDX-License-Identifier: Apache-2.0

//! Immutable reference tables: gender classes per name, forename and
//! surname incidence per place, places with region and population, the
//! ccTLD to region map and per-place UTC offset rules.
//!
//! All tables are tab-separated text. Lines starting with `#` and blank
//! lines are ignored. Column orders:
//!
//! | file            | columns                             |
//! |-----------------|-------------------------------------|
//! | `gender.tsv`    | name, class                         |
//! | `forenames.tsv` | name, place_id, incidence           |
//! | `surnames.tsv`  | name, place_id, incidence           |
//! | `places.tsv`    | place_id, region, population        |
//! | `cctld.tsv`     | tld, region                         |
//! | `tz_rules.tsv`  | place_id, since_unix, offset_min    |

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Serialize, Serializer};

use crate::gender::GenderClass;

#[derive(Debug, thiserror::Error)]
pub enum RefDataError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{source_name} line {line}: {reason}")]
    Parse {
        source_name: String,
        line: usize,
        reason: String,
    },
    #[error("{0}")]
    Integrity(String),
}

/// Coarse world region.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Region {
    Africa,
    AustraliaNewZealand,
    CentralSouthAmerica,
    CentralSouthAsia,
    China,
    EastAsia,
    Europe,
    NorthAmerica,
    Pacific,
    Russia,
    SouthEasternAsia,
    WestAsia,
}

impl Region {
    pub const COUNT: usize = 12;
    pub const ALL: [Region; Region::COUNT] = [
        Region::Africa,
        Region::AustraliaNewZealand,
        Region::CentralSouthAmerica,
        Region::CentralSouthAsia,
        Region::China,
        Region::EastAsia,
        Region::Europe,
        Region::NorthAmerica,
        Region::Pacific,
        Region::Russia,
        Region::SouthEasternAsia,
        Region::WestAsia,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Region::Africa => "Africa",
            Region::AustraliaNewZealand => "Australia and New Zealand",
            Region::CentralSouthAmerica => "Central and South America",
            Region::CentralSouthAsia => "Central and South Asia",
            Region::China => "China",
            Region::EastAsia => "East Asia",
            Region::Europe => "Europe",
            Region::NorthAmerica => "North America",
            Region::Pacific => "Pacific",
            Region::Russia => "Russia",
            Region::SouthEasternAsia => "South-eastern Asia",
            Region::WestAsia => "West Asia",
        }
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Region {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Region::ALL
            .into_iter()
            .find(|r| r.name() == s)
            .ok_or_else(|| format!("unknown region {s:?}"))
    }
}

impl Serialize for Region {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.name())
    }
}

/// Title case used for gender lookups: first character upper, rest lower.
pub fn title_case(token: &str) -> String {
    let mut chars = token.chars();
    match chars.next() {
        None => String::new(),
        Some(first) => first.to_uppercase().chain(chars.flat_map(char::to_lowercase)).collect(),
    }
}

/// Iterates the data rows of a TSV source as (1-based line number, fields).
fn tsv_rows(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(i, line)| {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            None
        } else {
            Some((i + 1, line.split('\t').map(str::trim).collect()))
        }
    })
}

fn parse_err(source_name: &str, line: usize, reason: impl Into<String>) -> RefDataError {
    RefDataError::Parse {
        source_name: source_name.to_owned(),
        line,
        reason: reason.into(),
    }
}

fn expect_fields(source_name: &str, line: usize, fields: &[&str], n: usize) -> Result<(), RefDataError> {
    if fields.len() == n {
        Ok(())
    } else {
        Err(parse_err(
            source_name,
            line,
            format!("expected {n} tab-separated columns, got {}", fields.len()),
        ))
    }
}

fn read_text(path: &Path) -> Result<String, RefDataError> {
    fs::read_to_string(path).map_err(|source| RefDataError::Io {
        path: path.to_owned(),
        source,
    })
}

// ---------------------------------------------------------------------------

/// Name to six-class gender label. Absent names are `unknown`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct GenderTable {
    map: HashMap<String, GenderClass>,
    duplicates: u64,
}

impl GenderTable {
    pub fn from_tsv(text: &str, source_name: &str) -> Result<Self, RefDataError> {
        let mut table = GenderTable::default();
        for (line, fields) in tsv_rows(text) {
            expect_fields(source_name, line, &fields, 2)?;
            let f = &fields;
            let class: GenderClass = f[1].parse().map_err(|e: String| parse_err(source_name, line, e))?;
            if f[0].is_empty() {
                return Err(parse_err(source_name, line, "empty name"));
            }
            if table.map.insert(title_case(f[0]), class).is_some() {
                table.duplicates += 1;
            }
        }
        if table.duplicates > 0 {
            log::warn!("{source_name}: {} duplicate names, last row wins", table.duplicates);
        }
        Ok(table)
    }

    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = (&'a str, GenderClass)>) -> Self {
        let mut table = GenderTable::default();
        for (name, class) in pairs {
            if table.map.insert(title_case(name), class).is_some() {
                table.duplicates += 1;
            }
        }
        table
    }

    pub fn lookup(&self, token: &str) -> GenderClass {
        self.map
            .get(&title_case(token))
            .copied()
            .unwrap_or(GenderClass::Unknown)
    }

    /// Lookup of an already title-cased key.
    pub fn get_exact(&self, key: &str) -> Option<GenderClass> {
        self.map.get(key).copied()
    }

    pub fn duplicates(&self) -> u64 {
        self.duplicates
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

pub fn load_gender_table(path: &Path) -> Result<GenderTable, RefDataError> {
    GenderTable::from_tsv(&read_text(path)?, &path.display().to_string())
}

// ---------------------------------------------------------------------------

/// Index of a place in its [`PlaceTable`]; places are sorted by id, so
/// index order is id order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PlaceIdx(pub u16);

impl PlaceIdx {
    pub fn get(self) -> usize {
        usize::from(self.0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Place {
    /// tz identifier, e.g. `Europe/Moscow`.
    pub id: String,
    pub region: Region,
    pub population: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PlaceTable {
    places: Vec<Place>,
    index: HashMap<String, PlaceIdx>,
}

impl PlaceTable {
    pub fn new(mut places: Vec<Place>) -> Result<Self, RefDataError> {
        places.sort_by(|a, b| a.id.cmp(&b.id));
        if places.len() > usize::from(u16::MAX) {
            return Err(RefDataError::Integrity(format!("too many places ({})", places.len())));
        }
        let mut index = HashMap::with_capacity(places.len());
        for (i, place) in places.iter().enumerate() {
            if place.population == 0 {
                return Err(RefDataError::Integrity(format!(
                    "place {} has zero population",
                    place.id
                )));
            }
            if index.insert(place.id.clone(), PlaceIdx(i as u16)).is_some() {
                return Err(RefDataError::Integrity(format!("duplicate place {}", place.id)));
            }
        }
        Ok(PlaceTable { places, index })
    }

    pub fn from_tsv(text: &str, source_name: &str) -> Result<Self, RefDataError> {
        let mut places = Vec::new();
        for (line, fields) in tsv_rows(text) {
            expect_fields(source_name, line, &fields, 3)?;
            let f = &fields;
            let region: Region = f[1].parse().map_err(|e: String| parse_err(source_name, line, e))?;
            let population: u64 = f[2].parse().ok().filter(|p| *p > 0).ok_or_else(|| {
                parse_err(
                    source_name,
                    line,
                    format!("population must be a positive integer, got {:?}", f[2]),
                )
            })?;
            places.push(Place {
                id: f[0].to_owned(),
                region,
                population,
            });
        }
        PlaceTable::new(places)
    }

    pub fn idx(&self, place_id: &str) -> Option<PlaceIdx> {
        self.index.get(place_id).copied()
    }

    pub fn get(&self, idx: PlaceIdx) -> &Place {
        &self.places[idx.get()]
    }

    pub fn iter(&self) -> impl Iterator<Item = (PlaceIdx, &Place)> {
        self.places.iter().enumerate().map(|(i, p)| (PlaceIdx(i as u16), p))
    }

    pub fn len(&self) -> usize {
        self.places.len()
    }

    pub fn is_empty(&self) -> bool {
        self.places.is_empty()
    }
}

pub fn load_places(path: &Path) -> Result<PlaceTable, RefDataError> {
    PlaceTable::from_tsv(&read_text(path)?, &path.display().to_string())
}

// ---------------------------------------------------------------------------

/// Fraction of each place's population bearing a given name token.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct IncidenceTable {
    // token (lowercase) -> (place, incidence), sorted by place
    map: HashMap<String, Vec<(PlaceIdx, f64)>>,
    duplicates: u64,
}

impl IncidenceTable {
    pub fn from_tsv(text: &str, source_name: &str, places: &PlaceTable) -> Result<Self, RefDataError> {
        let mut rows = Vec::new();
        for (line, fields) in tsv_rows(text) {
            expect_fields(source_name, line, &fields, 3)?;
            let f = &fields;
            let place = places.idx(f[1]).ok_or_else(|| {
                RefDataError::Integrity(format!(
                    "{source_name} line {line}: place {:?} is not in the places table",
                    f[1]
                ))
            })?;
            let incidence: f64 = f[2]
                .parse()
                .map_err(|_| parse_err(source_name, line, format!("bad incidence {:?}", f[2])))?;
            if !(0.0..=1.0).contains(&incidence) {
                return Err(parse_err(
                    source_name,
                    line,
                    format!("incidence {incidence} outside [0, 1]"),
                ));
            }
            rows.push((f[0], place, incidence));
        }
        let table = IncidenceTable::from_rows(rows);
        if table.duplicates > 0 {
            log::warn!(
                "{source_name}: {} duplicate (name, place) rows, last row wins",
                table.duplicates
            );
        }
        Ok(table)
    }

    /// Builds a table from (token, place, incidence) rows; later rows for the
    /// same pair replace earlier ones. Incidences must already be in [0, 1].
    pub fn from_rows<'a>(rows: impl IntoIterator<Item = (&'a str, PlaceIdx, f64)>) -> Self {
        let mut map: HashMap<String, Vec<(PlaceIdx, f64)>> = HashMap::new();
        let mut duplicates = 0;
        for (token, place, incidence) in rows {
            debug_assert!((0.0..=1.0).contains(&incidence));
            let entries = map.entry(token.to_lowercase()).or_default();
            match entries.iter_mut().find(|(p, _)| *p == place) {
                Some(slot) => {
                    slot.1 = incidence;
                    duplicates += 1;
                }
                None => entries.push((place, incidence)),
            }
        }
        for entries in map.values_mut() {
            entries.sort_by_key(|(p, _)| *p);
        }
        IncidenceTable { map, duplicates }
    }

    /// Incidence of `token` in `place`; 0 when absent.
    pub fn incidence(&self, token: &str, place: PlaceIdx) -> f64 {
        self.entries(token)
            .binary_search_by_key(&place, |(p, _)| *p)
            .map(|i| self.entries(token)[i].1)
            .unwrap_or(0.0)
    }

    /// All places where `token` occurs, sorted by place.
    pub fn entries(&self, token: &str) -> &[(PlaceIdx, f64)] {
        let hit = match self.map.get(token) {
            Some(v) => Some(v),
            None => self.map.get(&token.to_lowercase()),
        };
        hit.map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn tokens(&self) -> impl Iterator<Item = &str> {
        self.map.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

/// Loads the forename and surname incidence tables. Every place they
/// mention must exist in `places`.
pub fn load_incidence_tables(
    path_forenames: &Path,
    path_surnames: &Path,
    places: &PlaceTable,
) -> Result<(IncidenceTable, IncidenceTable), RefDataError> {
    let fore = IncidenceTable::from_tsv(
        &read_text(path_forenames)?,
        &path_forenames.display().to_string(),
        places,
    )?;
    let sur = IncidenceTable::from_tsv(&read_text(path_surnames)?, &path_surnames.display().to_string(), places)?;
    Ok((fore, sur))
}

// ---------------------------------------------------------------------------

/// Two-letter country-code TLD to region; lookups are case-insensitive.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CcTldMap {
    map: HashMap<String, Region>,
}

impl CcTldMap {
    pub fn from_tsv(text: &str, source_name: &str) -> Result<Self, RefDataError> {
        let mut map = HashMap::new();
        for (line, fields) in tsv_rows(text) {
            expect_fields(source_name, line, &fields, 2)?;
            let f = &fields;
            let tld = f[0].to_ascii_lowercase();
            if tld.len() != 2 || !tld.bytes().all(|b| b.is_ascii_lowercase()) {
                return Err(parse_err(
                    source_name,
                    line,
                    format!("{:?} is not a two-letter TLD", f[0]),
                ));
            }
            let region: Region = f[1].parse().map_err(|e: String| parse_err(source_name, line, e))?;
            if map.insert(tld, region).is_some() {
                return Err(parse_err(source_name, line, format!("duplicate TLD {:?}", f[0])));
            }
        }
        Ok(CcTldMap { map })
    }

    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = (&'a str, Region)>) -> Self {
        CcTldMap {
            map: pairs.into_iter().map(|(t, r)| (t.to_ascii_lowercase(), r)).collect(),
        }
    }

    pub fn get(&self, tld: &str) -> Option<Region> {
        if tld.bytes().any(|b| b.is_ascii_uppercase()) {
            self.map.get(&tld.to_ascii_lowercase()).copied()
        } else {
            self.map.get(tld).copied()
        }
    }

    /// TLDs mapped to `region`, sorted.
    pub fn tlds_for(&self, region: Region) -> Vec<&str> {
        let mut v: Vec<&str> = self
            .map
            .iter()
            .filter(|(_, r)| **r == region)
            .map(|(t, _)| t.as_str())
            .collect();
        v.sort_unstable();
        v
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

pub fn load_cctld_map(path: &Path) -> Result<CcTldMap, RefDataError> {
    CcTldMap::from_tsv(&read_text(path)?, &path.display().to_string())
}

// ---------------------------------------------------------------------------

/// Piecewise-constant UTC offset per place.
///
/// Besides the per-place transition lists, the set keeps a global index of
/// all transition instants: between two consecutive instants every place has
/// a fixed offset, so the places sharing an offset can be listed once per
/// segment and looked up with a single binary search.
#[derive(Clone, Debug, PartialEq)]
pub struct TzRuleSet {
    place_ids: Vec<String>,
    // per place: (since, offset minutes); first entry applies to all earlier instants
    rules: Vec<Vec<(i64, i32)>>,
    // start instants of segments 1.. (segment 0 is unbounded below)
    cuts: Vec<i64>,
    // per segment: (offset, place) sorted
    segments: Vec<Vec<(i32, PlaceIdx)>>,
}

/// Where tz rules come from.
#[derive(Clone, Debug)]
pub enum TzSource {
    /// Extracted transition table (`tz_rules.tsv`).
    Table(PathBuf),
    /// A compiled zoneinfo tree such as `/usr/share/zoneinfo`, evaluated
    /// over the given year window.
    Zoneinfo {
        dir: PathBuf,
        years: crate::civil::YearRange,
    },
}

impl TzRuleSet {
    /// Builds the rule set from per-place transition lists keyed by place id.
    /// Every place must have rules starting at or before 1970-01-01.
    pub fn from_transitions(
        places: &PlaceTable,
        mut by_id: HashMap<String, Vec<(i64, i32)>>,
    ) -> Result<Self, RefDataError> {
        let mut place_ids = Vec::with_capacity(places.len());
        let mut rules = Vec::with_capacity(places.len());
        for (_, place) in places.iter() {
            let mut list = by_id
                .remove(&place.id)
                .ok_or_else(|| RefDataError::Integrity(format!("no tz rules for place {}", place.id)))?;
            list.sort_by_key(|(since, _)| *since);
            list.dedup_by(|b, a| a.1 == b.1);
            match list.first() {
                Some((since, _)) if *since <= 0 => {}
                _ => {
                    return Err(RefDataError::Integrity(format!(
                        "tz rules for {} do not cover 1970-01-01",
                        place.id
                    )))
                }
            }
            place_ids.push(place.id.clone());
            rules.push(list);
        }
        if let Some(extra) = by_id.keys().min() {
            return Err(RefDataError::Integrity(format!("tz rules for unknown place {extra}")));
        }

        let mut cuts: Vec<i64> = rules.iter().flat_map(|r| r.iter().skip(1).map(|(s, _)| *s)).collect();
        cuts.sort_unstable();
        cuts.dedup();
        let mut set = TzRuleSet {
            place_ids,
            rules,
            cuts,
            segments: Vec::new(),
        };
        let starts = std::iter::once(i64::MIN).chain(set.cuts.iter().copied());
        set.segments = starts
            .map(|start| {
                let mut seg: Vec<(i32, PlaceIdx)> = (0..set.rules.len())
                    .map(|i| (set.offset_at_idx(i, start), PlaceIdx(i as u16)))
                    .collect();
                seg.sort_unstable();
                seg
            })
            .collect();
        Ok(set)
    }

    pub fn from_tsv(text: &str, source_name: &str, places: &PlaceTable) -> Result<Self, RefDataError> {
        let mut by_id: HashMap<String, Vec<(i64, i32)>> = HashMap::new();
        for (line, fields) in tsv_rows(text) {
            expect_fields(source_name, line, &fields, 3)?;
            let f = &fields;
            let since: i64 = f[1]
                .parse()
                .map_err(|_| parse_err(source_name, line, format!("bad instant {:?}", f[1])))?;
            let offset: i32 = f[2]
                .parse()
                .map_err(|_| parse_err(source_name, line, format!("bad offset {:?}", f[2])))?;
            by_id.entry(f[0].to_owned()).or_default().push((since, offset));
        }
        TzRuleSet::from_transitions(places, by_id)
    }

    /// Reads compiled TZif files for every place and extracts the offset
    /// transitions within `years`.
    pub fn from_zoneinfo(
        dir: &Path,
        places: &PlaceTable,
        years: crate::civil::YearRange,
    ) -> Result<Self, RefDataError> {
        use jiff::tz::TimeZone;
        use jiff::Timestamp;

        let window_start = crate::civil::year_start(years.first).min(0);
        let window_end = crate::civil::year_start(years.last + 1);
        let mut by_id = HashMap::new();
        for (_, place) in places.iter() {
            let path = dir.join(&place.id);
            let data = fs::read(&path).map_err(|source| RefDataError::Io {
                path: path.clone(),
                source,
            })?;
            let tz = TimeZone::tzif(&place.id, &data)
                .map_err(|e| RefDataError::Integrity(format!("{}: {e}", path.display())))?;
            let minutes = |secs: i32| (f64::from(secs) / 60.0).round() as i32;
            let start = Timestamp::from_second(window_start).expect("window start in range");
            let mut list = vec![(window_start, minutes(tz.to_offset(start).seconds()))];
            for transition in tz.following(start) {
                let ts = transition.timestamp().as_second();
                if ts >= window_end {
                    break;
                }
                list.push((ts, minutes(transition.offset().seconds())));
            }
            by_id.insert(place.id.clone(), list);
        }
        TzRuleSet::from_transitions(places, by_id)
    }

    fn offset_at_idx(&self, place: usize, ts: i64) -> i32 {
        let list = &self.rules[place];
        let i = list.partition_point(|(since, _)| *since <= ts);
        list[i.saturating_sub(1)].1
    }

    /// UTC offset in minutes of `place` at instant `ts`.
    pub fn offset_at(&self, place: PlaceIdx, ts: i64) -> i32 {
        self.offset_at_idx(place.get(), ts)
    }

    /// Places whose offset at `ts` equals `offset_minutes`, in place order.
    pub fn compatible(&self, ts: i64, offset_minutes: i32) -> impl Iterator<Item = PlaceIdx> + '_ {
        let seg = &self.segments[self.cuts.partition_point(|c| *c <= ts)];
        let lo = seg.partition_point(|(o, _)| *o < offset_minutes);
        seg[lo..]
            .iter()
            .take_while(move |(o, _)| *o == offset_minutes)
            .map(|(_, p)| *p)
    }

    pub fn place_id(&self, place: PlaceIdx) -> &str {
        &self.place_ids[place.get()]
    }

    pub fn transitions(&self, place: PlaceIdx) -> &[(i64, i32)] {
        &self.rules[place.get()]
    }

    pub fn write_tsv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "# place_id\tsince_unix\toffset_min")?;
        for (id, list) in self.place_ids.iter().zip(&self.rules) {
            for (since, offset) in list {
                writeln!(out, "{id}\t{since}\t{offset}")?;
            }
        }
        Ok(())
    }
}

pub fn load_tz_rules(source: &TzSource, places: &PlaceTable) -> Result<TzRuleSet, RefDataError> {
    match source {
        TzSource::Table(path) => TzRuleSet::from_tsv(&read_text(path)?, &path.display().to_string(), places),
        TzSource::Zoneinfo { dir, years } => TzRuleSet::from_zoneinfo(dir, places, *years),
    }
}

// ---------------------------------------------------------------------------

/// Everything the classifiers read, loaded once and shared read-only.
#[derive(Clone, Debug)]
pub struct RefData {
    pub gender: GenderTable,
    pub forenames: IncidenceTable,
    pub surnames: IncidenceTable,
    pub places: PlaceTable,
    pub cctld: CcTldMap,
    pub tz: TzRuleSet,
}

impl RefData {
    pub const FILES: [&'static str; 6] = [
        "gender.tsv",
        "forenames.tsv",
        "surnames.tsv",
        "places.tsv",
        "cctld.tsv",
        "tz_rules.tsv",
    ];

    /// Loads the standard file set from a directory.
    pub fn load(dir: &Path) -> Result<Self, RefDataError> {
        if !dir.is_dir() {
            return Err(RefDataError::Io {
                path: dir.to_owned(),
                source: io::Error::new(io::ErrorKind::NotFound, "reference data directory not found"),
            });
        }
        let places = load_places(&dir.join("places.tsv"))?;
        let (forenames, surnames) =
            load_incidence_tables(&dir.join("forenames.tsv"), &dir.join("surnames.tsv"), &places)?;
        let tz = load_tz_rules(&TzSource::Table(dir.join("tz_rules.tsv")), &places)?;
        Ok(RefData {
            gender: load_gender_table(&dir.join("gender.tsv"))?,
            forenames,
            surnames,
            cctld: load_cctld_map(&dir.join("cctld.tsv"))?,
            places,
            tz,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn places() -> PlaceTable {
        PlaceTable::from_tsv(
            "# comment\nEurope/Rome\tEurope\t60000000\nEurope/Moscow\tRussia\t100000000\nAsia/Tokyo\tEast Asia\t126000000\n",
            "places",
        )
        .unwrap()
    }

    #[test]
    fn gender_rows_and_totality() {
        let t = GenderTable::from_tsv("Maria\tfemale\nANDREA\tandy\nEli\tfemale\nMaria\tmostly_female\n", "g").unwrap();
        assert_eq!(t.lookup("Maria"), GenderClass::MostlyFemale);
        assert_eq!(t.duplicates(), 1);
        assert_eq!(t.lookup("andrea"), GenderClass::Andy);
        assert_eq!(t.lookup("Eli"), GenderClass::Female);
        assert_eq!(t.lookup("Zyxxy"), GenderClass::Unknown);
    }

    #[test]
    fn gender_unknown_class_is_fatal_with_row() {
        let err = GenderTable::from_tsv("Maria\tfemale\nBob\tbloke\n", "g").unwrap_err();
        assert!(matches!(err, RefDataError::Parse { line: 2, .. }), "{err}");
    }

    #[test]
    fn places_sorted_and_validated() {
        let p = places();
        assert_eq!(p.len(), 3);
        let ids: Vec<_> = p.iter().map(|(_, pl)| pl.id.as_str()).collect();
        assert_eq!(ids, ["Asia/Tokyo", "Europe/Moscow", "Europe/Rome"]);
        let moscow = p.get(p.idx("Europe/Moscow").unwrap());
        assert_eq!(moscow.region, Region::Russia);
        assert!(PlaceTable::from_tsv("A\tEurope\t0\n", "p").is_err());
        assert!(PlaceTable::from_tsv("A\tAtlantis\t5\n", "p").is_err());
        assert!(PlaceTable::from_tsv("A\tEurope\t5\nA\tEurope\t6\n", "p").is_err());
    }

    #[test]
    fn incidence_lookup_and_validation() {
        let p = places();
        let rome = p.idx("Europe/Rome").unwrap();
        let t = IncidenceTable::from_tsv("anna\tEurope/Rome\t0.010\n", "f", &p).unwrap();
        assert_eq!(t.incidence("anna", rome), 0.010);
        assert_eq!(t.incidence("Anna", rome), 0.010);
        assert_eq!(t.incidence("anna", p.idx("Asia/Tokyo").unwrap()), 0.0);
        assert_eq!(t.incidence("bob", rome), 0.0);
        assert!(matches!(
            IncidenceTable::from_tsv("anna\tEurope/Rome\t-0.1\n", "f", &p),
            Err(RefDataError::Parse { line: 1, .. })
        ));
        assert!(IncidenceTable::from_tsv("anna\tEurope/Rome\t1.5\n", "f", &p).is_err());
        assert!(matches!(
            IncidenceTable::from_tsv("anna\tMars/Base\t0.1\n", "f", &p),
            Err(RefDataError::Integrity(_))
        ));
    }

    #[test]
    fn cctld_case_insensitive() {
        let m = CcTldMap::from_tsv("uk\tEurope\nJP\tEast Asia\n", "c").unwrap();
        assert_eq!(m.get("uk"), Some(Region::Europe));
        assert_eq!(m.get("UK"), Some(Region::Europe));
        assert_eq!(m.get("jp"), Some(Region::EastAsia));
        assert_eq!(m.get("com"), None);
        assert!(CcTldMap::from_tsv("com\tEurope\n", "c").is_err());
    }

    #[test]
    fn region_names_round_trip() {
        for r in Region::ALL {
            assert_eq!(r.name().parse::<Region>().unwrap(), r);
            assert_eq!(Region::ALL[r.index()], r);
        }
        assert_eq!(
            serde_json::to_string(&Region::SouthEasternAsia).unwrap(),
            "\"South-eastern Asia\""
        );
    }

    #[test]
    fn tz_segments_match_per_place_rules() {
        let p = places();
        let text = "Europe/Rome\t0\t60\nEurope/Rome\t100\t120\nEurope/Rome\t200\t60\n\
                    Europe/Moscow\t-5\t180\nEurope/Moscow\t150\t240\n\
                    Asia/Tokyo\t0\t540\n";
        let tz = TzRuleSet::from_tsv(text, "tz", &p).unwrap();
        let rome = p.idx("Europe/Rome").unwrap();
        assert_eq!(tz.offset_at(rome, -1000), 60);
        assert_eq!(tz.offset_at(rome, 100), 120);
        assert_eq!(tz.offset_at(rome, 199), 120);
        assert_eq!(tz.offset_at(rome, 200), 60);
        for ts in [-10, 0, 99, 100, 149, 150, 199, 200, 1000] {
            for off in [60, 120, 180, 240, 540] {
                let fast: Vec<_> = tz.compatible(ts, off).collect();
                let slow: Vec<_> = p
                    .iter()
                    .map(|(i, _)| i)
                    .filter(|i| tz.offset_at(*i, ts) == off)
                    .collect();
                assert_eq!(fast, slow, "ts={ts} off={off}");
            }
        }
    }

    #[test]
    fn tz_integrity_errors() {
        let p = places();
        let missing = "Europe/Rome\t0\t60\nAsia/Tokyo\t0\t540\n";
        assert!(TzRuleSet::from_tsv(missing, "tz", &p).is_err());
        let late = "Europe/Rome\t10\t60\nEurope/Moscow\t0\t180\nAsia/Tokyo\t0\t540\n";
        assert!(TzRuleSet::from_tsv(late, "tz", &p).is_err());
        let extra = "Europe/Rome\t0\t60\nEurope/Moscow\t0\t180\nAsia/Tokyo\t0\t540\nMars/Base\t0\t0\n";
        assert!(TzRuleSet::from_tsv(extra, "tz", &p).is_err());
    }

    #[test]
    fn title_case_normalization() {
        assert_eq!(title_case("maria"), "Maria");
        assert_eq!(title_case("MARIA"), "Maria");
        assert_eq!(title_case("o'sullivan"), "O'sullivan");
        assert_eq!(title_case("ÉLODIE"), "Élodie");
        assert_eq!(title_case(""), "");
    }
}
