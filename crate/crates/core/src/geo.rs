// SPDX-License-Identifier: Apache-2.0

//! Region assignment from the email ccTLD, from the UTC offset combined with
//! name incidence, or from the mixed strategy (email for offset 0, tz
//! scoring otherwise).

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::gender::NameTokens;
use crate::ingest::CommitRecord;
use crate::refdata::{CcTldMap, IncidenceTable, Place, PlaceIdx, PlaceTable, RefData, Region, TzRuleSet};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GeoMethod {
    Email,
    Tzname,
    Unresolved,
}

impl GeoMethod {
    pub const ALL: [GeoMethod; 3] = [GeoMethod::Email, GeoMethod::Tzname, GeoMethod::Unresolved];

    pub fn as_str(self) -> &'static str {
        match self {
            GeoMethod::Email => "email",
            GeoMethod::Tzname => "tzname",
            GeoMethod::Unresolved => "unresolved",
        }
    }
}

impl fmt::Display for GeoMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for GeoMethod {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        GeoMethod::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| format!("unknown geolocation method {s:?}"))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Email,
    Tzname,
    #[default]
    Mixed,
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "email" => Ok(Strategy::Email),
            "tzname" => Ok(Strategy::Tzname),
            "mixed" => Ok(Strategy::Mixed),
            other => Err(format!("unknown strategy {other:?} (expected email, tzname or mixed)")),
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::Email => "email",
            Strategy::Tzname => "tzname",
            Strategy::Mixed => "mixed",
        })
    }
}

/// Summed place scores per region, indexed by [`Region::index`].
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct RegionScores(pub [f64; Region::COUNT]);

impl RegionScores {
    pub fn get(&self, region: Region) -> f64 {
        self.0[region.index()]
    }

    pub fn iter(&self) -> impl Iterator<Item = (Region, f64)> + '_ {
        Region::ALL.into_iter().map(|r| (r, self.0[r.index()]))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlaceScore {
    pub place: PlaceIdx,
    pub score: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GeoResolution {
    pub region: Option<Region>,
    pub method: GeoMethod,
    /// Per-region sums whenever tz scoring ran.
    pub scores: Option<RegionScores>,
}

impl GeoResolution {
    pub const UNRESOLVED: GeoResolution = GeoResolution {
        region: None,
        method: GeoMethod::Unresolved,
        scores: None,
    };

    fn from_scores(scores: RegionScores) -> Self {
        let region = pick_region(&scores);
        GeoResolution {
            region,
            method: if region.is_some() {
                GeoMethod::Tzname
            } else {
                GeoMethod::Unresolved
            },
            scores: Some(scores),
        }
    }
}

/// Lowercased last label of the email domain, if it is a known ccTLD.
pub fn extract_cctld(email: &[u8], map: &CcTldMap) -> Option<String> {
    let at = email.iter().rposition(|b| *b == b'@')?;
    let (local, domain) = (&email[..at], &email[at + 1..]);
    let domain = domain.trim_ascii();
    if local.is_empty() || !domain.contains(&b'.') {
        return None;
    }
    let label = domain.rsplit(|b| *b == b'.').next()?;
    if label.len() != 2 || !label.iter().all(u8::is_ascii_alphabetic) {
        return None;
    }
    let tld = String::from_utf8_lossy(label).to_ascii_lowercase();
    map.get(&tld).is_some().then_some(tld)
}

pub fn email_region(email: &[u8], map: &CcTldMap) -> Option<Region> {
    extract_cctld(email, map).and_then(|tld| map.get(&tld))
}

pub fn geolocate_email(record: &CommitRecord, map: &CcTldMap) -> GeoResolution {
    match email_region(&record.author_email, map) {
        Some(region) => GeoResolution {
            region: Some(region),
            method: GeoMethod::Email,
            scores: None,
        },
        None => GeoResolution::UNRESOLVED,
    }
}

/// Places whose offset at `ts` is `offset_minutes`, in place-id order.
pub fn compatible_places(ts: i64, offset_minutes: i32, rules: &TzRuleSet) -> Vec<PlaceIdx> {
    rules.compatible(ts, offset_minutes).collect()
}

/// Sum over tokens and over both tables of population times incidence.
pub fn score_place(
    tokens: &NameTokens,
    place_idx: PlaceIdx,
    place: &Place,
    forenames: &IncidenceTable,
    surnames: &IncidenceTable,
) -> PlaceScore {
    let population = place.population as f64;
    let mut score = 0.0;
    for token in tokens.iter() {
        let token = token.to_lowercase();
        for table in [forenames, surnames] {
            score += population * table.incidence(&token, place_idx);
        }
    }
    PlaceScore {
        place: place_idx,
        score,
    }
}

/// Region with the highest score, provided it is positive and strictly
/// above every other region.
pub fn pick_region(scores: &RegionScores) -> Option<Region> {
    let mut best: Option<(Region, f64)> = None;
    let mut tied = false;
    for (region, score) in scores.iter() {
        match best {
            Some((_, top)) if score < top => {}
            Some((_, top)) if score == top => tied = true,
            _ => {
                best = Some((region, score));
                tied = false;
            }
        }
    }
    match best {
        Some((region, top)) if top > 0.0 && !tied => Some(region),
        _ => None,
    }
}

pub fn geolocate_tzname(record: &CommitRecord, tokens: &NameTokens, refs: &RefData) -> GeoResolution {
    let mut sums = RegionScores::default();
    for idx in compatible_places(record.author_timestamp, record.utc_offset_minutes, &refs.tz) {
        let place = refs.places.get(idx);
        let score = score_place(tokens, idx, place, &refs.forenames, &refs.surnames).score;
        sums.0[place.region.index()] += score;
    }
    GeoResolution::from_scores(sums)
}

pub fn geolocate_mixed(record: &CommitRecord, tokens: &NameTokens, refs: &RefData) -> GeoResolution {
    if record.utc_offset_minutes == 0 {
        geolocate_email(record, &refs.cctld)
    } else {
        geolocate_tzname(record, tokens, refs)
    }
}

pub fn geolocate(strategy: Strategy, record: &CommitRecord, tokens: &NameTokens, refs: &RefData) -> GeoResolution {
    match strategy {
        Strategy::Email => geolocate_email(record, &refs.cctld),
        Strategy::Tzname => geolocate_tzname(record, tokens, refs),
        Strategy::Mixed => geolocate_mixed(record, tokens, refs),
    }
}

/// Precomputed place scores for one author's name.
///
/// Only places where some token has non-zero incidence can score above
/// zero, so per-commit work is proportional to the name's footprint rather
/// than to the number of compatible places. Scores are accumulated in the
/// same token and table order as [`score_place`], and regional sums in
/// place order, so results are bit-identical to the direct computation.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct NameFootprint {
    scores: Vec<(PlaceIdx, Region, f64)>,
}

impl NameFootprint {
    pub fn new(
        tokens: &NameTokens,
        forenames: &IncidenceTable,
        surnames: &IncidenceTable,
        places: &PlaceTable,
    ) -> Self {
        let mut terms: Vec<(PlaceIdx, Vec<f64>)> = Vec::new();
        for token in tokens.iter() {
            let token = token.to_lowercase();
            for table in [forenames, surnames] {
                for &(place, incidence) in table.entries(&token) {
                    match terms.binary_search_by_key(&place, |(p, _)| *p) {
                        Ok(i) => terms[i].1.push(incidence),
                        Err(i) => terms.insert(i, (place, vec![incidence])),
                    }
                }
            }
        }
        let scores = terms
            .into_iter()
            .map(|(idx, incidences)| {
                let place = places.get(idx);
                let population = place.population as f64;
                let score = incidences.into_iter().fold(0.0, |acc, inc| acc + population * inc);
                (idx, place.region, score)
            })
            .collect();
        NameFootprint { scores }
    }

    pub fn from_refs(tokens: &NameTokens, refs: &RefData) -> Self {
        NameFootprint::new(tokens, &refs.forenames, &refs.surnames, &refs.places)
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn region_scores(&self, ts: i64, offset_minutes: i32, rules: &TzRuleSet) -> RegionScores {
        let mut sums = RegionScores::default();
        for &(idx, region, score) in &self.scores {
            if rules.offset_at(idx, ts) == offset_minutes {
                sums.0[region.index()] += score;
            }
        }
        sums
    }

    pub fn resolve_tzname(&self, ts: i64, offset_minutes: i32, rules: &TzRuleSet) -> GeoResolution {
        GeoResolution::from_scores(self.region_scores(ts, offset_minutes, rules))
    }
}

/// Fraction of the commits in `year` recorded at offset 0; `None` when the
/// year has no commits.
pub fn tzz_share<I>(records: I, year: i32) -> Option<f64>
where
    I: IntoIterator<Item = (i64, i32)>,
{
    let (mut zero, mut total) = (0u64, 0u64);
    for (ts, offset) in records {
        if crate::civil::utc_year(ts) == year {
            total += 1;
            zero += u64::from(offset == 0);
        }
    }
    (total > 0).then(|| zero as f64 / total as f64)
}
