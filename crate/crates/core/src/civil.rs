// SPDX-License-Identifier: Apache-2.0

//! Proleptic Gregorian calendar arithmetic on Unix timestamps.

use std::fmt;
use std::str::FromStr;

use serde::{Serialize, Serializer};

const SECONDS_PER_DAY: i64 = 86_400;

/// Days since 1970-01-01 for a civil date.
pub fn days_from_civil(year: i64, month: u32, day: u32) -> i64 {
    let y = if month <= 2 { year - 1 } else { year };
    let era = y.div_euclid(400);
    let yoe = y - era * 400;
    let m = i64::from(month);
    let mp = if m > 2 { m - 3 } else { m + 9 };
    let doy = (153 * mp + 2) / 5 + i64::from(day) - 1;
    let doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    era * 146_097 + doe - 719_468
}

/// Civil (year, month, day) for a count of days since 1970-01-01.
pub fn civil_from_days(days: i64) -> (i64, u32, u32) {
    let z = days + 719_468;
    let era = z.div_euclid(146_097);
    let doe = z - era * 146_097;
    let yoe = (doe - doe / 1460 + doe / 36_524 - doe / 146_096) / 365;
    let doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    let mp = (5 * doy + 2) / 153;
    let day = (doy - (153 * mp + 2) / 5 + 1) as u32;
    let month = if mp < 10 { mp + 3 } else { mp - 9 } as u32;
    let year = yoe + era * 400 + i64::from(month <= 2);
    (year, month, day)
}

/// Calendar year of a Unix timestamp, evaluated in UTC.
pub fn utc_year(ts: i64) -> i32 {
    civil_from_days(ts.div_euclid(SECONDS_PER_DAY)).0 as i32
}

/// Unix timestamp of January 1st, 00:00:00 UTC of `year`.
pub fn year_start(year: i32) -> i64 {
    days_from_civil(i64::from(year), 1, 1) * SECONDS_PER_DAY
}

/// Inclusive range of calendar years, written `A:B` on the command line.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct YearRange {
    pub first: i32,
    pub last: i32,
}

impl YearRange {
    pub const STUDY: YearRange = YearRange {
        first: 1970,
        last: 2020,
    };
    pub const GROWTH_FIT: YearRange = YearRange {
        first: 1971,
        last: 2019,
    };

    pub fn new(first: i32, last: i32) -> Option<Self> {
        (first <= last).then_some(YearRange { first, last })
    }

    pub fn contains_year(&self, year: i32) -> bool {
        (self.first..=self.last).contains(&year)
    }

    /// True iff `ts` falls between the first second of `first` and the last
    /// second of `last`, both inclusive.
    pub fn contains_ts(&self, ts: i64) -> bool {
        ts >= year_start(self.first) && ts < year_start(self.last + 1)
    }

    pub fn years(&self) -> impl Iterator<Item = i32> {
        self.first..=self.last
    }

    pub fn len(&self) -> usize {
        (self.last - self.first + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Intersection with another range, if non-empty.
    pub fn clamp_to(&self, other: &YearRange) -> Option<YearRange> {
        YearRange::new(self.first.max(other.first), self.last.min(other.last))
    }
}

impl fmt::Display for YearRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.first, self.last)
    }
}

impl FromStr for YearRange {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (a, b) = s.split_once(':').ok_or_else(|| format!("expected A:B, got {s:?}"))?;
        let first: i32 = a.trim().parse().map_err(|_| format!("bad year {a:?}"))?;
        let last: i32 = b.trim().parse().map_err(|_| format!("bad year {b:?}"))?;
        YearRange::new(first, last).ok_or_else(|| format!("empty year range {s:?}"))
    }
}

impl Serialize for YearRange {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}
