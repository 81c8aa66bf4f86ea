//! Second-resolution UTC timestamps and the single fixed offset used to
//! decide calendar dates.

use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, FixedOffset, NaiveDateTime, TimeZone as _, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SECONDS_PER_DAY: i64 = 86_400;

/// Seconds since the Unix epoch, UTC.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Timestamp(pub i64);

impl Timestamp {
    pub fn seconds(self) -> i64 {
        self.0
    }

    /// Days since 1970-01-01 of the local calendar date in `tz`.
    pub fn day_number(self, tz: TimeZone) -> i64 {
        (self.0 + i64::from(tz.offset_seconds())).div_euclid(SECONDS_PER_DAY)
    }

    /// ISO-8601 rendering in UTC, e.g. `2010-10-01T08:30:00Z`.
    pub fn to_rfc3339(self) -> String {
        match Utc.timestamp_opt(self.0, 0).single() {
            Some(dt) => dt.format("%Y-%m-%dT%H:%M:%SZ").to_string(),
            None => self.0.to_string(),
        }
    }
}

impl fmt::Display for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_rfc3339())
    }
}

/// A fixed UTC offset; the corpus time zone.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TimeZone(FixedOffset);

impl TimeZone {
    pub const ENV_VAR: &'static str = "PAIDPOSTER_TZ";

    pub fn utc() -> Self {
        TimeZone(FixedOffset::east_opt(0).expect("zero offset"))
    }

    pub fn offset_seconds(self) -> i32 {
        self.0.local_minus_utc()
    }

    /// Zone from the environment variable, falling back to UTC when unset.
    pub fn from_env() -> Result<Self> {
        match std::env::var(Self::ENV_VAR) {
            Ok(v) if !v.trim().is_empty() => v.parse(),
            _ => Ok(Self::utc()),
        }
    }

    /// Parses a post time: integer epoch seconds, RFC 3339 with an explicit
    /// offset, or a naive `YYYY-MM-DD[ T]HH:MM[:SS]` read in this zone.
    pub fn parse_post_time(self, raw: &str) -> Option<Timestamp> {
        let s = raw.trim();
        if s.is_empty() {
            return None;
        }
        if let Ok(secs) = s.parse::<i64>() {
            return Some(Timestamp(secs));
        }
        if let Ok(dt) = DateTime::parse_from_rfc3339(s) {
            return Some(Timestamp(dt.timestamp()));
        }
        const NAIVE: [&str; 4] = [
            "%Y-%m-%dT%H:%M:%S",
            "%Y-%m-%d %H:%M:%S",
            "%Y-%m-%dT%H:%M",
            "%Y-%m-%d %H:%M",
        ];
        NAIVE.iter().find_map(|fmt| {
            let naive = NaiveDateTime::parse_from_str(s, fmt).ok()?;
            let local = self.0.from_local_datetime(&naive).single()?;
            Some(Timestamp(local.timestamp()))
        })
    }
}

impl Default for TimeZone {
    fn default() -> Self {
        Self::utc()
    }
}

impl FromStr for TimeZone {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        if t.eq_ignore_ascii_case("utc") || t == "Z" {
            return Ok(Self::utc());
        }
        let bad = || Error::TimeZone(s.to_string());
        let (sign, rest) = match t.as_bytes().first() {
            Some(b'+') => (1, &t[1..]),
            Some(b'-') => (-1, &t[1..]),
            _ => return Err(bad()),
        };
        let digits: String = rest.chars().filter(|c| *c != ':').collect();
        if digits.len() != 4 || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let hours: i32 = digits[..2].parse().map_err(|_| bad())?;
        let minutes: i32 = digits[2..].parse().map_err(|_| bad())?;
        if hours > 23 || minutes > 59 {
            return Err(bad());
        }
        FixedOffset::east_opt(sign * (hours * 3600 + minutes * 60))
            .map(TimeZone)
            .ok_or_else(bad)
    }
}

impl fmt::Display for TimeZone {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.offset_seconds() == 0 {
            f.write_str("UTC")
        } else {
            write!(f, "{}", self.0)
        }
    }
}
