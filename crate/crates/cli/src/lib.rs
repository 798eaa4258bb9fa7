//! Pieces of the `stsq` command line that tests also need: flag value
//! parsers, text rendering and the task-corpus runner.

pub mod corpus;
pub mod render;

use stsq_core::dsl::{self, ParseError};
use stsq_core::{FrequencyBand, GeoPoint, HoursOfOperation, Predicate};

/// Process exit codes.
pub mod exit {
    pub const OK: u8 = 0;
    /// A task or assertion failed, or the server could not start.
    pub const FAILURE: u8 = 1;
    /// Bad flags, unparsable DSL or a malformed corpus.
    pub const USAGE: u8 = 2;
    /// The data file is unreadable or has rejected rows.
    pub const DATA: u8 = 3;
}

fn single_predicate(keyword: &str, text: &str) -> Result<Predicate, ParseError> {
    let prefix = format!("{keyword} ");
    let q = dsl::parse(&(prefix.clone() + text)).map_err(|e| ParseError {
        offset: e.offset.saturating_sub(prefix.chars().count()),
        expected: e.expected,
    })?;
    match q.clauses() {
        [c] if c.include => Ok(c.predicate.clone()),
        _ => Err(ParseError {
            offset: 0,
            expected: format!("a single {keyword} range"),
        }),
    }
}

/// `25MHz..35MHz` or `30MHz +/- 5MHz`, in the DSL's frequency syntax.
pub fn parse_window(text: &str) -> Result<FrequencyBand, ParseError> {
    match single_predicate("freq", text)? {
        Predicate::BandOverlaps(b) => Ok(b),
        _ => unreachable!("freq always yields a band"),
    }
}

/// `03:00..08:00`; the end may be `24:00` and may precede the start.
pub fn parse_hours_range(text: &str) -> Result<HoursOfOperation, ParseError> {
    match single_predicate("active", text)? {
        Predicate::ActiveDuring(h) => Ok(h),
        _ => unreachable!("active always yields hours"),
    }
}

/// `lat,lon` in decimal degrees.
pub fn parse_point(text: &str) -> Result<GeoPoint, String> {
    let (lat, lon) = text
        .split_once(',')
        .ok_or_else(|| format!("expected LAT,LON, got {text:?}"))?;
    let number = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|_| format!("{:?} is not a number", s.trim()))
    };
    GeoPoint::new(number(lat)?, number(lon)?).map_err(|e| e.to_string())
}

pub fn parse_radius(text: &str) -> Result<f64, String> {
    match text.trim().parse::<f64>() {
        Ok(r) if r > 0.0 && r.is_finite() => Ok(r),
        Ok(_) => Err("radius must be greater than zero".into()),
        Err(_) => Err(format!("{text:?} is not a number")),
    }
}
