//! Text form of a query.
//!
//! ```text
//! query      := clause { connector clause } ;
//! connector  := "and" | "or" ;
//! clause     := [ "not" ] predicate ;
//! predicate  := "name" "=" quoted-string
//!             | "within" decimal "km" "of" "(" signed-decimal "," signed-decimal ")"
//!             | "active" time ".." time
//!             | "freq" freq ( ".." freq | "+/-" freq ) ;
//! time       := digit{1,2} ":" digit{2} ;
//! freq       := decimal unit ;  unit := "Hz" | "kHz" | "MHz" | "GHz" | "THz" ;
//! ```
//!
//! Keywords and units are case-insensitive and whitespace between tokens is
//! free. `not` clears the clause's include flag; `+/-` is rewritten to an
//! explicit band, so [`print`] always emits the `..` form.

use std::fmt;

use thiserror::Error;

use crate::model::{FrequencyBand, GeoPoint, HoursOfOperation, TimeOfDay, MAX_HZ};
use crate::query::{Clause, Connector, Predicate, Query};

/// Where parsing stopped and what would have been accepted there. The
/// offset counts characters, not bytes.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("parse error at offset {offset}: expected {expected}")]
pub struct ParseError {
    pub offset: usize,
    pub expected: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FrequencyError {
    #[error("expected a decimal number followed by a unit")]
    Malformed,
    #[error("missing frequency unit")]
    MissingUnit,
    #[error("unknown frequency unit {0:?}")]
    UnknownUnit(String),
    #[error("frequency is not a whole number of hertz")]
    NonIntegralHertz,
    #[error("frequency exceeds 1 THz")]
    OutOfRange,
}

const UNITS: [(&str, u32); 5] = [("thz", 12), ("ghz", 9), ("mhz", 6), ("khz", 3), ("hz", 0)];
const UNIT_EXPECTATION: &str = "frequency unit (Hz, kHz, MHz, GHz, THz)";

fn unit_exponent(unit: &str) -> Option<u32> {
    let lower = unit.to_ascii_lowercase();
    UNITS.iter().find(|(u, _)| *u == lower).map(|&(_, e)| e)
}

/// Scales an unsigned decimal literal by `10^exponent` into exact hertz.
fn scale_decimal(literal: &str, exponent: u32) -> Result<u64, FrequencyError> {
    let (int_part, frac_part) = match literal.split_once('.') {
        Some((i, f)) => (i, f),
        None => (literal, ""),
    };
    let valid = |s: &str| s.bytes().all(|b| b.is_ascii_digit());
    if int_part.is_empty() || !valid(int_part) || !valid(frac_part) || literal.ends_with('.') {
        return Err(FrequencyError::Malformed);
    }
    let frac = frac_part.trim_end_matches('0');
    if frac.len() as u32 > exponent {
        return Err(FrequencyError::NonIntegralHertz);
    }
    let int = int_part.trim_start_matches('0');
    // 10^12 has 13 digits; anything longer overflows the axis regardless of unit.
    if int.len() > 13 {
        return Err(FrequencyError::OutOfRange);
    }
    let int_val: u128 = if int.is_empty() { 0 } else { int.parse().map_err(|_| FrequencyError::Malformed)? };
    let frac_val: u128 = if frac.is_empty() { 0 } else { frac.parse().map_err(|_| FrequencyError::Malformed)? };
    let hz = int_val * 10u128.pow(exponent) + frac_val * 10u128.pow(exponent - frac.len() as u32);
    if hz > MAX_HZ as u128 {
        return Err(FrequencyError::OutOfRange);
    }
    Ok(hz as u64)
}

/// Parses `"<decimal><unit>"` such as `900MHz` or `2.564 GHz` into hertz.
pub fn parse_frequency(text: &str) -> Result<u64, FrequencyError> {
    let text = text.trim();
    let split = text
        .find(|c: char| !(c.is_ascii_digit() || c == '.'))
        .unwrap_or(text.len());
    let (number, unit) = text.split_at(split);
    if number.is_empty() {
        return Err(FrequencyError::Malformed);
    }
    let unit = unit.trim_start();
    if unit.is_empty() {
        return Err(FrequencyError::MissingUnit);
    }
    let exponent = unit_exponent(unit).ok_or_else(|| FrequencyError::UnknownUnit(unit.to_string()))?;
    scale_decimal(number, exponent)
}

/// Renders hertz with the largest SI prefix that leaves an integer mantissa.
pub fn format_frequency(hz: u64) -> String {
    const PREFIXES: [(&str, u64); 4] = [
        ("THz", 1_000_000_000_000),
        ("GHz", 1_000_000_000),
        ("MHz", 1_000_000),
        ("kHz", 1_000),
    ];
    if hz != 0 {
        for (unit, scale) in PREFIXES {
            if hz.is_multiple_of(scale) {
                return format!("{}{unit}", hz / scale);
            }
        }
    }
    format!("{hz}Hz")
}

pub fn parse(text: &str) -> Result<Query, ParseError> {
    Parser { src: text, pos: 0 }.query()
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn error_at(&self, byte: usize, expected: impl Into<String>) -> ParseError {
        ParseError {
            offset: self.src[..byte].chars().count(),
            expected: expected.into(),
        }
    }

    fn error(&self, expected: impl Into<String>) -> ParseError {
        self.error_at(self.pos, expected)
    }

    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn skip_ws(&mut self) {
        let trimmed = self.rest().trim_start();
        self.pos = self.src.len() - trimmed.len();
    }

    fn at_end(&mut self) -> bool {
        self.skip_ws();
        self.pos == self.src.len()
    }

    /// The next run of ASCII letters, without consuming it.
    fn peek_word(&mut self) -> &'a str {
        self.skip_ws();
        let rest = self.rest();
        let len = rest
            .find(|c: char| !c.is_ascii_alphabetic())
            .unwrap_or(rest.len());
        &rest[..len]
    }

    fn eat_keyword(&mut self, keyword: &str) -> bool {
        let word = self.peek_word();
        if word.eq_ignore_ascii_case(keyword) {
            self.pos += word.len();
            true
        } else {
            false
        }
    }

    fn expect_keyword(&mut self, keyword: &str) -> Result<(), ParseError> {
        if self.eat_keyword(keyword) {
            Ok(())
        } else {
            Err(self.error(format!("\"{keyword}\"")))
        }
    }

    fn eat_punct(&mut self, punct: &str) -> bool {
        self.skip_ws();
        if self.rest().starts_with(punct) {
            self.pos += punct.len();
            true
        } else {
            false
        }
    }

    fn expect_punct(&mut self, punct: &str) -> Result<(), ParseError> {
        if self.eat_punct(punct) {
            Ok(())
        } else {
            Err(self.error(format!("\"{punct}\"")))
        }
    }

    fn query(mut self) -> Result<Query, ParseError> {
        let mut q = Query::single(self.clause()?);
        loop {
            if self.at_end() {
                return Ok(q);
            }
            if self.eat_keyword("and") {
                q = q.and(self.clause()?);
            } else if self.eat_keyword("or") {
                q = q.or(self.clause()?);
            } else {
                return Err(self.error("\"and\", \"or\" or end of input"));
            }
        }
    }

    fn clause(&mut self) -> Result<Clause, ParseError> {
        let include = !self.eat_keyword("not");
        let predicate = self.predicate()?;
        Ok(Clause { include, predicate })
    }

    fn predicate(&mut self) -> Result<Predicate, ParseError> {
        if self.eat_keyword("name") {
            self.expect_punct("=")?;
            Ok(Predicate::NameIs(self.quoted()?))
        } else if self.eat_keyword("within") {
            let start = self.pos_after_ws();
            let radius = self.decimal(false)?;
            if radius <= 0.0 || !radius.is_finite() {
                return Err(self.error_at(start, "positive radius"));
            }
            self.expect_keyword("km")?;
            self.expect_keyword("of")?;
            self.expect_punct("(")?;
            let lat_at = self.pos_after_ws();
            let lat = self.decimal(true)?;
            self.expect_punct(",")?;
            let lon_at = self.pos_after_ws();
            let lon = self.decimal(true)?;
            self.expect_punct(")")?;
            let centre = GeoPoint::new(lat, lon).map_err(|e| match e {
                crate::ModelError::LatitudeOutOfRange(_) => self.error_at(lat_at, "latitude in [-90, 90]"),
                _ => self.error_at(lon_at, "longitude in [-180, 180]"),
            })?;
            Ok(Predicate::WithinKm {
                centre,
                radius_km: radius,
            })
        } else if self.eat_keyword("active") {
            let start = self.pos_after_ws();
            let from = self.time()?;
            self.expect_punct("..")?;
            let to = self.time()?;
            HoursOfOperation::new(from, to)
                .map(Predicate::ActiveDuring)
                .map_err(|_| self.error_at(start, "non-empty interval not starting at 24:00"))
        } else if self.eat_keyword("freq") {
            let start = self.pos_after_ws();
            let first = self.frequency()?;
            if self.eat_punct("..") {
                let second = self.frequency()?;
                FrequencyBand::from_min_max(first, second)
                    .map(Predicate::BandOverlaps)
                    .map_err(|_| self.error_at(start, "frequency range with low <= high"))
            } else if self.eat_punct("+/-") {
                let tolerance = self.frequency()?;
                FrequencyBand::around(first, tolerance)
                    .map(Predicate::BandOverlaps)
                    .map_err(|_| self.error_at(start, "frequency band within 1 THz"))
            } else {
                Err(self.error("\"..\" or \"+/-\""))
            }
        } else {
            Err(self.error("predicate (name, within, active, freq)"))
        }
    }

    fn pos_after_ws(&mut self) -> usize {
        self.skip_ws();
        self.pos
    }

    fn quoted(&mut self) -> Result<String, ParseError> {
        self.skip_ws();
        if !self.rest().starts_with('"') {
            return Err(self.error("quoted string"));
        }
        let start = self.pos;
        let mut out = String::new();
        let mut chars = self.rest()[1..].char_indices();
        while let Some((i, c)) = chars.next() {
            match c {
                '"' => {
                    self.pos += 1 + i + 1;
                    return Ok(out);
                }
                '\\' => match chars.next() {
                    Some((_, e @ ('"' | '\\'))) => out.push(e),
                    Some((j, _)) => return Err(self.error_at(self.pos + 1 + j, "escape \\\" or \\\\")),
                    None => break,
                },
                c => out.push(c),
            }
        }
        Err(self.error_at(start, "closing quote"))
    }

    /// `[+-]? digits ( "." digits )?`; the dot is consumed only when a digit follows.
    fn decimal_lexeme(&mut self, signed: bool) -> Result<&'a str, ParseError> {
        self.skip_ws();
        let bytes = self.rest().as_bytes();
        let mut i = 0;
        if signed && matches!(bytes.first(), Some(b'+' | b'-')) {
            i += 1;
        }
        let digits_start = i;
        while i < bytes.len() && bytes[i].is_ascii_digit() {
            i += 1;
        }
        if i == digits_start {
            return Err(self.error(if signed { "signed decimal number" } else { "decimal number" }));
        }
        if i + 1 < bytes.len() && bytes[i] == b'.' && bytes[i + 1].is_ascii_digit() {
            i += 1;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
        }
        let lexeme = &self.rest()[..i];
        self.pos += i;
        Ok(lexeme)
    }

    fn decimal(&mut self, signed: bool) -> Result<f64, ParseError> {
        let start = self.pos_after_ws();
        let lexeme = self.decimal_lexeme(signed)?;
        lexeme
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| self.error_at(start, "finite decimal number"))
    }

    fn frequency(&mut self) -> Result<u64, ParseError> {
        let start = self.pos_after_ws();
        let number = self.decimal_lexeme(false)?;
        let unit_at = self.pos_after_ws();
        let unit = self.peek_word();
        if unit.is_empty() {
            return Err(self.error(UNIT_EXPECTATION));
        }
        let exponent = unit_exponent(unit).ok_or_else(|| self.error_at(unit_at, UNIT_EXPECTATION))?;
        self.pos += unit.len();
        scale_decimal(number, exponent).map_err(|e| match e {
            FrequencyError::NonIntegralHertz => self.error_at(start, "whole number of hertz"),
            _ => self.error_at(start, "frequency at most 1 THz"),
        })
    }

    fn time(&mut self) -> Result<TimeOfDay, ParseError> {
        let start = self.pos_after_ws();
        let bytes = self.rest().as_bytes();
        let hour_len = bytes.iter().take(2).take_while(|b| b.is_ascii_digit()).count();
        let well_formed = hour_len > 0
            && bytes.get(hour_len) == Some(&b':')
            && bytes.len() >= hour_len + 3
            && bytes[hour_len + 1..hour_len + 3].iter().all(u8::is_ascii_digit)
            && !bytes.get(hour_len + 3).is_some_and(u8::is_ascii_digit);
        if !well_formed {
            return Err(self.error("time HH:MM"));
        }
        let text = &self.rest()[..hour_len + 3];
        let hours: u32 = text[..hour_len].parse().expect("digits");
        let minutes: u32 = text[hour_len + 1..].parse().expect("digits");
        let time = TimeOfDay::from_hm(hours, minutes)
            .map_err(|_| self.error_at(start, "time between 00:00 and 24:00"))?;
        self.pos += hour_len + 3;
        Ok(time)
    }
}

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        if c == '"' || c == '\\' {
            out.push('\\');
        }
        out.push(c);
    }
    out.push('"');
    out
}

struct PredicateText<'a>(&'a Predicate);

impl fmt::Display for PredicateText<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            Predicate::NameIs(name) => write!(f, "name = {}", quote(name)),
            Predicate::WithinKm { centre, radius_km } => write!(
                f,
                "within {radius_km} km of ({}, {})",
                centre.lat(),
                centre.lon()
            ),
            Predicate::ActiveDuring(h) => write!(f, "active {}..{}", h.from(), h.to()),
            Predicate::BandOverlaps(b) => write!(
                f,
                "freq {}..{}",
                format_frequency(b.low_hz()),
                format_frequency(b.high_hz())
            ),
        }
    }
}

/// Canonical text; `parse(&print(q)) == q` for every valid query.
pub fn print(q: &Query) -> String {
    let mut out = String::new();
    let clause = |out: &mut String, c: &Clause| {
        if !c.include {
            out.push_str("not ");
        }
        out.push_str(&PredicateText(&c.predicate).to_string());
    };
    clause(&mut out, &q.clauses()[0]);
    for (connector, c) in q.connectors().iter().zip(&q.clauses()[1..]) {
        out.push(' ');
        out.push_str(match connector {
            Connector::And => "and",
            Connector::Or => "or",
        });
        out.push(' ');
        clause(&mut out, c);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn band(low: u64, high: u64) -> Predicate {
        Predicate::BandOverlaps(FrequencyBand::from_min_max(low, high).unwrap())
    }

    #[test]
    fn tolerance_desugars_to_band() {
        let q = parse("freq 90MHz +/- 1MHz").unwrap();
        assert_eq!(q, Query::single(Clause::include(band(89_000_000, 91_000_000))));
    }

    #[test]
    fn within_and_active() {
        let q = parse("within 10 km of (38.6293, -90.2352) and active 01:00..03:00").unwrap();
        let expected = Query::single(Clause::include(
            Predicate::within_km(GeoPoint::new(38.6293, -90.2352).unwrap(), 10.0).unwrap(),
        ))
        .and(Clause::include(Predicate::ActiveDuring(
            HoursOfOperation::from_minutes(60, 180).unwrap(),
        )));
        assert_eq!(q, expected);
        assert_eq!(q.to_json(), expected.to_json());
    }

    #[test]
    fn negated_range() {
        let q = parse("not freq 90MHz..100MHz").unwrap();
        assert_eq!(q, Query::single(Clause::exclude(band(90_000_000, 100_000_000))));
    }

    #[test]
    fn missing_unit_is_an_error() {
        let err = parse("freq 90").unwrap_err();
        assert_eq!(err.offset, 7);
        assert!(err.expected.contains("unit"), "{err}");
    }

    #[test]
    fn error_offsets() {
        assert_eq!(parse("").unwrap_err().offset, 0);
        assert_eq!(parse("name = \"x\" xor").unwrap_err().offset, 11);
        assert_eq!(parse("colour = red").unwrap_err().offset, 0);
        assert_eq!(parse("name = \"unterminated").unwrap_err().offset, 7);
        assert_eq!(parse("active 25:00..03:00").unwrap_err().offset, 7);
        assert_eq!(parse("active 03:00..03:00").unwrap_err().offset, 7);
        assert_eq!(parse("freq 1.5Hz..2Hz").unwrap_err().offset, 5);
        assert_eq!(parse("freq 2THz..3THz").unwrap_err().offset, 5);
        assert_eq!(parse("freq 5 furlongs..1Hz").unwrap_err().offset, 7);
        assert_eq!(parse("within 0 km of (0, 0)").unwrap_err().offset, 7);
        assert_eq!(parse("within 1 km of (91, 0)").unwrap_err().offset, 16);
        // offsets count characters, not bytes
        assert_eq!(parse("name = \"é\" é").unwrap_err().offset, 11);
    }

    #[test]
    fn keywords_and_units_case_insensitive() {
        let q = parse("NOT Freq 90 mhz .. 100MHZ OR Name=\"a\\\"b\"").unwrap();
        let expected = Query::single(Clause::exclude(band(90_000_000, 100_000_000)))
            .or(Clause::include(Predicate::NameIs("a\"b".into())));
        assert_eq!(q, expected);
    }

    #[test]
    fn print_examples() {
        let q = Query::single(Clause::include(band(90_000_000, 100_000_000)));
        assert_eq!(print(&q), "freq 90MHz..100MHz");
        let q = Query::single(Clause::exclude(Predicate::NameIs("Stadium".into())));
        assert_eq!(print(&q), "not name = \"Stadium\"");
        let q = Query::single(Clause::include(Predicate::ActiveDuring(HoursOfOperation::FULL_DAY)));
        assert_eq!(print(&q), "active 00:00..24:00");
    }

    #[test]
    fn frequency_literals() {
        assert_eq!(parse_frequency("900MHz"), Ok(900_000_000));
        assert_eq!(parse_frequency("2.564GHz"), Ok(2_564_000_000));
        assert_eq!(parse_frequency("406.5MHz"), Ok(406_500_000));
        assert_eq!(parse_frequency("1.5Hz"), Err(FrequencyError::NonIntegralHertz));
        assert_eq!(parse_frequency("1.50kHz"), Ok(1_500));
        assert_eq!(parse_frequency("1THz"), Ok(MAX_HZ));
        assert_eq!(parse_frequency("1.000000000001THz"), Err(FrequencyError::OutOfRange));
        assert_eq!(parse_frequency("00000000000000000001Hz"), Ok(1));
        assert_eq!(parse_frequency("99999999999999999999999Hz"), Err(FrequencyError::OutOfRange));
        assert_eq!(parse_frequency("3 kHz"), Ok(3_000));
        assert_eq!(parse_frequency("3"), Err(FrequencyError::MissingUnit));
        assert_eq!(parse_frequency("3 parsec"), Err(FrequencyError::UnknownUnit("parsec".into())));
        assert_eq!(parse_frequency("MHz"), Err(FrequencyError::Malformed));
        assert_eq!(parse_frequency("1.MHz"), Err(FrequencyError::Malformed));
    }

    #[test]
    fn frequency_formatting() {
        assert_eq!(format_frequency(0), "0Hz");
        assert_eq!(format_frequency(2_564_000_000), "2564MHz");
        assert_eq!(format_frequency(899_998_500), "899998500Hz");
        assert_eq!(format_frequency(MAX_HZ), "1THz");
        assert_eq!(format_frequency(15_000), "15kHz");
    }

    proptest! {
        #[test]
        fn frequency_format_round_trips(hz in 0u64..=MAX_HZ) {
            prop_assert_eq!(parse_frequency(&format_frequency(hz)), Ok(hz));
        }

        #[test]
        fn parse_is_total(text in "\\PC{0,40}") {
            let _ = parse(&text);
        }

        #[test]
        fn parse_is_total_on_near_miss_input(
            text in "(not |name|within|active|freq| |and|or|[0-9]{1,3}|\\.\\.|\\+/-|:|[kMGT]?Hz|km|of|\\(|\\)|,|-|\"|=){0,16}"
        ) {
            if let Ok(q) = parse(&text) {
                prop_assert_eq!(parse(&print(&q)), Ok(q));
            }
        }
    }
}
