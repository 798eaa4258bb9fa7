//! CSV import and export.
//!
//! Header (any column order, extra columns ignored):
//!
//! ```text
//! name,latitude,longitude,hours,centre_frequency,bandwidth,min_frequency,max_frequency
//! ```
//!
//! Coordinates are decimal degrees or DMS (`38°40'11.86"`, `38° 40' 11.86''`,
//! `38d40m11.86s`); a leading `-` negates the whole coordinate. Both
//! coordinates empty means the location is unknown. Hours are `H:MM-H:MM`
//! or `H:MM -- H:MM`. Frequencies take an SI suffix (`900MHz`, `3 kHz`) or
//! are bare whole hertz. Exactly one of the centre/bandwidth pair and the
//! min/max pair is filled in per row.
//!
//! Export writes one canonical form: decimal degrees, `H:MM-H:MM` hours and
//! min/max in bare hertz.

use std::collections::HashSet;

use serde::Serialize;
use thiserror::Error;

use crate::dsl::{parse_frequency, FrequencyError};
use crate::geo::Dms;
use crate::model::{Dataset, FrequencyBand, GeoPoint, HoursOfOperation, TimeOfDay, Transmitter};

pub const HEADER: [&str; 8] = [
    "name",
    "latitude",
    "longitude",
    "hours",
    "centre_frequency",
    "bandwidth",
    "min_frequency",
    "max_frequency",
];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IngestError {
    #[error("missing header: {0}")]
    MissingHeader(String),
    #[error("unreadable CSV: {0}")]
    Csv(String),
}

/// One rejected row. `row` is 1-based and counts data rows only.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RowError {
    pub row: usize,
    pub field: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Default)]
pub struct ImportReport {
    pub imported: usize,
    pub errors: Vec<RowError>,
}

impl ImportReport {
    pub fn is_clean(&self) -> bool {
        self.errors.is_empty()
    }
}

struct FieldError {
    field: &'static str,
    message: String,
}

fn field_error(field: &'static str, message: impl Into<String>) -> FieldError {
    FieldError {
        field,
        message: message.into(),
    }
}

/// Parses one coordinate cell in decimal degrees or DMS notation.
pub fn parse_coordinate(cell: &str) -> Result<f64, String> {
    let cell = cell.trim();
    if let Ok(v) = cell.parse::<f64>() {
        if v.is_finite() {
            return Ok(v);
        }
    }
    parse_dms(cell).map(|d| d.to_decimal())
}

fn parse_dms(cell: &str) -> Result<Dms, String> {
    let malformed = || format!("{cell:?} is neither decimal degrees nor D°M'S\"");
    let (negative, body) = match cell.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, cell.strip_prefix('+').unwrap_or(cell)),
    };
    // Split into (number, marker) pairs.
    let mut parts: Vec<(&str, &str)> = Vec::new();
    let mut rest = body.trim_start();
    while !rest.is_empty() {
        let num_len = rest
            .find(|c: char| !(c.is_ascii_digit() || c == '.'))
            .unwrap_or(rest.len());
        if num_len == 0 {
            return Err(malformed());
        }
        let (number, after) = rest.split_at(num_len);
        let after = after.trim_start();
        let marker_len = ["''", "°", "º", "′", "″", "'", "\"", "d", "m", "s", "D", "M", "S"]
            .iter()
            .find(|m| after.starts_with(**m))
            .map_or(0, |m| m.len());
        let (marker, tail) = after.split_at(marker_len);
        parts.push((number, marker));
        rest = tail.trim_start();
    }
    let slot = |marker: &str| match marker {
        "°" | "º" | "d" | "D" => Some(0),
        "'" | "′" | "m" | "M" => Some(1),
        "''" | "\"" | "″" | "s" | "S" => Some(2),
        _ => None,
    };
    let mut values = [None::<&str>; 3];
    let mut last = None;
    for (number, marker) in parts {
        let idx = slot(marker).ok_or_else(malformed)?;
        if last.is_some_and(|l| idx <= l) {
            return Err(malformed());
        }
        values[idx] = Some(number);
        last = Some(idx);
    }
    let whole = |s: Option<&str>| -> Result<u32, String> {
        s.map_or(Ok(0), |s| s.parse::<u32>().map_err(|_| malformed()))
    };
    let degrees = values[0].ok_or_else(malformed).and_then(|d| whole(Some(d)))?;
    let minutes = whole(values[1])?;
    let seconds = values[2].map_or(Ok(0.0), |s| s.parse::<f64>().map_err(|_| malformed()))?;
    Dms::new(negative, degrees, minutes, seconds).map_err(|e| e.to_string())
}

fn parse_time(text: &str) -> Result<TimeOfDay, String> {
    let text = text.trim();
    let (h, m) = text
        .split_once(':')
        .ok_or_else(|| format!("{text:?} is not H:MM"))?;
    let digits = |s: &str, max_len: usize| !s.is_empty() && s.len() <= max_len && s.bytes().all(|b| b.is_ascii_digit());
    if !digits(h, 2) || !(m.len() == 2 && digits(m, 2)) {
        return Err(format!("{text:?} is not H:MM"));
    }
    let (h, m): (u32, u32) = (h.parse().expect("digits"), m.parse().expect("digits"));
    TimeOfDay::from_hm(h, m).map_err(|_| format!("{text:?} is out of range (00:00 to 24:00)"))
}

/// `H:MM-H:MM` or `H:MM -- H:MM` (an en dash also works).
pub fn parse_hours(cell: &str) -> Result<HoursOfOperation, String> {
    let cell = cell.trim();
    let (from, to) = cell
        .split_once("--")
        .or_else(|| cell.split_once('–'))
        .or_else(|| cell.split_once('-'))
        .ok_or_else(|| format!("{cell:?} is not H:MM-H:MM"))?;
    let (from, to) = (parse_time(from)?, parse_time(to)?);
    HoursOfOperation::new(from, to).map_err(|e| e.to_string())
}

pub fn format_hours(h: &HoursOfOperation) -> String {
    let t = |t: TimeOfDay| format!("{}:{:02}", t.minutes() / 60, t.minutes() % 60);
    format!("{}-{}", t(h.from()), t(h.to()))
}

/// A frequency cell: SI-suffixed, or bare whole hertz.
pub fn parse_frequency_cell(cell: &str) -> Result<u64, String> {
    let cell = cell.trim();
    let result = if cell.bytes().all(|b| b.is_ascii_digit()) {
        parse_frequency(&format!("{cell}Hz"))
    } else {
        parse_frequency(cell)
    };
    result.map_err(|e| match e {
        FrequencyError::Malformed | FrequencyError::MissingUnit => format!("{cell:?} is not a frequency"),
        other => format!("{cell:?}: {other}"),
    })
}

struct Columns {
    index: [usize; 8],
}

impl Columns {
    fn from_header(header: &csv::StringRecord) -> Result<Self, IngestError> {
        let mut index = [0; 8];
        let missing: Vec<&str> = HEADER
            .iter()
            .enumerate()
            .filter_map(|(slot, name)| {
                match header.iter().position(|h| h.trim().eq_ignore_ascii_case(name)) {
                    Some(i) => {
                        index[slot] = i;
                        None
                    }
                    None => Some(*name),
                }
            })
            .collect();
        if missing.is_empty() {
            Ok(Columns { index })
        } else {
            Err(IngestError::MissingHeader(format!("missing columns {}", missing.join(", "))))
        }
    }

    fn raw<'r>(&self, record: &'r csv::StringRecord, slot: usize) -> &'r str {
        record.get(self.index[slot]).unwrap_or("")
    }

    fn cell<'r>(&self, record: &'r csv::StringRecord, slot: usize) -> &'r str {
        self.raw(record, slot).trim()
    }
}

fn parse_row(cols: &Columns, record: &csv::StringRecord) -> Result<Transmitter, FieldError> {
    let cell = |slot| cols.cell(record, slot);

    // Names are kept verbatim, surrounding whitespace included.
    let name = cols.raw(record, 0);
    if name.is_empty() {
        return Err(field_error("name", "name is empty"));
    }

    let location = match (cell(1), cell(2)) {
        ("", "") => None,
        ("", _) => return Err(field_error("latitude", "latitude is empty but longitude is set")),
        (_, "") => return Err(field_error("longitude", "longitude is empty but latitude is set")),
        (lat, lon) => {
            let lat = parse_coordinate(lat).map_err(|m| field_error("latitude", m))?;
            let lon = parse_coordinate(lon).map_err(|m| field_error("longitude", m))?;
            Some(GeoPoint::new(lat, lon).map_err(|e| {
                let field = match e {
                    crate::ModelError::LatitudeOutOfRange(_) => "latitude",
                    _ => "longitude",
                };
                field_error(field, e.to_string())
            })?)
        }
    };

    let hours = parse_hours(cell(3)).map_err(|m| field_error("hours", m))?;

    let centre_pair = [cell(4), cell(5)];
    let minmax_pair = [cell(6), cell(7)];
    let used = |pair: &[&str; 2]| pair.iter().any(|c| !c.is_empty());
    let band = match (used(&centre_pair), used(&minmax_pair)) {
        (true, true) => {
            return Err(field_error(
                "frequency",
                "ambiguous source: both centre/bandwidth and min/max are set",
            ))
        }
        (false, false) => return Err(field_error("frequency", "no centre/bandwidth or min/max given")),
        (true, false) => {
            let [centre, width] = centre_pair;
            if centre.is_empty() {
                return Err(field_error("centre_frequency", "bandwidth given without centre frequency"));
            }
            if width.is_empty() {
                return Err(field_error("bandwidth", "centre frequency given without bandwidth"));
            }
            let centre = parse_frequency_cell(centre).map_err(|m| field_error("centre_frequency", m))?;
            let width = parse_frequency_cell(width).map_err(|m| field_error("bandwidth", m))?;
            FrequencyBand::from_centre(centre, width).map_err(|e| field_error("frequency", e.to_string()))?
        }
        (false, true) => {
            let [low, high] = minmax_pair;
            if low.is_empty() {
                return Err(field_error("min_frequency", "max frequency given without min frequency"));
            }
            if high.is_empty() {
                return Err(field_error("max_frequency", "min frequency given without max frequency"));
            }
            let low = parse_frequency_cell(low).map_err(|m| field_error("min_frequency", m))?;
            let high = parse_frequency_cell(high).map_err(|m| field_error("max_frequency", m))?;
            FrequencyBand::from_min_max(low, high).map_err(|e| field_error("frequency", e.to_string()))?
        }
    };

    Transmitter::new(name, location, hours, band).map_err(|e| field_error("name", e.to_string()))
}

/// Imports every valid row. Bad rows are skipped and reported once each,
/// with the first problem found; only a missing or unreadable header
/// aborts the import.
pub fn import_csv(text: &str) -> Result<(Dataset, ImportReport), IngestError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(text.as_bytes());
    let header = reader
        .headers()
        .map_err(|e| IngestError::Csv(e.to_string()))?
        .clone();
    if header.is_empty() || header.iter().all(|h| h.trim().is_empty()) {
        return Err(IngestError::MissingHeader("no header row".into()));
    }
    let cols = Columns::from_header(&header)?;

    let mut report = ImportReport::default();
    let mut names = HashSet::new();
    let mut transmitters = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let parsed = record
            .map_err(|e| field_error("record", e.to_string()))
            .and_then(|r| parse_row(&cols, &r));
        match parsed {
            Ok(t) if !names.insert(t.name().to_string()) => report.errors.push(RowError {
                row,
                field: "name".into(),
                message: format!("duplicate name {:?}", t.name()),
            }),
            Ok(t) => transmitters.push(t),
            Err(e) => report.errors.push(RowError {
                row,
                field: e.field.into(),
                message: e.message,
            }),
        }
    }
    report.imported = transmitters.len();
    let dataset = Dataset::new(transmitters).expect("names were checked for uniqueness");
    Ok((dataset, report))
}

/// Canonical CSV with CRLF line endings, rows in name order.
pub fn export_csv(d: &Dataset) -> String {
    let mut writer = csv::WriterBuilder::new()
        .terminator(csv::Terminator::CRLF)
        .from_writer(Vec::new());
    writer.write_record(HEADER).expect("in-memory write");
    for t in d {
        let (lat, lon) = t
            .location()
            .map_or((String::new(), String::new()), |p| (p.lat().to_string(), p.lon().to_string()));
        writer
            .write_record([
                t.name(),
                &lat,
                &lon,
                &format_hours(&t.hours()),
                "",
                "",
                &t.band().low_hz().to_string(),
                &t.band().high_hz().to_string(),
            ])
            .expect("in-memory write");
    }
    String::from_utf8(writer.into_inner().expect("in-memory flush")).expect("input was UTF-8")
}
