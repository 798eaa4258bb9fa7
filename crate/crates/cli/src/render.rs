//! Plain-text output. Tables use the relational column names and values
//! exactly as stored, left-aligned with two spaces between columns.

use std::fmt::Write;

use stsq_core::analytics::{ConflictReport, GapReport, TimeCoverage};
use stsq_core::dsl::format_frequency;
use stsq_core::sql::{SqlStatement, SqlValue};
use stsq_core::{HoursOfOperation, Transmitter};

pub const COLUMNS: [&str; 7] = [
    "name",
    "latitude",
    "longitude",
    "hours_from_min",
    "hours_to_min",
    "freq_low_hz",
    "freq_high_hz",
];

fn row(t: &Transmitter) -> [String; 7] {
    let (lat, lon) = match t.location() {
        Some(p) => (p.lat().to_string(), p.lon().to_string()),
        None => ("NULL".to_string(), "NULL".to_string()),
    };
    [
        t.name().to_string(),
        lat,
        lon,
        t.hours().from().minutes().to_string(),
        t.hours().to().minutes().to_string(),
        t.band().low_hz().to_string(),
        t.band().high_hz().to_string(),
    ]
}

fn table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for r in rows {
        for (w, cell) in widths.iter_mut().zip(r) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let mut out = String::new();
    let mut line = |cells: &mut dyn Iterator<Item = &str>| {
        let mut text = String::new();
        for (i, cell) in cells.enumerate() {
            if i > 0 {
                text.push_str("  ");
            }
            text.push_str(cell);
            let pad = widths[i].saturating_sub(cell.chars().count());
            text.extend(std::iter::repeat_n(' ', pad));
        }
        out.push_str(text.trim_end());
        out.push('\n');
    };
    line(&mut header.iter().copied());
    for r in rows {
        line(&mut r.iter().map(String::as_str));
    }
    out
}

pub fn transmitters(rows: &[&Transmitter]) -> String {
    let cells: Vec<Vec<String>> = rows.iter().map(|t| row(t).to_vec()).collect();
    let mut out = table(&COLUMNS, &cells);
    let _ = writeln!(out, "({} row{})", rows.len(), if rows.len() == 1 { "" } else { "s" });
    out
}

/// Statement text on one line, then the bound parameters as JSON.
pub fn sql(statement: &SqlStatement) -> String {
    let params: Vec<String> = statement
        .params
        .iter()
        .map(|p| match p {
            SqlValue::Text(s) => serde_json::to_string(s).expect("strings serialize"),
            SqlValue::Int(i) => i.to_string(),
            SqlValue::Float(f) => serde_json::to_string(f).expect("finite floats serialize"),
        })
        .collect();
    format!("{}\n-- params: [{}]\n", statement.text, params.join(", "))
}

pub fn hours(h: &HoursOfOperation) -> String {
    format!("{}-{}", h.from(), h.to())
}

pub fn gaps(report: &GapReport, during: &HoursOfOperation) -> String {
    let w = report.window;
    let mut out = format!(
        "Free spectrum in {}..{} ({}..{} Hz) during {}:\n",
        format_frequency(w.low_hz()),
        format_frequency(w.high_hz()),
        w.low_hz(),
        w.high_hz(),
        hours(during)
    );
    let cells: Vec<Vec<String>> = report
        .gaps
        .iter()
        .map(|g| vec![g.low_hz().to_string(), g.high_hz().to_string(), g.width_hz().to_string()])
        .collect();
    out.push_str(&table(&["low_hz", "high_hz", "width_hz"], &cells));
    let _ = writeln!(out, "({} gap{})", cells.len(), if cells.len() == 1 { "" } else { "s" });
    out
}

pub fn conflicts(report: &ConflictReport, radius_km: f64) -> String {
    let mut out = format!("Conflicts within {radius_km} km:\n");
    let cells: Vec<Vec<String>> = report
        .conflicts
        .iter()
        .map(|c| {
            vec![
                c.a.clone(),
                c.b.clone(),
                c.band_overlap.low_hz().to_string(),
                c.band_overlap.high_hz().to_string(),
                format!("{:.3}", c.distance_km),
            ]
        })
        .collect();
    out.push_str(&table(&["a", "b", "overlap_low_hz", "overlap_high_hz", "distance_km"], &cells));
    let _ = writeln!(out, "({} conflict{})", cells.len(), if cells.len() == 1 { "" } else { "s" });
    if !report.indeterminate.is_empty() {
        out.push_str("\nIndeterminate (location unknown):\n");
        let cells: Vec<Vec<String>> = report
            .indeterminate
            .iter()
            .map(|p| vec![p.a.clone(), p.b.clone()])
            .collect();
        out.push_str(&table(&["a", "b"], &cells));
    }
    out
}

pub fn coverage(coverage: &TimeCoverage) -> String {
    if coverage.intervals.is_empty() {
        return "No transmissions.\n".to_string();
    }
    coverage.intervals.iter().map(|h| hours(h) + "\n").collect()
}
