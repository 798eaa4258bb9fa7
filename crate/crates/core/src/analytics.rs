//! Spectrum gaps, interference conflicts and time coverage.
//!
//! All three are defined here rather than derived from any RF model:
//!
//! * a *gap* is a maximal run of whole hertz inside a window that no
//!   transmitter active during a given time interval occupies;
//! * a *conflict* is a pair of transmitters whose bands overlap, whose
//!   hours overlap, and whose positions lie within a caller-chosen radius;
//! * *coverage* is the circular union of operating hours around a point.

use serde::Serialize;
use thiserror::Error;

use crate::exec::Exec;
use crate::geo::haversine_km;
use crate::model::{Dataset, FrequencyBand, GeoPoint, HoursOfOperation, MINUTES_PER_DAY};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalyticsError {
    #[error("radius must be a positive finite number of km, got {0}")]
    InvalidRadius(f64),
}

fn check_radius(radius_km: f64) -> Result<(), AnalyticsError> {
    if radius_km.is_finite() && radius_km > 0.0 {
        Ok(())
    } else {
        Err(AnalyticsError::InvalidRadius(radius_km))
    }
}

/// Unoccupied sub-bands of `window`, disjoint and sorted by `low_hz`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GapReport {
    pub window: FrequencyBand,
    pub gaps: Vec<FrequencyBand>,
}

/// Merges closed integer intervals, joining ones that touch (`[1,3]`,
/// `[4,6]` become `[1,6]`). Input need not be sorted.
pub fn merge_bands(mut bands: Vec<FrequencyBand>) -> Vec<FrequencyBand> {
    bands.sort_unstable();
    let mut merged: Vec<FrequencyBand> = Vec::with_capacity(bands.len());
    for band in bands {
        match merged.last_mut() {
            Some(last) if band.low_hz() <= last.high_hz().saturating_add(1) => {
                if band.high_hz() > last.high_hz() {
                    *last = FrequencyBand::from_min_max(last.low_hz(), band.high_hz())
                        .expect("merged band stays ordered");
                }
            }
            _ => merged.push(band),
        }
    }
    merged
}

/// The part of `window` not covered by any of `occupied`.
pub fn complement_in(window: FrequencyBand, occupied: Vec<FrequencyBand>) -> Vec<FrequencyBand> {
    let clipped = occupied
        .iter()
        .filter_map(|b| b.intersection(&window))
        .collect();
    let mut gaps = Vec::new();
    let mut cursor = window.low_hz();
    for band in merge_bands(clipped) {
        if band.low_hz() > cursor {
            gaps.push(FrequencyBand::from_min_max(cursor, band.low_hz() - 1).expect("ordered"));
        }
        cursor = band.high_hz() + 1;
    }
    if cursor <= window.high_hz() {
        gaps.push(FrequencyBand::from_min_max(cursor, window.high_hz()).expect("ordered"));
    }
    gaps
}

pub fn find_gaps(d: &Dataset, window: FrequencyBand, during: HoursOfOperation) -> GapReport {
    find_gaps_with(d, window, during, Exec::default())
}

pub fn find_gaps_with(d: &Dataset, window: FrequencyBand, during: HoursOfOperation, exec: Exec) -> GapReport {
    let occupied = exec
        .filter(d.as_slice(), |t| t.hours().overlaps(&during) && t.band().overlaps(&window))
        .into_iter()
        .map(|t| t.band())
        .collect();
    GapReport {
        window,
        gaps: complement_in(window, occupied),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConflictPair {
    /// Byte-wise smaller name of the pair.
    pub a: String,
    pub b: String,
    pub band_overlap: FrequencyBand,
    pub distance_km: f64,
}

/// A pair whose bands and hours overlap but whose distance is unknown.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NamePair {
    pub a: String,
    pub b: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConflictReport {
    pub conflicts: Vec<ConflictPair>,
    pub indeterminate: Vec<NamePair>,
}

enum PairVerdict {
    Conflict(ConflictPair),
    Indeterminate(NamePair),
}

pub fn find_conflicts(d: &Dataset, radius_km: f64) -> Result<ConflictReport, AnalyticsError> {
    find_conflicts_with(d, radius_km, Exec::default())
}

/// All pairs `(a, b)` with `a < b`, in name order of `a` then `b`.
pub fn find_conflicts_with(d: &Dataset, radius_km: f64, exec: Exec) -> Result<ConflictReport, AnalyticsError> {
    check_radius(radius_km)?;
    let rows = d.as_slice();
    let verdicts = exec.flat_map_indices(rows.len(), |i| {
        let a = &rows[i];
        rows[i + 1..]
            .iter()
            .filter_map(|b| {
                let overlap = a.band().intersection(&b.band())?;
                if !a.hours().overlaps(&b.hours()) {
                    return None;
                }
                let names = || (a.name().to_string(), b.name().to_string());
                match (a.location(), b.location()) {
                    (Some(pa), Some(pb)) => {
                        let distance_km = haversine_km(pa, pb);
                        (distance_km <= radius_km).then(|| {
                            let (a, b) = names();
                            PairVerdict::Conflict(ConflictPair {
                                a,
                                b,
                                band_overlap: overlap,
                                distance_km,
                            })
                        })
                    }
                    _ => {
                        let (a, b) = names();
                        Some(PairVerdict::Indeterminate(NamePair { a, b }))
                    }
                }
            })
            .collect()
    });
    let mut report = ConflictReport {
        conflicts: Vec::new(),
        indeterminate: Vec::new(),
    };
    for verdict in verdicts {
        match verdict {
            PairVerdict::Conflict(c) => report.conflicts.push(c),
            PairVerdict::Indeterminate(p) => report.indeterminate.push(p),
        }
    }
    Ok(report)
}

/// Maximal disjoint arcs sorted by start. The full day is the single
/// interval `(0, 1440)`; an arc crossing midnight is one wrapped interval.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TimeCoverage {
    pub intervals: Vec<HoursOfOperation>,
}

impl TimeCoverage {
    pub fn contains_minute(&self, m: u16) -> bool {
        self.intervals.iter().any(|h| h.contains_minute(m))
    }
}

/// Union of arcs on the 24-hour circle.
pub fn circular_union<I>(arcs: I) -> TimeCoverage
where
    I: IntoIterator<Item = HoursOfOperation>,
{
    let mut segments: Vec<(u16, u16)> = arcs.into_iter().flat_map(|h| h.segments()).collect();
    segments.sort_unstable();
    let mut merged: Vec<(u16, u16)> = Vec::new();
    for (start, end) in segments {
        match merged.last_mut() {
            Some(last) if start <= last.1 => last.1 = last.1.max(end),
            _ => merged.push((start, end)),
        }
    }
    // Re-join the piece ending at 24:00 with the piece starting at 0:00.
    if merged.len() > 1 && merged[0].0 == 0 && merged[merged.len() - 1].1 == MINUTES_PER_DAY {
        let (_, head_end) = merged.remove(0);
        let last = merged.last_mut().expect("len > 1");
        last.1 = head_end;
    }
    let mut intervals: Vec<HoursOfOperation> = merged
        .into_iter()
        .map(|(start, end)| {
            HoursOfOperation::from_minutes(start as u32, end as u32).expect("merged arcs are non-empty")
        })
        .collect();
    intervals.sort_by_key(|h| h.from());
    TimeCoverage { intervals }
}

pub fn active_times(d: &Dataset, centre: GeoPoint, radius_km: f64) -> Result<TimeCoverage, AnalyticsError> {
    active_times_with(d, centre, radius_km, Exec::default())
}

pub fn active_times_with(
    d: &Dataset,
    centre: GeoPoint,
    radius_km: f64,
    exec: Exec,
) -> Result<TimeCoverage, AnalyticsError> {
    check_radius(radius_km)?;
    let nearby = exec.filter(d.as_slice(), |t| {
        t.location()
            .is_some_and(|loc| haversine_km(centre, loc) <= radius_km)
    });
    Ok(circular_union(nearby.into_iter().map(|t| t.hours())))
}
