//! Seeded random generators and brute-force oracles for tests and benches.
//!
//! The oracles deliberately avoid the engine's own code paths: hours are
//! checked minute by minute with modular arithmetic, bands hertz by hertz
//! or by endpoint containment, distances with unit vectors, and AND/OR
//! precedence with a left-to-right fold instead of group splitting.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ingest::import_csv;
use crate::model::{Dataset, FrequencyBand, GeoPoint, HoursOfOperation, Transmitter, MAX_HZ};
use crate::query::{Clause, Connector, Predicate, Query};

/// The sample dataset shipped in `data/sample.csv`.
pub const SAMPLE_CSV: &str = include_str!("../../../data/sample.csv");

pub fn sample() -> Dataset {
    let (d, report) = import_csv(SAMPLE_CSV).expect("sample header");
    assert!(report.is_clean(), "sample data must import cleanly: {report:?}");
    d
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

// ---------------------------------------------------------------- oracles

/// Minute `m` lies on the arc iff its clockwise offset from `from` is less
/// than the arc's clockwise length.
pub fn minute_on_arc(h: &HoursOfOperation, m: u16) -> bool {
    let (from, to) = (h.from().minutes() as i32, h.to().minutes() as i32);
    let length = if from == 0 && to == 1440 { 1440 } else { (to - from).rem_euclid(1440) };
    let offset = (m as i32 - from).rem_euclid(1440);
    offset < length
}

pub fn hours_overlap_oracle(a: &HoursOfOperation, b: &HoursOfOperation) -> bool {
    (0..1440u16).any(|m| minute_on_arc(a, m) && minute_on_arc(b, m))
}

/// Two closed intervals intersect iff one contains the other's low edge.
pub fn band_overlap_oracle(a: &FrequencyBand, b: &FrequencyBand) -> bool {
    let within = |x: u64, band: &FrequencyBand| band.low_hz() <= x && x <= band.high_hz();
    within(a.low_hz(), b) || within(b.low_hz(), a)
}

/// Hertz-by-hertz scan over the narrower band.
pub fn band_overlap_scan(a: &FrequencyBand, b: &FrequencyBand) -> bool {
    let (narrow, wide) = if a.width_hz() <= b.width_hz() { (a, b) } else { (b, a) };
    (narrow.low_hz()..=narrow.high_hz()).any(|hz| wide.low_hz() <= hz && hz <= wide.high_hz())
}

/// Central angle from the cross and dot products of unit vectors.
pub fn great_circle_oracle_km(a: GeoPoint, b: GeoPoint) -> f64 {
    let unit = |g: GeoPoint| {
        let (lat, lon) = (g.lat().to_radians(), g.lon().to_radians());
        [lat.cos() * lon.cos(), lat.cos() * lon.sin(), lat.sin()]
    };
    let (u, v) = (unit(a), unit(b));
    let cross = [
        u[1] * v[2] - u[2] * v[1],
        u[2] * v[0] - u[0] * v[2],
        u[0] * v[1] - u[1] * v[0],
    ];
    let sin = (cross[0] * cross[0] + cross[1] * cross[1] + cross[2] * cross[2]).sqrt();
    let cos = u[0] * v[0] + u[1] * v[1] + u[2] * v[2];
    6371.0088 * sin.atan2(cos)
}

/// Per-clause truth with brute-force predicates, combined by folding the
/// chain left to right (AND accumulates a term, OR closes it).
pub fn evaluate_oracle<'d>(q: &Query, d: &'d Dataset) -> Vec<&'d Transmitter> {
    let clause_holds = |c: &Clause, t: &Transmitter| -> bool {
        let outcome: Option<bool> = match &c.predicate {
            Predicate::NameIs(n) => Some(t.name().as_bytes() == n.as_bytes()),
            Predicate::WithinKm { centre, radius_km } => t
                .location()
                .map(|loc| crate::geo::haversine_km(*centre, loc) <= *radius_km),
            Predicate::ActiveDuring(h) => Some(hours_overlap_oracle(&t.hours(), h)),
            Predicate::BandOverlaps(b) => Some(band_overlap_scan(&t.band(), b)),
        };
        outcome == Some(c.include)
    };
    let mut hits: Vec<&Transmitter> = d
        .iter()
        .filter(|t| {
            let clauses = q.clauses();
            let mut any = false;
            let mut term = clause_holds(&clauses[0], t);
            for (connector, c) in q.connectors().iter().zip(&clauses[1..]) {
                match connector {
                    Connector::And => term = term && clause_holds(c, t),
                    Connector::Or => {
                        any = any || term;
                        term = clause_holds(c, t);
                    }
                }
            }
            any || term
        })
        .collect();
    hits.sort_by(|a, b| a.name().cmp(b.name()));
    hits
}

/// Minutes (0..1440) covered by at least one arc.
pub fn covered_minutes<'a, I>(arcs: I) -> Vec<bool>
where
    I: IntoIterator<Item = &'a HoursOfOperation>,
{
    let mut covered = vec![false; 1440];
    for arc in arcs {
        for (m, slot) in covered.iter_mut().enumerate() {
            *slot |= minute_on_arc(arc, m as u16);
        }
    }
    covered
}

// ------------------------------------------------------------- generators

pub fn random_hours<R: Rng>(rng: &mut R) -> HoursOfOperation {
    if rng.gen_bool(0.1) {
        return HoursOfOperation::FULL_DAY;
    }
    loop {
        let from = rng.gen_range(0..1440u32);
        // Favour hour boundaries so touching endpoints come up often.
        let to = if rng.gen_bool(0.3) { rng.gen_range(0..=24u32) * 60 } else { rng.gen_range(0..=1440u32) };
        if let Ok(h) = HoursOfOperation::from_minutes(from, to) {
            return h;
        }
    }
}

/// A band whose width is log-uniform in `[0, max_width]`, placed below `ceiling`.
pub fn random_band<R: Rng>(rng: &mut R, ceiling: u64, max_width: u64) -> FrequencyBand {
    let exp = rng.gen_range(0.0..=((max_width.max(1) as f64).log10()));
    let width = (10f64.powf(exp) as u64).saturating_sub(1).min(max_width);
    let low = rng.gen_range(0..=ceiling.saturating_sub(width));
    FrequencyBand::from_min_max(low, low + width).expect("constructed in range")
}

pub fn random_point<R: Rng>(rng: &mut R) -> GeoPoint {
    GeoPoint::new(rng.gen_range(-90.0..=90.0), rng.gen_range(-180.0..=180.0)).expect("in range")
}

/// A point within roughly `spread_deg` degrees of `base`, clamped to valid ranges.
pub fn jitter_point<R: Rng>(rng: &mut R, base: GeoPoint, spread_deg: f64) -> GeoPoint {
    let lat = (base.lat() + rng.gen_range(-spread_deg..=spread_deg)).clamp(-90.0, 90.0);
    let lon = (base.lon() + rng.gen_range(-spread_deg..=spread_deg)).clamp(-180.0, 180.0);
    GeoPoint::new(lat, lon).expect("clamped")
}

const NAME_CHARS: &[char] = &[
    'a', 'b', 'c', 'A', 'Z', '0', '7', ' ', ',', '"', '\'', '-', 'é', 'ß', '中', '\\', ';', '°',
];

pub fn random_name<R: Rng>(rng: &mut R) -> String {
    let len = rng.gen_range(1..=12);
    (0..len).map(|_| *NAME_CHARS.choose(rng).expect("non-empty")).collect()
}

#[derive(Debug, Clone, Copy)]
pub struct DatasetShape {
    pub max_rows: usize,
    pub max_band_width: u64,
    pub freq_ceiling: u64,
    pub p_missing_location: f64,
    /// Degrees of scatter around a shared anchor; small values make
    /// radius clauses select a mix of rows.
    pub spread_deg: f64,
}

impl Default for DatasetShape {
    fn default() -> Self {
        DatasetShape {
            max_rows: 50,
            max_band_width: 1_000_000,
            freq_ceiling: 20_000_000,
            p_missing_location: 0.15,
            spread_deg: 0.5,
        }
    }
}

pub fn random_dataset<R: Rng>(rng: &mut R, shape: DatasetShape) -> Dataset {
    let rows = rng.gen_range(0..=shape.max_rows);
    let anchor = random_point(rng);
    let mut transmitters = Vec::with_capacity(rows);
    let mut seen = std::collections::HashSet::new();
    while transmitters.len() < rows {
        let name = format!("{} {}", random_name(rng), transmitters.len());
        if !seen.insert(name.clone()) {
            continue;
        }
        let location = (!rng.gen_bool(shape.p_missing_location)).then(|| jitter_point(rng, anchor, shape.spread_deg));
        transmitters.push(
            Transmitter::new(
                name,
                location,
                random_hours(rng),
                random_band(rng, shape.freq_ceiling, shape.max_band_width),
            )
            .expect("non-empty name"),
        );
    }
    Dataset::new(transmitters).expect("unique names")
}

/// A query whose predicates are biased towards the dataset's own values so
/// that results are neither always empty nor always full.
pub fn random_query<R: Rng>(rng: &mut R, d: &Dataset, shape: DatasetShape) -> Query {
    let clauses = rng.gen_range(1..=5);
    let mut q: Option<Query> = None;
    for _ in 0..clauses {
        let predicate = random_predicate(rng, d, shape);
        let clause = Clause {
            include: rng.gen_bool(0.7),
            predicate,
        };
        q = Some(match q {
            None => Query::single(clause),
            Some(q) if rng.gen_bool(0.5) => q.and(clause),
            Some(q) => q.or(clause),
        });
    }
    q.expect("at least one clause")
}

pub fn random_predicate<R: Rng>(rng: &mut R, d: &Dataset, shape: DatasetShape) -> Predicate {
    let pick = d.as_slice().choose(rng);
    match rng.gen_range(0..4) {
        0 => match pick {
            Some(t) if rng.gen_bool(0.8) => Predicate::NameIs(t.name().to_string()),
            _ => Predicate::NameIs(random_name(rng)),
        },
        1 => {
            let centre = match pick.and_then(|t| t.location()) {
                Some(loc) => jitter_point(rng, loc, shape.spread_deg),
                None => random_point(rng),
            };
            let radius = 10f64.powf(rng.gen_range(-1.0..3.0));
            Predicate::within_km(centre, radius).expect("positive radius")
        }
        2 => Predicate::ActiveDuring(random_hours(rng)),
        _ => {
            let band = match pick {
                Some(t) if rng.gen_bool(0.5) => {
                    // Straddle or touch an existing edge.
                    let edge = if rng.gen_bool(0.5) { t.band().low_hz() } else { t.band().high_hz() };
                    let below = rng.gen_range(0..=1_000u64).min(edge);
                    let above = rng.gen_range(0..=1_000u64).min(MAX_HZ - edge);
                    let (low, high) = match rng.gen_range(0..3) {
                        0 => (edge - below, edge),
                        1 => (edge, edge + above),
                        _ => (edge - below, edge + above),
                    };
                    FrequencyBand::from_min_max(low, high).expect("ordered")
                }
                _ => random_band(rng, shape.freq_ceiling, shape.max_band_width),
            };
            Predicate::BandOverlaps(band)
        }
    }
}

/// Queries spanning the full value ranges, for codec round-trips.
pub fn random_wide_query<R: Rng>(rng: &mut R) -> Query {
    let clauses = rng.gen_range(1..=6);
    let mut q: Option<Query> = None;
    for _ in 0..clauses {
        let predicate = match rng.gen_range(0..4) {
            0 => Predicate::NameIs(random_name(rng)),
            1 => {
                let radius = match rng.gen_range(0..3) {
                    0 => rng.gen_range(1e-9..1.0),
                    1 => rng.gen_range(1.0..50_000.0),
                    _ => rng.gen_range(1..1000) as f64,
                };
                Predicate::within_km(random_point(rng), radius).expect("positive radius")
            }
            2 => Predicate::ActiveDuring(random_hours(rng)),
            _ => Predicate::BandOverlaps(random_band(rng, MAX_HZ, MAX_HZ)),
        };
        let clause = Clause {
            include: rng.gen_bool(0.5),
            predicate,
        };
        q = Some(match q {
            None => Query::single(clause),
            Some(q) if rng.gen_bool(0.5) => q.and(clause),
            Some(q) => q.or(clause),
        });
    }
    q.expect("at least one clause")
}

/// Datasets with arbitrary names and full-precision coordinates, for CSV round-trips.
pub fn random_wide_dataset<R: Rng>(rng: &mut R, max_rows: usize) -> Dataset {
    let shape = DatasetShape {
        max_rows,
        max_band_width: MAX_HZ,
        freq_ceiling: MAX_HZ,
        p_missing_location: 0.2,
        spread_deg: 180.0,
    };
    random_dataset(rng, shape)
}
