//! Domain value types: points, times of day, operating hours, frequency
//! bands, transmitters and datasets.
//!
//! Every constructor validates its invariants, so a value of any of these
//! types is always well-formed. Deserialization goes through the same
//! constructors.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Upper bound of the frequency axis: one terahertz.
pub const MAX_HZ: u64 = 1_000_000_000_000;

/// Minutes in a day; also the only legal representation of 24:00.
pub const MINUTES_PER_DAY: u16 = 1440;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("latitude {0} outside [-90, 90]")]
    LatitudeOutOfRange(f64),
    #[error("longitude {0} outside [-180, 180]")]
    LongitudeOutOfRange(f64),
    #[error("time of day {0} outside [0, 1440] minutes")]
    TimeOutOfRange(u32),
    #[error("interval may not start at 24:00")]
    StartsAtMidnightEnd,
    #[error("empty interval: from and to are both {0} minutes")]
    EmptyInterval(u16),
    #[error("inverted range: low {low} Hz > high {high} Hz")]
    InvertedRange { low: u64, high: u64 },
    #[error("frequency {0} Hz exceeds 1 THz")]
    UpperBoundExceeded(u64),
    #[error("transmitter name is empty")]
    EmptyName,
    #[error("duplicate transmitter name {0:?}")]
    DuplicateName(String),
}

/// A point in decimal degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPoint")]
pub struct GeoPoint {
    lat: f64,
    lon: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPoint {
    lat: f64,
    lon: f64,
}

impl TryFrom<RawPoint> for GeoPoint {
    type Error = ModelError;
    fn try_from(raw: RawPoint) -> Result<Self, ModelError> {
        GeoPoint::new(raw.lat, raw.lon)
    }
}

impl GeoPoint {
    pub fn new(lat: f64, lon: f64) -> Result<Self, ModelError> {
        // NaN fails both range checks.
        if !(-90.0..=90.0).contains(&lat) {
            return Err(ModelError::LatitudeOutOfRange(lat));
        }
        if !(-180.0..=180.0).contains(&lon) {
            return Err(ModelError::LongitudeOutOfRange(lon));
        }
        Ok(GeoPoint { lat, lon })
    }

    pub fn lat(&self) -> f64 {
        self.lat
    }

    pub fn lon(&self) -> f64 {
        self.lon
    }
}

/// Minutes since midnight, `0..=1440`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TimeOfDay(u16);

impl TimeOfDay {
    pub const MIDNIGHT: TimeOfDay = TimeOfDay(0);
    pub const END_OF_DAY: TimeOfDay = TimeOfDay(MINUTES_PER_DAY);

    pub fn new(minutes: u32) -> Result<Self, ModelError> {
        if minutes > MINUTES_PER_DAY as u32 {
            return Err(ModelError::TimeOutOfRange(minutes));
        }
        Ok(TimeOfDay(minutes as u16))
    }

    pub fn from_hm(hours: u32, minutes: u32) -> Result<Self, ModelError> {
        if minutes >= 60 {
            return Err(ModelError::TimeOutOfRange(hours * 60 + minutes));
        }
        TimeOfDay::new(hours * 60 + minutes)
    }

    pub fn minutes(self) -> u16 {
        self.0
    }
}

/// Renders as `HH:MM`, with 1440 shown as `24:00`.
impl fmt::Display for TimeOfDay {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:02}:{:02}", self.0 / 60, self.0 % 60)
    }
}

/// A half-open arc `[from, to)` on the 24-hour clock.
///
/// `from > to` wraps past midnight. The full day is exactly `(0, 1440)`;
/// `from == to` is rejected, so there is no second spelling of it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawHours", into = "RawHours")]
pub struct HoursOfOperation {
    from: TimeOfDay,
    to: TimeOfDay,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawHours {
    from_min: u32,
    to_min: u32,
}

impl TryFrom<RawHours> for HoursOfOperation {
    type Error = ModelError;
    fn try_from(raw: RawHours) -> Result<Self, ModelError> {
        HoursOfOperation::from_minutes(raw.from_min, raw.to_min)
    }
}

impl From<HoursOfOperation> for RawHours {
    fn from(h: HoursOfOperation) -> Self {
        RawHours {
            from_min: h.from.0 as u32,
            to_min: h.to.0 as u32,
        }
    }
}

impl HoursOfOperation {
    pub const FULL_DAY: HoursOfOperation = HoursOfOperation {
        from: TimeOfDay::MIDNIGHT,
        to: TimeOfDay::END_OF_DAY,
    };

    pub fn new(from: TimeOfDay, to: TimeOfDay) -> Result<Self, ModelError> {
        if from == TimeOfDay::END_OF_DAY {
            return Err(ModelError::StartsAtMidnightEnd);
        }
        if from == to {
            return Err(ModelError::EmptyInterval(from.0));
        }
        Ok(HoursOfOperation { from, to })
    }

    pub fn from_minutes(from: u32, to: u32) -> Result<Self, ModelError> {
        HoursOfOperation::new(TimeOfDay::new(from)?, TimeOfDay::new(to)?)
    }

    pub fn from(&self) -> TimeOfDay {
        self.from
    }

    pub fn to(&self) -> TimeOfDay {
        self.to
    }

    pub fn wraps(&self) -> bool {
        self.from > self.to
    }

    pub fn is_full_day(&self) -> bool {
        *self == Self::FULL_DAY
    }

    /// The arc as at most two linear half-open minute ranges `[start, end)`,
    /// sorted by start. A wrapped arc ending at 0:00 yields one segment.
    pub fn segments(&self) -> Vec<(u16, u16)> {
        let (from, to) = (self.from.0, self.to.0);
        if from < to {
            vec![(from, to)]
        } else if to == 0 {
            vec![(from, MINUTES_PER_DAY)]
        } else {
            vec![(0, to), (from, MINUTES_PER_DAY)]
        }
    }

    /// Whether minute `m` (`0..1440`) lies on the arc.
    pub fn contains_minute(&self, m: u16) -> bool {
        let (from, to) = (self.from.0, self.to.0);
        if from < to {
            from <= m && m < to
        } else {
            m >= from || m < to
        }
    }

    pub fn duration_minutes(&self) -> u16 {
        self.segments().iter().map(|(a, b)| b - a).sum()
    }

    /// True iff the two arcs share a span of nonzero length.
    pub fn overlaps(&self, other: &HoursOfOperation) -> bool {
        let ours = self.segments();
        let theirs = other.segments();
        ours.iter()
            .any(|&(a0, a1)| theirs.iter().any(|&(b0, b1)| a0.max(b0) < a1.min(b1)))
    }
}

impl fmt::Display for HoursOfOperation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}..{}", self.from, self.to)
    }
}

/// Symmetric overlap test for two operating-hour arcs.
pub fn hours_overlap(a: &HoursOfOperation, b: &HoursOfOperation) -> bool {
    a.overlaps(b)
}

/// A closed interval of whole hertz, `0 <= low <= high <= 1 THz`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "RawBand")]
pub struct FrequencyBand {
    low_hz: u64,
    high_hz: u64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBand {
    low_hz: u64,
    high_hz: u64,
}

impl TryFrom<RawBand> for FrequencyBand {
    type Error = ModelError;
    fn try_from(raw: RawBand) -> Result<Self, ModelError> {
        FrequencyBand::from_min_max(raw.low_hz, raw.high_hz)
    }
}

impl FrequencyBand {
    pub fn from_min_max(low_hz: u64, high_hz: u64) -> Result<Self, ModelError> {
        if high_hz > MAX_HZ {
            return Err(ModelError::UpperBoundExceeded(high_hz));
        }
        if low_hz > high_hz {
            return Err(ModelError::InvertedRange {
                low: low_hz,
                high: high_hz,
            });
        }
        Ok(FrequencyBand { low_hz, high_hz })
    }

    /// Band of full width `bandwidth_hz` around `centre_hz`. Odd widths put
    /// the extra hertz above the centre; the low edge clamps at 0 Hz.
    pub fn from_centre(centre_hz: u64, bandwidth_hz: u64) -> Result<Self, ModelError> {
        let below = bandwidth_hz / 2;
        let above = bandwidth_hz - below;
        let high = centre_hz
            .checked_add(above)
            .filter(|&h| h <= MAX_HZ)
            .ok_or(ModelError::UpperBoundExceeded(centre_hz.saturating_add(above)))?;
        Ok(FrequencyBand {
            low_hz: centre_hz.saturating_sub(below),
            high_hz: high,
        })
    }

    /// `[centre - tolerance, centre + tolerance]`, low edge clamped at 0 Hz.
    pub fn around(centre_hz: u64, tolerance_hz: u64) -> Result<Self, ModelError> {
        let high = centre_hz
            .checked_add(tolerance_hz)
            .filter(|&h| h <= MAX_HZ)
            .ok_or(ModelError::UpperBoundExceeded(centre_hz.saturating_add(tolerance_hz)))?;
        Ok(FrequencyBand {
            low_hz: centre_hz.saturating_sub(tolerance_hz),
            high_hz: high,
        })
    }

    pub fn low_hz(&self) -> u64 {
        self.low_hz
    }

    pub fn high_hz(&self) -> u64 {
        self.high_hz
    }

    /// `high - low`; a single-frequency band has width 0.
    pub fn width_hz(&self) -> u64 {
        self.high_hz - self.low_hz
    }

    pub fn overlaps(&self, other: &FrequencyBand) -> bool {
        self.low_hz.max(other.low_hz) <= self.high_hz.min(other.high_hz)
    }

    pub fn intersection(&self, other: &FrequencyBand) -> Option<FrequencyBand> {
        let low = self.low_hz.max(other.low_hz);
        let high = self.high_hz.min(other.high_hz);
        (low <= high).then_some(FrequencyBand {
            low_hz: low,
            high_hz: high,
        })
    }

    pub fn contains_hz(&self, hz: u64) -> bool {
        self.low_hz <= hz && hz <= self.high_hz
    }

    pub fn contains(&self, other: &FrequencyBand) -> bool {
        self.low_hz <= other.low_hz && other.high_hz <= self.high_hz
    }
}

impl fmt::Display for FrequencyBand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}] Hz", self.low_hz, self.high_hz)
    }
}

/// One emitter. The location is optional: some records carry none.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTransmitter")]
pub struct Transmitter {
    name: String,
    location: Option<GeoPoint>,
    hours: HoursOfOperation,
    band: FrequencyBand,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTransmitter {
    name: String,
    location: Option<GeoPoint>,
    hours: HoursOfOperation,
    band: FrequencyBand,
}

impl TryFrom<RawTransmitter> for Transmitter {
    type Error = ModelError;
    fn try_from(raw: RawTransmitter) -> Result<Self, ModelError> {
        Transmitter::new(raw.name, raw.location, raw.hours, raw.band)
    }
}

impl Transmitter {
    pub fn new(
        name: impl Into<String>,
        location: Option<GeoPoint>,
        hours: HoursOfOperation,
        band: FrequencyBand,
    ) -> Result<Self, ModelError> {
        let name = name.into();
        if name.is_empty() {
            return Err(ModelError::EmptyName);
        }
        Ok(Transmitter {
            name,
            location,
            hours,
            band,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn location(&self) -> Option<GeoPoint> {
        self.location
    }

    pub fn hours(&self) -> HoursOfOperation {
        self.hours
    }

    pub fn band(&self) -> FrequencyBand {
        self.band
    }
}

/// Transmitters with unique names, kept in byte-wise name order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    transmitters: Vec<Transmitter>,
}

impl Dataset {
    pub fn new(mut transmitters: Vec<Transmitter>) -> Result<Self, ModelError> {
        let mut seen = HashSet::with_capacity(transmitters.len());
        for t in &transmitters {
            if !seen.insert(t.name.as_str()) {
                return Err(ModelError::DuplicateName(t.name.clone()));
            }
        }
        transmitters.sort_by(|a, b| a.name.cmp(&b.name));
        Ok(Dataset { transmitters })
    }

    pub fn empty() -> Self {
        Dataset::default()
    }

    pub fn len(&self) -> usize {
        self.transmitters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transmitters.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Transmitter> {
        self.transmitters.iter()
    }

    pub fn as_slice(&self) -> &[Transmitter] {
        &self.transmitters
    }

    pub fn get(&self, name: &str) -> Option<&Transmitter> {
        self.transmitters
            .binary_search_by(|t| t.name.as_str().cmp(name))
            .ok()
            .map(|i| &self.transmitters[i])
    }
}

impl<'a> IntoIterator for &'a Dataset {
    type Item = &'a Transmitter;
    type IntoIter = std::slice::Iter<'a, Transmitter>;
    fn into_iter(self) -> Self::IntoIter {
        self.transmitters.iter()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn hours(from: u32, to: u32) -> HoursOfOperation {
        HoursOfOperation::from_minutes(from, to).unwrap()
    }

    #[test]
    fn band_from_centre_examples() {
        let b = FrequencyBand::from_centre(900_000_000, 3_000).unwrap();
        assert_eq!((b.low_hz(), b.high_hz()), (899_998_500, 900_001_500));

        let clamped = FrequencyBand::from_centre(32, 10_000).unwrap();
        assert_eq!((clamped.low_hz(), clamped.high_hz()), (0, 5_032));

        let point = FrequencyBand::from_centre(1234, 0).unwrap();
        assert_eq!((point.low_hz(), point.high_hz()), (1234, 1234));
    }

    #[test]
    fn band_from_centre_odd_width_splits_floor_ceil() {
        let b = FrequencyBand::from_centre(100, 3).unwrap();
        assert_eq!((b.low_hz(), b.high_hz()), (99, 102));
        assert_eq!(b.width_hz(), 3);
    }

    #[test]
    fn band_upper_bound() {
        assert_eq!(
            FrequencyBand::from_centre(MAX_HZ, 2),
            Err(ModelError::UpperBoundExceeded(MAX_HZ + 1))
        );
        assert!(FrequencyBand::from_centre(MAX_HZ - 1, 2).is_ok());
        assert!(FrequencyBand::from_centre(u64::MAX, 2).is_err());
        assert_eq!(
            FrequencyBand::from_min_max(0, MAX_HZ + 1),
            Err(ModelError::UpperBoundExceeded(MAX_HZ + 1))
        );
    }

    #[test]
    fn band_from_min_max_examples() {
        let b = FrequencyBand::from_min_max(90_000_000, 100_000_000).unwrap();
        assert_eq!((b.low_hz(), b.high_hz()), (90_000_000, 100_000_000));
        assert_eq!(FrequencyBand::from_min_max(7, 7).unwrap().width_hz(), 0);
        assert_eq!(
            FrequencyBand::from_min_max(100_000_000, 90_000_000),
            Err(ModelError::InvertedRange {
                low: 100_000_000,
                high: 90_000_000
            })
        );
    }

    #[test]
    fn hours_overlap_examples() {
        // railway 5:00-23:00 vs 1:00-4:00
        assert!(!hours_overlap(&hours(300, 1380), &hours(60, 240)));
        // wrapped 20:00-10:00 vs 3:00-8:00
        assert!(hours_overlap(&hours(1200, 600), &hours(180, 480)));
        assert!(hours_overlap(&HoursOfOperation::FULL_DAY, &hours(1439, 1)));
        assert!(hours_overlap(&HoursOfOperation::FULL_DAY, &hours(5, 6)));
        // touching endpoints only
        assert!(!hours_overlap(&hours(480, 1200), &hours(180, 480)));
    }

    #[test]
    fn hours_validation() {
        assert_eq!(
            HoursOfOperation::from_minutes(60, 60),
            Err(ModelError::EmptyInterval(60))
        );
        assert_eq!(
            HoursOfOperation::from_minutes(1440, 10),
            Err(ModelError::StartsAtMidnightEnd)
        );
        assert_eq!(
            HoursOfOperation::from_minutes(0, 1441),
            Err(ModelError::TimeOutOfRange(1441))
        );
        assert!(TimeOfDay::from_hm(3, 60).is_err());
        assert_eq!(TimeOfDay::from_hm(24, 0).unwrap(), TimeOfDay::END_OF_DAY);
    }

    #[test]
    fn wrapped_arc_ending_at_midnight_is_one_segment() {
        let h = hours(1200, 0);
        assert!(h.wraps());
        assert_eq!(h.segments(), vec![(1200, 1440)]);
        assert_eq!(h.duration_minutes(), 240);
        assert!(!h.contains_minute(0));
    }

    #[test]
    fn geo_point_ranges() {
        assert!(GeoPoint::new(90.0, -180.0).is_ok());
        assert!(matches!(
            GeoPoint::new(90.5, 0.0),
            Err(ModelError::LatitudeOutOfRange(_))
        ));
        assert!(matches!(
            GeoPoint::new(0.0, 180.1),
            Err(ModelError::LongitudeOutOfRange(_))
        ));
        assert!(GeoPoint::new(f64::NAN, 0.0).is_err());
    }

    #[test]
    fn dataset_sorts_and_rejects_duplicates() {
        let t = |n: &str| {
            Transmitter::new(
                n,
                None,
                HoursOfOperation::FULL_DAY,
                FrequencyBand::from_min_max(1, 2).unwrap(),
            )
            .unwrap()
        };
        let d = Dataset::new(vec![t("b"), t("a"), t("B")]).unwrap();
        let names: Vec<_> = d.iter().map(|t| t.name()).collect();
        assert_eq!(names, ["B", "a", "b"]);
        assert!(d.get("a").is_some());
        assert!(d.get("c").is_none());
        assert_eq!(
            Dataset::new(vec![t("a"), t("a")]),
            Err(ModelError::DuplicateName("a".into()))
        );
        assert_eq!(Transmitter::new("", None, HoursOfOperation::FULL_DAY, t("x").band()), Err(ModelError::EmptyName));
    }

    #[test]
    fn serde_shapes() {
        let t = Transmitter::new(
            "Stadium",
            Some(GeoPoint::new(38.5, 90.25).unwrap()),
            hours(480, 1200),
            FrequencyBand::from_min_max(29_999_500, 30_000_500).unwrap(),
        )
        .unwrap();
        let json = serde_json::to_string(&t).unwrap();
        assert_eq!(
            json,
            r#"{"name":"Stadium","location":{"lat":38.5,"lon":90.25},"hours":{"from_min":480,"to_min":1200},"band":{"low_hz":29999500,"high_hz":30000500}}"#
        );
        let back: Transmitter = serde_json::from_str(&json).unwrap();
        assert_eq!(back, t);
        assert!(serde_json::from_str::<HoursOfOperation>(r#"{"from_min":5,"to_min":5}"#).is_err());
        assert!(serde_json::from_str::<FrequencyBand>(r#"{"low_hz":5,"high_hz":4}"#).is_err());
    }

    fn arb_hours() -> impl Strategy<Value = HoursOfOperation> {
        prop_oneof![
            Just(HoursOfOperation::FULL_DAY),
            (0u32..1440, 0u32..=1440)
                .prop_filter("non-empty", |(f, t)| f != t)
                .prop_map(|(f, t)| hours(f, t)),
        ]
    }

    proptest! {
        #[test]
        fn hours_overlap_symmetric_and_reflexive(a in arb_hours(), b in arb_hours()) {
            prop_assert_eq!(hours_overlap(&a, &b), hours_overlap(&b, &a));
            prop_assert!(hours_overlap(&a, &a));
        }

        #[test]
        fn hours_overlap_matches_minute_scan(a in arb_hours(), b in arb_hours()) {
            let brute = (0..MINUTES_PER_DAY).any(|m| a.contains_minute(m) && b.contains_minute(m));
            prop_assert_eq!(hours_overlap(&a, &b), brute);
        }

        #[test]
        fn band_overlap_formula(a in 0u64..1000, b in 0u64..1000, c in 0u64..1000, d in 0u64..1000) {
            let x = FrequencyBand::from_min_max(a.min(b), a.max(b)).unwrap();
            let y = FrequencyBand::from_min_max(c.min(d), c.max(d)).unwrap();
            prop_assert_eq!(x.overlaps(&y), y.overlaps(&x));
            prop_assert!(x.overlaps(&x));
            prop_assert_eq!(x.overlaps(&y), a.min(b).max(c.min(d)) <= a.max(b).min(c.max(d)));
            prop_assert_eq!(x.intersection(&y).is_some(), x.overlaps(&y));
        }

        #[test]
        fn centre_band_width(centre in 0u64..2_000_000, width in 0u64..2_000_000) {
            let b = FrequencyBand::from_centre(centre, width).unwrap();
            if centre >= width / 2 {
                prop_assert_eq!(b.width_hz(), width);
            } else {
                prop_assert!(b.width_hz() < width);
                prop_assert_eq!(b.low_hz(), 0);
            }
        }
    }
}
