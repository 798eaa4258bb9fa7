//! Great-circle distance, degree/minute/second coordinates and address
//! geocoding.

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

use crate::model::GeoPoint;

/// IUGG mean earth radius.
pub const EARTH_RADIUS_KM: f64 = 6371.0088;

/// Haversine distance on a sphere of radius [`EARTH_RADIUS_KM`].
///
/// The operation order here is mirrored term for term by the SQL emitter's
/// distance template, so both engines agree bit for bit.
pub fn haversine_km(a: GeoPoint, b: GeoPoint) -> f64 {
    let dlat = (b.lat() - a.lat()).to_radians();
    let dlon = (b.lon() - a.lon()).to_radians();
    let h = (dlat / 2.0).sin().powi(2)
        + a.lat().to_radians().cos() * b.lat().to_radians().cos() * (dlon / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_KM * h.sqrt().min(1.0).asin()
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DmsError {
    #[error("minutes {0} outside 0..=59")]
    Minutes(u32),
    #[error("seconds {0} outside [0, 60)")]
    Seconds(f64),
    #[error("magnitude {0} exceeds 180 degrees")]
    Magnitude(f64),
}

/// A coordinate in degrees, minutes and seconds. The sign applies to the
/// whole value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dms {
    negative: bool,
    degrees: u32,
    minutes: u32,
    seconds: f64,
}

impl Dms {
    pub fn new(negative: bool, degrees: u32, minutes: u32, seconds: f64) -> Result<Self, DmsError> {
        if minutes > 59 {
            return Err(DmsError::Minutes(minutes));
        }
        if !(0.0..60.0).contains(&seconds) {
            return Err(DmsError::Seconds(seconds));
        }
        let dms = Dms {
            negative,
            degrees,
            minutes,
            seconds,
        };
        let magnitude = dms.magnitude();
        if magnitude > 180.0 {
            return Err(DmsError::Magnitude(magnitude));
        }
        Ok(dms)
    }

    fn magnitude(&self) -> f64 {
        self.degrees as f64 + self.minutes as f64 / 60.0 + self.seconds / 3600.0
    }

    pub fn to_decimal(&self) -> f64 {
        if self.negative {
            -self.magnitude()
        } else {
            self.magnitude()
        }
    }

    /// Splits decimal degrees into whole degrees, whole minutes and
    /// fractional seconds. `value` must be finite with `|value| <= 180`.
    pub fn from_decimal(value: f64) -> Dms {
        let negative = value.is_sign_negative() && value != 0.0;
        let abs = value.abs();
        let degrees = abs.trunc();
        let rem_min = (abs - degrees) * 60.0;
        let minutes = rem_min.trunc();
        let mut seconds = (rem_min - minutes) * 60.0;
        // Float noise can push seconds to 60 - epsilon or slightly negative.
        if seconds < 0.0 {
            seconds = 0.0;
        }
        if seconds >= 60.0 {
            seconds = 60.0 - f64::EPSILON * 64.0;
        }
        Dms {
            negative,
            degrees: degrees as u32,
            minutes: minutes as u32,
            seconds,
        }
    }

    pub fn is_negative(&self) -> bool {
        self.negative
    }

    pub fn degrees(&self) -> u32 {
        self.degrees
    }

    pub fn minutes(&self) -> u32 {
        self.minutes
    }

    pub fn seconds(&self) -> f64 {
        self.seconds
    }
}

impl fmt::Display for Dms {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.negative { "-" } else { "" };
        write!(f, "{sign}{}°{}'{}''", self.degrees, self.minutes, self.seconds)
    }
}

pub fn dms_to_decimal(d: &Dms) -> f64 {
    d.to_decimal()
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GeocodeError {
    #[error("address is empty")]
    EmptyAddress,
    #[error("address not found: {0}")]
    AddressNotFound(String),
    #[error("geocoder unavailable: {0}")]
    ProviderUnavailable(String),
}

/// Resolves free-text addresses to points. Implementations are shared
/// across request handlers and must tolerate concurrent calls.
pub trait Geocoder: Send + Sync {
    fn lookup(&self, address: &str) -> Result<GeoPoint, GeocodeError>;
}

/// Rejects blank addresses before the provider sees them.
pub fn geocode(address: &str, provider: &dyn Geocoder) -> Result<GeoPoint, GeocodeError> {
    if address.trim().is_empty() {
        return Err(GeocodeError::EmptyAddress);
    }
    provider.lookup(address)
}

/// In-memory address table. Keys match case-insensitively after
/// whitespace runs are collapsed and the ends trimmed.
#[derive(Debug, Clone, Default)]
pub struct FixtureGeocoder {
    entries: HashMap<String, GeoPoint>,
}

fn normalize_address(address: &str) -> String {
    address
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase()
}

impl FixtureGeocoder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, address: &str, point: GeoPoint) {
        self.entries.insert(normalize_address(address), point);
    }

    pub fn with(mut self, address: &str, point: GeoPoint) -> Self {
        self.insert(address, point);
        self
    }

    /// Loads `{"address": {"lat": .., "lon": ..}, ...}`.
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        let raw: HashMap<String, GeoPoint> = serde_json::from_str(text)?;
        let mut fixture = FixtureGeocoder::new();
        for (address, point) in raw {
            fixture.insert(&address, point);
        }
        Ok(fixture)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl Geocoder for FixtureGeocoder {
    fn lookup(&self, address: &str) -> Result<GeoPoint, GeocodeError> {
        self.entries
            .get(&normalize_address(address))
            .copied()
            .ok_or_else(|| GeocodeError::AddressNotFound(address.to_string()))
    }
}

#[cfg(feature = "http-geocoder")]
pub use http::HttpGeocoder;

#[cfg(feature = "http-geocoder")]
mod http {
    use super::{GeocodeError, Geocoder};
    use crate::model::GeoPoint;

    /// Environment variable holding the provider base URL.
    pub const URL_ENV: &str = "STSQ_GEOCODER_URL";

    /// Adapter for Nominatim-style search endpoints:
    /// `GET {base}?q=<address>&format=json` answering
    /// `[{"lat": "<deg>", "lon": "<deg>"}, ...]`. The first hit wins.
    #[derive(Debug, Clone)]
    pub struct HttpGeocoder {
        base_url: String,
    }

    impl HttpGeocoder {
        pub fn new(base_url: impl Into<String>) -> Self {
            HttpGeocoder {
                base_url: base_url.into(),
            }
        }

        pub fn from_env() -> Option<Self> {
            std::env::var(URL_ENV).ok().filter(|u| !u.is_empty()).map(Self::new)
        }
    }

    #[derive(serde::Deserialize)]
    struct Hit {
        lat: serde_json::Value,
        lon: serde_json::Value,
    }

    fn coordinate(v: &serde_json::Value) -> Option<f64> {
        match v {
            serde_json::Value::Number(n) => n.as_f64(),
            serde_json::Value::String(s) => s.trim().parse().ok(),
            _ => None,
        }
    }

    impl Geocoder for HttpGeocoder {
        fn lookup(&self, address: &str) -> Result<GeoPoint, GeocodeError> {
            let unavailable = |e: &dyn std::fmt::Display| GeocodeError::ProviderUnavailable(e.to_string());
            let mut response = ureq::get(&self.base_url)
                .query("q", address)
                .query("format", "json")
                .call()
                .map_err(|e| unavailable(&e))?;
            let hits: Vec<Hit> = response.body_mut().read_json().map_err(|e| unavailable(&e))?;
            let hit = hits
                .first()
                .ok_or_else(|| GeocodeError::AddressNotFound(address.to_string()))?;
            let (lat, lon) = coordinate(&hit.lat)
                .zip(coordinate(&hit.lon))
                .ok_or_else(|| GeocodeError::ProviderUnavailable("malformed coordinates".into()))?;
            GeoPoint::new(lat, lon).map_err(|e| unavailable(&e))
        }
    }
}
