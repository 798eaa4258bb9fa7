use std::path::PathBuf;
use std::sync::Arc;

use stsq_core::geo::{FixtureGeocoder, Geocoder};

use crate::ServiceError;

pub const DEFAULT_PORT: u16 = 8080;

/// Startup settings, normally read from `STSQ_*` environment variables.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Config {
    pub port: u16,
    /// CSV loaded at startup; an empty dataset when unset.
    pub data: Option<PathBuf>,
    /// Allowed browser origin; any origin when unset.
    pub cors_origin: Option<String>,
    /// JSON address table for `/api/geocode`.
    pub geocoder_fixture: Option<PathBuf>,
}

impl Config {
    /// `STSQ_PORT`, `STSQ_DATA`, `STSQ_CORS_ORIGIN`, `STSQ_GEOCODER_FIXTURE`.
    pub fn from_env() -> Result<Self, ServiceError> {
        Self::from_lookup(|key| std::env::var(key).ok())
    }

    pub fn from_lookup(get: impl Fn(&str) -> Option<String>) -> Result<Self, ServiceError> {
        let get = |key: &str| get(key).filter(|v| !v.trim().is_empty());
        let port = match get("STSQ_PORT") {
            Some(p) => p
                .trim()
                .parse()
                .map_err(|_| ServiceError::Config(format!("STSQ_PORT={p:?} is not a port number")))?,
            None => DEFAULT_PORT,
        };
        Ok(Config {
            port,
            data: get("STSQ_DATA").map(PathBuf::from),
            cors_origin: get("STSQ_CORS_ORIGIN"),
            geocoder_fixture: get("STSQ_GEOCODER_FIXTURE").map(PathBuf::from),
        })
    }

    pub(crate) fn geocoder(&self) -> Result<Option<Arc<dyn Geocoder>>, ServiceError> {
        if let Some(path) = &self.geocoder_fixture {
            let text = std::fs::read_to_string(path).map_err(|source| ServiceError::ReadData {
                path: path.display().to_string(),
                source,
            })?;
            let fixture = FixtureGeocoder::from_json(&text).map_err(|e| ServiceError::BadData {
                path: path.display().to_string(),
                message: e.to_string(),
            })?;
            return Ok(Some(Arc::new(fixture)));
        }
        #[cfg(feature = "http-geocoder")]
        if let Some(http) = stsq_core::geo::HttpGeocoder::from_env() {
            return Ok(Some(Arc::new(http)));
        }
        Ok(None)
    }
}
