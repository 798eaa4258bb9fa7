//! HTTP front end for the query engine.
//!
//! | route | body | response |
//! |---|---|---|
//! | `GET /api/transmitters` | | `{"transmitters":[...]}` |
//! | `POST /api/query` | query JSON | `{"matches":[...],"sql":{"text","params"}}` |
//! | `POST /api/gaps` | `{"window":{low_hz,high_hz},"during":{from_min,to_min}}` | gap report |
//! | `POST /api/conflicts` | `{"radius_km":n}` | `{"conflicts":[...],"indeterminate":[...]}` |
//! | `POST /api/active-times` | `{"lat","lon","radius_km"}` | `{"intervals":[...]}` |
//! | `POST /api/import` | CSV text | import report |
//! | `GET /api/export` | | canonical CSV |
//! | `GET /api/geocode?address=..` | | `{"lat","lon"}` |
//!
//! Errors always use `{"error":{"path":..,"message":..}}`. A rejected
//! import (422) adds the full report under `"report"`.
//!
//! The dataset is an immutable snapshot behind an `Arc`. Readers clone the
//! `Arc` and release the lock at once; an import builds the new dataset
//! off to the side and swaps it in whole, so a reader sees either the old
//! or the new data and never a mix.

mod config;
mod handlers;

use std::net::SocketAddr;
use std::path::Path;
use std::sync::{Arc, RwLock};

use axum::extract::DefaultBodyLimit;
use axum::http::{header, HeaderValue, Method};
use axum::routing::{get, post};
use axum::Router;
use stsq_core::geo::Geocoder;
use stsq_core::ingest::import_csv;
use stsq_core::Dataset;
use thiserror::Error;
use tokio::net::TcpListener;
use tower_http::cors::{AllowOrigin, CorsLayer};

pub use config::Config;

/// Largest accepted `/api/query` (and other JSON) body.
pub const QUERY_BODY_LIMIT: usize = 1 << 20;
/// Largest accepted `/api/import` body.
pub const IMPORT_BODY_LIMIT: usize = 16 << 20;

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("cannot bind {addr}: {source}")]
    Bind {
        addr: SocketAddr,
        source: std::io::Error,
    },
    #[error("cannot read {path}: {source}")]
    ReadData {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    BadData { path: String, message: String },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub struct AppState {
    snapshot: RwLock<Arc<Dataset>>,
    writer: tokio::sync::Mutex<()>,
    geocoder: Option<Arc<dyn Geocoder>>,
}

impl AppState {
    pub fn new(dataset: Dataset) -> Self {
        AppState {
            snapshot: RwLock::new(Arc::new(dataset)),
            writer: tokio::sync::Mutex::new(()),
            geocoder: None,
        }
    }

    pub fn with_geocoder(mut self, geocoder: Arc<dyn Geocoder>) -> Self {
        self.geocoder = Some(geocoder);
        self
    }

    /// The current dataset. The returned `Arc` stays valid after a swap.
    pub fn snapshot(&self) -> Arc<Dataset> {
        self.snapshot.read().unwrap_or_else(|e| e.into_inner()).clone()
    }

    fn replace(&self, dataset: Dataset) {
        *self.snapshot.write().unwrap_or_else(|e| e.into_inner()) = Arc::new(dataset);
    }
}

fn cors(origin: Option<&str>) -> Result<CorsLayer, ServiceError> {
    let allow = match origin {
        None | Some("*") => AllowOrigin::any(),
        Some(o) => AllowOrigin::exact(
            HeaderValue::from_str(o).map_err(|_| ServiceError::Config(format!("bad CORS origin {o:?}")))?,
        ),
    };
    Ok(CorsLayer::new()
        .allow_origin(allow)
        .allow_methods([Method::GET, Method::POST])
        .allow_headers([header::CONTENT_TYPE]))
}

pub fn router(state: Arc<AppState>, cors_origin: Option<&str>) -> Result<Router, ServiceError> {
    let json_routes = Router::new()
        .route("/api/transmitters", get(handlers::transmitters))
        .route("/api/query", post(handlers::query))
        .route("/api/gaps", post(handlers::gaps))
        .route("/api/conflicts", post(handlers::conflicts))
        .route("/api/active-times", post(handlers::active_times))
        .route("/api/export", get(handlers::export))
        .route("/api/geocode", get(handlers::geocode))
        .layer(DefaultBodyLimit::max(QUERY_BODY_LIMIT));
    let import_routes = Router::new()
        .route("/api/import", post(handlers::import))
        .layer(DefaultBodyLimit::max(IMPORT_BODY_LIMIT));
    Ok(json_routes
        .merge(import_routes)
        .fallback(handlers::not_found)
        .layer(cors(cors_origin)?)
        .with_state(state))
}

/// Reads and validates a CSV file; any rejected row fails the load.
pub fn load_dataset(path: &Path) -> Result<Dataset, ServiceError> {
    let text = std::fs::read_to_string(path).map_err(|source| ServiceError::ReadData {
        path: path.display().to_string(),
        source,
    })?;
    let (dataset, report) = import_csv(&text).map_err(|e| ServiceError::BadData {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    if let Some(first) = report.errors.first() {
        return Err(ServiceError::BadData {
            path: path.display().to_string(),
            message: format!(
                "{} rows rejected; first at row {} ({}): {}",
                report.errors.len(),
                first.row,
                first.field,
                first.message
            ),
        });
    }
    Ok(dataset)
}

/// Serves on an already-bound listener until ctrl-c.
pub async fn serve_on(listener: TcpListener, app: Router) -> Result<(), ServiceError> {
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}

/// Loads the configured dataset, binds the port and serves until ctrl-c.
pub async fn serve(config: Config) -> Result<(), ServiceError> {
    let dataset = match &config.data {
        Some(path) => load_dataset(path)?,
        None => Dataset::empty(),
    };
    let mut state = AppState::new(dataset);
    if let Some(geocoder) = config.geocoder()? {
        state = state.with_geocoder(geocoder);
    }
    let app = router(Arc::new(state), config.cors_origin.as_deref())?;
    let addr = SocketAddr::from(([0, 0, 0, 0], config.port));
    let listener = TcpListener::bind(addr)
        .await
        .map_err(|source| ServiceError::Bind { addr, source })?;
    eprintln!("stsq: listening on {}", listener.local_addr()?);
    serve_on(listener, app).await
}
