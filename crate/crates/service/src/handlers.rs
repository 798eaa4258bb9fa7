use std::collections::HashMap;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::rejection::BytesRejection;
use axum::extract::{Query as UrlQuery, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use serde::Serialize;
use serde_json::{Map, Value};
use stsq_core::analytics::{active_times as coverage_at, find_conflicts, find_gaps};
use stsq_core::geo::{geocode as resolve, GeocodeError};
use stsq_core::ingest::{export_csv, import_csv, ImportReport};
use stsq_core::query::{query_from_json, JsonError};
use stsq_core::wire::{self, ErrorBody, ErrorDetail};
use stsq_core::{FrequencyBand, GeoPoint, HoursOfOperation};

use crate::AppState;

type Shared = State<Arc<AppState>>;
type Body = Result<Bytes, BytesRejection>;

fn json(status: StatusCode, body: String) -> Response {
    (status, [(header::CONTENT_TYPE, "application/json")], body).into_response()
}

fn ok(body: String) -> Response {
    json(StatusCode::OK, body)
}

/// A request refused with the standard error envelope.
pub struct Reject {
    status: StatusCode,
    path: String,
    message: String,
}

impl Reject {
    fn new(status: StatusCode, path: impl Into<String>, message: impl Into<String>) -> Self {
        Reject {
            status,
            path: path.into(),
            message: message.into(),
        }
    }
}

impl IntoResponse for Reject {
    fn into_response(self) -> Response {
        json(self.status, wire::to_json(&ErrorBody::new(self.path, self.message)))
    }
}

fn bad_request(path: impl Into<String>, message: impl Into<String>) -> Reject {
    Reject::new(StatusCode::BAD_REQUEST, path, message)
}

/// Maps body rejections (size limit, read failure) onto the envelope.
fn bytes(body: Body) -> Result<Bytes, Reject> {
    body.map_err(|rejection| Reject::new(rejection.status(), "", rejection.body_text()))
}

fn utf8(bytes: &Bytes) -> Result<&str, Reject> {
    std::str::from_utf8(bytes).map_err(|_| bad_request("", "body is not UTF-8"))
}

fn parse_object(body: Body) -> Result<Map<String, Value>, Reject> {
    match serde_json::from_slice::<Value>(&bytes(body)?) {
        Ok(Value::Object(map)) => Ok(map),
        Ok(_) => Err(bad_request("", "expected a JSON object")),
        Err(e) => Err(bad_request("", format!("malformed JSON: {e}"))),
    }
}

// Path-tracking readers for the small analytics bodies.

fn join(parent: &str, key: &str) -> String {
    if parent.is_empty() {
        key.to_string()
    } else {
        format!("{parent}.{key}")
    }
}

fn only_keys(map: &Map<String, Value>, path: &str, allowed: &[&str]) -> Result<(), Reject> {
    match map.keys().find(|k| !allowed.contains(&k.as_str())) {
        Some(k) => Err(bad_request(join(path, k), "unknown field")),
        None => Ok(()),
    }
}

fn field<'a>(map: &'a Map<String, Value>, path: &str, key: &str) -> Result<&'a Value, Reject> {
    map.get(key).ok_or_else(|| bad_request(join(path, key), "missing"))
}

fn object_field<'a>(map: &'a Map<String, Value>, path: &str, key: &str) -> Result<&'a Map<String, Value>, Reject> {
    field(map, path, key)?
        .as_object()
        .ok_or_else(|| bad_request(join(path, key), "expected an object"))
}

fn u64_field(map: &Map<String, Value>, path: &str, key: &str) -> Result<u64, Reject> {
    field(map, path, key)?
        .as_u64()
        .ok_or_else(|| bad_request(join(path, key), "expected a non-negative integer"))
}

fn minutes_field(map: &Map<String, Value>, path: &str, key: &str) -> Result<u32, Reject> {
    u32::try_from(u64_field(map, path, key)?).map_err(|_| bad_request(join(path, key), "out of range"))
}

fn f64_field(map: &Map<String, Value>, path: &str, key: &str) -> Result<f64, Reject> {
    field(map, path, key)?
        .as_f64()
        .ok_or_else(|| bad_request(join(path, key), "expected a number"))
}

fn radius_field(map: &Map<String, Value>) -> Result<f64, Reject> {
    let radius = f64_field(map, "", "radius_km")?;
    if radius > 0.0 && radius.is_finite() {
        Ok(radius)
    } else {
        Err(bad_request("radius_km", "must be greater than zero"))
    }
}

pub async fn transmitters(State(state): Shared) -> Response {
    ok(wire::transmitters_json(&state.snapshot()))
}

pub async fn query(State(state): Shared, body: Body) -> Result<Response, Reject> {
    let bytes = bytes(body)?;
    let q = query_from_json(utf8(&bytes)?).map_err(|e| {
        let message = match &e {
            JsonError::SchemaViolation { message, .. } => message.clone(),
            other => other.to_string(),
        };
        bad_request(e.path(), message)
    })?;
    let snapshot = state.snapshot();
    Ok(ok(wire::to_json(&wire::run_query(&q, &snapshot))))
}

pub async fn gaps(State(state): Shared, body: Body) -> Result<Response, Reject> {
    let root = parse_object(body)?;
    only_keys(&root, "", &["window", "during"])?;
    let w = object_field(&root, "", "window")?;
    only_keys(w, "window", &["low_hz", "high_hz"])?;
    let window = FrequencyBand::from_min_max(u64_field(w, "window", "low_hz")?, u64_field(w, "window", "high_hz")?)
        .map_err(|e| bad_request("window", e.to_string()))?;
    let h = object_field(&root, "", "during")?;
    only_keys(h, "during", &["from_min", "to_min"])?;
    let during =
        HoursOfOperation::from_minutes(minutes_field(h, "during", "from_min")?, minutes_field(h, "during", "to_min")?)
            .map_err(|e| bad_request("during", e.to_string()))?;
    Ok(ok(wire::gaps_json(&find_gaps(&state.snapshot(), window, during))))
}

pub async fn conflicts(State(state): Shared, body: Body) -> Result<Response, Reject> {
    let root = parse_object(body)?;
    only_keys(&root, "", &["radius_km"])?;
    let radius = radius_field(&root)?;
    let report = find_conflicts(&state.snapshot(), radius).map_err(|e| bad_request("radius_km", e.to_string()))?;
    Ok(ok(wire::conflicts_json(&report)))
}

pub async fn active_times(State(state): Shared, body: Body) -> Result<Response, Reject> {
    let root = parse_object(body)?;
    only_keys(&root, "", &["lat", "lon", "radius_km"])?;
    let lat = f64_field(&root, "", "lat")?;
    let lon = f64_field(&root, "", "lon")?;
    let centre = GeoPoint::new(lat, lon).map_err(|e| {
        let path = if (-90.0..=90.0).contains(&lat) { "lon" } else { "lat" };
        bad_request(path, e.to_string())
    })?;
    let radius = radius_field(&root)?;
    let coverage = coverage_at(&state.snapshot(), centre, radius).map_err(|e| bad_request("radius_km", e.to_string()))?;
    Ok(ok(wire::coverage_json(&coverage)))
}

#[derive(Serialize)]
struct RejectedImport<'a> {
    error: ErrorDetail,
    report: &'a ImportReport,
}

pub async fn import(State(state): Shared, body: Body) -> Result<Response, Reject> {
    let text = utf8(&bytes(body)?)?.to_string();
    // One import at a time; readers keep using the current snapshot.
    let _writer = state.writer.lock().await;
    let (dataset, report) = tokio::task::spawn_blocking(move || import_csv(&text))
        .await
        .map_err(|e| Reject::new(StatusCode::INTERNAL_SERVER_ERROR, "", e.to_string()))?
        .map_err(|e| bad_request("", e.to_string()))?;
    if let Some(first) = report.errors.first() {
        let body = RejectedImport {
            error: ErrorDetail {
                path: format!("row {}.{}", first.row, first.field),
                message: format!(
                    "{} row(s) rejected; dataset unchanged. First: {}",
                    report.errors.len(),
                    first.message
                ),
            },
            report: &report,
        };
        return Ok(json(StatusCode::UNPROCESSABLE_ENTITY, wire::to_json(&body)));
    }
    state.replace(dataset);
    Ok(ok(wire::to_json(&report)))
}

pub async fn export(State(state): Shared) -> Response {
    (
        StatusCode::OK,
        [(header::CONTENT_TYPE, "text/csv; charset=utf-8")],
        export_csv(&state.snapshot()),
    )
        .into_response()
}

pub async fn geocode(
    State(state): Shared,
    UrlQuery(params): UrlQuery<HashMap<String, String>>,
) -> Result<Response, Reject> {
    let unavailable = |message: String| Reject::new(StatusCode::SERVICE_UNAVAILABLE, "", message);
    let provider = state
        .geocoder
        .clone()
        .ok_or_else(|| unavailable("no geocoder configured".into()))?;
    let address = params.get("address").cloned().unwrap_or_default();
    let point = tokio::task::spawn_blocking(move || resolve(&address, provider.as_ref()))
        .await
        .map_err(|e| Reject::new(StatusCode::INTERNAL_SERVER_ERROR, "", e.to_string()))?
        .map_err(|e| match e {
            GeocodeError::EmptyAddress => bad_request("address", e.to_string()),
            GeocodeError::AddressNotFound(_) => Reject::new(StatusCode::NOT_FOUND, "address", e.to_string()),
            GeocodeError::ProviderUnavailable(_) => unavailable(e.to_string()),
        })?;
    Ok(ok(wire::to_json(&point)))
}

pub async fn not_found() -> Reject {
    Reject::new(StatusCode::NOT_FOUND, "", "no such endpoint")
}
