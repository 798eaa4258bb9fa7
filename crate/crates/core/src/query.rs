//! Query syntax tree and its canonical JSON encoding.
//!
//! A query is a flat chain `c1 op1 c2 op2 ... cn` where each clause carries
//! an include flag and each `op` is AND or OR. AND binds tighter than OR,
//! so the chain reads as an OR of AND-groups ([`Query::normalize`]).
//!
//! Canonical JSON:
//!
//! ```text
//! {"clauses":[{"include":bool,"predicate":
//!     {"type":"name","value":str}
//!   | {"type":"within","lat":num,"lon":num,"radius_km":num}
//!   | {"type":"active","from_min":int,"to_min":int}
//!   | {"type":"band","low_hz":int,"high_hz":int}
//! ],"connectors":["and"|"or", ...]}
//! ```

use std::fmt;

use serde::Serialize;
use serde_json::{Map, Value};
use thiserror::Error;

use crate::model::{FrequencyBand, GeoPoint, HoursOfOperation, ModelError};

#[derive(Debug, Clone, PartialEq)]
pub enum Predicate {
    /// Exact, case-sensitive name match.
    NameIs(String),
    /// Great-circle distance to `centre` at most `radius_km` (closed).
    WithinKm { centre: GeoPoint, radius_km: f64 },
    /// Operating hours overlap the interval.
    ActiveDuring(HoursOfOperation),
    /// Frequency band intersects the given closed band.
    BandOverlaps(FrequencyBand),
}

impl Predicate {
    pub fn within_km(centre: GeoPoint, radius_km: f64) -> Result<Self, QueryError> {
        if !(radius_km.is_finite() && radius_km > 0.0) {
            return Err(QueryError::NonPositiveRadius(radius_km));
        }
        Ok(Predicate::WithinKm { centre, radius_km })
    }

    /// `centre ± tolerance`, desugared to a band.
    pub fn band_around(centre_hz: u64, tolerance_hz: u64) -> Result<Self, QueryError> {
        Ok(Predicate::BandOverlaps(FrequencyBand::around(centre_hz, tolerance_hz)?))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Clause {
    pub include: bool,
    pub predicate: Predicate,
}

impl Clause {
    pub fn include(predicate: Predicate) -> Self {
        Clause {
            include: true,
            predicate,
        }
    }

    pub fn exclude(predicate: Predicate) -> Self {
        Clause {
            include: false,
            predicate,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Connector {
    And,
    Or,
}

impl fmt::Display for Connector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Connector::And => "and",
            Connector::Or => "or",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QueryError {
    #[error("query has no clauses")]
    Empty,
    #[error("{connectors} connectors for {clauses} clauses")]
    ConnectorCount { clauses: usize, connectors: usize },
    #[error("radius must be a positive finite number of km, got {0}")]
    NonPositiveRadius(f64),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// A non-empty clause chain with `clauses.len() - 1` connectors.
#[derive(Debug, Clone, PartialEq)]
pub struct Query {
    clauses: Vec<Clause>,
    connectors: Vec<Connector>,
}

impl Query {
    pub fn new(clauses: Vec<Clause>, connectors: Vec<Connector>) -> Result<Self, QueryError> {
        if clauses.is_empty() {
            return Err(QueryError::Empty);
        }
        if connectors.len() + 1 != clauses.len() {
            return Err(QueryError::ConnectorCount {
                clauses: clauses.len(),
                connectors: connectors.len(),
            });
        }
        for clause in &clauses {
            if let Predicate::WithinKm { radius_km, .. } = clause.predicate {
                if !(radius_km.is_finite() && radius_km > 0.0) {
                    return Err(QueryError::NonPositiveRadius(radius_km));
                }
            }
        }
        Ok(Query {
            clauses,
            connectors,
        })
    }

    pub fn single(clause: Clause) -> Self {
        Query {
            clauses: vec![clause],
            connectors: Vec::new(),
        }
    }

    pub fn and(mut self, clause: Clause) -> Self {
        self.connectors.push(Connector::And);
        self.clauses.push(clause);
        self
    }

    pub fn or(mut self, clause: Clause) -> Self {
        self.connectors.push(Connector::Or);
        self.clauses.push(clause);
        self
    }

    pub fn clauses(&self) -> &[Clause] {
        &self.clauses
    }

    pub fn connectors(&self) -> &[Connector] {
        &self.connectors
    }

    /// Splits the chain at every OR, giving the AND-groups in order.
    pub fn normalize(&self) -> NormalForm {
        let mut groups = vec![vec![self.clauses[0].clone()]];
        for (connector, clause) in self.connectors.iter().zip(&self.clauses[1..]) {
            match connector {
                Connector::And => groups.last_mut().expect("non-empty").push(clause.clone()),
                Connector::Or => groups.push(vec![clause.clone()]),
            }
        }
        NormalForm { groups }
    }

    pub fn to_json(&self) -> String {
        query_to_json(self)
    }

    pub fn from_json(text: &str) -> Result<Self, JsonError> {
        query_from_json(text)
    }
}

/// OR of AND-groups. Flattening the groups gives back the clause sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalForm {
    pub groups: Vec<Vec<Clause>>,
}

impl NormalForm {
    pub fn clause_count(&self) -> usize {
        self.groups.iter().map(Vec::len).sum()
    }

    pub fn flatten(&self) -> impl Iterator<Item = &Clause> {
        self.groups.iter().flatten()
    }
}

#[derive(Serialize)]
struct WireQuery<'a> {
    clauses: Vec<WireClause<'a>>,
    connectors: &'a [Connector],
}

#[derive(Serialize)]
struct WireClause<'a> {
    include: bool,
    predicate: WirePredicate<'a>,
}

#[derive(Serialize)]
#[serde(tag = "type", rename_all = "lowercase")]
enum WirePredicate<'a> {
    Name { value: &'a str },
    Within { lat: f64, lon: f64, radius_km: f64 },
    Active { from_min: u16, to_min: u16 },
    Band { low_hz: u64, high_hz: u64 },
}

impl<'a> From<&'a Predicate> for WirePredicate<'a> {
    fn from(p: &'a Predicate) -> Self {
        match p {
            Predicate::NameIs(value) => WirePredicate::Name { value },
            Predicate::WithinKm { centre, radius_km } => WirePredicate::Within {
                lat: centre.lat(),
                lon: centre.lon(),
                radius_km: *radius_km,
            },
            Predicate::ActiveDuring(h) => WirePredicate::Active {
                from_min: h.from().minutes(),
                to_min: h.to().minutes(),
            },
            Predicate::BandOverlaps(b) => WirePredicate::Band {
                low_hz: b.low_hz(),
                high_hz: b.high_hz(),
            },
        }
    }
}

impl Serialize for Query {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        WireQuery {
            clauses: self
                .clauses
                .iter()
                .map(|c| WireClause {
                    include: c.include,
                    predicate: (&c.predicate).into(),
                })
                .collect(),
            connectors: &self.connectors,
        }
        .serialize(serializer)
    }
}

pub fn query_to_json(q: &Query) -> String {
    serde_json::to_string(q).expect("query serialization is infallible")
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum JsonError {
    #[error("malformed JSON: {0}")]
    MalformedJson(String),
    #[error("{path}: {message}")]
    SchemaViolation { path: String, message: String },
}

impl JsonError {
    /// Location of the offending value, `""` for malformed input.
    pub fn path(&self) -> &str {
        match self {
            JsonError::MalformedJson(_) => "",
            JsonError::SchemaViolation { path, .. } => path,
        }
    }
}

fn violation(path: impl Into<String>, message: impl Into<String>) -> JsonError {
    JsonError::SchemaViolation {
        path: path.into(),
        message: message.into(),
    }
}

pub fn query_from_json(text: &str) -> Result<Query, JsonError> {
    let value: Value =
        serde_json::from_str(text).map_err(|e| JsonError::MalformedJson(e.to_string()))?;
    query_from_value(&value)
}

pub fn query_from_value(value: &Value) -> Result<Query, JsonError> {
    let root = object(value, "")?;
    allow_keys(root, "", &["clauses", "connectors"])?;

    let clauses = root
        .get("clauses")
        .ok_or_else(|| violation("clauses", "missing"))?
        .as_array()
        .ok_or_else(|| violation("clauses", "expected an array"))?;
    if clauses.is_empty() {
        return Err(violation("clauses", "at least one clause is required"));
    }
    let clauses = clauses
        .iter()
        .enumerate()
        .map(|(i, c)| clause_from_value(c, &format!("clauses[{i}]")))
        .collect::<Result<Vec<_>, _>>()?;

    let connectors = root
        .get("connectors")
        .ok_or_else(|| violation("connectors", "missing"))?
        .as_array()
        .ok_or_else(|| violation("connectors", "expected an array"))?;
    if connectors.len() + 1 != clauses.len() {
        return Err(violation(
            "connectors",
            format!(
                "expected {} connectors for {} clauses, got {}",
                clauses.len() - 1,
                clauses.len(),
                connectors.len()
            ),
        ));
    }
    let connectors = connectors
        .iter()
        .enumerate()
        .map(|(i, c)| match c.as_str() {
            Some("and") => Ok(Connector::And),
            Some("or") => Ok(Connector::Or),
            _ => Err(violation(format!("connectors[{i}]"), "expected \"and\" or \"or\"")),
        })
        .collect::<Result<Vec<_>, _>>()?;

    Ok(Query {
        clauses,
        connectors,
    })
}

fn clause_from_value(value: &Value, path: &str) -> Result<Clause, JsonError> {
    let obj = object(value, path)?;
    allow_keys(obj, path, &["include", "predicate"])?;
    let include = match obj.get("include") {
        None => true,
        Some(Value::Bool(b)) => *b,
        Some(_) => return Err(violation(format!("{path}.include"), "expected a boolean")),
    };
    let pred_path = format!("{path}.predicate");
    let predicate = predicate_from_value(
        obj.get("predicate").ok_or_else(|| violation(&pred_path, "missing"))?,
        &pred_path,
    )?;
    Ok(Clause { include, predicate })
}

fn predicate_from_value(value: &Value, path: &str) -> Result<Predicate, JsonError> {
    let obj = object(value, path)?;
    let type_path = format!("{path}.type");
    let kind = obj
        .get("type")
        .ok_or_else(|| violation(&type_path, "missing"))?
        .as_str()
        .ok_or_else(|| violation(&type_path, "expected a string"))?;
    let field = |name: &str| {
        obj.get(name)
            .ok_or_else(|| violation(format!("{path}.{name}"), "missing"))
    };
    match kind {
        "name" => {
            allow_keys(obj, path, &["type", "value"])?;
            let value = field("value")?
                .as_str()
                .ok_or_else(|| violation(format!("{path}.value"), "expected a string"))?;
            Ok(Predicate::NameIs(value.to_string()))
        }
        "within" => {
            allow_keys(obj, path, &["type", "lat", "lon", "radius_km"])?;
            let lat = number(field("lat")?, &format!("{path}.lat"))?;
            let lon = number(field("lon")?, &format!("{path}.lon"))?;
            let radius_km = number(field("radius_km")?, &format!("{path}.radius_km"))?;
            let centre = GeoPoint::new(lat, lon).map_err(|e| {
                let key = match e {
                    ModelError::LatitudeOutOfRange(_) => "lat",
                    _ => "lon",
                };
                violation(format!("{path}.{key}"), e.to_string())
            })?;
            Predicate::within_km(centre, radius_km)
                .map_err(|e| violation(format!("{path}.radius_km"), e.to_string()))
        }
        "active" => {
            allow_keys(obj, path, &["type", "from_min", "to_min"])?;
            let from = integer(field("from_min")?, &format!("{path}.from_min"))?;
            let to = integer(field("to_min")?, &format!("{path}.to_min"))?;
            let hours = HoursOfOperation::from_minutes(
                u32::try_from(from).unwrap_or(u32::MAX),
                u32::try_from(to).unwrap_or(u32::MAX),
            )
            .map_err(|e| violation(path, e.to_string()))?;
            Ok(Predicate::ActiveDuring(hours))
        }
        "band" => {
            allow_keys(obj, path, &["type", "low_hz", "high_hz"])?;
            let low = integer(field("low_hz")?, &format!("{path}.low_hz"))?;
            let high = integer(field("high_hz")?, &format!("{path}.high_hz"))?;
            let band = FrequencyBand::from_min_max(low, high).map_err(|e| violation(path, e.to_string()))?;
            Ok(Predicate::BandOverlaps(band))
        }
        other => Err(violation(type_path, format!("unknown predicate type {other:?}"))),
    }
}

fn object<'a>(value: &'a Value, path: &str) -> Result<&'a Map<String, Value>, JsonError> {
    value
        .as_object()
        .ok_or_else(|| violation(path, "expected an object"))
}

fn allow_keys(obj: &Map<String, Value>, path: &str, allowed: &[&str]) -> Result<(), JsonError> {
    match obj.keys().find(|k| !allowed.contains(&k.as_str())) {
        None => Ok(()),
        Some(k) if path.is_empty() => Err(violation(k.as_str(), "unknown field")),
        Some(k) => Err(violation(format!("{path}.{k}"), "unknown field")),
    }
}

fn number(value: &Value, path: &str) -> Result<f64, JsonError> {
    value
        .as_f64()
        .ok_or_else(|| violation(path, "expected a number"))
}

fn integer(value: &Value, path: &str) -> Result<u64, JsonError> {
    value
        .as_u64()
        .ok_or_else(|| violation(path, "expected a non-negative integer"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn name(n: &str) -> Clause {
        Clause::include(Predicate::NameIs(n.into()))
    }

    #[test]
    fn single_name_clause_json() {
        let q = Query::single(name("Stadium"));
        assert_eq!(
            q.to_json(),
            r#"{"clauses":[{"include":true,"predicate":{"type":"name","value":"Stadium"}}],"connectors":[]}"#
        );
        assert_eq!(Query::from_json(&q.to_json()).unwrap(), q);
    }

    #[test]
    fn all_predicate_shapes_round_trip() {
        let q = Query::single(name("a"))
            .or(Clause::exclude(
                Predicate::within_km(GeoPoint::new(38.5, -90.25).unwrap(), 1.5).unwrap(),
            ))
            .and(Clause::include(Predicate::ActiveDuring(
                HoursOfOperation::from_minutes(1200, 600).unwrap(),
            )))
            .and(Clause::include(Predicate::band_around(90_000_000, 1_000_000).unwrap()));
        let json = q.to_json();
        assert!(json.contains(r#""connectors":["or","and","and"]"#), "{json}");
        assert!(json.contains(r#"{"type":"within","lat":38.5,"lon":-90.25,"radius_km":1.5}"#));
        assert!(json.contains(r#"{"type":"active","from_min":1200,"to_min":600}"#));
        assert!(json.contains(r#"{"type":"band","low_hz":89000000,"high_hz":91000000}"#));
        assert_eq!(Query::from_json(&json).unwrap(), q);
    }

    #[test]
    fn include_defaults_to_true() {
        let q = Query::from_json(r#"{"clauses":[{"predicate":{"type":"name","value":"x"}}],"connectors":[]}"#)
            .unwrap();
        assert!(q.clauses()[0].include);
    }

    fn path_of(text: &str) -> String {
        match Query::from_json(text) {
            Err(JsonError::SchemaViolation { path, .. }) => path,
            other => panic!("expected schema violation, got {other:?}"),
        }
    }

    #[test]
    fn schema_violation_paths() {
        assert_eq!(
            path_of(r#"{"clauses":[{"include":true,"predicate":{"type":"name","value":"x"}}],"connectors":["and"]}"#),
            "connectors"
        );
        assert_eq!(
            path_of(r#"{"clauses":[{"include":true,"predicate":{"type":"colour"}}],"connectors":[]}"#),
            "clauses[0].predicate.type"
        );
        assert_eq!(path_of(r#"{"clauses":[],"connectors":[]}"#), "clauses");
        assert_eq!(
            path_of(r#"{"clauses":[{"predicate":{"type":"within","lat":1,"lon":2,"radius_km":0}}],"connectors":[]}"#),
            "clauses[0].predicate.radius_km"
        );
        assert_eq!(
            path_of(r#"{"clauses":[{"predicate":{"type":"within","lat":100,"lon":2,"radius_km":1}}],"connectors":[]}"#),
            "clauses[0].predicate.lat"
        );
        assert_eq!(
            path_of(r#"{"clauses":[{"predicate":{"type":"band","low_hz":5,"high_hz":4}}],"connectors":[]}"#),
            "clauses[0].predicate"
        );
        assert_eq!(
            path_of(r#"{"clauses":[{"predicate":{"type":"active","from_min":5,"to_min":1.5}}],"connectors":[]}"#),
            "clauses[0].predicate.to_min"
        );
        assert_eq!(
            path_of(r#"{"clauses":[{"predicate":{"type":"name","value":"x","extra":1}}],"connectors":[]}"#),
            "clauses[0].predicate.extra"
        );
        assert_eq!(
            path_of(r#"{"clauses":[{"predicate":{"type":"name","value":"x"}},{"predicate":{"type":"name","value":"y"}}],"connectors":["xor"]}"#),
            "connectors[0]"
        );
        assert!(matches!(Query::from_json("{"), Err(JsonError::MalformedJson(_))));
    }

    #[test]
    fn normalize_groups_by_precedence() {
        let (c1, c2, c3) = (name("1"), name("2"), name("3"));
        let q = Query::single(c1.clone()).and(c2.clone()).or(c3.clone());
        assert_eq!(q.normalize().groups, vec![vec![c1.clone(), c2.clone()], vec![c3.clone()]]);
        let q = Query::single(c1.clone()).or(c2.clone()).or(c3.clone());
        assert_eq!(
            q.normalize().groups,
            vec![vec![c1.clone()], vec![c2.clone()], vec![c3.clone()]]
        );
        assert_eq!(Query::single(c1.clone()).normalize().groups, vec![vec![c1]]);
    }

    #[test]
    fn construction_invariants() {
        assert_eq!(Query::new(vec![], vec![]), Err(QueryError::Empty));
        assert_eq!(
            Query::new(vec![name("a")], vec![Connector::Or]),
            Err(QueryError::ConnectorCount {
                clauses: 1,
                connectors: 1
            })
        );
        let p = GeoPoint::new(0.0, 0.0).unwrap();
        assert!(Predicate::within_km(p, 0.0).is_err());
        assert!(Predicate::within_km(p, f64::NAN).is_err());
        assert!(Predicate::within_km(p, f64::INFINITY).is_err());
    }
}
