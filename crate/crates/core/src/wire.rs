//! JSON bodies shared by the HTTP service and the CLI's `--json` output.
//! Both serialize these with `serde_json::to_string`, so the bytes match.

use serde::Serialize;

use crate::analytics::{ConflictReport, GapReport, TimeCoverage};
use crate::eval;
use crate::model::{Dataset, Transmitter};
use crate::query::Query;
use crate::sql::{self, SqlStatement};

#[derive(Debug, Clone, Serialize)]
pub struct TransmittersBody<'a> {
    pub transmitters: &'a [Transmitter],
}

/// Matches plus the SQL that selects the same rows.
#[derive(Debug, Clone, Serialize)]
pub struct QueryResult<'a> {
    pub matches: Vec<&'a Transmitter>,
    pub sql: SqlStatement,
}

pub fn run_query<'d>(q: &Query, d: &'d Dataset) -> QueryResult<'d> {
    QueryResult {
        matches: eval::evaluate(q, d),
        sql: sql::emit(q),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ErrorDetail {
    pub path: String,
    pub message: String,
}

/// `{"error":{"path":..,"message":..}}`, the one error shape.
#[derive(Debug, Clone, Serialize)]
pub struct ErrorBody {
    pub error: ErrorDetail,
}

impl ErrorBody {
    pub fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        ErrorBody {
            error: ErrorDetail {
                path: path.into(),
                message: message.into(),
            },
        }
    }
}

pub fn to_json<T: Serialize + ?Sized>(body: &T) -> String {
    serde_json::to_string(body).expect("response bodies serialize")
}

pub fn transmitters_json(d: &Dataset) -> String {
    to_json(&TransmittersBody {
        transmitters: d.as_slice(),
    })
}

pub fn gaps_json(report: &GapReport) -> String {
    to_json(report)
}

pub fn conflicts_json(report: &ConflictReport) -> String {
    to_json(report)
}

pub fn coverage_json(coverage: &TimeCoverage) -> String {
    to_json(coverage)
}
