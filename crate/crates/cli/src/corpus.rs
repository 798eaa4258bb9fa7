//! Task corpus: canned questions with expected answers over a dataset.
//!
//! ```json
//! {"tasks": [
//!   {"id": "S1", "dsl": "freq 90MHz +/- 1MHz", "expected_names": []},
//!   {"id": "S3", "kind": "gaps", "window": "25MHz..35MHz", "hours": "03:00..08:00",
//!    "expected_gaps": [{"low_hz": 25000000, "high_hz": 25998999}]},
//!   {"id": "S5", "kind": "times", "at": {"lat": 38.6, "lon": -90.2}, "radius_km": 10,
//!    "expected_intervals": [{"from_min": 300, "to_min": 1380}]}
//! ]}
//! ```
//!
//! `kind` defaults to `"query"`. `question` and `note` are free text.

use std::collections::HashSet;
use std::fmt::Write;

use serde::{Deserialize, Serialize};
use stsq_core::analytics::{active_times, find_gaps};
use stsq_core::dsl;
use stsq_core::eval::evaluate;
use stsq_core::{Dataset, FrequencyBand, GeoPoint, HoursOfOperation, Query};
use thiserror::Error;

use crate::{parse_hours_range, parse_window};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("corpus is not valid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("task {index} ({id}): {message}")]
    Task {
        index: usize,
        id: String,
        message: String,
    },
}

/// The file as stored, kept verbatim so tools can rewrite expectations
/// without disturbing the rest.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub about: Option<String>,
    pub tasks: Vec<TaskEntry>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskEntry {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub question: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dsl: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected_names: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hours: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected_gaps: Option<Vec<FrequencyBand>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub at: Option<GeoPoint>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius_km: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected_intervals: Option<Vec<HoursOfOperation>>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Check {
    Query {
        query: Query,
        expected_names: Vec<String>,
    },
    Gaps {
        window: FrequencyBand,
        during: HoursOfOperation,
        expected_gaps: Vec<FrequencyBand>,
    },
    Times {
        at: GeoPoint,
        radius_km: f64,
        expected_intervals: Vec<HoursOfOperation>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Task {
    pub id: String,
    pub check: Check,
}

impl CorpusFile {
    pub fn from_json(text: &str) -> Result<Self, CorpusError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("corpus serializes") + "\n"
    }

    /// Checks every entry: unique ids, a known kind, exactly the fields
    /// that kind needs, parsable values and sorted expected names.
    pub fn validate(&self) -> Result<Vec<Task>, CorpusError> {
        let mut seen = HashSet::new();
        self.tasks
            .iter()
            .enumerate()
            .map(|(index, entry)| {
                let fail = |message: String| CorpusError::Task {
                    index,
                    id: entry.id.clone(),
                    message,
                };
                if entry.id.is_empty() {
                    return Err(fail("id is empty".into()));
                }
                if !seen.insert(entry.id.as_str()) {
                    return Err(fail("duplicate id".into()));
                }
                entry.check().map(|check| Task {
                    id: entry.id.clone(),
                    check,
                })
                .map_err(fail)
            })
            .collect()
    }
}

fn need<'a, T>(value: &'a Option<T>, field: &str) -> Result<&'a T, String> {
    value.as_ref().ok_or_else(|| format!("missing {field:?}"))
}

fn forbid<T>(value: &Option<T>, field: &str, kind: &str) -> Result<(), String> {
    match value {
        Some(_) => Err(format!("{field:?} does not apply to kind {kind:?}")),
        None => Ok(()),
    }
}

impl TaskEntry {
    fn check(&self) -> Result<Check, String> {
        let kind = self.kind.as_deref().unwrap_or("query");
        let query_fields = |e: &Self| {
            forbid(&e.dsl, "dsl", kind)?;
            forbid(&e.expected_names, "expected_names", kind)
        };
        let gap_fields = |e: &Self| {
            forbid(&e.window, "window", kind)?;
            forbid(&e.hours, "hours", kind)?;
            forbid(&e.expected_gaps, "expected_gaps", kind)
        };
        let time_fields = |e: &Self| {
            forbid(&e.at, "at", kind)?;
            forbid(&e.radius_km, "radius_km", kind)?;
            forbid(&e.expected_intervals, "expected_intervals", kind)
        };
        match kind {
            "query" => {
                gap_fields(self)?;
                time_fields(self)?;
                let text = need(&self.dsl, "dsl")?;
                let query = dsl::parse(text).map_err(|e| format!("dsl: {e}"))?;
                let expected_names = need(&self.expected_names, "expected_names")?.clone();
                if !expected_names.windows(2).all(|w| w[0] < w[1]) {
                    return Err("expected_names must be sorted and distinct".into());
                }
                Ok(Check::Query { query, expected_names })
            }
            "gaps" => {
                query_fields(self)?;
                time_fields(self)?;
                let window = parse_window(need(&self.window, "window")?).map_err(|e| format!("window: {e}"))?;
                let during = parse_hours_range(need(&self.hours, "hours")?).map_err(|e| format!("hours: {e}"))?;
                let expected_gaps = need(&self.expected_gaps, "expected_gaps")?.clone();
                Ok(Check::Gaps {
                    window,
                    during,
                    expected_gaps,
                })
            }
            "times" => {
                query_fields(self)?;
                gap_fields(self)?;
                let at = *need(&self.at, "at")?;
                let radius_km = *need(&self.radius_km, "radius_km")?;
                if !(radius_km > 0.0 && radius_km.is_finite()) {
                    return Err("radius_km must be greater than zero".into());
                }
                let expected_intervals = need(&self.expected_intervals, "expected_intervals")?.clone();
                Ok(Check::Times {
                    at,
                    radius_km,
                    expected_intervals,
                })
            }
            other => Err(format!("unknown kind {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub id: String,
    pub passed: bool,
    /// What was asked, and on failure what came back instead.
    pub detail: String,
}

fn list<T, F: Fn(&T) -> String>(items: &[T], show: F) -> String {
    format!("[{}]", items.iter().map(show).collect::<Vec<_>>().join(", "))
}

fn band(b: &FrequencyBand) -> String {
    format!("{}..{}", b.low_hz(), b.high_hz())
}

pub fn run_task(task: &Task, d: &Dataset) -> Outcome {
    let (passed, detail) = match &task.check {
        Check::Query { query, expected_names } => {
            let got: Vec<String> = evaluate(query, d).iter().map(|t| t.name().to_string()).collect();
            let mut detail = dsl::print(query);
            if &got != expected_names {
                let _ = write!(detail, ": expected {expected_names:?}, got {got:?}");
            }
            (&got == expected_names, detail)
        }
        Check::Gaps {
            window,
            during,
            expected_gaps,
        } => {
            let got = find_gaps(d, *window, *during).gaps;
            let mut detail = format!("gaps in {} during {during}", band(window));
            if &got != expected_gaps {
                let _ = write!(detail, ": expected {}, got {}", list(expected_gaps, band), list(&got, band));
            }
            (&got == expected_gaps, detail)
        }
        Check::Times {
            at,
            radius_km,
            expected_intervals,
        } => {
            let mut detail = format!("active times within {radius_km} km of ({}, {})", at.lat(), at.lon());
            let passed = match active_times(d, *at, *radius_km) {
                Ok(c) if &c.intervals == expected_intervals => true,
                Ok(c) => {
                    let show = |h: &HoursOfOperation| h.to_string();
                    let _ = write!(
                        detail,
                        ": expected {}, got {}",
                        list(expected_intervals, show),
                        list(&c.intervals, show)
                    );
                    false
                }
                Err(e) => {
                    let _ = write!(detail, ": {e}");
                    false
                }
            };
            (passed, detail)
        }
    };
    Outcome {
        id: task.id.clone(),
        passed,
        detail,
    }
}

pub fn run(tasks: &[Task], d: &Dataset) -> Vec<Outcome> {
    tasks.iter().map(|t| run_task(t, d)).collect()
}

/// One `PASS`/`FAIL` line per task, then `N tasks: P passed, F failed`.
pub fn report(outcomes: &[Outcome]) -> String {
    let mut out = String::new();
    for o in outcomes {
        let _ = writeln!(out, "{}  {}  {}", if o.passed { "PASS" } else { "FAIL" }, o.id, o.detail);
    }
    let passed = outcomes.iter().filter(|o| o.passed).count();
    let _ = writeln!(
        out,
        "{} tasks: {} passed, {} failed",
        outcomes.len(),
        passed,
        outcomes.len() - passed
    );
    out
}
