//! Query engine for spatial-temporal-spectral transmitter data.
//!
//! A [`Dataset`] of [`Transmitter`]s is queried with a flat chain of
//! include/exclude clauses over name, geographic radius, hours of operation
//! and frequency band. The same [`Query`] can be evaluated in memory
//! ([`eval`]), compiled to parameterized SQL ([`sql`]), written as text
//! ([`dsl`]) or JSON ([`query`]), and the dataset can be analysed for
//! spectrum gaps, interference conflicts and time coverage ([`analytics`]).
//!
//! With the default `parallel` feature the per-transmitter scans run on
//! rayon; without it every scan is sequential. [`Exec`] selects the path
//! explicitly.

pub mod analytics;
pub mod dsl;
pub mod eval;
mod exec;
pub mod geo;
pub mod ingest;
pub mod model;
pub mod query;
pub mod sql;
pub mod wire;

#[cfg(feature = "testkit")]
pub mod testkit;

pub use exec::Exec;
pub use model::{Dataset, FrequencyBand, GeoPoint, HoursOfOperation, ModelError, TimeOfDay, Transmitter};
pub use query::{Clause, Connector, Predicate, Query};
