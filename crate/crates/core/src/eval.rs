//! In-memory query evaluation. This is the reference semantics that the
//! SQL path is checked against.
//!
//! A spatial predicate over a transmitter with no location is *unknown*,
//! and an unknown clause is false whether the clause includes or excludes.
//! Excluding a radius therefore never selects a transmitter whose position
//! is missing.

use crate::exec::Exec;
use crate::geo::haversine_km;
use crate::model::{Dataset, Transmitter};
use crate::query::{Clause, NormalForm, Predicate, Query};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    True,
    False,
    Unknown,
}

impl From<bool> for Outcome {
    fn from(b: bool) -> Self {
        if b {
            Outcome::True
        } else {
            Outcome::False
        }
    }
}

pub fn eval_predicate(p: &Predicate, t: &Transmitter) -> Outcome {
    match p {
        Predicate::NameIs(name) => (t.name() == name).into(),
        Predicate::WithinKm { centre, radius_km } => match t.location() {
            Some(loc) => (haversine_km(*centre, loc) <= *radius_km).into(),
            None => Outcome::Unknown,
        },
        Predicate::ActiveDuring(hours) => t.hours().overlaps(hours).into(),
        Predicate::BandOverlaps(band) => t.band().overlaps(band).into(),
    }
}

pub fn eval_clause(c: &Clause, t: &Transmitter) -> bool {
    matches!(
        (eval_predicate(&c.predicate, t), c.include),
        (Outcome::True, true) | (Outcome::False, false)
    )
}

/// True iff some AND-group has every clause true.
pub fn eval_normal_form(nf: &NormalForm, t: &Transmitter) -> bool {
    nf.groups
        .iter()
        .any(|group| group.iter().all(|c| eval_clause(c, t)))
}

/// Matching transmitters in name order.
pub fn evaluate<'d>(q: &Query, d: &'d Dataset) -> Vec<&'d Transmitter> {
    evaluate_with(q, d, Exec::default())
}

pub fn evaluate_with<'d>(q: &Query, d: &'d Dataset, exec: Exec) -> Vec<&'d Transmitter> {
    let nf = q.normalize();
    // Dataset order is name order and the filter preserves it.
    exec.filter(d.as_slice(), |t| eval_normal_form(&nf, t))
}
