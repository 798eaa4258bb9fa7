//! Engine behaviour against the brute-force oracles on seeded random data.

use rand::seq::SliceRandom;
use rand::Rng;
use stsq_core::analytics::{active_times, circular_union, find_conflicts, find_gaps};
use stsq_core::eval::{eval_clause, eval_normal_form, evaluate, evaluate_with};
use stsq_core::geo::haversine_km;
use stsq_core::model::hours_overlap;
use stsq_core::sql::{emit, interpret};
use stsq_core::testkit::*;
use stsq_core::{Clause, Dataset, Exec, FrequencyBand, Query, Transmitter};

fn names(ts: &[&Transmitter]) -> Vec<String> {
    ts.iter().map(|t| t.name().to_string()).collect()
}

#[test]
fn evaluate_matches_oracle_and_sql() {
    let mut rng = rng(11);
    let shape = DatasetShape::default();
    for _ in 0..300 {
        let d = random_dataset(&mut rng, shape);
        let q = random_query(&mut rng, &d, shape);
        let fast = evaluate(&q, &d);
        assert_eq!(names(&fast), names(&evaluate_oracle(&q, &d)), "{q:?}");
        assert_eq!(fast, evaluate_with(&q, &d, Exec::Sequential));
        assert_eq!(fast, interpret(&emit(&q), &d).unwrap(), "{q:?}");
    }
}

#[test]
fn normal_form_preserves_order_and_meaning() {
    let mut rng = rng(12);
    let shape = DatasetShape::default();
    for _ in 0..300 {
        let d = random_dataset(&mut rng, shape);
        let q = random_query(&mut rng, &d, shape);
        let nf = q.normalize();
        assert_eq!(nf.clause_count(), q.clauses().len());
        assert!(nf.flatten().eq(q.clauses().iter()));
        let via_groups: Vec<&Transmitter> = d.iter().filter(|t| eval_normal_form(&nf, t)).collect();
        assert_eq!(evaluate(&q, &d), via_groups);
    }
}

#[test]
fn flipping_a_total_clause_complements_the_result() {
    let mut rng = rng(13);
    let shape = DatasetShape {
        p_missing_location: 0.0,
        ..DatasetShape::default()
    };
    for _ in 0..200 {
        let d = random_dataset(&mut rng, shape);
        let predicate = random_predicate(&mut rng, &d, shape);
        let inc = evaluate(&Query::single(Clause::include(predicate.clone())), &d);
        let exc = evaluate(&Query::single(Clause::exclude(predicate)), &d);
        assert_eq!(inc.len() + exc.len(), d.len());
        assert!(inc.iter().all(|t| !exc.contains(t)));
    }
}

#[test]
fn or_grows_and_and_shrinks() {
    let mut rng = rng(14);
    let shape = DatasetShape::default();
    for _ in 0..200 {
        let d = random_dataset(&mut rng, shape);
        let q = random_query(&mut rng, &d, shape);
        let c = Clause {
            include: rng.gen_bool(0.5),
            predicate: random_predicate(&mut rng, &d, shape),
        };
        let base = evaluate(&q, &d);
        let wider = evaluate(&q.clone().or(c.clone()), &d);
        let narrower = evaluate(&q.clone().and(c), &d);
        assert!(base.iter().all(|t| wider.contains(t)));
        assert!(narrower.iter().all(|t| base.contains(t)));
    }
}

#[test]
fn unknown_location_never_selected_by_spatial_clause() {
    let mut rng = rng(15);
    let shape = DatasetShape {
        p_missing_location: 0.5,
        ..DatasetShape::default()
    };
    for _ in 0..50 {
        let d = random_dataset(&mut rng, shape);
        let p = stsq_core::Predicate::within_km(random_point(&mut rng), 20_000.0).unwrap();
        for t in d.iter().filter(|t| t.location().is_none()) {
            assert!(!eval_clause(&Clause::include(p.clone()), t));
            assert!(!eval_clause(&Clause::exclude(p.clone()), t));
        }
    }
}

#[test]
fn hours_overlap_matches_minute_oracle() {
    let mut rng = rng(16);
    for _ in 0..2000 {
        let (a, b) = (random_hours(&mut rng), random_hours(&mut rng));
        assert_eq!(hours_overlap(&a, &b), hours_overlap_oracle(&a, &b), "{a} {b}");
    }
}

#[test]
fn band_overlap_matches_scan() {
    let mut rng = rng(17);
    for _ in 0..2000 {
        let a = random_band(&mut rng, 5_000, 2_000);
        let b = random_band(&mut rng, 5_000, 2_000);
        assert_eq!(a.overlaps(&b), band_overlap_scan(&a, &b));
        assert_eq!(a.overlaps(&b), band_overlap_oracle(&a, &b));
    }
}

#[test]
fn circular_union_matches_minute_oracle() {
    let mut rng = rng(18);
    for _ in 0..500 {
        let arcs: Vec<_> = (0..rng.gen_range(0..8)).map(|_| random_hours(&mut rng)).collect();
        let coverage = circular_union(arcs.iter().copied());
        let expected = covered_minutes(&arcs);
        for m in 0..1440u16 {
            assert_eq!(coverage.contains_minute(m), expected[m as usize], "minute {m} of {arcs:?}");
        }
        // Maximal: no two output arcs touch or overlap.
        let out = &coverage.intervals;
        assert!(out.windows(2).all(|w| w[0].from() < w[1].from()));
        for (i, a) in out.iter().enumerate() {
            for b in &out[i + 1..] {
                assert!(!hours_overlap(a, b));
                assert!(a.to() != b.from() && b.to() != a.from(), "{out:?} not maximal");
                let touches_midnight = |x: &stsq_core::HoursOfOperation, y: &stsq_core::HoursOfOperation| {
                    x.to().minutes() == 1440 && y.from().minutes() == 0
                };
                assert!(!touches_midnight(a, b) && !touches_midnight(b, a), "{out:?} not maximal");
            }
        }
    }
}

#[test]
fn gaps_partition_the_window() {
    let mut rng = rng(19);
    let shape = DatasetShape {
        max_rows: 12,
        max_band_width: 20_000,
        freq_ceiling: 200_000,
        ..DatasetShape::default()
    };
    for _ in 0..200 {
        let d = random_dataset(&mut rng, shape);
        let window = random_band(&mut rng, 200_000, 100_000);
        let during = random_hours(&mut rng);
        let report = find_gaps(&d, window, during);
        let active: Vec<FrequencyBand> = d
            .iter()
            .filter(|t| hours_overlap_oracle(&t.hours(), &during))
            .map(|t| t.band())
            .collect();
        for hz in window.low_hz()..=window.high_hz() {
            let occupied = active.iter().any(|b| b.contains_hz(hz));
            let in_gap = report.gaps.iter().any(|g| g.contains_hz(hz));
            assert_ne!(occupied, in_gap, "hz {hz}");
        }
        for g in &report.gaps {
            assert!(window.contains(g));
        }
        for w in report.gaps.windows(2) {
            assert!(w[0].high_hz() + 1 < w[1].low_hz(), "gaps must be maximal");
        }
    }
}

#[test]
fn conflicts_match_pairwise_brute_force_and_ignore_order() {
    let mut rng = rng(20);
    let shape = DatasetShape {
        max_rows: 30,
        max_band_width: 200_000,
        freq_ceiling: 2_000_000,
        spread_deg: 0.2,
        ..DatasetShape::default()
    };
    for _ in 0..100 {
        let d = random_dataset(&mut rng, shape);
        let radius = rng.gen_range(0.5..40.0);
        let report = find_conflicts(&d, radius).unwrap();
        let mut conflicts = Vec::new();
        let mut indeterminate = Vec::new();
        for a in &d {
            for b in &d {
                if a.name() >= b.name()
                    || !band_overlap_oracle(&a.band(), &b.band())
                    || !hours_overlap_oracle(&a.hours(), &b.hours())
                {
                    continue;
                }
                match (a.location(), b.location()) {
                    (Some(pa), Some(pb)) if haversine_km(pa, pb) <= radius => {
                        conflicts.push((a.name().to_string(), b.name().to_string()))
                    }
                    (Some(_), Some(_)) => {}
                    _ => indeterminate.push((a.name().to_string(), b.name().to_string())),
                }
            }
        }
        let got: Vec<_> = report.conflicts.iter().map(|c| (c.a.clone(), c.b.clone())).collect();
        let got_ind: Vec<_> = report.indeterminate.iter().map(|c| (c.a.clone(), c.b.clone())).collect();
        assert_eq!(got, conflicts);
        assert_eq!(got_ind, indeterminate);

        let mut shuffled: Vec<Transmitter> = d.iter().cloned().collect();
        shuffled.shuffle(&mut rng);
        let again = find_conflicts(&Dataset::new(shuffled).unwrap(), radius).unwrap();
        assert_eq!(again, report);
    }
}

#[test]
fn active_times_match_minute_oracle() {
    let mut rng = rng(21);
    let shape = DatasetShape {
        max_rows: 20,
        spread_deg: 0.3,
        ..DatasetShape::default()
    };
    for _ in 0..200 {
        let d = random_dataset(&mut rng, shape);
        let centre = match d.as_slice().choose(&mut rng).and_then(|t| t.location()) {
            Some(p) => jitter_point(&mut rng, p, 0.1),
            None => random_point(&mut rng),
        };
        let radius = rng.gen_range(1.0..40.0);
        let coverage = active_times(&d, centre, radius).unwrap();
        let nearby: Vec<_> = d
            .iter()
            .filter(|t| t.location().is_some_and(|p| great_circle_oracle_km(centre, p) <= radius))
            .map(|t| t.hours())
            .collect();
        let expected = covered_minutes(&nearby);
        for m in 0..1440u16 {
            assert_eq!(coverage.contains_minute(m), expected[m as usize]);
        }
    }
}

#[test]
fn emitted_sql_never_inlines_values() {
    let mut rng = rng(22);
    for _ in 0..500 {
        let q = random_wide_query(&mut rng);
        let text = emit(&q).text;
        assert!(!text.contains('\'') && !text.contains('"'), "{text}");
        // Outside placeholders, the only numbers are the distance template's.
        let mut chars = text.chars().peekable();
        while let Some(c) = chars.next() {
            if c == '$' {
                while chars.next_if(|d| d.is_ascii_digit()).is_some() {}
            } else if c.is_ascii_digit() {
                let mut literal = c.to_string();
                while let Some(d) = chars.next_if(|d| d.is_ascii_digit() || *d == '.') {
                    literal.push(d);
                }
                assert!(["1", "2", "6371.0088"].contains(&literal.as_str()), "{literal} in {text}");
            }
        }
    }
}
