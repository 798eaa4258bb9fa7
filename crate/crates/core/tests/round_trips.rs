use stsq_core::dsl::{parse, print};
use stsq_core::ingest::{export_csv, import_csv};
use stsq_core::testkit::{random_wide_dataset, random_wide_query, rng};
use stsq_core::Query;

#[test]
fn dsl_print_then_parse_is_identity() {
    let mut rng = rng(31);
    for _ in 0..1000 {
        let q = random_wide_query(&mut rng);
        let text = print(&q);
        assert_eq!(parse(&text).as_ref(), Ok(&q), "{text}");
    }
}

#[test]
fn json_encode_then_decode_is_identity() {
    let mut rng = rng(32);
    for _ in 0..1000 {
        let q = random_wide_query(&mut rng);
        let json = q.to_json();
        assert_eq!(Query::from_json(&json).as_ref(), Ok(&q), "{json}");
    }
}

#[test]
fn csv_export_then_import_is_identity() {
    let mut rng = rng(33);
    for _ in 0..1000 {
        let d = random_wide_dataset(&mut rng, 8);
        let csv = export_csv(&d);
        let (back, report) = import_csv(&csv).unwrap();
        assert!(report.is_clean(), "{report:?}\n{csv}");
        assert_eq!(back, d, "{csv}");
        assert_eq!(export_csv(&back), csv);
    }
}
