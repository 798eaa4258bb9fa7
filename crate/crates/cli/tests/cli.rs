use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::Arc;

use axum::body::Body;
use axum::http::{header, Request};
use http_body_util::BodyExt;
use stsq_cli::corpus::CorpusFile;
use stsq_core::dsl::parse;
use stsq_core::ingest::export_csv;
use stsq_core::testkit::{sample, SAMPLE_CSV};
use stsq_service::{router, AppState};
use tower::ServiceExt;

fn repo(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..").join(rel)
}

fn sample_path() -> String {
    repo("data/sample.csv").display().to_string()
}

fn stsq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stsq")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn service_body(method: &str, uri: &str, body: String) -> String {
    let runtime = tokio::runtime::Runtime::new().unwrap();
    runtime.block_on(async {
        let app = router(Arc::new(AppState::new(sample())), None).unwrap();
        let request = Request::builder()
            .method(method)
            .uri(uri)
            .header(header::CONTENT_TYPE, "application/json")
            .body(Body::from(body))
            .unwrap();
        let response = app.oneshot(request).await.unwrap();
        let bytes = response.into_body().collect().await.unwrap().to_bytes();
        String::from_utf8(bytes.to_vec()).unwrap()
    })
}

#[test]
fn query_prints_table_then_sql() {
    let o = stsq(&["query", "--data", &sample_path(), "active 01:00..04:00"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    let lines: Vec<&str> = out.lines().collect();
    assert!(lines[0].starts_with("name  "));
    assert!(lines[2].starts_with("International Aeronautical Distress  NULL  "));
    assert_eq!(lines[5], "(4 rows)");
    assert!(lines[7].starts_with("SELECT name, latitude"));
    assert_eq!(lines[8], "-- params: [60, 240]");
}

#[test]
fn empty_result_is_a_header_only_table() {
    let o = stsq(&["query", "--data", &sample_path(), "freq 90MHz +/- 1MHz"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert_eq!(out.lines().nth(1), Some("(0 rows)"));
}

#[test]
fn parse_errors_exit_2_with_offset() {
    let o = stsq(&["query", "--data", &sample_path(), "freq 90MHz..banana"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("offset 12"), "{}", stderr(&o));
}

#[test]
fn sql_only_golden_line() {
    let o = stsq(&["query", "--data", &sample_path(), "--sql-only", "name = \"Stadium\""]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(
        stdout(&o),
        "SELECT name, latitude, longitude, hours_from_min, hours_to_min, freq_low_hz, freq_high_hz \
         FROM transmitters WHERE (name = $1) ORDER BY name ASC\n-- params: [\"Stadium\"]\n"
    );
}

#[test]
fn json_output_is_the_service_body() {
    let data = sample_path();
    for dsl in ["active 01:00..04:00", "not within 5 km of (38.6269, 90.199336) or name = \"Stadium\""] {
        let cli = stdout(&stsq(&["query", "--data", &data, "--json", dsl]));
        assert_eq!(cli, service_body("POST", "/api/query", parse(dsl).unwrap().to_json()));
    }
    let cli = stdout(&stsq(&[
        "gaps", "--data", &data, "--window", "25MHz..35MHz", "--hours", "03:00..08:00", "--json",
    ]));
    let body = r#"{"window":{"low_hz":25000000,"high_hz":35000000},"during":{"from_min":180,"to_min":480}}"#;
    assert_eq!(cli, service_body("POST", "/api/gaps", body.into()));

    let cli = stdout(&stsq(&["conflicts", "--data", &data, "--radius", "50", "--json"]));
    assert_eq!(cli, service_body("POST", "/api/conflicts", r#"{"radius_km":50}"#.into()));

    let cli = stdout(&stsq(&[
        "times", "--data", &data, "--at", "38.629311,-90.235192", "--radius", "10", "--json",
    ]));
    let body = r#"{"lat":38.629311,"lon":-90.235192,"radius_km":10}"#;
    assert_eq!(cli, service_body("POST", "/api/active-times", body.into()));
}

#[test]
fn analytics_text_output() {
    let data = sample_path();
    let o = stsq(&["gaps", "--data", &data, "--window", "25MHz..35MHz", "--hours", "03:00..08:00"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("25000000  25998999"));
    assert!(out.contains("26001001  35000000"));
    assert!(out.ends_with("(2 gaps)\n"));

    let o = stsq(&["conflicts", "--data", &data, "--radius", "50"]);
    assert!(stdout(&o).ends_with("(0 conflicts)\n"));

    let o = stsq(&["times", "--data", &data, "--at", "38.669961,-90.119369", "--radius", "20"]);
    assert_eq!(stdout(&o), "00:00-24:00\n");
}

#[test]
fn empty_dataset_gaps_cover_the_window() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.csv");
    std::fs::write(&empty, stsq_core::ingest::HEADER.join(",") + "\n").unwrap();
    let o = stsq(&[
        "gaps", "--data", empty.to_str().unwrap(), "--window", "1kHz..2kHz", "--hours", "00:00..24:00", "--json",
    ]);
    assert_eq!(
        stdout(&o),
        r#"{"window":{"low_hz":1000,"high_hz":2000},"gaps":[{"low_hz":1000,"high_hz":2000}]}"#
    );
}

#[test]
fn invalid_flag_values_exit_2() {
    let data = sample_path();
    for args in [
        vec!["gaps", "--data", &data, "--window", "35MHz..25MHz", "--hours", "03:00..08:00"],
        vec!["gaps", "--data", &data, "--window", "25MHz..35MHz", "--hours", "3am..8am"],
        vec!["conflicts", "--data", &data, "--radius", "0"],
        vec!["times", "--data", &data, "--at", "100,0", "--radius", "1"],
        vec!["times", "--data", &data, "--at", "0,0", "--radius", "-1"],
        vec!["frobnicate"],
    ] {
        assert_eq!(stsq(&args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn data_errors_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, format!("{SAMPLE_CSV}Broken,91,0,0:00 -- 1:00,1MHz,1kHz,,\n")).unwrap();
    let o = stsq(&["query", "--data", bad.to_str().unwrap(), "active 01:00..02:00"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("row 7 (latitude)"), "{}", stderr(&o));

    let o = stsq(&["import", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(stdout(&o), export_csv(&sample()));

    let missing = dir.path().join("missing.csv");
    assert_eq!(stsq(&["export", "--data", missing.to_str().unwrap()]).status.code(), Some(3));
}

#[test]
fn import_canonicalizes_and_export_round_trips() {
    let o = stsq(&["import", &sample_path()]);
    assert_eq!(o.status.code(), Some(0));
    let canonical = stdout(&o);
    assert_eq!(canonical.lines().count(), 7);
    assert_eq!(canonical, export_csv(&sample()));

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("canonical.csv");
    std::fs::write(&path, &canonical).unwrap();
    let out = dir.path().join("again.csv");
    let o = stsq(&["export", "--data", path.to_str().unwrap(), "-o", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(std::fs::read_to_string(out).unwrap(), canonical);
}

#[test]
fn shipped_corpus_passes() {
    let o = stsq(&["tasks", "run", "--data", &sample_path(), "--corpus", &repo("data/tasks.json").display().to_string()]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let out = stdout(&o);
    assert_eq!(out.lines().filter(|l| l.starts_with("PASS")).count(), 12);
    assert!(out.ends_with("12 tasks: 12 passed, 0 failed\n"));
}

#[test]
fn wrong_expectation_fails_that_task() {
    let mut file = CorpusFile::from_json(&std::fs::read_to_string(repo("data/tasks.json")).unwrap()).unwrap();
    file.tasks[1].expected_names = Some(vec!["Stadium".into()]);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("tasks.json");
    std::fs::write(&path, file.to_json()).unwrap();
    let o = stsq(&["tasks", "run", "--data", &sample_path(), "--corpus", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let out = stdout(&o);
    assert!(out.lines().any(|l| l.starts_with("FAIL  S2")), "{out}");
    assert_eq!(out.lines().filter(|l| l.starts_with("PASS")).count(), 11);
}

#[test]
fn empty_and_malformed_corpora() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.json");
    std::fs::write(&empty, r#"{"tasks":[]}"#).unwrap();
    let o = stsq(&["tasks", "run", "--data", &sample_path(), "--corpus", empty.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "0 tasks: 0 passed, 0 failed\n");

    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"tasks":[{"id":"x","dsl":"within","expected_names":[]}]}"#).unwrap();
    let o = stsq(&["tasks", "run", "--data", &sample_path(), "--corpus", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn serve_on_busy_port_exits_1() {
    let busy = std::net::TcpListener::bind("0.0.0.0:0").unwrap();
    let port = busy.local_addr().unwrap().port().to_string();
    let o = stsq(&["serve", "--port", &port, "--data", &sample_path()]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    assert!(stderr(&o).contains("cannot bind"));
}

/// Statements emitted for the corpus queries, pinned. Refresh with
/// `STSQ_BLESS=1` after an intentional change to the emitter.
#[test]
fn corpus_sql_snapshots() {
    let file = CorpusFile::from_json(&std::fs::read_to_string(repo("data/tasks.json")).unwrap()).unwrap();
    let mut snapshot = String::new();
    for task in &file.tasks {
        let Some(dsl) = &task.dsl else { continue };
        let o = stsq(&["query", "--data", &sample_path(), "--sql-only", dsl]);
        assert_eq!(o.status.code(), Some(0));
        snapshot.push_str(&format!("-- {}: {}\n{}\n", task.id, dsl, stdout(&o)));
    }
    let golden = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/corpus.sql");
    if std::env::var_os("STSQ_BLESS").is_some() {
        std::fs::create_dir_all(golden.parent().unwrap()).unwrap();
        std::fs::write(&golden, &snapshot).unwrap();
    }
    assert_eq!(snapshot, std::fs::read_to_string(&golden).unwrap());
}
