use std::io::Write;
use tunnel_blimp::harness::{run_scenario, ScenarioConfig};
use tunnel_blimp::runlog::{RunLogError, RunRecord};

fn short_run() -> RunRecord {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/scenarios/s_track_auto.toml");
    let cfg = ScenarioConfig {
        duration_limit: 15.0,
        ..ScenarioConfig::load(path).unwrap()
    };
    run_scenario(&cfg).unwrap()
}

#[test]
fn saved_runs_load_identically() {
    let run = short_run();
    assert!(!run.poses.is_empty() && !run.frames.is_empty());
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("runs/a.jsonl");
    run.save(&path).unwrap();
    assert_eq!(RunRecord::load(&path).unwrap(), run);
}

#[test]
fn torn_final_line_is_skipped() {
    let run = short_run();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("torn.jsonl");
    run.save(&path).unwrap();
    let mut f = std::fs::OpenOptions::new().append(true).open(&path).unwrap();
    write!(f, "{{\"type\":\"pose\",\"t\":1").unwrap();
    drop(f);
    assert_eq!(RunRecord::load(&path).unwrap(), run);
}

#[test]
fn corrupt_middle_line_and_missing_header_are_errors() {
    let dir = tempfile::tempdir().unwrap();
    let run = short_run();
    let path = dir.path().join("bad.jsonl");
    run.save(&path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines: Vec<&str> = text.lines().collect();
    lines.insert(2, "not json");
    std::fs::write(&path, lines.join("\n")).unwrap();
    assert!(matches!(
        RunRecord::load(&path),
        Err(RunLogError::Parse { line: 3, .. })
    ));

    let headless = dir.path().join("headless.jsonl");
    std::fs::write(&headless, text.lines().skip(1).collect::<Vec<_>>().join("\n")).unwrap();
    assert!(matches!(RunRecord::load(&headless), Err(RunLogError::MissingHeader)));
}
