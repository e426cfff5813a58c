use clap::Parser;
use tunnel_blimp_server::cli::{load_run, parse_seeds, run, Cli};

fn scenario(name: &str) -> String {
    format!("{}/../core/scenarios/{name}.toml", env!("CARGO_MANIFEST_DIR"))
}

#[test]
fn seed_lists_and_ranges() {
    assert_eq!(parse_seeds("0..3").unwrap(), [0, 1, 2]);
    assert_eq!(parse_seeds("4, 9").unwrap(), [4, 9]);
    assert!(parse_seeds("3..3").is_err());
    assert!(parse_seeds("x").is_err());
}

#[test]
fn run_then_metrics_then_batch() {
    let dir = tempfile::tempdir().unwrap();
    let runs = dir.path().join("runs");
    let runs_arg = runs.to_str().unwrap();
    let cfg = scenario("s_track_rc");
    run(Cli::parse_from([
        "tunnel-blimp",
        "--runs-dir",
        runs_arg,
        "run",
        "--config",
        &cfg,
        "--seed",
        "2",
    ]))
    .unwrap();
    let record = load_run(&runs, "rc-s2").unwrap();
    assert_eq!(record.termination.as_deref(), Some("track_end"));
    run(Cli::parse_from([
        "tunnel-blimp",
        "--runs-dir",
        runs_arg,
        "metrics",
        "--run",
        "rc-s2",
        "--config",
        &cfg,
    ]))
    .unwrap();

    let out = dir.path().join("tables/table.txt");
    run(Cli::parse_from([
        "tunnel-blimp",
        "batch",
        "--configs",
        &cfg,
        "--seeds",
        "0,1",
        "--out",
        out.to_str().unwrap(),
    ]))
    .unwrap();
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.lines().nth(2).unwrap().starts_with("rc"));
    let csv = std::fs::read_to_string(out.with_extension("csv")).unwrap();
    assert_eq!(csv.lines().count(), 2);
}

#[test]
fn replay_feeds_a_fresh_station() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("short.jsonl");
    let cfg = tunnel_blimp::harness::ScenarioConfig {
        duration_limit: 10.0,
        ..tunnel_blimp::harness::ScenarioConfig::s_track("short")
    };
    let record = tunnel_blimp::run_scenario(&cfg).unwrap();
    record.save(&path).unwrap();
    let station = tunnel_blimp::BaseStation::default();
    tunnel_blimp_server::cli::replay(&record, &station, 1000.0);
    let replayed = station.run("short-s0-replay").unwrap();
    assert_eq!(replayed.frames.len(), record.frames.len());
    assert_eq!(
        replayed.frames.iter().map(|f| &f.frame).collect::<Vec<_>>(),
        record.frames.iter().map(|f| &f.frame).collect::<Vec<_>>()
    );
}
