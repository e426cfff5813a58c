//! The headless recovery loop: the blimp stalls at a corner, the scripted
//! supervisor sends back / turn / resume through the base station, and the
//! run finishes under autopilot.
//!
//!     cargo run --release --example corner_recovery [seed]

use std::sync::Arc;
use tunnel_blimp::harness::{run_scenario_with, RunHooks, ScenarioConfig};
use tunnel_blimp::BaseStation;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seed: u64 = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(0);
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/scenarios/corner_wedge_recovery.toml");
    let cfg = ScenarioConfig {
        seed,
        ..ScenarioConfig::load(path)?
    };
    let station = Arc::new(BaseStation::new(cfg.retransmit));
    let run = run_scenario_with(
        &cfg,
        RunHooks {
            station: Some(station.clone()),
            ..RunHooks::default()
        },
    )?;

    println!("mode changes:");
    for e in &run.mode_events {
        println!(
            "  t={:6.1}s {:?} -> {:?} at ({:.1}, {:.1})",
            e.t, e.from, e.to, e.x, e.y
        );
    }
    println!("operator commands:");
    for c in &run.commands {
        println!(
            "  #{} {:?} {:.1} for {:.1}s issued t={:.1}s: {:?} after {} transitions",
            c.id,
            c.command.kind,
            c.command.magnitude,
            c.command.duration,
            c.issued_at,
            c.status,
            c.history.len()
        );
    }
    let m = run.metrics.clone().unwrap_or_default();
    println!(
        "{}: {:.1}s, corners {} encountered = {} auto + {} recovered + {} unrecovered",
        run.termination.as_deref().unwrap_or("?"),
        m.duration,
        m.corners_encountered,
        m.corners_traversed_auto,
        m.corners_recovered,
        m.corners_unrecovered
    );
    println!("{} runs stored at the base station", station.runs().len());
    Ok(())
}
