//! Flies the windless S-track autonomously for a few seeds and prints the
//! per-run metrics.
//!
//!     cargo run --release --example s_track_autonomy [config.toml] [seeds]

use tunnel_blimp::harness::{run_scenario, ScenarioConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let path = args
        .next()
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/scenarios/s_track_auto.toml").into());
    let seeds: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(5);
    let base = ScenarioConfig::load(&path)?;
    println!("{} ({path})", base.name);
    for seed in 0..seeds {
        let cfg = ScenarioConfig { seed, ..base.clone() };
        let run = run_scenario(&cfg)?;
        let m = run.metrics.clone().unwrap_or_default();
        let last = run.poses.last().expect("at least one tick");
        println!(
            "seed {seed}: {:<20} t={:6.1}s collisions={:2} err={:.2}±{:.2} m corners auto/rec/unrec={}/{}/{} end=({:.1}, {:.1})",
            run.termination.as_deref().unwrap_or("?"),
            m.duration,
            m.collision_count,
            m.trajectory_error_mean,
            m.trajectory_error_std,
            m.corners_traversed_auto,
            m.corners_recovered,
            m.corners_unrecovered,
            last.x,
            last.y,
        );
    }
    Ok(())
}
