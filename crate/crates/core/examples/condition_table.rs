//! Side-by-side comparison of remote control, windless autonomy and
//! autonomy with airflow over several seeds, as a text table and CSV.
//!
//!     cargo run --release --example condition_table [seeds]

use tunnel_blimp::batch_report;
use tunnel_blimp::harness::ScenarioConfig;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let n: u64 = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(5);
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/scenarios");
    let configs = ["s_track_rc", "s_track_auto", "s_track_airflow"]
        .iter()
        .map(|name| ScenarioConfig::load(format!("{dir}/{name}.toml")))
        .collect::<Result<Vec<_>, _>>()?;
    let seeds: Vec<u64> = (0..n).collect();
    let report = batch_report(&configs, &seeds)?;
    println!("{}", report.to_text());
    print!("{}", report.to_csv());
    Ok(())
}
