//! Delivery probability of the long-range radio along the S-track, checked
//! against a Monte Carlo count of simulated transmissions.
//!
//!     cargo run --example lossy_link [trials]

use tunnel_blimp::build_s_track;
use tunnel_blimp::rng::substream;
use tunnel_blimp::telemetry::{link_state_from_map, transmit, LinkParams, TransmitOutcome};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let trials: u64 = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(5000);
    let map = build_s_track(3.3, 40.0)?;
    let params = LinkParams::default();
    println!(
        "{:>8} {:>9} {:>9} {:>8} {:>9}",
        "station", "distance", "lateral", "model p", "observed"
    );
    for i in 0..=10 {
        let (p, _) = map.point_at_station(map.total_length() * i as f64 / 10.0);
        let geometry = link_state_from_map(&map, p, params.base_position)?;
        let link = params.state(geometry);
        let delivered = (0..trials)
            .filter(|&k| {
                matches!(
                    transmit(&[0; 30], &link, substream(1, "demo", k)),
                    TransmitOutcome::Delivered { .. }
                )
            })
            .count();
        println!(
            "{:8.1} {:9.1} {:9.1} {:8.3} {:9.3}",
            map.total_length() * i as f64 / 10.0,
            geometry.distance,
            geometry.accumulated_lateral,
            link.delivery_probability(),
            delivered as f64 / trials as f64
        );
    }
    Ok(())
}
