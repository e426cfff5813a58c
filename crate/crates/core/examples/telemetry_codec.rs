//! Compresses one depth slice into the 8-bin situational frame, puts it on
//! the wire and decodes it again.
//!
//!     cargo run --example telemetry_codec

use tunnel_blimp::geometry::Vec3;
use tunnel_blimp::sensors::{depth_scan, SensorParams};
use tunnel_blimp::telemetry::{
    deserialize_frame, encode_awareness, link_budget_ok, serialize_frame, StateSummary, DEFAULT_DATA_RATE_BPS,
    MAX_FRAME_BYTES,
};
use tunnel_blimp::{build_s_track, BlimpState, ModeKind};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let map = build_s_track(3.3, 7.0)?;
    // Just before the first corner, looking at the end wall.
    let state = BlimpState::at_rest(Vec3::new(5.0, -0.3, 0.6), 0.2);
    let sensors = SensorParams::default();
    let scan = depth_scan(&map, &state, sensors.fov, sensors.n_rays, sensors.max_range, 0.0, 0);
    let summary = StateSummary {
        altitude: 0.61,
        mode: ModeKind::Auto,
        nav_d: -0.3,
        nav_phi: 0.2,
    };
    let frame = encode_awareness(&scan, summary, 42);
    for p in &frame.points {
        println!(
            "bin {}: {:.2} m at {:+.1}°",
            p.bin_index,
            p.range,
            p.bearing.to_degrees()
        );
    }

    let wire = serialize_frame(&frame, sensors.fov)?;
    println!("{} bytes (max {MAX_FRAME_BYTES}): {}", wire.len(), hex::encode(&wire));
    println!(
        "1 Hz fits {DEFAULT_DATA_RATE_BPS} bit/s: {}",
        link_budget_ok(wire.len(), 1.0, DEFAULT_DATA_RATE_BPS)
    );

    let back = deserialize_frame(&wire, sensors.fov)?;
    let worst = frame
        .points
        .iter()
        .zip(&back.points)
        .map(|(a, b)| (a.range - b.range).abs())
        .fold(0.0, f64::max);
    println!(
        "decoded seq {} mode {:?}, worst range error {worst:.4} m",
        back.seq, back.mode
    );
    Ok(())
}
