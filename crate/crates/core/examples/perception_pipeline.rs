//! Depth slice to wall lines to ⟨d, φ⟩: places the blimp off-center and
//! yawed in a straight 3.3 m corridor and shows what each stage produces.
//!
//!     cargo run --example perception_pipeline [d0] [phi0_deg]

use tunnel_blimp::geometry::{Vec2, Vec3};
use tunnel_blimp::perception::{perceive, project_to_plane, PerceptionParams};
use tunnel_blimp::sensors::{depth_scan, SensorParams};
use tunnel_blimp::{BlimpState, TunnelMap};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let d0: f64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(0.4);
    let phi0: f64 = args
        .next()
        .map(|s| s.parse::<f64>())
        .transpose()?
        .unwrap_or(10.0)
        .to_radians();

    let map = TunnelMap::from_centerline(&[Vec2::new(0.0, 0.0), Vec2::new(30.0, 0.0)], 3.3, 2.5)?;
    let state = BlimpState::at_rest(Vec3::new(10.0, d0, 0.6), phi0);
    let sensors = SensorParams::default();
    let scan = depth_scan(&map, &state, sensors.fov, sensors.n_rays, sensors.max_range, 0.01, 7);
    let points = project_to_plane(&scan);
    println!("{} beams, {} returns", scan.len(), points.len());

    let (nav, walls) = perceive(&scan, &PerceptionParams::default(), 7);
    for w in &walls {
        println!(
            "  {:?}: length {:.2} m, foot ({:.2}, {:.2})",
            w.class,
            w.length(),
            w.foot().x,
            w.foot().y
        );
    }
    println!("truth     d = {d0:+.3} m  φ = {:+.2}°", phi0.to_degrees());
    println!(
        "estimate  d = {:+.3} m  φ = {:+.2}°  confidence {:.1}",
        nav.d,
        nav.phi.to_degrees(),
        nav.confidence
    );
    Ok(())
}
