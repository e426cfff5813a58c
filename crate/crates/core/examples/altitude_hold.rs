//! Altitude hold from a low start: the vertical PID lifts the blimp from
//! 0.2 m to the 0.6 m setpoint against a slow helium leak.
//!
//!     cargo run --example altitude_hold

use tunnel_blimp::control::{altitude_command, ControlGains, PidState};
use tunnel_blimp::geometry::{Vec2, Vec3};
use tunnel_blimp::rng::substream;
use tunnel_blimp::sensors::altimeter;
use tunnel_blimp::vehicle::{step, DynamicsParams};
use tunnel_blimp::{Actuation, BlimpState, TunnelMap, ALTITUDE_SETPOINT};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let map = TunnelMap::from_centerline(&[Vec2::new(0.0, 0.0), Vec2::new(20.0, 0.0)], 3.3, 2.5)?;
    let dynamics = DynamicsParams {
        sink_rate: 0.02,
        ..DynamicsParams::default()
    };
    let gains = ControlGains::default().altitude;
    let dt = 0.05;
    let mut state = BlimpState::at_rest(Vec3::new(5.0, 0.0, 0.2), 0.0);
    let mut pid = PidState::default();
    let mut settled_at = None;
    for k in 0..(90.0 / dt) as u64 {
        let reading = altimeter(&state, 0.01, 0.0, substream(3, "altimeter", k));
        let (u, next) = altitude_command(&reading, &gains, &pid, dt);
        pid = next;
        state = step(&state, Actuation::new(0.0, 0.0, u), &map, &dynamics, dt)?;
        let inside = (state.position.z - ALTITUDE_SETPOINT).abs() <= 0.05;
        match (inside, settled_at) {
            (true, None) => settled_at = Some(state.time),
            (false, Some(_)) => settled_at = None,
            _ => {}
        }
        if k % 100 == 99 {
            println!("t={:5.1}s z={:.3} m thrust={u:+.2}", state.time, state.position.z);
        }
    }
    match settled_at {
        Some(t) => println!("within ±5 cm of {ALTITUDE_SETPOINT} m since t={t:.1}s"),
        None => println!("not settled"),
    }
    Ok(())
}
