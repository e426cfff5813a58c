//! Fixed-step blimp dynamics.
//!
//! The envelope is modelled as a neutrally buoyant damped rigid body with
//! three decoupled channels: forward speed and yaw rate driven by a
//! differential pair of horizontal thrusters, and vertical speed driven by the
//! vertical thrusters. Airflow zones add a velocity drift. Wall contact is
//! resolved by projecting the hull back to the wall surface and reflecting
//! the normal velocity; contacts are counted, never fatal.

use crate::geometry::{closest_on_segment, ray_segment, wrap_angle, Vec2, Vec3};
use crate::world::TunnelMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_DT: f64 = 0.05;
pub const MAX_DT: f64 = 0.1;
/// Gap below which the hull is still considered to be touching a wall (m).
const CONTACT_SKIN: f64 = 0.05;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VehicleError {
    #[error("time step {0} outside (0, {MAX_DT}]")]
    InvalidStep(f64),
    #[error("invalid dynamics parameters: {0}")]
    InvalidParams(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlimpState {
    pub position: Vec3,
    pub yaw: f64,
    pub v_forward: f64,
    pub v_vertical: f64,
    pub yaw_rate: f64,
    pub collision_count: u32,
    pub time: f64,
    /// Simulated time of the most recent wall contact.
    #[serde(default)]
    pub last_contact: Option<f64>,
}

impl BlimpState {
    pub fn at_rest(position: Vec3, yaw: f64) -> Self {
        Self {
            position,
            yaw,
            v_forward: 0.0,
            v_vertical: 0.0,
            yaw_rate: 0.0,
            collision_count: 0,
            time: 0.0,
            last_contact: None,
        }
    }

    pub fn heading(&self) -> Vec2 {
        Vec2::from_angle(self.yaw)
    }
}

/// Normalized thruster commands.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Actuation {
    pub thrust_left: f64,
    pub thrust_right: f64,
    pub thrust_vertical: f64,
}

impl Actuation {
    pub const ZERO: Actuation = Actuation {
        thrust_left: 0.0,
        thrust_right: 0.0,
        thrust_vertical: 0.0,
    };

    /// Builds an actuation with every channel clamped to [−1, 1].
    pub fn new(thrust_left: f64, thrust_right: f64, thrust_vertical: f64) -> Self {
        Self {
            thrust_left,
            thrust_right,
            thrust_vertical,
        }
        .clamped()
    }

    pub fn clamped(self) -> Self {
        let c = |v: f64| if v.is_nan() { 0.0 } else { v.clamp(-1.0, 1.0) };
        Self {
            thrust_left: c(self.thrust_left),
            thrust_right: c(self.thrust_right),
            thrust_vertical: c(self.thrust_vertical),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DynamicsParams {
    /// Forward acceleration at full symmetric thrust (m/s²).
    pub max_forward_accel: f64,
    /// Yaw acceleration at full differential thrust (rad/s²).
    pub max_yaw_accel: f64,
    /// Vertical acceleration at full vertical thrust (m/s²).
    pub max_vert_accel: f64,
    /// Forward and vertical velocity damping (1/s).
    pub linear_drag: f64,
    pub yaw_drag: f64,
    /// Fraction of the local airflow velocity added as drift.
    pub airflow_coupling: f64,
    pub restitution: f64,
    /// Constant sink speed from a slightly negative buoyancy trim (m/s).
    pub sink_rate: f64,
    /// Horizontal radius of the envelope (m).
    pub hull_radius: f64,
    /// Contact-free time required before a new contact counts as a new collision (s).
    pub collision_debounce: f64,
}

impl Default for DynamicsParams {
    fn default() -> Self {
        Self {
            max_forward_accel: 0.25,
            max_yaw_accel: 0.9,
            max_vert_accel: 0.3,
            linear_drag: 0.5,
            yaw_drag: 1.2,
            airflow_coupling: 0.4,
            restitution: 0.3,
            sink_rate: 0.0,
            hull_radius: 0.35,
            collision_debounce: 0.5,
        }
    }
}

impl DynamicsParams {
    pub fn validate(&self) -> Result<(), VehicleError> {
        let all = [
            self.max_forward_accel,
            self.max_yaw_accel,
            self.max_vert_accel,
            self.linear_drag,
            self.yaw_drag,
            self.airflow_coupling,
            self.restitution,
            self.sink_rate,
            self.hull_radius,
            self.collision_debounce,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(VehicleError::InvalidParams("non-finite value".into()));
        }
        if self.linear_drag <= 0.0 || self.yaw_drag <= 0.0 {
            return Err(VehicleError::InvalidParams("drags must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.restitution) {
            return Err(VehicleError::InvalidParams("restitution must lie in [0, 1)".into()));
        }
        if self.max_forward_accel < 0.0
            || self.max_yaw_accel < 0.0
            || self.max_vert_accel < 0.0
            || self.hull_radius < 0.0
            || self.collision_debounce < 0.0
            || self.airflow_coupling < 0.0
        {
            return Err(VehicleError::InvalidParams("negative magnitude".into()));
        }
        if self.linear_drag * MAX_DT >= 1.0 || self.yaw_drag * MAX_DT >= 1.0 {
            return Err(VehicleError::InvalidParams(format!(
                "drag too large for explicit damping at dt = {MAX_DT}"
            )));
        }
        Ok(())
    }

    /// Steady forward speed at full symmetric thrust.
    pub fn terminal_speed(&self) -> f64 {
        self.max_forward_accel / self.linear_drag
    }
}

/// Sum of the velocities of every airflow zone containing `position`.
pub fn sample_airflow(map: &TunnelMap, position: Vec3) -> Vec2 {
    let p = position.xy();
    map.airflow_zones()
        .iter()
        .filter(|z| z.region.contains(p))
        .fold(Vec2::ZERO, |acc, z| acc + z.velocity)
}

/// Advances the blimp by one semi-implicit Euler step of length `dt`.
pub fn step(
    state: &BlimpState,
    act: Actuation,
    map: &TunnelMap,
    params: &DynamicsParams,
    dt: f64,
) -> Result<BlimpState, VehicleError> {
    if !(dt > 0.0 && dt <= MAX_DT) {
        return Err(VehicleError::InvalidStep(dt));
    }
    let act = act.clamped();
    let mut next = *state;

    let yaw_cmd = 0.5 * (act.thrust_right - act.thrust_left);
    let fwd_cmd = 0.5 * (act.thrust_left + act.thrust_right);
    next.yaw_rate += dt * (params.max_yaw_accel * yaw_cmd - params.yaw_drag * state.yaw_rate);
    next.v_forward += dt * (params.max_forward_accel * fwd_cmd - params.linear_drag * state.v_forward);
    next.v_vertical += dt * (params.max_vert_accel * act.thrust_vertical - params.linear_drag * state.v_vertical);
    if next.yaw_rate != 0.0 {
        next.yaw = state.yaw + next.yaw_rate * dt;
        if next.yaw.abs() > std::f64::consts::PI {
            next.yaw = wrap_angle(next.yaw);
        }
    }

    let drift = sample_airflow(map, state.position) * params.airflow_coupling;
    let velocity = next.heading() * next.v_forward + drift;
    let old_xy = state.position.xy();
    let mut xy = old_xy + velocity * dt;

    let mut touched = false;
    if xy != old_xy {
        if let Some(hit) = first_crossing(map, old_xy, xy) {
            xy = hit;
            touched = true;
        }
    }
    let (resolved, normals) = push_out(map, xy, params.hull_radius);
    xy = resolved;
    touched |= !normals.is_empty();
    if touched {
        let mut v = next.heading() * next.v_forward;
        for n in &normals {
            let vn = v.dot(*n);
            if vn < 0.0 {
                v = v - *n * ((1.0 + params.restitution) * vn);
            }
        }
        next.v_forward = v.dot(next.heading());
    }

    let mut z = state.position.z + (next.v_vertical - params.sink_rate) * dt;
    let ceiling = map.height_at(xy);
    if z < 0.0 {
        z = 0.0;
        if next.v_vertical < 0.0 {
            next.v_vertical *= -params.restitution;
        }
    } else if z > ceiling {
        z = ceiling;
        if next.v_vertical > 0.0 {
            next.v_vertical *= -params.restitution;
        }
    }

    next.position = Vec3::new(xy.x, xy.y, z);
    next.time = state.time + dt;
    // Hovering within a hair of the wall after a bounce still counts as the
    // same contact.
    let grazing = map
        .nearest_wall(xy)
        .is_some_and(|(_, q)| q.distance(xy) < params.hull_radius + CONTACT_SKIN);
    let fresh = state
        .last_contact
        .is_none_or(|t| next.time - t >= params.collision_debounce);
    if touched && fresh {
        next.collision_count += 1;
    }
    if touched || (grazing && !fresh) {
        next.last_contact = Some(next.time);
    }
    Ok(next)
}

/// First wall crossed by the straight move `from → to`, backed off slightly
/// toward `from`.
fn first_crossing(map: &TunnelMap, from: Vec2, to: Vec2) -> Option<Vec2> {
    let delta = to - from;
    let len = delta.norm();
    let dir = delta * (1.0 / len);
    map.walls()
        .iter()
        .filter_map(|w| ray_segment(from, dir, w.a, w.b))
        .filter(|&t| t <= len)
        .min_by(f64::total_cmp)
        .map(|t| from + dir * (t - 1e-9).max(0.0))
}

/// Moves `p` out of every wall closer than `radius`, returning the contact
/// normals (pointing into free space).
fn push_out(map: &TunnelMap, mut p: Vec2, radius: f64) -> (Vec2, Vec<Vec2>) {
    let mut normals: Vec<Vec2> = Vec::new();
    for _ in 0..8 {
        let mut moved = false;
        for w in map.walls() {
            let (q, _) = closest_on_segment(p, w.a, w.b);
            let gap = p - q;
            let dist = gap.norm();
            if dist < radius - 1e-12 {
                let n = if dist > 1e-12 {
                    gap * (1.0 / dist)
                } else {
                    let perp = (w.b - w.a).perp().normalized();
                    if map.contains(p + perp * 1e-6) {
                        perp
                    } else {
                        -perp
                    }
                };
                p = q + n * radius;
                if !normals.iter().any(|m| m.dot(n) > 1.0 - 1e-9) {
                    normals.push(n);
                }
                moved = true;
            }
        }
        if !moved {
            break;
        }
    }
    (p, normals)
}
