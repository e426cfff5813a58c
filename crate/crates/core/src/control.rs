//! Altitude hold, tunnel centering, and the autonomy mode machine.

use crate::geometry::Vec2;
use crate::perception::NavState;
use crate::sensors::AltitudeReading;
use crate::telemetry::CommandKind;
use crate::vehicle::Actuation;
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;
use thiserror::Error;

/// Altitude the blimp holds during autonomous flight (m).
pub const ALTITUDE_SETPOINT: f64 = 0.6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ControlError {
    #[error("navigation state has zero confidence")]
    NoConfidence,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PidGains {
    pub kp: f64,
    pub ki: f64,
    pub kd: f64,
    /// Bound on the accumulated integral (error·s).
    pub integral_limit: f64,
    pub output_limit: f64,
}

impl PidGains {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.output_limit > 0.0 && self.output_limit <= 1.0) {
            return Err(format!("output_limit {} must lie in (0, 1]", self.output_limit));
        }
        if !(self.integral_limit >= 0.0) {
            return Err("integral_limit must be non-negative".into());
        }
        if ![self.kp, self.ki, self.kd].iter().all(|g| g.is_finite()) {
            return Err("gains must be finite".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PidState {
    pub integral: f64,
    pub prev_error: f64,
    pub initialized: bool,
    pub last_output: f64,
}

/// One PID update on `setpoint − measurement`.
///
/// The integral is clamped to ±`integral_limit`, the derivative term is
/// suppressed on the first call, and the output is clamped to
/// ±`output_limit`.
pub fn pid_step(gains: &PidGains, pid: &PidState, setpoint: f64, measurement: f64, dt: f64) -> (f64, PidState) {
    assert!(dt > 0.0, "pid_step needs dt > 0");
    let error = setpoint - measurement;
    let integral = (pid.integral + error * dt).clamp(-gains.integral_limit, gains.integral_limit);
    let derivative = if pid.initialized {
        (error - pid.prev_error) / dt
    } else {
        0.0
    };
    let raw = gains.kp * error + gains.ki * integral + gains.kd * derivative;
    let output = raw.clamp(-gains.output_limit, gains.output_limit);
    (
        output,
        PidState {
            integral,
            prev_error: error,
            initialized: true,
            last_output: output,
        },
    )
}

/// Vertical thrust to hold [`ALTITUDE_SETPOINT`]. An invalid reading repeats
/// the previous output and leaves the PID state untouched.
pub fn altitude_command(reading: &AltitudeReading, gains: &PidGains, pid: &PidState, dt: f64) -> (f64, PidState) {
    if !reading.valid {
        return (pid.last_output, *pid);
    }
    pid_step(gains, pid, ALTITUDE_SETPOINT, reading.altitude, dt)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CenteringParams {
    /// Symmetric forward thrust when nothing is ahead.
    pub cruise: f64,
    /// Front-wall distance where slowdown begins (m).
    pub slow_far: f64,
    /// Front-wall distance where forward thrust reaches zero (m).
    pub slow_near: f64,
    /// Yaw command toward an open side while a front wall is close.
    pub corner_turn: f64,
    /// Longest a corner turn may last before it is abandoned (s).
    pub turn_timeout: f64,
    /// Fraction of cruise flown straight ahead while no walls are seen.
    pub blind_cruise: f64,
}

impl Default for CenteringParams {
    fn default() -> Self {
        Self {
            cruise: 0.6,
            slow_far: 2.0,
            slow_near: 0.8,
            corner_turn: 0.6,
            turn_timeout: 12.0,
            blind_cruise: 0.5,
        }
    }
}

impl CenteringParams {
    /// Cruise scale in [0, 1] for a front wall at `distance`.
    pub fn slowdown(&self, distance: Option<f64>) -> f64 {
        match distance {
            Some(f) => ((f - self.slow_near) / (self.slow_far - self.slow_near)).clamp(0.0, 1.0),
            None => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CenteringOutput {
    pub actuation: Actuation,
    pub pid_d: PidState,
    pub pid_phi: PidState,
}

/// Differential thrust that drives `d` and `phi` to zero.
///
/// Yaw command `u` is the sum of the two loops; left thrust is `cruise − u`
/// and right thrust `cruise + u`, so positive `u` turns left. A close front
/// wall scales cruise down and, when one side is open, biases the turn toward
/// the opening.
#[allow(clippy::too_many_arguments)]
pub fn centering_command(
    nav: &NavState,
    gains_d: &PidGains,
    gains_phi: &PidGains,
    pid_d: &PidState,
    pid_phi: &PidState,
    params: &CenteringParams,
    dt: f64,
) -> Result<CenteringOutput, ControlError> {
    if !(nav.confidence > 0.0) {
        return Err(ControlError::NoConfidence);
    }
    let (u_d, pid_d) = pid_step(gains_d, pid_d, 0.0, nav.d, dt);
    let (u_phi, pid_phi) = pid_step(gains_phi, pid_phi, 0.0, nav.phi, dt);
    let scale = params.slowdown(nav.front_distance);
    let mut u = u_d + u_phi;
    if scale < 1.0 && nav.left_visible != nav.right_visible {
        let toward = if nav.left_visible { -1.0 } else { 1.0 };
        u += toward * params.corner_turn * (1.0 - scale);
    }
    let cruise = params.cruise * scale;
    Ok(CenteringOutput {
        actuation: Actuation::new(cruise - u, cruise + u, 0.0),
        pid_d,
        pid_phi,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ModeKind {
    Idle,
    Auto,
    Degraded,
    Stuck,
    Teleop,
}

impl ModeKind {
    pub const ALL: [ModeKind; 5] = [
        ModeKind::Idle,
        ModeKind::Auto,
        ModeKind::Degraded,
        ModeKind::Stuck,
        ModeKind::Teleop,
    ];

    pub fn code(self) -> u8 {
        match self {
            ModeKind::Idle => 0,
            ModeKind::Auto => 1,
            ModeKind::Degraded => 2,
            ModeKind::Stuck => 3,
            ModeKind::Teleop => 4,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Self::ALL.get(code as usize).copied()
    }

    pub fn is_autonomous(self) -> bool {
        matches!(self, ModeKind::Auto | ModeKind::Degraded)
    }
}

/// Every permitted (from, to) pair with `from != to`.
pub const MODE_EDGES: [(ModeKind, ModeKind); 11] = [
    (ModeKind::Idle, ModeKind::Auto),
    (ModeKind::Idle, ModeKind::Teleop),
    (ModeKind::Auto, ModeKind::Degraded),
    (ModeKind::Auto, ModeKind::Stuck),
    (ModeKind::Auto, ModeKind::Teleop),
    (ModeKind::Degraded, ModeKind::Auto),
    (ModeKind::Degraded, ModeKind::Stuck),
    (ModeKind::Degraded, ModeKind::Teleop),
    (ModeKind::Stuck, ModeKind::Auto),
    (ModeKind::Stuck, ModeKind::Teleop),
    (ModeKind::Teleop, ModeKind::Auto),
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    pub value: ModeKind,
    pub entered_at: f64,
    /// Start of the current autonomous stretch; progress is judged from here.
    pub autonomy_since: f64,
    /// Start of the current run of healthy perception, for re-entry hysteresis.
    pub healthy_since: Option<f64>,
    /// Perception dropped out while stuck.
    pub perception_lost: bool,
}

impl Mode {
    pub fn new(value: ModeKind, now: f64) -> Self {
        Self {
            value,
            entered_at: now,
            autonomy_since: now,
            healthy_since: None,
            perception_lost: false,
        }
    }

    fn enter(&self, value: ModeKind, now: f64) -> Self {
        let autonomy_since = if value.is_autonomous() && !self.value.is_autonomous() {
            now
        } else {
            self.autonomy_since
        };
        Self {
            value,
            entered_at: now,
            autonomy_since,
            healthy_since: None,
            perception_lost: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModeParams {
    pub stuck_window: f64,
    pub stuck_dist: f64,
    pub degraded_conf: f64,
    /// Healthy-perception time required before autonomy resumes (s).
    pub recover_hold: f64,
}

impl Default for ModeParams {
    fn default() -> Self {
        Self {
            stuck_window: 10.0,
            stuck_dist: 0.3,
            degraded_conf: 0.5,
            recover_hold: 2.0,
        }
    }
}

/// Timestamped recent horizontal positions.
#[derive(Debug, Clone, Default)]
pub struct ProgressWindow {
    samples: VecDeque<(f64, Vec2)>,
    horizon: f64,
}

impl ProgressWindow {
    pub fn new(horizon: f64) -> Self {
        Self {
            samples: VecDeque::new(),
            horizon,
        }
    }

    pub fn push(&mut self, t: f64, p: Vec2) {
        self.samples.push_back((t, p));
        while let Some(&(t0, _)) = self.samples.get(1) {
            if t - t0 >= self.horizon {
                self.samples.pop_front();
            } else {
                break;
            }
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Straight-line displacement between the latest sample and the latest
    /// sample at least `window` seconds older, counting only samples taken at
    /// or after `since`. `None` until the history spans the window.
    pub fn displacement_over(&self, window: f64, since: f64) -> Option<f64> {
        let &(t_now, p_now) = self.samples.back()?;
        let cutoff = t_now - window + 1e-9;
        self.samples
            .iter()
            .rev()
            .find(|(t, _)| *t <= cutoff)
            .filter(|(t, _)| *t >= since - 1e-9)
            .map(|(_, p)| p.distance(p_now))
    }
}

/// Advances the mode machine by one tick.
///
/// A motion or stop command moves any mode to TELEOP; `resume_auto` moves
/// TELEOP or IDLE to AUTO. Otherwise AUTO degrades on low confidence,
/// autonomous modes become STUCK when the progress window shows less than
/// `stuck_dist` of motion, DEGRADED returns to AUTO after `recover_hold`
/// seconds of healthy perception, and STUCK returns to AUTO only when
/// perception dropped out while stuck and then recovered for `recover_hold`.
pub fn mode_step(
    mode: &Mode,
    nav: &NavState,
    progress: &ProgressWindow,
    teleop_cmd: Option<CommandKind>,
    params: &ModeParams,
    now: f64,
) -> Mode {
    match teleop_cmd {
        Some(CommandKind::ResumeAuto) => {
            if matches!(mode.value, ModeKind::Teleop | ModeKind::Idle) {
                return mode.enter(ModeKind::Auto, now);
            }
        }
        Some(_) => {
            if mode.value == ModeKind::Teleop {
                return *mode;
            }
            return mode.enter(ModeKind::Teleop, now);
        }
        None => {}
    }

    let healthy = nav.confidence >= params.degraded_conf;
    let stuck = || {
        progress
            .displacement_over(params.stuck_window, mode.autonomy_since)
            .is_some_and(|d| d < params.stuck_dist)
    };
    let hold = |since: Option<f64>| {
        let since = since.unwrap_or(now);
        (now - since + 1e-9 >= params.recover_hold, Some(since))
    };

    match mode.value {
        ModeKind::Idle | ModeKind::Teleop => *mode,
        ModeKind::Auto => {
            if stuck() {
                mode.enter(ModeKind::Stuck, now)
            } else if !healthy {
                mode.enter(ModeKind::Degraded, now)
            } else {
                *mode
            }
        }
        ModeKind::Degraded => {
            if stuck() {
                mode.enter(ModeKind::Stuck, now)
            } else if healthy {
                let (done, since) = hold(mode.healthy_since);
                if done {
                    mode.enter(ModeKind::Auto, now)
                } else {
                    Mode {
                        healthy_since: since,
                        ..*mode
                    }
                }
            } else {
                Mode {
                    healthy_since: None,
                    ..*mode
                }
            }
        }
        ModeKind::Stuck => {
            if !healthy {
                Mode {
                    perception_lost: true,
                    healthy_since: None,
                    ..*mode
                }
            } else if mode.perception_lost {
                let (done, since) = hold(mode.healthy_since);
                if done {
                    let mut next = mode.enter(ModeKind::Auto, now);
                    next.autonomy_since = now;
                    next
                } else {
                    Mode {
                        healthy_since: since,
                        ..*mode
                    }
                }
            } else {
                *mode
            }
        }
    }
}

/// Horizontal/vertical thrust for a teleop pulse.
pub fn teleop_actuation(kind: CommandKind, magnitude: f64) -> Actuation {
    let m = magnitude.clamp(0.0, 1.0);
    match kind {
        CommandKind::Forward => Actuation::new(m, m, 0.0),
        CommandKind::Backward => Actuation::new(-m, -m, 0.0),
        CommandKind::TurnLeft => Actuation::new(-m, m, 0.0),
        CommandKind::TurnRight => Actuation::new(m, -m, 0.0),
        CommandKind::Up => Actuation::new(0.0, 0.0, m),
        CommandKind::Down => Actuation::new(0.0, 0.0, -m),
        CommandKind::Stop | CommandKind::ResumeAuto => Actuation::ZERO,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ControlGains {
    pub altitude: PidGains,
    pub lateral: PidGains,
    pub heading: PidGains,
}

impl Default for ControlGains {
    fn default() -> Self {
        Self {
            altitude: PidGains {
                kp: 1.2,
                ki: 0.15,
                kd: 1.6,
                integral_limit: 2.0,
                output_limit: 1.0,
            },
            lateral: PidGains {
                kp: 0.25,
                ki: 0.0,
                kd: 0.3,
                integral_limit: 1.0,
                output_limit: 0.35,
            },
            heading: PidGains {
                kp: 0.9,
                ki: 0.0,
                kd: 0.4,
                integral_limit: 1.0,
                output_limit: 0.6,
            },
        }
    }
}

/// Autonomous steering with a little memory for corners.
///
/// Near a turn the forward scan loses sight of the side walls, one after the
/// other. The autopilot remembers which side dropped out first while a front
/// wall was in view and, once that wall is within the slowdown zone, commits
/// to a turn toward the opening. The turn ends when both walls of the new leg
/// are in view. Outside turns it centers with [`centering_command`]; with no
/// walls at all it flies straight at reduced cruise.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Autopilot {
    pub pid_d: PidState,
    pub pid_phi: PidState,
    /// +1 for left, −1 for right.
    pub open_side: Option<f64>,
    /// Direction and start time of the turn in progress.
    pub turning: Option<(f64, f64)>,
}

impl Autopilot {
    pub fn reset(&mut self) {
        *self = Self::default();
    }

    pub fn command(
        &mut self,
        nav: &NavState,
        gains: &ControlGains,
        params: &CenteringParams,
        now: f64,
        dt: f64,
    ) -> Actuation {
        let both = nav.left_visible && nav.right_visible;
        if both {
            self.open_side = None;
            self.turning = None;
        } else if nav.front_distance.is_some() && nav.left_visible != nav.right_visible {
            self.open_side = Some(if nav.left_visible { -1.0 } else { 1.0 });
        }
        if self.turning.is_some_and(|(_, since)| now - since > params.turn_timeout) {
            self.turning = None;
            self.open_side = None;
        }
        let front_close = nav.front_distance.is_some_and(|f| f < params.slow_far);
        if self.turning.is_none() && front_close {
            if let Some(dir) = self.open_side {
                self.turning = Some((dir, now));
            }
        }
        if let Some((dir, _)) = self.turning {
            let fwd = params.cruise * params.slowdown(nav.front_distance);
            let u = dir * params.corner_turn;
            return Actuation::new(fwd - u, fwd + u, 0.0);
        }
        match centering_command(
            nav,
            &gains.lateral,
            &gains.heading,
            &self.pid_d,
            &self.pid_phi,
            params,
            dt,
        ) {
            Ok(out) => {
                self.pid_d = out.pid_d;
                self.pid_phi = out.pid_phi;
                out.actuation
            }
            Err(ControlError::NoConfidence) => {
                let fwd = params.cruise * params.blind_cruise * params.slowdown(nav.front_distance);
                Actuation::new(fwd, fwd, 0.0)
            }
        }
    }
}
