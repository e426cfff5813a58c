//! The closed simulation loop.
//!
//! Each tick runs sense → perceive → mode → control → step. Once a second the
//! blimp also encodes an awareness frame and sends it over the uplink, and
//! the base station's queued commands go out over the downlink. Everything
//! random draws from named substreams of the run seed.

use super::config::{ConfigError, RunMode, ScenarioConfig};
use super::detector::simulate_detections;
use super::metrics::{compute_metrics, corner_zones, Metrics, MetricsError};
use crate::basestation::{BaseStation, BaseStationError, CommandRequest};
use crate::control::{
    altitude_command, mode_step, teleop_actuation, Autopilot, Mode, ModeKind, PidState, ProgressWindow,
};
use crate::geometry::{wrap_angle, Vec2, Vec3};
use crate::perception::{perceive, NavState};
use crate::rng::{rng_from, substream};
use crate::runlog::{ModeEvent, PoseSample, RunRecord};
use crate::sensors::{altimeter, depth_scan};
use crate::telemetry::{
    decode_ack, decode_command, deserialize_frame, encode_ack, encode_awareness, link_state_from_map, serialize_frame,
    CommandKind, CommandStatus, Direction, LinkGeometry, LinkState, LossyChannel, StateSummary, ACK_BYTES,
};
use crate::vehicle::{step, Actuation, BlimpState, VehicleError};
use crate::world::{TunnelMap, WorldError};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use std::collections::BTreeSet;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("vehicle: {0}")]
    Vehicle(#[from] VehicleError),
    #[error("map: {0}")]
    World(#[from] WorldError),
    #[error("base station: {0}")]
    Station(#[from] BaseStationError),
    #[error("metrics: {0}")]
    Metrics(#[from] MetricsError),
}

/// Midline reference points spread evenly along the track for the
/// trajectory-error metric.
pub const REFERENCE_POINTS: usize = 5;

/// Metrics of `record` measured against the map of `config`.
pub fn evaluate_run(config: &ScenarioConfig, record: &RunRecord) -> Result<Metrics, ScenarioError> {
    let map = config.build_map()?;
    Ok(compute_metrics(
        record,
        &map.reference_points(REFERENCE_POINTS),
        &corner_zones(&map),
    )?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    TrackEnd,
    DurationLimit,
    /// STUCK for longer than the configured timeout with no way out.
    Stuck,
    Cancelled,
}

impl Termination {
    pub fn as_str(self) -> &'static str {
        match self {
            Termination::TrackEnd => "track_end",
            Termination::DurationLimit => "duration_limit",
            Termination::Stuck => "unrecoverable_stuck",
            Termination::Cancelled => "cancelled",
        }
    }
}

/// Optional wiring for live runs.
#[derive(Default, Clone)]
pub struct RunHooks {
    /// Station to report into; a private one is used when absent.
    pub station: Option<Arc<BaseStation>>,
    /// Wall-clock pacing: simulated seconds per real second.
    pub realtime: Option<f64>,
    pub cancel: Option<Arc<AtomicBool>>,
    /// Run id; defaults to `<name>-s<seed>`.
    pub run_id: Option<String>,
}

/// Runs `config` to completion with a private base station.
pub fn run_scenario(config: &ScenarioConfig) -> Result<RunRecord, ScenarioError> {
    run_scenario_with(config, RunHooks::default())
}

/// The scripted operator answering STUCK frames.
#[derive(Debug, Clone, Default)]
struct Supervisor {
    attempts: u32,
    /// Step index and earliest issue time of the script in progress.
    running: Option<(usize, f64)>,
    awaiting: Option<u64>,
    /// Frames with seq at or below this were already acted on.
    handled_seq: u16,
    resume_check_after: Option<f64>,
}

impl Supervisor {
    fn tick(&mut self, cfg: &ScenarioConfig, base: &BaseStation, now: f64) -> Result<(), BaseStationError> {
        let script = &cfg.recovery;
        let latest = base.latest_frame();
        if let Some(id) = self.awaiting {
            match base.command(id).map(|c| c.status) {
                Some(CommandStatus::Delivered) => {
                    self.awaiting = None;
                    if let Some((i, _)) = self.running {
                        let done = script.steps[i];
                        let next = i + 1;
                        if next < script.steps.len() {
                            let wait = done.duration + script.steps[next].delay;
                            self.running = Some((next, now + wait));
                        } else {
                            self.running = None;
                            self.resume_check_after = Some(now + done.duration + 3.0);
                        }
                    }
                }
                Some(CommandStatus::Failed) => {
                    // Reissue the same step.
                    self.awaiting = None;
                    if let Some((i, _)) = self.running {
                        self.running = Some((i, now));
                    }
                }
                _ => return Ok(()),
            }
        }
        if let Some((i, at)) = self.running {
            if now >= at {
                let step = script.steps[i];
                let kind = match step.action.fixed_kind() {
                    Some(k) => k,
                    None => open_side(latest.as_ref().map(|f| &f.frame)),
                };
                self.awaiting = Some(base.issue_command(
                    CommandRequest {
                        kind,
                        magnitude: step.magnitude,
                        duration: step.duration,
                    },
                    now,
                )?);
            }
            return Ok(());
        }
        let Some(latest) = latest else {
            return Ok(());
        };
        if latest.frame.seq <= self.handled_seq {
            return Ok(());
        }
        match latest.frame.mode {
            ModeKind::Stuck if self.attempts < script.max_attempts && !script.steps.is_empty() => {
                self.attempts += 1;
                self.handled_seq = latest.frame.seq;
                self.resume_check_after = None;
                self.running = Some((0, now + script.reaction_time));
            }
            ModeKind::Teleop if self.resume_check_after.is_some_and(|t| now >= t) => {
                // The blimp is still waiting for a resume that never arrived.
                self.handled_seq = latest.frame.seq;
                self.resume_check_after = Some(now + 3.0);
                self.awaiting = Some(base.issue_command(
                    CommandRequest {
                        kind: CommandKind::ResumeAuto,
                        magnitude: 1.0,
                        duration: 0.0,
                    },
                    now,
                )?);
            }
            _ => {}
        }
        Ok(())
    }

    fn gave_up(&self, cfg: &ScenarioConfig) -> bool {
        self.running.is_none() && self.awaiting.is_none() && self.attempts >= cfg.recovery.max_attempts
    }
}

/// Turn toward whichever half of the frame reports longer ranges; left wins
/// ties and empty frames.
fn open_side(frame: Option<&crate::telemetry::SituationalFrame>) -> CommandKind {
    let Some(frame) = frame else {
        return CommandKind::TurnLeft;
    };
    let mean = |left: bool| {
        let r: Vec<f64> = frame
            .points
            .iter()
            .filter(|p| (p.bearing > 0.0) == left)
            .map(|p| p.range)
            .collect();
        if r.is_empty() {
            f64::INFINITY
        } else {
            r.iter().sum::<f64>() / r.len() as f64
        }
    };
    if mean(false) > mean(true) {
        CommandKind::TurnRight
    } else {
        CommandKind::TurnLeft
    }
}

/// The remote-control pilot of the scripted teleop condition.
struct Pilot {
    next_input: f64,
    pending: Vec<(f64, f64, Actuation)>,
    current: Actuation,
    current_gen: f64,
}

impl Pilot {
    fn new() -> Self {
        Self {
            next_input: 0.0,
            pending: Vec::new(),
            current: Actuation::ZERO,
            current_gen: f64::NEG_INFINITY,
        }
    }

    fn tick(&mut self, cfg: &ScenarioConfig, map: &TunnelMap, state: &BlimpState, k: u64) -> Actuation {
        let p = &cfg.pilot;
        let t = state.time;
        if t + 1e-9 >= self.next_input {
            self.next_input += p.input_period;
            let mut rng = rng_from(substream(cfg.seed, "pilot", k));
            let mut seen = state.position.xy();
            if p.perception_noise > 0.0 {
                let n = Normal::new(0.0, p.perception_noise).expect("sigma > 0");
                seen = seen + Vec2::new(n.sample(&mut rng), n.sample(&mut rng));
            }
            let station = map.centerline_frame(seen).map(|f| f.station).unwrap_or(0.0);
            let (target, _) = map.point_at_station(station + p.lookahead);
            let err = wrap_angle((target - seen).angle() - state.yaw);
            let u = (p.steer_gain * err).clamp(-0.6, 0.6);
            let throttle = p.throttle * (1.0 - err.abs() / std::f64::consts::FRAC_PI_2).clamp(0.2, 1.0);
            let delay = p.reaction_mean
                + if p.reaction_jitter > 0.0 {
                    rng.random_range(-p.reaction_jitter..=p.reaction_jitter)
                } else {
                    0.0
                };
            self.pending
                .push((t + delay.max(0.0), t, Actuation::new(throttle - u, throttle + u, 0.0)));
        }
        let mut i = 0;
        while i < self.pending.len() {
            if self.pending[i].0 <= t + 1e-9 {
                let (_, gen, act) = self.pending.swap_remove(i);
                if gen > self.current_gen {
                    self.current_gen = gen;
                    self.current = act;
                }
            } else {
                i += 1;
            }
        }
        self.current
    }
}

fn link_state(map: &TunnelMap, cfg: &ScenarioConfig, pos: Vec2) -> LinkState {
    let geometry = link_state_from_map(map, pos, cfg.link.base_position).unwrap_or(LinkGeometry {
        distance: pos.distance(cfg.link.base_position),
        accumulated_lateral: 0.0,
    });
    cfg.link.state(geometry)
}

/// Runs `config` with the given wiring and returns the finished record.
pub fn run_scenario_with(config: &ScenarioConfig, hooks: RunHooks) -> Result<RunRecord, ScenarioError> {
    config.validate()?;
    let cfg = config;
    let map = cfg.build_map()?;
    let zones = corner_zones(&map);
    let refs = map.reference_points(REFERENCE_POINTS);
    let base = hooks
        .station
        .clone()
        .unwrap_or_else(|| Arc::new(BaseStation::new(cfg.retransmit)));
    let run_id = hooks
        .run_id
        .clone()
        .unwrap_or_else(|| format!("{}-s{}", cfg.name, cfg.seed));
    base.set_clock(0.0);
    base.start_run(&run_id, &cfg.name, 0.0)?;

    let (start_xy, start_heading) = map.point_at_station(cfg.initial.station);
    let start = Vec3::new(
        cfg.initial.x.unwrap_or(start_xy.x),
        cfg.initial.y.unwrap_or(start_xy.y),
        cfg.initial.z,
    );
    let mut state = BlimpState::at_rest(start, wrap_angle(start_heading + cfg.initial.yaw_offset));
    let initial_mode = if cfg.mode == RunMode::TeleopScripted {
        ModeKind::Teleop
    } else {
        ModeKind::Auto
    };
    let mut mode = Mode::new(initial_mode, 0.0);
    let mut progress = ProgressWindow::new(cfg.mode_params.stuck_window + 1.0);
    let mut pid_alt = PidState::default();
    let mut autopilot = Autopilot::default();
    let mut last_confident: Option<NavState> = None;
    let mut pulse: Option<(Actuation, f64)> = None;
    let mut executed: BTreeSet<u16> = BTreeSet::new();
    let mut uplink = LossyChannel::new(Direction::Uplink);
    let mut downlink = LossyChannel::new(Direction::Downlink);
    let mut frame_seq: u16 = 0;
    let frame_period = 1.0 / cfg.link.frame_rate_hz;
    let mut next_frame = 0.0;
    let mut supervisor = Supervisor::default();
    let mut pilot = Pilot::new();
    let total = map.total_length();
    let mut last_station = cfg.initial.station;
    let started = Instant::now();

    let mut k: u64 = 0;
    let termination = loop {
        let t = state.time;
        base.set_clock(t);

        // sense and perceive
        let scan = depth_scan(
            &map,
            &state,
            cfg.sensors.fov,
            cfg.sensors.n_rays,
            cfg.sensors.max_range,
            cfg.sensors.depth_noise,
            substream(cfg.seed, "scan", k),
        );
        let alt = altimeter(
            &state,
            cfg.sensors.altimeter_noise,
            cfg.sensors.altimeter_dropout,
            substream(cfg.seed, "altimeter", k),
        );
        let outage = cfg.outages.iter().any(|o| t >= o.start && t < o.start + o.duration);
        let nav = if outage {
            NavState::lost(t)
        } else {
            perceive(&scan, &cfg.perception, substream(cfg.seed, "lines", k)).0
        };
        if nav.confidence >= cfg.mode_params.degraded_conf {
            last_confident = Some(nav);
        }

        // commands arriving over the downlink
        let link = link_state(&map, cfg, state.position.xy());
        let mut received = Vec::new();
        for (_, bytes) in downlink.deliver(t) {
            let Ok(cmd) = decode_command(&bytes) else {
                continue;
            };
            uplink.send(
                t,
                encode_ack(cmd.seq),
                &link,
                substream(cfg.seed, "ack", cmd.seq as u64 ^ (k << 16)),
            );
            if executed.insert(cmd.seq) {
                received.push(cmd);
            }
        }

        // mode
        progress.push(t, state.position.xy());
        let before = mode.value;
        if received.is_empty() {
            mode = mode_step(&mode, &nav, &progress, None, &cfg.mode_params, t);
        }
        for cmd in &received {
            mode = mode_step(&mode, &nav, &progress, Some(cmd.kind), &cfg.mode_params, t);
            if cmd.kind != CommandKind::ResumeAuto && mode.value == ModeKind::Teleop {
                pulse = Some((teleop_actuation(cmd.kind, cmd.magnitude), t + cmd.duration));
            }
        }
        if mode.value != before {
            if !before.is_autonomous() && mode.value.is_autonomous() {
                autopilot.reset();
            }
            if mode.value != ModeKind::Teleop {
                pulse = None;
            }
            let ev = ModeEvent {
                t,
                from: before,
                to: mode.value,
                x: state.position.x,
                y: state.position.y,
            };
            base.with_active_run(|r| r.mode_events.push(ev))?;
        }

        // control
        let (vertical, next_alt) = altitude_command(&alt, &cfg.gains.altitude, &pid_alt, cfg.dt);
        pid_alt = next_alt;
        let horizontal = match (cfg.mode, mode.value) {
            (RunMode::TeleopScripted, _) => pilot.tick(cfg, &map, &state, k),
            (_, ModeKind::Auto | ModeKind::Degraded) => autopilot.command(&nav, &cfg.gains, &cfg.centering, t, cfg.dt),
            (_, ModeKind::Teleop) => match pulse {
                Some((act, until)) if t < until => act,
                _ => Actuation::ZERO,
            },
            (_, ModeKind::Stuck | ModeKind::Idle) => Actuation::ZERO,
        };
        let act = match pulse {
            Some((p, until)) if t < until && p.thrust_vertical != 0.0 => {
                Actuation::new(horizontal.thrust_left, horizontal.thrust_right, p.thrust_vertical)
            }
            _ if mode.value == ModeKind::Idle => Actuation::ZERO,
            _ => Actuation::new(horizontal.thrust_left, horizontal.thrust_right, vertical),
        };

        // telemetry and detections, once per frame period
        if t + 1e-9 >= next_frame {
            next_frame += frame_period;
            frame_seq = frame_seq.wrapping_add(1);
            let summary = StateSummary {
                altitude: if alt.valid { alt.altitude } else { state.position.z },
                mode: mode.value,
                nav_d: last_confident.map_or(0.0, |n| n.d),
                nav_phi: last_confident.map_or(0.0, |n| n.phi),
            };
            let frame = encode_awareness(&scan, summary, frame_seq);
            if let Ok(bytes) = serialize_frame(&frame, cfg.sensors.fov) {
                uplink.send(
                    t,
                    bytes,
                    &link,
                    substream(cfg.seed, "uplink", frame_seq as u64 ^ (k << 16)),
                );
            }
            for det in simulate_detections(
                &state,
                &map,
                &cfg.detector,
                frame_period,
                substream(cfg.seed, "detector", k),
            ) {
                base.record_detection(det, frame_seq, t)?;
            }
        }

        // base station side
        for (arrival, bytes) in uplink.deliver(t) {
            if bytes.len() == ACK_BYTES {
                if let Ok(seq) = decode_ack(&bytes) {
                    base.on_ack(seq, arrival);
                }
            } else if let Ok(mut frame) = deserialize_frame(&bytes, cfg.sensors.fov) {
                frame.timestamp = arrival;
                base.ingest_frame(frame, &bytes, arrival)?;
            }
        }
        if cfg.mode == RunMode::AutoWithRecovery {
            supervisor.tick(cfg, &base, t)?;
        }
        for (cmd, bytes) in base.due_commands(t) {
            downlink.send(
                t,
                bytes,
                &link,
                substream(cfg.seed, "downlink", cmd.seq as u64 ^ (k << 16)),
            );
        }
        let mut events = uplink.take_events();
        events.extend(downlink.take_events());
        if !events.is_empty() {
            base.record_link_events(events);
        }

        // dynamics
        state = step(&state, act, &map, &cfg.dynamics, cfg.dt)?;
        k += 1;
        let station = map
            .centerline_frame(state.position.xy())
            .map(|f| f.station)
            .unwrap_or(last_station);
        last_station = station;
        let sample = PoseSample {
            t: state.time,
            x: state.position.x,
            y: state.position.y,
            z: state.position.z,
            yaw: state.yaw,
            station,
            v_forward: state.v_forward,
            collisions: state.collision_count,
            mode: mode.value,
            nav_d: nav.d,
            nav_phi: nav.phi,
            nav_confidence: nav.confidence,
            actuation: act,
        };
        base.with_active_run(|r| r.poses.push(sample))?;

        if let Some(speed) = hooks.realtime {
            let due = started + Duration::from_secs_f64(state.time / speed);
            if let Some(wait) = due.checked_duration_since(Instant::now()) {
                std::thread::sleep(wait);
            }
        }
        if hooks.cancel.as_ref().is_some_and(|c| c.load(Ordering::Relaxed)) {
            break Termination::Cancelled;
        }
        if station >= total - cfg.finish_margin {
            break Termination::TrackEnd;
        }
        if state.time >= cfg.duration_limit - 1e-9 {
            break Termination::DurationLimit;
        }
        if mode.value == ModeKind::Stuck && state.time - mode.entered_at >= cfg.stuck_timeout {
            let help_coming = cfg.mode == RunMode::AutoWithRecovery && !supervisor.gave_up(cfg);
            if !help_coming {
                break Termination::Stuck;
            }
        }
    };

    let end = state.time;
    base.set_clock(end);
    let metrics = base.with_active_run(|r| compute_metrics(r, &refs, &zones).ok())?;
    Ok(base.end_run(end, Some(termination.as_str().to_string()), metrics)?)
}
