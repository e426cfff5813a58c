//! Situational-awareness telemetry and the constrained radio link.
//!
//! Once per second the blimp condenses its range slice into at most eight
//! points (the closest return in each of eight equal angular bins of the
//! field of view) and ships them with altitude, mode and ⟨d, φ⟩ in a fixed
//! little-endian frame of at most 36 bytes.
//!
//! Frame layout:
//!
//! | offset | size | field                                             |
//! |--------|------|---------------------------------------------------|
//! | 0      | 2    | magic `0xB17F`                                    |
//! | 2      | 2    | sequence number                                   |
//! | 4      | 1    | mode code (low 3 bits), upper bits zero           |
//! | 5      | 2    | altitude, cm, unsigned                            |
//! | 7      | 2    | d, cm, signed                                     |
//! | 9      | 2    | φ, centiradians, signed                           |
//! | 11     | 1    | point count (0–8)                                 |
//! | 12     | 3·n  | per point: u16 `bin << 13 | range_cm`, u8 bearing |
//!
//! Bearings are stored as `floor((bearing + fov/2) · 256 / fov)` and decoded
//! to the center of their cell, so decoding needs the sender's field of view.

use crate::control::ModeKind;
use crate::geometry::Vec2;
use crate::rng::rng_from;
use crate::sensors::RangeScan;
use crate::world::{TunnelMap, WorldError};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

pub const AWARENESS_BINS: usize = 8;
pub const FRAME_MAGIC: u16 = 0xB17F;
pub const FRAME_HEADER_BYTES: usize = 12;
pub const POINT_BYTES: usize = 3;
pub const MAX_FRAME_BYTES: usize = FRAME_HEADER_BYTES + AWARENESS_BINS * POINT_BYTES;
/// Largest range representable in 13 bits of centimeters (m).
pub const MAX_WIRE_RANGE: f64 = 81.91;
/// Default link data rate: a common 125 kHz LoRa setting (bps).
pub const DEFAULT_DATA_RATE_BPS: f64 = 5470.0;
pub const COMMAND_MAGIC: u16 = 0xB1C0;
pub const ACK_MAGIC: u16 = 0xB1AC;
pub const COMMAND_BYTES: usize = 7;
pub const ACK_BYTES: usize = 4;
/// Upper bound on a teleop pulse (s).
pub const MAX_COMMAND_DURATION: f64 = 10.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CodecError {
    #[error("frame has {0} points, at most 8 allowed")]
    TooManyPoints(usize),
    #[error("bin index {0} repeated or out of range")]
    BadBin(u8),
    #[error("{field} value {value} not representable")]
    OutOfRange { field: &'static str, value: f64 },
    #[error("buffer too short: {0} bytes")]
    Truncated(usize),
    #[error("bad magic {0:#06x}")]
    BadMagic(u16),
    #[error("unknown mode code {0}")]
    BadMode(u8),
    #[error("unknown command kind {0}")]
    BadCommandKind(u8),
    #[error("invalid command: {0}")]
    InvalidCommand(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FramePoint {
    pub bin_index: u8,
    pub range: f64,
    pub bearing: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SituationalFrame {
    pub seq: u16,
    /// Send time on the blimp clock. Not carried on the wire; receivers
    /// stamp arrival time separately.
    pub timestamp: f64,
    pub points: Vec<FramePoint>,
    pub altitude: f64,
    pub mode: ModeKind,
    pub nav_d: f64,
    pub nav_phi: f64,
}

impl SituationalFrame {
    pub fn wire_size(&self) -> usize {
        FRAME_HEADER_BYTES + POINT_BYTES * self.points.len()
    }
}

/// Non-scan state carried in every frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateSummary {
    pub altitude: f64,
    pub mode: ModeKind,
    pub nav_d: f64,
    pub nav_phi: f64,
}

/// Index of the awareness bin containing beam angle `angle`.
pub fn bin_of(angle: f64, fov: f64) -> usize {
    let idx = ((angle + fov / 2.0) / fov * AWARENESS_BINS as f64).floor();
    idx.clamp(0.0, (AWARENESS_BINS - 1) as f64) as usize
}

/// Closest finite return in each of eight equal bins across the field of
/// view; bins without a return are left out.
pub fn encode_awareness(scan: &RangeScan, summary: StateSummary, seq: u16) -> SituationalFrame {
    assert!(scan.fov > 0.0, "scan fov must be positive");
    let mut best: [Option<(f64, f64)>; AWARENESS_BINS] = [None; AWARENESS_BINS];
    for (angle, range) in scan.beams() {
        let Some(r) = range.filter(|r| r.is_finite()) else {
            continue;
        };
        let slot = &mut best[bin_of(angle, scan.fov)];
        if slot.is_none_or(|(cur, _)| r < cur) {
            *slot = Some((r, angle));
        }
    }
    SituationalFrame {
        seq,
        timestamp: scan.timestamp,
        points: best
            .iter()
            .enumerate()
            .filter_map(|(i, b)| {
                b.map(|(range, bearing)| FramePoint {
                    bin_index: i as u8,
                    range,
                    bearing,
                })
            })
            .collect(),
        altitude: summary.altitude,
        mode: summary.mode,
        nav_d: summary.nav_d,
        nav_phi: summary.nav_phi,
    }
}

fn quantize(field: &'static str, value: f64, scale: f64, lo: f64, hi: f64) -> Result<i64, CodecError> {
    let q = (value * scale).round();
    if !value.is_finite() || q < lo || q > hi {
        return Err(CodecError::OutOfRange { field, value });
    }
    Ok(q as i64)
}

/// Encodes a frame into its fixed wire layout.
pub fn serialize_frame(frame: &SituationalFrame, fov: f64) -> Result<Vec<u8>, CodecError> {
    if frame.points.len() > AWARENESS_BINS {
        return Err(CodecError::TooManyPoints(frame.points.len()));
    }
    let mut seen = [false; AWARENESS_BINS];
    for p in &frame.points {
        let b = p.bin_index as usize;
        if b >= AWARENESS_BINS || seen[b] {
            return Err(CodecError::BadBin(p.bin_index));
        }
        seen[b] = true;
    }
    let altitude = quantize("altitude", frame.altitude, 100.0, 0.0, u16::MAX as f64)?;
    let d = quantize("nav_d", frame.nav_d, 100.0, i16::MIN as f64, i16::MAX as f64)?;
    let phi = quantize("nav_phi", frame.nav_phi, 100.0, i16::MIN as f64, i16::MAX as f64)?;

    let mut out = Vec::with_capacity(frame.wire_size());
    out.extend_from_slice(&FRAME_MAGIC.to_le_bytes());
    out.extend_from_slice(&frame.seq.to_le_bytes());
    out.push(frame.mode.code());
    out.extend_from_slice(&(altitude as u16).to_le_bytes());
    out.extend_from_slice(&(d as i16).to_le_bytes());
    out.extend_from_slice(&(phi as i16).to_le_bytes());
    out.push(frame.points.len() as u8);
    for p in &frame.points {
        let range = quantize("range", p.range, 100.0, 0.0, 8191.0)?;
        let half = fov / 2.0;
        if !p.bearing.is_finite() || p.bearing.abs() > half + 1e-9 {
            return Err(CodecError::OutOfRange {
                field: "bearing",
                value: p.bearing,
            });
        }
        let cell = ((p.bearing + half) / fov * 256.0).floor().clamp(0.0, 255.0) as u8;
        let packed = ((p.bin_index as u16) << 13) | range as u16;
        out.extend_from_slice(&packed.to_le_bytes());
        out.push(cell);
    }
    debug_assert!(out.len() <= MAX_FRAME_BYTES);
    Ok(out)
}

fn read_u16(b: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([b[at], b[at + 1]])
}

/// Decodes a wire frame. `timestamp` is left at zero.
pub fn deserialize_frame(bytes: &[u8], fov: f64) -> Result<SituationalFrame, CodecError> {
    if bytes.len() < FRAME_HEADER_BYTES {
        return Err(CodecError::Truncated(bytes.len()));
    }
    let magic = read_u16(bytes, 0);
    if magic != FRAME_MAGIC {
        return Err(CodecError::BadMagic(magic));
    }
    let mode = ModeKind::from_code(bytes[4] & 0x07)
        .filter(|_| bytes[4] & 0xF8 == 0)
        .ok_or(CodecError::BadMode(bytes[4]))?;
    let count = bytes[11] as usize;
    if count > AWARENESS_BINS {
        return Err(CodecError::TooManyPoints(count));
    }
    if bytes.len() != FRAME_HEADER_BYTES + POINT_BYTES * count {
        return Err(CodecError::Truncated(bytes.len()));
    }
    let mut seen = [false; AWARENESS_BINS];
    let mut points = Vec::with_capacity(count);
    for k in 0..count {
        let at = FRAME_HEADER_BYTES + POINT_BYTES * k;
        let packed = read_u16(bytes, at);
        let bin = (packed >> 13) as u8;
        if seen[bin as usize] {
            return Err(CodecError::BadBin(bin));
        }
        seen[bin as usize] = true;
        points.push(FramePoint {
            bin_index: bin,
            range: (packed & 0x1FFF) as f64 / 100.0,
            bearing: -fov / 2.0 + (bytes[at + 2] as f64 + 0.5) * fov / 256.0,
        });
    }
    Ok(SituationalFrame {
        seq: read_u16(bytes, 2),
        timestamp: 0.0,
        points,
        altitude: read_u16(bytes, 5) as f64 / 100.0,
        mode,
        nav_d: i16::from_le_bytes([bytes[7], bytes[8]]) as f64 / 100.0,
        nav_phi: i16::from_le_bytes([bytes[9], bytes[10]]) as f64 / 100.0,
    })
}

/// Whether `frame_bytes` sent at `rate_hz` fits in `data_rate_bps`.
pub fn link_budget_ok(frame_bytes: usize, rate_hz: f64, data_rate_bps: f64) -> bool {
    assert!(data_rate_bps > 0.0, "data rate must be positive");
    frame_bytes as f64 * 8.0 * rate_hz <= data_rate_bps
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CommandKind {
    Forward,
    Backward,
    TurnLeft,
    TurnRight,
    Up,
    Down,
    Stop,
    ResumeAuto,
}

impl CommandKind {
    pub const ALL: [CommandKind; 8] = [
        CommandKind::Forward,
        CommandKind::Backward,
        CommandKind::TurnLeft,
        CommandKind::TurnRight,
        CommandKind::Up,
        CommandKind::Down,
        CommandKind::Stop,
        CommandKind::ResumeAuto,
    ];

    fn code(self) -> u8 {
        Self::ALL.iter().position(|&k| k == self).unwrap() as u8
    }
}

/// Operator command sent to the blimp.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Command {
    pub seq: u16,
    pub kind: CommandKind,
    pub magnitude: f64,
    pub duration: f64,
}

impl Command {
    pub fn validate(&self) -> Result<(), CodecError> {
        if !(self.magnitude > 0.0 && self.magnitude <= 1.0) {
            return Err(CodecError::InvalidCommand(format!(
                "magnitude {} must lie in (0, 1]",
                self.magnitude
            )));
        }
        if !(self.duration >= 0.0 && self.duration <= MAX_COMMAND_DURATION) {
            return Err(CodecError::InvalidCommand(format!(
                "duration {} must lie in [0, {MAX_COMMAND_DURATION}] s",
                self.duration
            )));
        }
        Ok(())
    }
}

/// 7-byte command: magic, seq, kind, magnitude/255, duration in 0.1 s.
pub fn encode_command(cmd: &Command) -> Result<Vec<u8>, CodecError> {
    cmd.validate()?;
    let mut out = Vec::with_capacity(COMMAND_BYTES);
    out.extend_from_slice(&COMMAND_MAGIC.to_le_bytes());
    out.extend_from_slice(&cmd.seq.to_le_bytes());
    out.push(cmd.kind.code());
    out.push((cmd.magnitude * 255.0).round().max(1.0) as u8);
    out.push((cmd.duration * 10.0).round() as u8);
    Ok(out)
}

pub fn decode_command(bytes: &[u8]) -> Result<Command, CodecError> {
    if bytes.len() != COMMAND_BYTES {
        return Err(CodecError::Truncated(bytes.len()));
    }
    let magic = read_u16(bytes, 0);
    if magic != COMMAND_MAGIC {
        return Err(CodecError::BadMagic(magic));
    }
    let kind = *CommandKind::ALL
        .get(bytes[4] as usize)
        .ok_or(CodecError::BadCommandKind(bytes[4]))?;
    let cmd = Command {
        seq: read_u16(bytes, 2),
        kind,
        magnitude: bytes[5] as f64 / 255.0,
        duration: bytes[6] as f64 / 10.0,
    };
    cmd.validate()?;
    Ok(cmd)
}

pub fn encode_ack(seq: u16) -> Vec<u8> {
    let mut out = ACK_MAGIC.to_le_bytes().to_vec();
    out.extend_from_slice(&seq.to_le_bytes());
    out
}

pub fn decode_ack(bytes: &[u8]) -> Result<u16, CodecError> {
    if bytes.len() != ACK_BYTES {
        return Err(CodecError::Truncated(bytes.len()));
    }
    let magic = read_u16(bytes, 0);
    if magic != ACK_MAGIC {
        return Err(CodecError::BadMagic(magic));
    }
    Ok(read_u16(bytes, 2))
}

/// Tunable radio parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LinkParams {
    pub base_success: f64,
    pub distance_decay: f64,
    pub lateral_decay: f64,
    pub latency_mean: f64,
    pub latency_jitter: f64,
    pub data_rate_bps: f64,
    pub frame_rate_hz: f64,
    /// Base station location on the track (m).
    pub base_position: Vec2,
}

impl Default for LinkParams {
    fn default() -> Self {
        Self {
            base_success: 0.98,
            distance_decay: 0.004,
            lateral_decay: 0.01,
            latency_mean: 0.25,
            latency_jitter: 0.1,
            data_rate_bps: DEFAULT_DATA_RATE_BPS,
            frame_rate_hz: 1.0,
            base_position: Vec2::new(0.5, 0.0),
        }
    }
}

impl LinkParams {
    pub fn validate(&self) -> Result<(), String> {
        if !(0.0..=1.0).contains(&self.base_success) {
            return Err("base_success must lie in [0, 1]".into());
        }
        if !(self.distance_decay >= 0.0 && self.lateral_decay >= 0.0) {
            return Err("decays must be non-negative".into());
        }
        if !(self.latency_mean >= 0.0 && self.latency_jitter >= 0.0) {
            return Err("latency must be non-negative".into());
        }
        if !(self.data_rate_bps > 0.0 && self.frame_rate_hz > 0.0) {
            return Err("data and frame rates must be positive".into());
        }
        Ok(())
    }

    pub fn state(&self, geometry: LinkGeometry) -> LinkState {
        LinkState {
            distance: geometry.distance,
            accumulated_lateral: geometry.accumulated_lateral,
            base_success: self.base_success,
            distance_decay: self.distance_decay,
            lateral_decay: self.lateral_decay,
            latency_mean: self.latency_mean,
            latency_jitter: self.latency_jitter,
            data_rate_bps: self.data_rate_bps,
        }
    }
}

/// Link conditions for one transmission.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkState {
    pub distance: f64,
    pub accumulated_lateral: f64,
    pub base_success: f64,
    pub distance_decay: f64,
    pub lateral_decay: f64,
    pub latency_mean: f64,
    pub latency_jitter: f64,
    pub data_rate_bps: f64,
}

impl LinkState {
    /// `base_success · e^(−distance_decay·distance) · e^(−lateral_decay·lateral)`
    pub fn delivery_probability(&self) -> f64 {
        (self.base_success
            * (-self.distance_decay * self.distance).exp()
            * (-self.lateral_decay * self.accumulated_lateral).exp())
        .clamp(0.0, 1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TransmitOutcome {
    Delivered { latency: f64 },
    Dropped,
}

/// Samples the fate of one packet. Latency is the mean plus uniform jitter
/// plus the payload's airtime.
pub fn transmit(payload: &[u8], link: &LinkState, rng_seed: u64) -> TransmitOutcome {
    let mut rng = rng_from(rng_seed);
    let p = link.delivery_probability();
    let u: f64 = rng.random();
    if u >= p {
        return TransmitOutcome::Dropped;
    }
    let jitter = if link.latency_jitter > 0.0 {
        rng.random_range(-link.latency_jitter..=link.latency_jitter)
    } else {
        0.0
    };
    let airtime = payload.len() as f64 * 8.0 / link.data_rate_bps;
    TransmitOutcome::Delivered {
        latency: (link.latency_mean + jitter).max(0.0) + airtime,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkGeometry {
    pub distance: f64,
    pub accumulated_lateral: f64,
}

/// Along-track distance between two positions, and the sideways distance
/// accumulated by the turns between them: for every corner in between, the
/// part of the following leg lying between the endpoints, scaled by the sine
/// of the turn angle.
pub fn link_state_from_map(map: &TunnelMap, blimp_pos: Vec2, base_pos: Vec2) -> Result<LinkGeometry, WorldError> {
    let a = map.centerline_frame(blimp_pos)?.station;
    let b = map.centerline_frame(base_pos)?.station;
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    let accumulated_lateral = map
        .corners()
        .iter()
        .filter(|c| c.station > lo && c.station < hi)
        .map(|c| {
            let leg_end = map.segment_station(c.incoming + 2);
            (hi.min(leg_end) - c.station) * c.turn_angle.sin().abs()
        })
        .fold(0.0, |acc, x| acc + x);
    Ok(LinkGeometry {
        distance: hi - lo,
        accumulated_lateral,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Uplink,
    Downlink,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinkEventKind {
    Sent,
    Dropped,
    Delivered,
}

/// One packet-level event on the link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkEvent {
    pub time: f64,
    pub direction: Direction,
    pub kind: LinkEventKind,
    pub bytes: usize,
    /// Delivery probability at send time; absent on delivery events.
    pub probability: Option<f64>,
}

/// One direction of the link: packets go in with a send time and come out
/// once their sampled latency has elapsed. Lost packets never come out.
#[derive(Debug, Clone)]
pub struct LossyChannel {
    direction: Direction,
    in_flight: BTreeMap<(u64, u64), Vec<u8>>,
    counter: u64,
    events: Vec<LinkEvent>,
}

impl LossyChannel {
    pub fn new(direction: Direction) -> Self {
        Self {
            direction,
            in_flight: BTreeMap::new(),
            counter: 0,
            events: Vec::new(),
        }
    }

    /// Queues `payload` at `now`; returns whether it will be delivered.
    pub fn send(&mut self, now: f64, payload: Vec<u8>, link: &LinkState, rng_seed: u64) -> bool {
        let p = link.delivery_probability();
        let bytes = payload.len();
        self.events.push(LinkEvent {
            time: now,
            direction: self.direction,
            kind: LinkEventKind::Sent,
            bytes,
            probability: Some(p),
        });
        match transmit(&payload, link, rng_seed) {
            TransmitOutcome::Delivered { latency } => {
                // microsecond arrival key keeps ordering exact and deterministic
                let arrival = ((now + latency) * 1e6).round() as u64;
                self.in_flight.insert((arrival, self.counter), payload);
                self.counter += 1;
                true
            }
            TransmitOutcome::Dropped => {
                self.events.push(LinkEvent {
                    time: now,
                    direction: self.direction,
                    kind: LinkEventKind::Dropped,
                    bytes,
                    probability: Some(p),
                });
                false
            }
        }
    }

    /// Packets whose arrival time is at or before `now`, in arrival order.
    pub fn deliver(&mut self, now: f64) -> Vec<(f64, Vec<u8>)> {
        let limit = (now * 1e6).round() as u64;
        let mut out = Vec::new();
        while let Some(entry) = self.in_flight.first_entry() {
            if entry.key().0 > limit {
                break;
            }
            let arrival = entry.key().0 as f64 / 1e6;
            let payload = entry.remove();
            self.events.push(LinkEvent {
                time: arrival,
                direction: self.direction,
                kind: LinkEventKind::Delivered,
                bytes: payload.len(),
                probability: None,
            });
            out.push((arrival, payload));
        }
        out
    }

    pub fn pending(&self) -> usize {
        self.in_flight.len()
    }

    pub fn take_events(&mut self) -> Vec<LinkEvent> {
        std::mem::take(&mut self.events)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CommandStatus {
    Queued,
    Sent,
    Delivered,
    Failed,
}

impl CommandStatus {
    pub fn is_terminal(self) -> bool {
        matches!(self, CommandStatus::Delivered | CommandStatus::Failed)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RetransmitPolicy {
    pub max_retransmits: u32,
    /// Time to wait for an acknowledgment before resending (s).
    pub ack_timeout: f64,
}

impl Default for RetransmitPolicy {
    fn default() -> Self {
        Self {
            max_retransmits: 3,
            ack_timeout: 1.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PendingCommand {
    pub command: Command,
    pub status: CommandStatus,
    pub attempts: u32,
    pub next_send: f64,
}

/// Acknowledged delivery with bounded retransmission.
#[derive(Debug, Clone, Default)]
pub struct RetransmitQueue {
    policy: RetransmitPolicy,
    entries: Vec<PendingCommand>,
}

impl RetransmitQueue {
    pub fn new(policy: RetransmitPolicy) -> Self {
        Self {
            policy,
            entries: Vec::new(),
        }
    }

    pub fn push(&mut self, command: Command, now: f64) {
        self.entries.push(PendingCommand {
            command,
            status: CommandStatus::Queued,
            attempts: 0,
            next_send: now,
        });
    }

    /// Commands to put on the air at `now`. Entries that used up their
    /// retransmits without an acknowledgment become `Failed`; the returned
    /// list carries `(seq, new_status)` for every status change.
    pub fn due(&mut self, now: f64) -> (Vec<Command>, Vec<(u16, CommandStatus)>) {
        let mut send = Vec::new();
        let mut changes = Vec::new();
        for e in self.entries.iter_mut().filter(|e| !e.status.is_terminal()) {
            if e.next_send > now + 1e-9 {
                continue;
            }
            if e.attempts > self.policy.max_retransmits {
                e.status = CommandStatus::Failed;
                changes.push((e.command.seq, e.status));
                continue;
            }
            e.attempts += 1;
            e.next_send = now + self.policy.ack_timeout;
            if e.status != CommandStatus::Sent {
                e.status = CommandStatus::Sent;
                changes.push((e.command.seq, e.status));
            }
            send.push(e.command);
        }
        (send, changes)
    }

    /// Marks `seq` delivered; returns true if this changed its status.
    pub fn ack(&mut self, seq: u16) -> bool {
        match self
            .entries
            .iter_mut()
            .find(|e| e.command.seq == seq && !e.status.is_terminal())
        {
            Some(e) => {
                e.status = CommandStatus::Delivered;
                true
            }
            None => false,
        }
    }

    /// Fails everything still in flight.
    pub fn abandon(&mut self) -> Vec<u16> {
        self.entries
            .iter_mut()
            .filter(|e| !e.status.is_terminal())
            .map(|e| {
                e.status = CommandStatus::Failed;
                e.command.seq
            })
            .collect()
    }

    pub fn entries(&self) -> &[PendingCommand] {
        &self.entries
    }

    pub fn is_idle(&self) -> bool {
        self.entries.iter().all(|e| e.status.is_terminal())
    }
}
