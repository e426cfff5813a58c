//! Operator-side service: receives frames from the link, keeps the live
//! view, queues operator commands with acknowledged retransmission, and
//! collects artifact reports.
//!
//! All state sits behind one mutex, so the link-delivery writer and any
//! number of readers can share a `BaseStation` through an `Arc`.

use crate::geometry::Vec3;
use crate::harness::Metrics;
use crate::runlog::{ArtifactReport, CommandEntry, Detection, FrameEntry, RunRecord};
use crate::telemetry::{
    encode_command, Command, CommandKind, CommandStatus, LinkEvent, RetransmitPolicy, RetransmitQueue, SituationalFrame,
};
use crate::world::ArtifactClass;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::sync::{Mutex, MutexGuard};
use thiserror::Error;

/// Same-class reports closer than this are treated as one artifact (m).
pub const DUPLICATE_RADIUS: f64 = 5.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BaseStationError {
    #[error("no active run")]
    NoActiveRun,
    #[error("run {0} is already active")]
    RunActive(String),
    #[error("run {0} already exists")]
    DuplicateRun(String),
    #[error("command rejected: {0}")]
    InvalidCommand(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameAck {
    pub seq: u16,
    pub stale: bool,
}

/// Operator-facing command request; the station assigns the sequence number.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CommandRequest {
    pub kind: CommandKind,
    pub magnitude: f64,
    pub duration: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum DetectionOutcome {
    Reported(ArtifactReport),
    Duplicate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub run_id: String,
    pub scenario: String,
    pub active: bool,
    pub frames: usize,
    pub commands: usize,
    pub started_at: f64,
    pub ended_at: Option<f64>,
}

struct Inner {
    runs: BTreeMap<String, RunRecord>,
    active: Option<String>,
    latest: Option<FrameEntry>,
    queue: RetransmitQueue,
    next_id: u64,
    next_seq: u16,
    ids_by_seq: BTreeMap<u16, u64>,
    policy: RetransmitPolicy,
    clock: f64,
}

pub struct BaseStation {
    inner: Mutex<Inner>,
}

impl Default for BaseStation {
    fn default() -> Self {
        Self::new(RetransmitPolicy::default())
    }
}

impl BaseStation {
    pub fn new(policy: RetransmitPolicy) -> Self {
        Self {
            inner: Mutex::new(Inner {
                runs: BTreeMap::new(),
                active: None,
                latest: None,
                queue: RetransmitQueue::new(policy),
                next_id: 1,
                next_seq: 1,
                ids_by_seq: BTreeMap::new(),
                policy,
                clock: 0.0,
            }),
        }
    }

    fn lock(&self) -> MutexGuard<'_, Inner> {
        self.inner.lock().unwrap_or_else(|e| e.into_inner())
    }

    /// Simulation time as last reported by the host simulator (s).
    pub fn clock(&self) -> f64 {
        self.lock().clock
    }

    pub fn set_clock(&self, now: f64) {
        self.lock().clock = now;
    }

    /// [`issue_command`](Self::issue_command) stamped with the current clock.
    pub fn issue_command_now(&self, req: CommandRequest) -> Result<u64, BaseStationError> {
        let now = self.clock();
        self.issue_command(req, now)
    }

    pub fn start_run(&self, run_id: &str, scenario: &str, now: f64) -> Result<(), BaseStationError> {
        let mut g = self.lock();
        if let Some(active) = &g.active {
            return Err(BaseStationError::RunActive(active.clone()));
        }
        if g.runs.contains_key(run_id) {
            return Err(BaseStationError::DuplicateRun(run_id.to_string()));
        }
        g.runs.insert(run_id.to_string(), RunRecord::new(run_id, scenario, now));
        g.active = Some(run_id.to_string());
        g.latest = None;
        g.queue = RetransmitQueue::new(g.policy);
        g.ids_by_seq.clear();
        Ok(())
    }

    /// Closes the active run. Commands still awaiting acknowledgment fail.
    pub fn end_run(
        &self,
        now: f64,
        termination: Option<String>,
        metrics: Option<Metrics>,
    ) -> Result<RunRecord, BaseStationError> {
        let mut g = self.lock();
        let failed = g.queue.abandon();
        for seq in failed {
            set_status(&mut g, seq, CommandStatus::Failed, now);
        }
        let id = g.active.take().ok_or(BaseStationError::NoActiveRun)?;
        let rec = g.runs.get_mut(&id).expect("active run exists");
        rec.ended_at = Some(now);
        rec.termination = termination;
        rec.metrics = metrics;
        Ok(rec.clone())
    }

    pub fn active_run_id(&self) -> Option<String> {
        self.lock().active.clone()
    }

    /// Mutable access to the active run, for ground-truth logging by the
    /// simulator that hosts this station.
    pub fn with_active_run<R>(&self, f: impl FnOnce(&mut RunRecord) -> R) -> Result<R, BaseStationError> {
        let mut g = self.lock();
        let id = g.active.clone().ok_or(BaseStationError::NoActiveRun)?;
        Ok(f(g.runs.get_mut(&id).expect("active run exists")))
    }

    /// Stores a delivered frame. Frames whose sequence number does not advance
    /// past the latest one are kept but flagged stale and leave the live view
    /// alone.
    pub fn ingest_frame(
        &self,
        frame: SituationalFrame,
        wire: &[u8],
        received_at: f64,
    ) -> Result<FrameAck, BaseStationError> {
        let mut g = self.lock();
        let id = g.active.clone().ok_or(BaseStationError::NoActiveRun)?;
        let stale = g.latest.as_ref().is_some_and(|l| frame.seq <= l.frame.seq);
        let entry = FrameEntry {
            received_at,
            stale,
            frame,
            wire_hex: hex::encode(wire),
        };
        let ack = FrameAck {
            seq: entry.frame.seq,
            stale,
        };
        if !stale {
            g.latest = Some(entry.clone());
        }
        g.runs.get_mut(&id).expect("active run exists").frames.push(entry);
        Ok(ack)
    }

    pub fn latest_frame(&self) -> Option<FrameEntry> {
        self.lock().latest.clone()
    }

    /// Frames of run `run_id` from index `from` onward.
    pub fn frames_since(&self, run_id: &str, from: usize) -> Vec<FrameEntry> {
        self.lock()
            .runs
            .get(run_id)
            .map(|r| r.frames.iter().skip(from).cloned().collect())
            .unwrap_or_default()
    }

    /// Validates and queues an operator command; returns its id.
    pub fn issue_command(&self, req: CommandRequest, now: f64) -> Result<u64, BaseStationError> {
        let mut g = self.lock();
        let run = g.active.clone().ok_or(BaseStationError::NoActiveRun)?;
        let command = Command {
            seq: g.next_seq,
            kind: req.kind,
            magnitude: req.magnitude,
            duration: req.duration,
        };
        command
            .validate()
            .map_err(|e| BaseStationError::InvalidCommand(e.to_string()))?;
        g.next_seq = g.next_seq.wrapping_add(1).max(1);
        let id = g.next_id;
        g.next_id += 1;
        g.ids_by_seq.insert(command.seq, id);
        g.queue.push(command, now);
        g.runs
            .get_mut(&run)
            .expect("active run exists")
            .commands
            .push(CommandEntry {
                id,
                command,
                issued_at: now,
                status: CommandStatus::Queued,
                history: vec![(now, CommandStatus::Queued)],
            });
        Ok(id)
    }

    /// Encoded commands to transmit at `now`, including retransmissions.
    pub fn due_commands(&self, now: f64) -> Vec<(Command, Vec<u8>)> {
        let mut g = self.lock();
        let (send, changes) = g.queue.due(now);
        for (seq, status) in changes {
            set_status(&mut g, seq, status, now);
        }
        send.into_iter()
            .map(|c| (c, encode_command(&c).expect("validated on issue")))
            .collect()
    }

    /// Acknowledgment for command `seq` arrived.
    pub fn on_ack(&self, seq: u16, now: f64) {
        let mut g = self.lock();
        if g.queue.ack(seq) {
            set_status(&mut g, seq, CommandStatus::Delivered, now);
        }
    }

    pub fn command(&self, id: u64) -> Option<CommandEntry> {
        let g = self.lock();
        g.runs
            .values()
            .flat_map(|r| r.commands.iter())
            .find(|c| c.id == id)
            .cloned()
    }

    pub fn commands_settled(&self) -> bool {
        self.lock().queue.is_idle()
    }

    pub fn record_link_events(&self, events: Vec<LinkEvent>) {
        let mut g = self.lock();
        if let Some(id) = g.active.clone() {
            g.runs
                .get_mut(&id)
                .expect("active run exists")
                .link_events
                .extend(events);
        }
    }

    /// Logs a detection and turns it into a report unless a same-class report
    /// already exists within [`DUPLICATE_RADIUS`].
    pub fn record_detection(
        &self,
        detection: Detection,
        frame_seq: u16,
        now: f64,
    ) -> Result<DetectionOutcome, BaseStationError> {
        let mut g = self.lock();
        let id = g.active.clone().ok_or(BaseStationError::NoActiveRun)?;
        let run = g.runs.get_mut(&id).expect("active run exists");
        let duplicate = run
            .reports
            .iter()
            .any(|r| r.class == detection.class && r.position.distance(detection.position) < DUPLICATE_RADIUS);
        let outcome = if duplicate {
            DetectionOutcome::Duplicate
        } else {
            let report = ArtifactReport {
                class: detection.class,
                position: detection.position,
                frame_seq,
                reported_at: now,
            };
            run.reports.push(report.clone());
            DetectionOutcome::Reported(report)
        };
        run.detections.push(detection);
        Ok(outcome)
    }

    pub fn reports(&self) -> Vec<ArtifactReport> {
        let g = self.lock();
        g.active
            .as_ref()
            .or_else(|| g.runs.keys().next_back())
            .and_then(|id| g.runs.get(id))
            .map(|r| r.reports.clone())
            .unwrap_or_default()
    }

    pub fn runs(&self) -> Vec<RunSummary> {
        let g = self.lock();
        g.runs
            .values()
            .map(|r| RunSummary {
                run_id: r.run_id.clone(),
                scenario: r.scenario.clone(),
                active: g.active.as_deref() == Some(r.run_id.as_str()),
                frames: r.frames.len(),
                commands: r.commands.len(),
                started_at: r.started_at,
                ended_at: r.ended_at,
            })
            .collect()
    }

    pub fn run(&self, run_id: &str) -> Option<RunRecord> {
        self.lock().runs.get(run_id).cloned()
    }

    /// Registers a finished run (e.g. loaded from disk) for browsing.
    pub fn insert_run(&self, record: RunRecord) -> Result<(), BaseStationError> {
        let mut g = self.lock();
        if g.runs.contains_key(&record.run_id) {
            return Err(BaseStationError::DuplicateRun(record.run_id));
        }
        g.runs.insert(record.run_id.clone(), record);
        Ok(())
    }
}

fn set_status(g: &mut Inner, seq: u16, status: CommandStatus, now: f64) {
    let Some(&id) = g.ids_by_seq.get(&seq) else {
        return;
    };
    let Some(run) = g.active.clone() else {
        return;
    };
    if let Some(entry) = g
        .runs
        .get_mut(&run)
        .and_then(|r| r.commands.iter_mut().find(|c| c.id == id))
    {
        entry.status = status;
        entry.history.push((now, status));
    }
}

impl ArtifactReport {
    pub fn near(&self, class: ArtifactClass, p: Vec3) -> bool {
        self.class == class && self.position.distance(p) < DUPLICATE_RADIUS
    }
}
