//! Run records and their newline-delimited JSON persistence.
//!
//! A run file is append-only: a header line, then one line per logged item in
//! the order it happened, then a footer. A file cut short by a crash still
//! loads; the torn final line is skipped and the footer fields stay empty.

use crate::control::ModeKind;
use crate::geometry::Vec3;
use crate::harness::Metrics;
use crate::telemetry::{Command, CommandStatus, LinkEvent, SituationalFrame};
use crate::vehicle::Actuation;
use crate::world::ArtifactClass;
use serde::{Deserialize, Serialize};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RunLogError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {source}")]
    Parse { line: usize, source: serde_json::Error },
    #[error("run file has no header")]
    MissingHeader,
}

/// Ground-truth vehicle sample for one tick.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoseSample {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub yaw: f64,
    /// Along-track position of the nearest centerline point (m).
    pub station: f64,
    pub v_forward: f64,
    pub collisions: u32,
    pub mode: ModeKind,
    pub nav_d: f64,
    pub nav_phi: f64,
    pub nav_confidence: f64,
    pub actuation: Actuation,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeEvent {
    pub t: f64,
    pub from: ModeKind,
    pub to: ModeKind,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameEntry {
    pub received_at: f64,
    /// Arrived with a sequence number at or below the latest one.
    pub stale: bool,
    pub frame: SituationalFrame,
    /// The frame as it crossed the link, base-16.
    pub wire_hex: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommandEntry {
    pub id: u64,
    pub command: Command,
    pub issued_at: f64,
    pub status: CommandStatus,
    pub history: Vec<(f64, CommandStatus)>,
}

/// What the simulated detector produced on one tick.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub class: ArtifactClass,
    pub position: Vec3,
    pub time: f64,
    /// Id of the artifact seen, `None` for a false positive.
    pub artifact_id: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArtifactReport {
    pub class: ArtifactClass,
    pub position: Vec3,
    pub frame_seq: u16,
    pub reported_at: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RunRecord {
    pub run_id: String,
    pub scenario: String,
    pub started_at: f64,
    pub ended_at: Option<f64>,
    pub termination: Option<String>,
    pub poses: Vec<PoseSample>,
    pub mode_events: Vec<ModeEvent>,
    pub frames: Vec<FrameEntry>,
    pub commands: Vec<CommandEntry>,
    pub link_events: Vec<LinkEvent>,
    pub detections: Vec<Detection>,
    pub reports: Vec<ArtifactReport>,
    pub metrics: Option<Metrics>,
}

/// One line of a run file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum RunLine {
    Header {
        run_id: String,
        scenario: String,
        started_at: f64,
    },
    Pose(PoseSample),
    Mode(ModeEvent),
    Frame(FrameEntry),
    Command(CommandEntry),
    Link(LinkEvent),
    Detection(Detection),
    Report(ArtifactReport),
    Footer {
        ended_at: Option<f64>,
        termination: Option<String>,
        metrics: Option<Metrics>,
    },
}

impl RunRecord {
    pub fn new(run_id: impl Into<String>, scenario: impl Into<String>, started_at: f64) -> Self {
        Self {
            run_id: run_id.into(),
            scenario: scenario.into(),
            started_at,
            ..Default::default()
        }
    }

    /// Flattens the record into file lines. Commands are written with their
    /// final status.
    pub fn lines(&self) -> Vec<RunLine> {
        let mut out = vec![RunLine::Header {
            run_id: self.run_id.clone(),
            scenario: self.scenario.clone(),
            started_at: self.started_at,
        }];
        out.extend(self.poses.iter().copied().map(RunLine::Pose));
        out.extend(self.mode_events.iter().copied().map(RunLine::Mode));
        out.extend(self.frames.iter().cloned().map(RunLine::Frame));
        out.extend(self.commands.iter().cloned().map(RunLine::Command));
        out.extend(self.link_events.iter().copied().map(RunLine::Link));
        out.extend(self.detections.iter().cloned().map(RunLine::Detection));
        out.extend(self.reports.iter().cloned().map(RunLine::Report));
        out.push(RunLine::Footer {
            ended_at: self.ended_at,
            termination: self.termination.clone(),
            metrics: self.metrics.clone(),
        });
        out
    }

    pub fn apply(&mut self, line: RunLine) {
        match line {
            RunLine::Header {
                run_id,
                scenario,
                started_at,
            } => {
                self.run_id = run_id;
                self.scenario = scenario;
                self.started_at = started_at;
            }
            RunLine::Pose(p) => self.poses.push(p),
            RunLine::Mode(m) => self.mode_events.push(m),
            RunLine::Frame(f) => self.frames.push(f),
            RunLine::Command(c) => match self.commands.iter_mut().find(|e| e.id == c.id) {
                Some(existing) => *existing = c,
                None => self.commands.push(c),
            },
            RunLine::Link(e) => self.link_events.push(e),
            RunLine::Detection(d) => self.detections.push(d),
            RunLine::Report(r) => self.reports.push(r),
            RunLine::Footer {
                ended_at,
                termination,
                metrics,
            } => {
                self.ended_at = ended_at;
                self.termination = termination;
                self.metrics = metrics;
            }
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), RunLogError> {
        let mut w = RunLogWriter::create(path)?;
        for line in self.lines() {
            w.append(&line)?;
        }
        w.flush()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, RunLogError> {
        let reader = BufReader::new(File::open(path)?);
        let raw: Vec<String> = reader.lines().collect::<Result<_, _>>()?;
        let mut record = RunRecord::default();
        let mut saw_header = false;
        let last = raw.iter().rposition(|l| !l.trim().is_empty());
        for (i, text) in raw.iter().enumerate() {
            if text.trim().is_empty() {
                continue;
            }
            let line: RunLine = match serde_json::from_str(text) {
                Ok(l) => l,
                Err(_) if Some(i) == last => break,
                Err(source) => return Err(RunLogError::Parse { line: i + 1, source }),
            };
            saw_header |= matches!(line, RunLine::Header { .. });
            record.apply(line);
        }
        if !saw_header {
            return Err(RunLogError::MissingHeader);
        }
        Ok(record)
    }

    /// Final vehicle collision count.
    pub fn collision_count(&self) -> u32 {
        self.poses.last().map_or(0, |p| p.collisions)
    }
}

/// Appends run lines to a file as they happen.
pub struct RunLogWriter {
    out: BufWriter<File>,
}

impl RunLogWriter {
    pub fn create(path: impl AsRef<Path>) -> Result<Self, RunLogError> {
        if let Some(dir) = path.as_ref().parent() {
            if !dir.as_os_str().is_empty() {
                std::fs::create_dir_all(dir)?;
            }
        }
        Ok(Self {
            out: BufWriter::new(File::create(path)?),
        })
    }

    pub fn append(&mut self, line: &RunLine) -> Result<(), RunLogError> {
        serde_json::to_writer(&mut self.out, line).map_err(|e| RunLogError::Io(e.into()))?;
        self.out.write_all(b"\n")?;
        Ok(())
    }

    pub fn flush(&mut self) -> Result<(), RunLogError> {
        self.out.flush()?;
        Ok(())
    }
}
