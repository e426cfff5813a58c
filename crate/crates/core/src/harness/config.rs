//! Scenario configuration files.

use super::detector::DetectorModel;
use crate::control::{CenteringParams, ControlGains, ModeParams, ALTITUDE_SETPOINT};
use crate::perception::PerceptionParams;
use crate::sensors::SensorParams;
use crate::telemetry::{CommandKind, LinkParams, RetransmitPolicy};
use crate::vehicle::{DynamicsParams, DEFAULT_DT, MAX_DT};
use crate::world::{
    build_s_track_with_height, AirflowZone, ArtifactPlacement, Obstacle, TunnelMap, WorldError, DEFAULT_HEIGHT,
};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("reading {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid config: {}", .0.join("; "))]
    Invalid(Vec<String>),
    #[error("map: {0}")]
    Map(#[from] WorldError),
}

/// How the blimp is flown.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum RunMode {
    /// Autonomy only; a stuck blimp stays stuck.
    #[default]
    Auto,
    /// A scripted pilot flies the whole track by remote control.
    TeleopScripted,
    /// Autonomy, with a scripted supervisor answering STUCK through the
    /// base station.
    AutoWithRecovery,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MapSpec {
    STrack {
        #[serde(default = "default_width")]
        width: f64,
        #[serde(default = "default_leg")]
        leg: f64,
        #[serde(default = "default_height")]
        height: f64,
        #[serde(default)]
        obstacles: Vec<Obstacle>,
        #[serde(default)]
        artifacts: Vec<ArtifactPlacement>,
        #[serde(default)]
        airflow: Vec<AirflowZone>,
    },
    /// Map file, relative to the config file's directory.
    File {
        path: PathBuf,
    },
    Inline {
        map: TunnelMap,
    },
}

fn default_width() -> f64 {
    3.3
}
fn default_leg() -> f64 {
    8.0
}
fn default_height() -> f64 {
    DEFAULT_HEIGHT
}

impl MapSpec {
    pub fn build(&self, base_dir: Option<&Path>) -> Result<TunnelMap, ConfigError> {
        Ok(match self {
            MapSpec::STrack {
                width,
                leg,
                height,
                obstacles,
                artifacts,
                airflow,
            } => TunnelMap::new(
                build_s_track_with_height(*width, *leg, *height)?.segments().to_vec(),
                obstacles.clone(),
                artifacts.clone(),
                airflow.clone(),
            )?,
            MapSpec::File { path } => {
                let full = match base_dir {
                    Some(dir) if path.is_relative() => dir.join(path),
                    _ => path.clone(),
                };
                TunnelMap::load(full)?
            }
            MapSpec::Inline { map } => map.clone(),
        })
    }
}

/// Start pose. Unset fields fall back to the centerline point `station`
/// meters into the track, facing along it, at the altitude setpoint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InitialPose {
    pub station: f64,
    pub x: Option<f64>,
    pub y: Option<f64>,
    pub z: f64,
    /// Offset from the track heading (rad).
    pub yaw_offset: f64,
}

impl Default for InitialPose {
    fn default() -> Self {
        Self {
            station: 1.5,
            x: None,
            y: None,
            z: ALTITUDE_SETPOINT,
            yaw_offset: 0.0,
        }
    }
}

/// A supervisor script step. Turning toward the open side reads the most
/// recent awareness frame and picks the side with the longer mean range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScriptAction {
    Forward,
    Backward,
    TurnLeft,
    TurnRight,
    TurnTowardOpen,
    Up,
    Down,
    Stop,
    ResumeAuto,
}

impl ScriptAction {
    /// The fixed command kind, or `None` for the frame-dependent turn.
    pub fn fixed_kind(self) -> Option<CommandKind> {
        Some(match self {
            ScriptAction::Forward => CommandKind::Forward,
            ScriptAction::Backward => CommandKind::Backward,
            ScriptAction::TurnLeft => CommandKind::TurnLeft,
            ScriptAction::TurnRight => CommandKind::TurnRight,
            ScriptAction::Up => CommandKind::Up,
            ScriptAction::Down => CommandKind::Down,
            ScriptAction::Stop => CommandKind::Stop,
            ScriptAction::ResumeAuto => CommandKind::ResumeAuto,
            ScriptAction::TurnTowardOpen => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScriptStep {
    pub action: ScriptAction,
    #[serde(default = "one")]
    pub magnitude: f64,
    #[serde(default)]
    pub duration: f64,
    /// Wait after the previous step is acknowledged and its pulse has run (s).
    #[serde(default)]
    pub delay: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RecoveryScript {
    /// Time from seeing STUCK in a frame to issuing the first step (s).
    pub reaction_time: f64,
    /// Attempts before the supervisor gives up on a stuck episode.
    pub max_attempts: u32,
    pub steps: Vec<ScriptStep>,
}

impl Default for RecoveryScript {
    fn default() -> Self {
        let step = |action, magnitude, duration, delay| ScriptStep {
            action,
            magnitude,
            duration,
            delay,
        };
        Self {
            reaction_time: 2.0,
            max_attempts: 3,
            steps: vec![
                step(ScriptAction::Backward, 0.6, 3.0, 0.0),
                step(ScriptAction::TurnTowardOpen, 0.6, 2.5, 0.5),
                step(ScriptAction::ResumeAuto, 1.0, 0.0, 0.5),
            ],
        }
    }
}

/// The remote-control pilot used for the scripted teleop condition. It
/// steers toward a point `lookahead` meters ahead on the centerline, judging
/// its position by eye with some error, and its inputs reach the blimp after
/// a reaction delay drawn per command.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PilotParams {
    pub lookahead: f64,
    pub throttle: f64,
    pub steer_gain: f64,
    /// Seconds between pilot inputs.
    pub input_period: f64,
    pub reaction_mean: f64,
    pub reaction_jitter: f64,
    /// Standard deviation of the pilot's position estimate (m).
    pub perception_noise: f64,
}

impl Default for PilotParams {
    fn default() -> Self {
        Self {
            lookahead: 2.0,
            throttle: 0.55,
            steer_gain: 0.8,
            input_period: 0.5,
            reaction_mean: 0.4,
            reaction_jitter: 0.3,
            perception_noise: 0.15,
        }
    }
}

/// Window during which perception reports nothing (s).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Outage {
    pub start: f64,
    pub duration: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    #[serde(default)]
    pub mode: RunMode,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_limit")]
    pub duration_limit: f64,
    /// The run counts as complete once the blimp is this close to the end of
    /// the track (m).
    #[serde(default = "default_finish")]
    pub finish_margin: f64,
    /// A run ends once the blimp has been STUCK this long with no help coming (s).
    #[serde(default = "default_stuck_timeout")]
    pub stuck_timeout: f64,
    pub map: MapSpec,
    #[serde(default)]
    pub initial: InitialPose,
    #[serde(default)]
    pub dynamics: DynamicsParams,
    #[serde(default)]
    pub gains: ControlGains,
    #[serde(default)]
    pub centering: CenteringParams,
    #[serde(default)]
    pub mode_params: ModeParams,
    #[serde(default)]
    pub sensors: SensorParams,
    #[serde(default)]
    pub perception: PerceptionParams,
    #[serde(default)]
    pub link: LinkParams,
    #[serde(default)]
    pub retransmit: RetransmitPolicy,
    #[serde(default)]
    pub detector: DetectorModel,
    #[serde(default)]
    pub recovery: RecoveryScript,
    #[serde(default)]
    pub pilot: PilotParams,
    #[serde(default)]
    pub outages: Vec<Outage>,
    /// Hardware notes carried along for reference; not used by the simulator.
    #[serde(default)]
    pub metadata: toml::Table,
}

fn default_dt() -> f64 {
    DEFAULT_DT
}
fn default_limit() -> f64 {
    180.0
}
fn default_finish() -> f64 {
    1.5
}
fn default_stuck_timeout() -> f64 {
    30.0
}

impl ScenarioConfig {
    /// A windless autonomous S-track run with every parameter at its default.
    pub fn s_track(name: &str) -> Self {
        toml::from_str(&format!("name = {name:?}\nmap = {{ kind = \"s_track\" }}\n")).expect("defaults parse")
    }

    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Loads and validates a config file, resolving a map file path against
    /// the file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut cfg = Self::from_toml_str(&text)?;
        if let MapSpec::File { path: map } = &mut cfg.map {
            if map.is_relative() {
                if let Some(dir) = path.parent() {
                    *map = dir.join(&*map);
                }
            }
        }
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn build_map(&self) -> Result<TunnelMap, ConfigError> {
        self.map.build(None)
    }

    /// Checks every section and reports all problems at once.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut errs = Vec::new();
        let mut check = |ok: bool, msg: &str| {
            if !ok {
                errs.push(msg.to_string());
            }
        };
        check(!self.name.trim().is_empty(), "name: must not be empty");
        check(self.dt > 0.0 && self.dt <= MAX_DT, "dt: must lie in (0, 0.1]");
        check(self.duration_limit > 0.0, "duration_limit: must be positive");
        check(self.finish_margin >= 0.0, "finish_margin: must be non-negative");
        check(self.stuck_timeout > 0.0, "stuck_timeout: must be positive");
        check(self.initial.station >= 0.0, "initial.station: must be non-negative");
        check(self.initial.z >= 0.0, "initial.z: must be non-negative");
        let mut section = |name: &str, r: Result<(), String>| {
            if let Err(e) = r {
                errs.push(format!("{name}: {e}"));
            }
        };
        section("dynamics", self.dynamics.validate().map_err(|e| e.to_string()));
        section("gains.altitude", self.gains.altitude.validate());
        section("gains.lateral", self.gains.lateral.validate());
        section("gains.heading", self.gains.heading.validate());
        section("sensors", self.sensors.validate());
        section("link", self.link.validate());
        section("detector", self.detector.validate());
        section(
            "centering",
            if self.centering.slow_far > self.centering.slow_near && self.centering.slow_near >= 0.0 {
                Ok(())
            } else {
                Err("slow_far must exceed slow_near >= 0".into())
            },
        );
        section(
            "mode_params",
            if self.mode_params.stuck_window > 0.0 && self.mode_params.recover_hold >= 0.0 {
                Ok(())
            } else {
                Err("stuck_window must be positive and recover_hold non-negative".into())
            },
        );
        section(
            "retransmit",
            if self.retransmit.ack_timeout > 0.0 {
                Ok(())
            } else {
                Err("ack_timeout must be positive".into())
            },
        );
        section(
            "pilot",
            if self.pilot.input_period > 0.0 && self.pilot.reaction_jitter >= 0.0 && self.pilot.reaction_mean >= 0.0 {
                Ok(())
            } else {
                Err("input_period must be positive and reaction times non-negative".into())
            },
        );
        for (i, s) in self.recovery.steps.iter().enumerate() {
            if !(0.0..=1.0).contains(&s.magnitude) || !(0.0..=10.0).contains(&s.duration) || s.delay < 0.0 {
                errs.push(format!(
                    "recovery.steps[{i}]: magnitude in [0, 1], duration in [0, 10], delay >= 0"
                ));
            }
        }
        for (i, o) in self.outages.iter().enumerate() {
            if !(o.duration > 0.0 && o.start >= 0.0) {
                errs.push(format!("outages[{i}]: start >= 0 and duration > 0"));
            }
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Invalid(errs))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_takes_defaults() {
        let cfg = ScenarioConfig::from_toml_str("name = \"x\"\nmap = { kind = \"s_track\" }\n").unwrap();
        assert_eq!(cfg.mode, RunMode::Auto);
        assert_eq!(cfg.dt, DEFAULT_DT);
        assert_eq!(cfg.duration_limit, 180.0);
        let map = cfg.build_map().unwrap();
        assert_eq!(map.segments().len(), 5);
    }

    #[test]
    fn validation_lists_every_problem() {
        let text = "name = \"\"\ndt = 0.5\nduration_limit = -1\nmap = { kind = \"s_track\" }\n";
        match ScenarioConfig::from_toml_str(text) {
            Err(ConfigError::Invalid(errs)) => {
                assert_eq!(errs.len(), 3, "{errs:?}");
                assert!(errs[1].starts_with("dt"));
            }
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_fields_rejected() {
        assert!(ScenarioConfig::from_toml_str("name = \"x\"\nmap = { kind = \"s_track\" }\nspeed = 3\n").is_err());
    }

    #[test]
    fn round_trips_through_toml() {
        let mut cfg = ScenarioConfig::s_track("rt");
        cfg.mode = RunMode::AutoWithRecovery;
        cfg.outages.push(Outage {
            start: 3.0,
            duration: 1.0,
        });
        let back = ScenarioConfig::from_toml_str(&cfg.to_toml_string()).unwrap();
        assert_eq!(back, cfg);
    }
}
