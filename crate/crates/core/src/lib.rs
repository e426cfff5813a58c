//! Simulator and supervision stack for a small blimp flying down a tunnel.
//!
//! The blimp perceives the tunnel through a forward depth scan, fits wall
//! lines to it, and estimates its lateral offset `d` and heading error `phi`.
//! Two PID loops keep it centered while a third holds altitude. A mode
//! machine watches for lost perception and stalled progress and hands control
//! to a remote supervisor, who sees an eight-point summary of the scan sent
//! once a second over a lossy low-rate radio link.
//!
//! Everything is deterministic given a scenario configuration and a seed.

// Validation uses `!(x > 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod basestation;
pub mod control;
pub mod geometry;
pub mod harness;
pub mod perception;
pub mod rng;
pub mod runlog;
pub mod sensors;
pub mod telemetry;
pub mod vehicle;
pub mod world;

pub use basestation::{BaseStation, CommandRequest};
pub use control::{ModeKind, ALTITUDE_SETPOINT};
pub use geometry::{Vec2, Vec3};
pub use harness::{batch_report, compute_metrics, run_scenario, Metrics, ScenarioConfig};
pub use perception::NavState;
pub use runlog::RunRecord;
pub use telemetry::{Command, CommandKind, SituationalFrame};
pub use vehicle::{Actuation, BlimpState};
pub use world::{build_s_track, TunnelMap};
