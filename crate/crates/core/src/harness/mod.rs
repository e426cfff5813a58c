//! Closed-loop scenario runs, the simulated artifact detector, and the
//! experiment metrics built on top of them.

pub mod batch;
pub mod config;
pub mod detector;
pub mod metrics;
pub mod scenario;

pub use batch::{batch_report, BatchReport, BatchRow};
pub use config::{
    ConfigError, InitialPose, MapSpec, Outage, PilotParams, RecoveryScript, RunMode, ScenarioConfig, ScriptAction,
    ScriptStep,
};
pub use detector::{simulate_detections, DetectorModel};
pub use metrics::{compute_metrics, corner_zones, CornerZone, Metrics, MetricsError};
pub use scenario::{
    evaluate_run, run_scenario, run_scenario_with, RunHooks, ScenarioError, Termination, REFERENCE_POINTS,
};
