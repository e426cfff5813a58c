//! Experiment statistics computed from a run log.

use crate::control::ModeKind;
use crate::geometry::Vec2;
use crate::runlog::{PoseSample, RunRecord};
use crate::world::TunnelMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// How far before a corner vertex its zone begins (m).
pub const CORNER_APPROACH: f64 = 2.0;
/// How far past the far wall of the turn its zone ends (m).
pub const CORNER_EXIT_MARGIN: f64 = 0.5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("run has no poses")]
    EmptyTrajectory,
    #[error("no reference points")]
    NoReferences,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Metrics {
    /// Mean over reference points of the closest approach of the trajectory.
    pub trajectory_error_mean: f64,
    /// Population standard deviation of the same distances.
    pub trajectory_error_std: f64,
    pub duration: f64,
    pub collision_count: u32,
    pub corners_encountered: u32,
    pub corners_traversed_auto: u32,
    pub corners_recovered: u32,
    pub corners_unrecovered: u32,
    /// Horizontal path length (m).
    pub distance_covered: f64,
}

/// Along-track interval counted as one turn.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CornerZone {
    pub start: f64,
    pub end: f64,
}

/// Zone around every corner of `map`: from [`CORNER_APPROACH`] before the
/// vertex to the far wall of the turn plus [`CORNER_EXIT_MARGIN`].
pub fn corner_zones(map: &TunnelMap) -> Vec<CornerZone> {
    map.corners()
        .iter()
        .map(|c| CornerZone {
            start: c.station - CORNER_APPROACH,
            end: c.station + c.half_width + CORNER_EXIT_MARGIN,
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum CornerOutcome {
    Auto,
    Recovered,
    Unrecovered,
}

/// A corner is encountered when a pose first lies inside its zone. It is
/// traversed once a later pose lies past the zone end. A STUCK pose, or a
/// handover into TELEOP, between entry and traversal marks the corner as
/// needing help: recovered if it was then traversed, unrecovered otherwise.
/// A corner the run ends inside is unrecovered. A blimp flown by remote
/// control throughout never hands over, so its corners count as traversed
/// without help.
fn corner_outcome(poses: &[PoseSample], zone: CornerZone) -> Option<CornerOutcome> {
    let entry = poses
        .iter()
        .position(|p| p.station >= zone.start && p.station <= zone.end)?;
    let rest = &poses[entry..];
    let exit = rest.iter().position(|p| p.station > zone.end);
    let window = &rest[..exit.unwrap_or(rest.len())];
    let helped = window.iter().any(|p| p.mode == ModeKind::Stuck)
        || window
            .windows(2)
            .any(|w| w[0].mode != ModeKind::Teleop && w[1].mode == ModeKind::Teleop);
    Some(match (exit.is_some(), helped) {
        (true, false) => CornerOutcome::Auto,
        (true, true) => CornerOutcome::Recovered,
        (false, _) => CornerOutcome::Unrecovered,
    })
}

pub fn compute_metrics(
    record: &RunRecord,
    reference_points: &[Vec2],
    corners: &[CornerZone],
) -> Result<Metrics, MetricsError> {
    let poses = &record.poses;
    let (first, last) = match (poses.first(), poses.last()) {
        (Some(f), Some(l)) => (f, l),
        _ => return Err(MetricsError::EmptyTrajectory),
    };
    if reference_points.is_empty() {
        return Err(MetricsError::NoReferences);
    }
    let errors: Vec<f64> = reference_points
        .iter()
        .map(|r| {
            poses
                .iter()
                .map(|p| Vec2::new(p.x, p.y).distance(*r))
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    let n = errors.len() as f64;
    let mean = errors.iter().sum::<f64>() / n;
    let var = errors.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / n;

    let mut m = Metrics {
        trajectory_error_mean: mean,
        trajectory_error_std: var.sqrt(),
        duration: last.t - first.t,
        collision_count: last.collisions.saturating_sub(first.collisions),
        distance_covered: poses
            .windows(2)
            .map(|w| Vec2::new(w[0].x, w[0].y).distance(Vec2::new(w[1].x, w[1].y)))
            .sum(),
        ..Default::default()
    };
    for zone in corners {
        let Some(outcome) = corner_outcome(poses, *zone) else {
            continue;
        };
        m.corners_encountered += 1;
        match outcome {
            CornerOutcome::Auto => m.corners_traversed_auto += 1,
            CornerOutcome::Recovered => m.corners_recovered += 1,
            CornerOutcome::Unrecovered => m.corners_unrecovered += 1,
        }
    }
    Ok(m)
}
