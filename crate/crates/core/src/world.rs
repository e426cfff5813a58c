//! Tunnel geometry: a 2.5D corridor built from a piecewise-linear centerline
//! with per-segment width and height, plus obstacles, artifacts and airflow
//! zones.
//!
//! Corridors are joined with miter corners, and both ends of the centerline
//! are capped, so the free space is a single closed polygon. Lateral offsets
//! are signed positive to the left of the segment travel direction.

use crate::geometry::{
    closest_on_segment, line_intersection, point_in_polygon, point_segment_distance, ray_segment, wrap_angle, Aabb,
    Vec2, Vec3,
};
use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

/// Default ceiling height for procedurally built tracks (m).
pub const DEFAULT_HEIGHT: f64 = 2.5;
/// Width of the S-shaped test track (m).
pub const S_TRACK_WIDTH: f64 = 3.3;
/// Sanity cap on airflow zone speed (m/s).
pub const MAX_AIRFLOW_SPEED: f64 = 5.0;

const JOIN_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WorldError {
    #[error("invalid dimensions: {0}")]
    InvalidDimensions(String),
    #[error("invalid map: {0}")]
    InvalidMap(String),
    #[error("point ({x:.3}, {y:.3}) is outside the tunnel")]
    OutOfTrack { x: f64, y: f64 },
    #[error("map file: {0}")]
    Format(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub start: Vec2,
    pub end: Vec2,
    pub width: f64,
    pub height: f64,
}

impl Segment {
    pub fn length(&self) -> f64 {
        self.start.distance(self.end)
    }

    pub fn direction(&self) -> Vec2 {
        (self.end - self.start).normalized()
    }

    pub fn heading(&self) -> f64 {
        (self.end - self.start).angle()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Obstacle {
    pub region: Aabb,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ArtifactClass {
    Survivor,
    Backpack,
    Cellphone,
    Drill,
    FireExtinguisher,
}

impl ArtifactClass {
    pub const ALL: [ArtifactClass; 5] = [
        ArtifactClass::Survivor,
        ArtifactClass::Backpack,
        ArtifactClass::Cellphone,
        ArtifactClass::Drill,
        ArtifactClass::FireExtinguisher,
    ];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArtifactPlacement {
    pub id: String,
    pub class: ArtifactClass,
    pub position: Vec3,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AirflowZone {
    pub region: Aabb,
    pub velocity: Vec2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WallKind {
    Tunnel,
    Obstacle,
}

/// One straight piece of boundary that rays and the hull can hit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Wall {
    pub a: Vec2,
    pub b: Vec2,
    pub kind: WallKind,
}

/// Position relative to the tunnel centerline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CenterlineFrame {
    /// Signed perpendicular offset, left of travel positive (m).
    pub d: f64,
    pub segment_index: usize,
    /// Direction of the chosen segment (rad).
    pub axis_heading: f64,
    /// Arc length along the centerline of the foot point (m).
    pub station: f64,
}

/// A direction change of the centerline at a shared vertex.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Corner {
    /// Index of the segment entering the corner; the next segment leaves it.
    pub incoming: usize,
    pub position: Vec2,
    pub station: f64,
    /// Signed turn angle, left positive (rad).
    pub turn_angle: f64,
    /// Half of the wider of the two adjoining corridors (m).
    pub half_width: f64,
}

/// Serializable content of a map file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapDocument {
    pub segments: Vec<Segment>,
    #[serde(default)]
    pub obstacles: Vec<Obstacle>,
    #[serde(default)]
    pub artifacts: Vec<ArtifactPlacement>,
    #[serde(default)]
    pub airflow_zones: Vec<AirflowZone>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MapDocument", into = "MapDocument")]
pub struct TunnelMap {
    segments: Vec<Segment>,
    obstacles: Vec<Obstacle>,
    artifacts: Vec<ArtifactPlacement>,
    airflow_zones: Vec<AirflowZone>,
    boundary: Vec<Vec2>,
    walls: Vec<Wall>,
    stations: Vec<f64>,
}

impl TryFrom<MapDocument> for TunnelMap {
    type Error = WorldError;

    fn try_from(doc: MapDocument) -> Result<Self, Self::Error> {
        TunnelMap::new(doc.segments, doc.obstacles, doc.artifacts, doc.airflow_zones)
    }
}

impl From<TunnelMap> for MapDocument {
    fn from(m: TunnelMap) -> Self {
        MapDocument {
            segments: m.segments,
            obstacles: m.obstacles,
            artifacts: m.artifacts,
            airflow_zones: m.airflow_zones,
        }
    }
}

impl TunnelMap {
    pub fn new(
        segments: Vec<Segment>,
        obstacles: Vec<Obstacle>,
        artifacts: Vec<ArtifactPlacement>,
        airflow_zones: Vec<AirflowZone>,
    ) -> Result<Self, WorldError> {
        validate_segments(&segments)?;
        for z in &airflow_zones {
            let speed = z.velocity.norm();
            if !speed.is_finite() || speed > MAX_AIRFLOW_SPEED {
                return Err(WorldError::InvalidMap(format!(
                    "airflow speed {speed} exceeds {MAX_AIRFLOW_SPEED} m/s"
                )));
            }
        }
        for o in &obstacles {
            if !(o.region.min.x < o.region.max.x && o.region.min.y < o.region.max.y) {
                return Err(WorldError::InvalidMap("obstacle box is empty".into()));
            }
        }

        let boundary = build_boundary(&segments)?;
        check_simple(&boundary)?;

        let mut walls: Vec<Wall> = (0..boundary.len())
            .map(|i| Wall {
                a: boundary[i],
                b: boundary[(i + 1) % boundary.len()],
                kind: WallKind::Tunnel,
            })
            .filter(|w| w.a.distance(w.b) > JOIN_TOL)
            .collect();
        for o in &obstacles {
            walls.extend(o.region.edges().iter().map(|&(a, b)| Wall {
                a,
                b,
                kind: WallKind::Obstacle,
            }));
        }

        let mut stations = Vec::with_capacity(segments.len() + 1);
        let mut s = 0.0;
        stations.push(s);
        for seg in &segments {
            s += seg.length();
            stations.push(s);
        }

        Ok(Self {
            segments,
            obstacles,
            artifacts,
            airflow_zones,
            boundary,
            walls,
            stations,
        })
    }

    /// Straight-corridor map through the given centerline vertices.
    pub fn from_centerline(points: &[Vec2], width: f64, height: f64) -> Result<Self, WorldError> {
        if points.len() < 2 {
            return Err(WorldError::InvalidMap("need at least two centerline points".into()));
        }
        let segments = points
            .windows(2)
            .map(|w| Segment {
                start: w[0],
                end: w[1],
                width,
                height,
            })
            .collect();
        Self::new(segments, vec![], vec![], vec![])
    }

    pub fn with_obstacles(self, obstacles: Vec<Obstacle>) -> Result<Self, WorldError> {
        Self::new(self.segments, obstacles, self.artifacts, self.airflow_zones)
    }

    pub fn with_artifacts(self, artifacts: Vec<ArtifactPlacement>) -> Result<Self, WorldError> {
        Self::new(self.segments, self.obstacles, artifacts, self.airflow_zones)
    }

    pub fn with_airflow(self, airflow_zones: Vec<AirflowZone>) -> Result<Self, WorldError> {
        Self::new(self.segments, self.obstacles, self.artifacts, airflow_zones)
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn obstacles(&self) -> &[Obstacle] {
        &self.obstacles
    }

    pub fn artifacts(&self) -> &[ArtifactPlacement] {
        &self.artifacts
    }

    pub fn airflow_zones(&self) -> &[AirflowZone] {
        &self.airflow_zones
    }

    pub fn walls(&self) -> &[Wall] {
        &self.walls
    }

    /// Closed free-space outline (left offsets forward, right offsets back).
    pub fn boundary(&self) -> &[Vec2] {
        &self.boundary
    }

    pub fn total_length(&self) -> f64 {
        *self.stations.last().unwrap_or(&0.0)
    }

    /// Centerline arc length at the start of segment `i`.
    pub fn segment_station(&self, i: usize) -> f64 {
        self.stations[i]
    }

    /// Inside the corridor outline (obstacles ignored), boundary included.
    pub fn in_corridor(&self, p: Vec2) -> bool {
        point_in_polygon(p, &self.boundary)
            || self
                .walls
                .iter()
                .filter(|w| w.kind == WallKind::Tunnel)
                .any(|w| point_segment_distance(p, w.a, w.b) <= JOIN_TOL)
    }

    /// Inside the corridor and not strictly inside any obstacle.
    pub fn contains(&self, p: Vec2) -> bool {
        self.in_corridor(p)
            && !self
                .obstacles
                .iter()
                .any(|o| p.x > o.region.min.x && p.x < o.region.max.x && p.y > o.region.min.y && p.y < o.region.max.y)
    }

    /// Lateral offset, nearest segment, and axis heading at `p`.
    ///
    /// The segment with the smallest distance to `p` wins, the lowest index on
    /// ties.
    pub fn centerline_frame(&self, p: Vec2) -> Result<CenterlineFrame, WorldError> {
        if !self.in_corridor(p) {
            return Err(WorldError::OutOfTrack { x: p.x, y: p.y });
        }
        Ok(self.nearest_frame(p))
    }

    fn nearest_frame(&self, p: Vec2) -> CenterlineFrame {
        let mut best = 0;
        let mut best_dist = f64::INFINITY;
        for (i, seg) in self.segments.iter().enumerate() {
            let dist = point_segment_distance(p, seg.start, seg.end);
            if dist < best_dist - 1e-12 {
                best = i;
                best_dist = dist;
            }
        }
        let seg = &self.segments[best];
        let u = seg.direction();
        let rel = p - seg.start;
        CenterlineFrame {
            d: u.cross(rel),
            segment_index: best,
            axis_heading: seg.heading(),
            station: self.stations[best] + rel.dot(u).clamp(0.0, seg.length()),
        }
    }

    /// Ceiling height of the corridor nearest to `p`.
    pub fn height_at(&self, p: Vec2) -> f64 {
        self.segments[self.nearest_frame(p).segment_index].height
    }

    /// Distance to the nearest wall or obstacle along `direction`, or `None`
    /// when nothing is hit within `max_range`.
    pub fn raycast(&self, origin: Vec2, direction: f64, max_range: f64) -> Result<Option<f64>, WorldError> {
        if !self.contains(origin) {
            return Err(WorldError::OutOfTrack {
                x: origin.x,
                y: origin.y,
            });
        }
        Ok(self.raycast_unchecked(origin, direction, max_range))
    }

    pub(crate) fn raycast_unchecked(&self, origin: Vec2, direction: f64, max_range: f64) -> Option<f64> {
        let dir = Vec2::from_angle(direction);
        self.walls
            .iter()
            .filter_map(|w| ray_segment(origin, dir, w.a, w.b))
            .fold(None, |acc: Option<f64>, t| Some(acc.map_or(t, |a| a.min(t))))
            .filter(|&t| t <= max_range)
    }

    /// Wall nearest to `p` and the closest point on it.
    pub fn nearest_wall(&self, p: Vec2) -> Option<(&Wall, Vec2)> {
        self.walls
            .iter()
            .map(|w| (w, closest_on_segment(p, w.a, w.b).0))
            .min_by(|x, y| x.1.distance(p).total_cmp(&y.1.distance(p)))
    }

    pub fn corners(&self) -> Vec<Corner> {
        self.segments
            .windows(2)
            .enumerate()
            .filter_map(|(i, w)| {
                let turn = wrap_angle(w[1].heading() - w[0].heading());
                (turn.abs() > 1e-6).then(|| Corner {
                    incoming: i,
                    position: w[0].end,
                    station: self.stations[i + 1],
                    turn_angle: turn,
                    half_width: 0.5 * w[0].width.max(w[1].width),
                })
            })
            .collect()
    }

    /// Point on the centerline at arc length `station` (clamped to the track).
    pub fn point_at_station(&self, station: f64) -> (Vec2, f64) {
        let s = station.clamp(0.0, self.total_length());
        let i = match self.stations[1..].iter().position(|&end| s <= end) {
            Some(i) => i,
            None => self.segments.len() - 1,
        };
        let seg = &self.segments[i];
        (seg.start + seg.direction() * (s - self.stations[i]), seg.heading())
    }

    /// `n` evenly spaced midline points strictly between the track ends.
    pub fn reference_points(&self, n: usize) -> Vec<Vec2> {
        let len = self.total_length();
        (1..=n)
            .map(|i| self.point_at_station(len * i as f64 / (n + 1) as f64).0)
            .collect()
    }

    pub fn from_toml_str(text: &str) -> Result<Self, WorldError> {
        toml::from_str::<MapDocument>(text)
            .map_err(|e| WorldError::Format(e.to_string()))?
            .try_into()
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(&MapDocument::from(self.clone())).expect("map serializes")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, WorldError> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| WorldError::Format(format!("{}: {e}", path.as_ref().display())))?;
        Self::from_toml_str(&text)
    }
}

fn validate_segments(segments: &[Segment]) -> Result<(), WorldError> {
    if segments.is_empty() {
        return Err(WorldError::InvalidMap("map has no segments".into()));
    }
    for (i, s) in segments.iter().enumerate() {
        let finite = [s.start.x, s.start.y, s.end.x, s.end.y, s.width, s.height]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(WorldError::InvalidMap(format!("segment {i} has non-finite values")));
        }
        if s.length() <= JOIN_TOL {
            return Err(WorldError::InvalidMap(format!("segment {i} has start == end")));
        }
        if s.width <= 0.0 || s.height <= 0.0 {
            return Err(WorldError::InvalidMap(format!(
                "segment {i} width and height must be positive"
            )));
        }
    }
    for (i, w) in segments.windows(2).enumerate() {
        if w[0].end.distance(w[1].start) > JOIN_TOL {
            return Err(WorldError::InvalidMap(format!(
                "segment {} does not start where segment {i} ends",
                i + 1
            )));
        }
        let turn = wrap_angle(w[1].heading() - w[0].heading());
        if turn.abs() > std::f64::consts::PI - 1e-3 {
            return Err(WorldError::InvalidMap(format!("segment {} reverses direction", i + 1)));
        }
    }
    Ok(())
}

/// Offset polyline on one side (`side` = +1 left, −1 right) with miter joins.
fn offset_side(segments: &[Segment], side: f64) -> Vec<Vec2> {
    let off = |s: &Segment| s.direction().perp() * (side * s.width / 2.0);
    let mut pts = vec![segments[0].start + off(&segments[0])];
    for w in segments.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        let pa = a.end + off(a);
        let pb = b.start + off(b);
        match line_intersection(pa, a.direction(), pb, b.direction()) {
            Some(p) if a.direction().cross(b.direction()).abs() > 1e-9 => pts.push(p),
            _ => {
                pts.push(pa);
                if pa.distance(pb) > JOIN_TOL {
                    pts.push(pb);
                }
            }
        }
    }
    let last = segments.last().unwrap();
    pts.push(last.end + off(last));
    pts
}

fn build_boundary(segments: &[Segment]) -> Result<Vec<Vec2>, WorldError> {
    let mut poly = offset_side(segments, 1.0);
    let mut right = offset_side(segments, -1.0);
    right.reverse();
    poly.extend(right);
    Ok(poly)
}

fn segments_cross(a: Vec2, b: Vec2, c: Vec2, d: Vec2) -> bool {
    let d1 = (b - a).cross(c - a);
    let d2 = (b - a).cross(d - a);
    let d3 = (d - c).cross(a - c);
    let d4 = (d - c).cross(b - c);
    d1 * d2 < -1e-12 && d3 * d4 < -1e-12
}

fn check_simple(poly: &[Vec2]) -> Result<(), WorldError> {
    let n = poly.len();
    for i in 0..n {
        for j in (i + 2)..n {
            if i == 0 && j == n - 1 {
                continue;
            }
            let (a, b) = (poly[i], poly[(i + 1) % n]);
            let (c, d) = (poly[j], poly[(j + 1) % n]);
            if segments_cross(a, b, c, d) {
                return Err(WorldError::InvalidMap(
                    "corridor outline self-intersects (legs too close or turn too sharp)".into(),
                ));
            }
        }
    }
    Ok(())
}

/// S-shaped track: a leg along +x, a left U-turn, a leg back along −x, a
/// right U-turn, and a final leg along +x. Every leg is `leg_length` long, so
/// the track has five segments and four 90° corners.
pub fn build_s_track(width: f64, leg_length: f64) -> Result<TunnelMap, WorldError> {
    build_s_track_with_height(width, leg_length, DEFAULT_HEIGHT)
}

pub fn build_s_track_with_height(width: f64, leg_length: f64, height: f64) -> Result<TunnelMap, WorldError> {
    if !(width.is_finite() && leg_length.is_finite() && height.is_finite()) {
        return Err(WorldError::InvalidDimensions("non-finite dimension".into()));
    }
    if width <= 0.0 || height <= 0.0 {
        return Err(WorldError::InvalidDimensions(format!(
            "width {width} and height {height} must be positive"
        )));
    }
    if leg_length <= width {
        return Err(WorldError::InvalidDimensions(format!(
            "leg length {leg_length} must exceed width {width}"
        )));
    }
    let l = leg_length;
    let pts = [
        Vec2::new(0.0, 0.0),
        Vec2::new(l, 0.0),
        Vec2::new(l, l),
        Vec2::new(0.0, l),
        Vec2::new(0.0, 2.0 * l),
        Vec2::new(l, 2.0 * l),
    ];
    TunnelMap::from_centerline(&pts, width, height)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn straight(len: f64, width: f64) -> TunnelMap {
        TunnelMap::from_centerline(&[Vec2::new(0.0, 0.0), Vec2::new(len, 0.0)], width, 2.5).unwrap()
    }

    #[test]
    fn s_track_shape() {
        let m = build_s_track(3.3, 10.0).unwrap();
        assert_eq!(m.segments().len(), 5);
        assert!(m.segments().iter().all(|s| s.width == 3.3 && s.height >= 2.0));
        let sum: f64 = m.segments().iter().map(Segment::length).sum();
        assert!((m.total_length() - sum).abs() < 1e-12);
        assert!((m.total_length() - 50.0).abs() < 1e-12);
        let turns: Vec<f64> = m.corners().iter().map(|c| c.turn_angle).collect();
        assert_eq!(turns.len(), 4);
        assert!((turns[0] - FRAC_PI_2).abs() < 1e-12 && (turns[1] - FRAC_PI_2).abs() < 1e-12);
        assert!((turns[2] + FRAC_PI_2).abs() < 1e-12 && (turns[3] + FRAC_PI_2).abs() < 1e-12);
    }

    #[test]
    fn s_track_rejects_degenerate_legs() {
        assert!(matches!(build_s_track(3.3, 0.0), Err(WorldError::InvalidDimensions(_))));
        assert!(build_s_track(3.3, 3.3).is_err());
        assert!(build_s_track(0.0, 10.0).is_err());
        assert!(build_s_track(-1.0, 10.0).is_err());
    }

    #[test]
    fn rejects_discontinuous_segments() {
        let seg = |a: (f64, f64), b: (f64, f64)| Segment {
            start: Vec2::new(a.0, a.1),
            end: Vec2::new(b.0, b.1),
            width: 3.0,
            height: 2.5,
        };
        let err = TunnelMap::new(
            vec![seg((0.0, 0.0), (5.0, 0.0)), seg((5.1, 0.0), (9.0, 0.0))],
            vec![],
            vec![],
            vec![],
        );
        assert!(matches!(err, Err(WorldError::InvalidMap(_))));
    }

    #[test]
    fn frame_on_axis_and_offset() {
        let m = straight(20.0, 3.3);
        let f = m.centerline_frame(Vec2::new(5.0, 0.0)).unwrap();
        assert_eq!(f.d, 0.0);
        let f = m.centerline_frame(Vec2::new(5.0, 0.5)).unwrap();
        assert!((f.d - 0.5).abs() < 1e-12);
        assert_eq!(f.axis_heading, 0.0);
        assert!((f.station - 5.0).abs() < 1e-12);
        assert!(matches!(
            m.centerline_frame(Vec2::new(5.0, 3.0)),
            Err(WorldError::OutOfTrack { .. })
        ));
    }

    #[test]
    fn frame_on_s_track_centerline_is_zero() {
        let m = build_s_track(3.3, 10.0).unwrap();
        for k in 0..=500 {
            let s = m.total_length() * k as f64 / 500.0;
            let (p, _) = m.point_at_station(s);
            let f = m.centerline_frame(p).unwrap();
            assert!(f.d.abs() < 1e-9, "station {s}: d = {}", f.d);
        }
    }

    #[test]
    fn corner_tie_prefers_lower_index() {
        let m = build_s_track(3.3, 10.0).unwrap();
        // Inner-diagonal points of the first corner are equidistant from
        // segments 0 and 1.
        let p = Vec2::new(10.0 - 0.7, 0.7);
        let brute: Vec<f64> = m
            .segments()
            .iter()
            .map(|s| point_segment_distance(p, s.start, s.end))
            .collect();
        assert!((brute[0] - brute[1]).abs() < 1e-12);
        let min = brute.iter().cloned().fold(f64::INFINITY, f64::min);
        let first_min = brute.iter().position(|&d| (d - min).abs() < 1e-12).unwrap();
        let f = m.centerline_frame(p).unwrap();
        assert_eq!(f.segment_index, first_min);
        assert_eq!(f.segment_index, 0);
    }

    #[test]
    fn raycast_half_width_and_open_axis() {
        let m = straight(100.0, 3.3);
        let o = Vec2::new(50.0, 0.0);
        assert!((m.raycast(o, FRAC_PI_2, 8.0).unwrap().unwrap() - 1.65).abs() < 1e-12);
        assert!((m.raycast(o, -FRAC_PI_2, 8.0).unwrap().unwrap() - 1.65).abs() < 1e-12);
        assert_eq!(m.raycast(o, 0.0, 10.0).unwrap(), None);
        assert!(m.raycast(Vec2::new(50.0, 5.0), 0.0, 10.0).is_err());
    }

    #[test]
    fn raycast_hits_obstacle_box() {
        let m = straight(100.0, 3.3)
            .with_obstacles(vec![Obstacle {
                region: Aabb::new(Vec2::new(52.0, -0.5), Vec2::new(53.0, 0.5)),
            }])
            .unwrap();
        let r = m.raycast(Vec2::new(50.0, 0.0), 0.0, 10.0).unwrap().unwrap();
        assert!((r - 2.0).abs() < 1e-9);
        assert!(m.raycast(Vec2::new(52.5, 0.0), 0.0, 10.0).is_err());
    }

    #[test]
    fn raycast_end_cap() {
        let m = straight(10.0, 3.3);
        let r = m.raycast(Vec2::new(7.0, 0.0), 0.0, 8.0).unwrap().unwrap();
        assert!((r - 3.0).abs() < 1e-12);
        let r = m.raycast(Vec2::new(7.0, 0.0), PI, 8.0).unwrap().unwrap();
        assert!((r - 7.0).abs() < 1e-12);
    }

    #[test]
    fn toml_round_trip() {
        let m = build_s_track(3.3, 8.0)
            .unwrap()
            .with_artifacts(vec![ArtifactPlacement {
                id: "bp-1".into(),
                class: ArtifactClass::Backpack,
                position: Vec3::new(4.0, 1.0, 0.3),
            }])
            .unwrap()
            .with_airflow(vec![AirflowZone {
                region: Aabb::new(Vec2::new(0.0, -2.0), Vec2::new(8.0, 2.0)),
                velocity: Vec2::new(1.2, 0.0),
            }])
            .unwrap();
        let text = m.to_toml_string();
        assert!(text.contains("fire") || text.contains("backpack"));
        let back = TunnelMap::from_toml_str(&text).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn rejects_excess_airflow() {
        let err = straight(10.0, 3.0).with_airflow(vec![AirflowZone {
            region: Aabb::new(Vec2::new(0.0, -2.0), Vec2::new(8.0, 2.0)),
            velocity: Vec2::new(6.0, 0.0),
        }]);
        assert!(err.is_err());
    }

    #[test]
    fn reference_points_lie_on_midline() {
        let m = build_s_track(3.3, 10.0).unwrap();
        let refs = m.reference_points(5);
        assert_eq!(refs.len(), 5);
        for p in refs {
            assert!(m.centerline_frame(p).unwrap().d.abs() < 1e-9);
        }
    }
}
