//! Wall-based navigation state estimation.
//!
//! A range slice is projected onto the ground plane, straight wall pieces are
//! pulled out with sequential RANSAC, each piece is labelled left, right or
//! front, and the labelled walls are turned into the tunnel-following state
//! ⟨d, φ⟩.
//!
//! Conventions: body frame has +x forward and +y to the left. `d` is positive
//! when the blimp sits left of the tunnel center; `phi` is the blimp heading
//! minus the tunnel axis heading, so a blimp yawed to the left of the axis has
//! positive `phi`.

use crate::geometry::Vec2;
use crate::rng::rng_from;
use crate::sensors::RangeScan;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NavState {
    pub d: f64,
    pub phi: f64,
    pub confidence: f64,
    pub timestamp: f64,
    /// Perpendicular distance to the closest front wall, if one was seen.
    #[serde(default)]
    pub front_distance: Option<f64>,
    #[serde(default)]
    pub left_visible: bool,
    #[serde(default)]
    pub right_visible: bool,
}

impl NavState {
    pub fn lost(timestamp: f64) -> Self {
        Self {
            d: 0.0,
            phi: 0.0,
            confidence: 0.0,
            timestamp,
            front_distance: None,
            left_visible: false,
            right_visible: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WallClass {
    Left,
    Right,
    Front,
    Unknown,
}

/// A straight wall piece in the body frame, in normal form
/// `(-sin a, cos a) · p = intercept` with `a = slope_angle`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WallLine {
    /// Direction of the line, normalized to (−π/2, π/2].
    pub slope_angle: f64,
    /// Signed perpendicular distance from the body origin.
    pub intercept: f64,
    /// Inlier projections onto the line direction, min and max.
    pub extent: [f64; 2],
    pub class: WallClass,
    pub inlier_count: usize,
}

impl WallLine {
    pub fn normal(&self) -> Vec2 {
        Vec2::new(-self.slope_angle.sin(), self.slope_angle.cos())
    }

    /// Foot of the perpendicular from the body origin.
    pub fn foot(&self) -> Vec2 {
        self.normal() * self.intercept
    }

    pub fn length(&self) -> f64 {
        self.extent[1] - self.extent[0]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LineParams {
    pub ransac_iters: usize,
    pub inlier_tol: f64,
    pub min_inliers: usize,
    pub min_length: f64,
    pub max_lines: usize,
}

impl Default for LineParams {
    fn default() -> Self {
        Self {
            ransac_iters: 200,
            inlier_tol: 0.05,
            min_inliers: 8,
            min_length: 0.5,
            max_lines: 6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PerceptionParams {
    pub lines: LineParams,
    pub side_angle_tol: f64,
    pub front_angle_tol: f64,
    pub nominal_width: f64,
}

impl Default for PerceptionParams {
    fn default() -> Self {
        Self {
            lines: LineParams::default(),
            side_angle_tol: 30f64.to_radians(),
            front_angle_tol: 30f64.to_radians(),
            nominal_width: 3.3,
        }
    }
}

/// Finite beams in body-frame Cartesian coordinates; `None` beams are skipped.
pub fn project_to_plane(scan: &RangeScan) -> Vec<Vec2> {
    scan.beams()
        .filter_map(|(a, r)| r.map(|r| Vec2::new(r * a.cos(), r * a.sin())))
        .collect()
}

fn normalize_direction(a: f64) -> f64 {
    let mut a = a.rem_euclid(PI);
    if a > FRAC_PI_2 {
        a -= PI;
    }
    a
}

/// Total-least-squares line through `pts`: (slope_angle, intercept).
fn fit_line(pts: &[Vec2]) -> (f64, f64) {
    let n = pts.len() as f64;
    let cx = pts.iter().map(|p| p.x).sum::<f64>() / n;
    let cy = pts.iter().map(|p| p.y).sum::<f64>() / n;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for p in pts {
        let (dx, dy) = (p.x - cx, p.y - cy);
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    let a = normalize_direction(0.5 * (2.0 * sxy).atan2(sxx - syy));
    let normal = Vec2::new(-a.sin(), a.cos());
    (a, normal.dot(Vec2::new(cx, cy)))
}

fn line_through(p: Vec2, q: Vec2) -> (f64, f64) {
    let a = normalize_direction((q - p).angle());
    let normal = Vec2::new(-a.sin(), a.cos());
    (a, normal.dot(p))
}

fn inliers_of(pts: &[Vec2], line: (f64, f64), tol: f64) -> Vec<usize> {
    let normal = Vec2::new(-line.0.sin(), line.0.cos());
    pts.iter()
        .enumerate()
        .filter(|(_, p)| (normal.dot(**p) - line.1).abs() <= tol)
        .map(|(i, _)| i)
        .collect()
}

/// Greedy sequential RANSAC. Each round keeps the two-point hypothesis with
/// the most inliers, refits it by total least squares, and removes its
/// inliers from the pool. Pieces shorter than `min_length` are dropped.
pub fn extract_lines(points: &[Vec2], params: &LineParams, rng_seed: u64) -> Vec<WallLine> {
    let mut rng = rng_from(rng_seed);
    let mut pool: Vec<Vec2> = points.to_vec();
    let mut lines = Vec::new();
    let min_inliers = params.min_inliers.max(2);

    while pool.len() >= min_inliers && lines.len() < params.max_lines {
        let mut best: Vec<usize> = Vec::new();
        for _ in 0..params.ransac_iters {
            let i = rng.random_range(0..pool.len());
            let j = rng.random_range(0..pool.len());
            if i == j || pool[i].distance(pool[j]) < 1e-9 {
                continue;
            }
            let inl = inliers_of(&pool, line_through(pool[i], pool[j]), params.inlier_tol);
            if inl.len() > best.len() {
                best = inl;
            }
        }
        if best.len() < min_inliers {
            break;
        }
        let support: Vec<Vec2> = best.iter().map(|&i| pool[i]).collect();
        let mut line = fit_line(&support);
        let refined = inliers_of(&pool, line, params.inlier_tol);
        if refined.len() >= best.len() {
            best = refined;
            let support: Vec<Vec2> = best.iter().map(|&i| pool[i]).collect();
            line = fit_line(&support);
        }

        let dir = Vec2::from_angle(line.0);
        let (lo, hi) = best
            .iter()
            .map(|&i| pool[i].dot(dir))
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), t| (lo.min(t), hi.max(t)));
        let count = best.len();
        let mut k = 0;
        pool.retain(|_| {
            let keep = best.binary_search(&k).is_err();
            k += 1;
            keep
        });
        if hi - lo >= params.min_length {
            lines.push(WallLine {
                slope_angle: line.0,
                intercept: line.1,
                extent: [lo, hi],
                class: WallClass::Unknown,
                inlier_count: count,
            });
        }
    }
    lines
}

/// Labels each line as a side wall (nearly parallel to the forward axis) or a
/// front wall (nearly perpendicular and ahead of the blimp).
pub fn classify_walls(lines: &[WallLine], front_angle_tol: f64, side_angle_tol: f64) -> Vec<WallLine> {
    lines
        .iter()
        .map(|l| {
            let a = normalize_direction(l.slope_angle);
            let class = if a.abs() <= side_angle_tol {
                if l.intercept > 0.0 {
                    WallClass::Left
                } else if l.intercept < 0.0 {
                    WallClass::Right
                } else {
                    WallClass::Unknown
                }
            } else if a.abs() >= FRAC_PI_2 - front_angle_tol && l.foot().x > 0.0 {
                WallClass::Front
            } else {
                WallClass::Unknown
            };
            WallLine { class, ..*l }
        })
        .collect()
}

fn strongest(walls: &[WallLine], class: WallClass) -> Option<&WallLine> {
    walls.iter().filter(|w| w.class == class).max_by_key(|w| w.inlier_count)
}

/// Lateral slack when deciding whether a front wall spans the forward axis (m).
const FRONT_SPAN_MARGIN: f64 = 0.5;

/// Distance along the forward axis to `w`, if its observed extent crosses
/// the axis. Front walls off to one side (e.g. the inner wall of a side
/// passage) do not block.
fn blocking_distance(w: &WallLine) -> Option<f64> {
    let dir = Vec2::from_angle(w.slope_angle);
    let foot = w.foot();
    if dir.y.abs() < 1e-9 {
        return None;
    }
    let t = -foot.y / dir.y;
    (t >= w.extent[0] - FRONT_SPAN_MARGIN && t <= w.extent[1] + FRONT_SPAN_MARGIN)
        .then_some(foot.x + dir.x * t)
        .filter(|&x| x > 0.0)
}

/// Navigation state from classified walls.
///
/// Both side walls average their headings and split the offset; a single side
/// wall infers the offset from `nominal_width` at half confidence; no side
/// wall yields confidence 0.
pub fn estimate_state(walls: &[WallLine], nominal_width: f64, timestamp: f64) -> NavState {
    let left = strongest(walls, WallClass::Left);
    let right = strongest(walls, WallClass::Right);
    let front_distance = walls
        .iter()
        .filter(|w| w.class == WallClass::Front)
        .filter_map(blocking_distance)
        .min_by(f64::total_cmp);
    let half = nominal_width / 2.0;
    let (d, phi, confidence) = match (left, right) {
        (Some(l), Some(r)) => (
            (r.intercept.abs() - l.intercept.abs()) / 2.0,
            -(l.slope_angle + r.slope_angle) / 2.0,
            1.0,
        ),
        (Some(l), None) => (half - l.intercept.abs(), -l.slope_angle, 0.5),
        (None, Some(r)) => (r.intercept.abs() - half, -r.slope_angle, 0.5),
        (None, None) => (0.0, 0.0, 0.0),
    };
    NavState {
        d,
        phi,
        confidence,
        timestamp,
        front_distance,
        left_visible: left.is_some(),
        right_visible: right.is_some(),
    }
}

/// Full pipeline: scan → points → lines → classes → state.
pub fn perceive(scan: &RangeScan, params: &PerceptionParams, rng_seed: u64) -> (NavState, Vec<WallLine>) {
    let pts = project_to_plane(scan);
    let lines = extract_lines(&pts, &params.lines, rng_seed);
    let walls = classify_walls(&lines, params.front_angle_tol, params.side_angle_tol);
    (estimate_state(&walls, params.nominal_width, scan.timestamp), walls)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(a: f64, c: f64, class: WallClass) -> WallLine {
        WallLine {
            slope_angle: a,
            intercept: c,
            extent: [0.0, 3.0],
            class,
            inlier_count: 20,
        }
    }

    #[test]
    fn projection() {
        let scan = RangeScan {
            angles: vec![0.0, FRAC_PI_2, 0.3],
            ranges: vec![Some(2.0), Some(1.65), None],
            timestamp: 0.0,
            fov: PI,
            max_range: 8.0,
        };
        let p = project_to_plane(&scan);
        assert_eq!(p.len(), 2);
        assert_eq!(p[0], Vec2::new(2.0, 0.0));
        assert!(p[1].x.abs() < 1e-15 && (p[1].y - 1.65).abs() < 1e-15);

        let empty = RangeScan {
            ranges: vec![None; 3],
            ..scan
        };
        assert!(project_to_plane(&empty).is_empty());
    }

    #[test]
    fn single_collinear_line() {
        let pts: Vec<Vec2> = (0..30).map(|i| Vec2::new(0.1 * i as f64, 1.2)).collect();
        let lines = extract_lines(&pts, &LineParams::default(), 3);
        assert_eq!(lines.len(), 1);
        assert_eq!(lines[0].inlier_count, 30);
        assert!(lines[0].slope_angle.abs() < 1e-9);
        assert!((lines[0].intercept - 1.2).abs() < 1e-9);
    }

    #[test]
    fn perpendicular_corner_gives_two_lines() {
        let mut pts: Vec<Vec2> = (0..30).map(|i| Vec2::new(0.1 * i as f64, 1.5)).collect();
        pts.extend((0..30).map(|i| Vec2::new(3.5, 1.4 - 0.1 * i as f64)));
        let lines = extract_lines(&pts, &LineParams::default(), 11);
        assert_eq!(lines.len(), 2);
        let total: usize = lines.iter().map(|l| l.inlier_count).sum();
        assert_eq!(total, 60);
    }

    #[test]
    fn too_few_points_yield_nothing() {
        let pts = [
            Vec2::new(0.3, 1.0),
            Vec2::new(2.0, -0.4),
            Vec2::new(1.1, 3.0),
            Vec2::new(-0.5, 0.2),
            Vec2::new(4.0, 4.4),
        ];
        let params = LineParams {
            min_inliers: 10,
            ..Default::default()
        };
        assert!(extract_lines(&pts, &params, 0).is_empty());
    }

    #[test]
    fn classification_cases() {
        let tol = 20f64.to_radians();
        let c = classify_walls(
            &[
                line(0.0, 1.6, WallClass::Unknown),
                line(0.0, -1.6, WallClass::Unknown),
                line(FRAC_PI_2, -3.0, WallClass::Unknown),
                line(FRAC_PI_2, 3.0, WallClass::Unknown),
                line(PI / 4.0, 1.0, WallClass::Unknown),
            ],
            tol,
            tol,
        );
        assert_eq!(c[0].class, WallClass::Left);
        assert_eq!(c[1].class, WallClass::Right);
        assert_eq!(c[2].class, WallClass::Front);
        assert!((c[2].foot().x - 3.0).abs() < 1e-12);
        assert_eq!(c[3].class, WallClass::Unknown, "wall behind is not a front wall");
        assert_eq!(c[4].class, WallClass::Unknown);
    }

    #[test]
    fn centered_estimate() {
        let s = estimate_state(
            &[line(0.0, 1.65, WallClass::Left), line(0.0, -1.65, WallClass::Right)],
            3.3,
            0.0,
        );
        assert_eq!((s.d, s.phi, s.confidence), (0.0, 0.0, 1.0));
    }

    #[test]
    fn displaced_estimate() {
        let s = estimate_state(
            &[line(0.0, 1.15, WallClass::Left), line(0.0, -2.15, WallClass::Right)],
            3.3,
            0.0,
        );
        assert!((s.d - 0.5).abs() < 1e-12);
        let one = estimate_state(&[line(0.0, 1.15, WallClass::Left)], 3.3, 0.0);
        assert!((one.d - 0.5).abs() < 1e-12);
        assert_eq!(one.confidence, 0.5);
        let none = estimate_state(&[line(FRAC_PI_2, -2.0, WallClass::Front)], 3.3, 0.0);
        assert_eq!(none.confidence, 0.0);
        assert_eq!(none.front_distance, Some(2.0));
    }

    #[test]
    fn extraction_is_seeded() {
        let mut pts: Vec<Vec2> = (0..25).map(|i| Vec2::new(0.15 * i as f64, 1.5)).collect();
        pts.extend((0..25).map(|i| Vec2::new(0.15 * i as f64, -1.8)));
        let a = extract_lines(&pts, &LineParams::default(), 5);
        let b = extract_lines(&pts, &LineParams::default(), 5);
        assert_eq!(a, b);
    }
}
