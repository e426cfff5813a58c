//! Independent reference implementations used as test oracles.
#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use tunnel_blimp::control::ModeKind;
use tunnel_blimp::harness::{CornerZone, Metrics};
use tunnel_blimp::runlog::PoseSample;
use tunnel_blimp::sensors::RangeScan;
use tunnel_blimp::Actuation;

/// Closest return per eighth of the field of view, found by scanning every
/// beam once per bin. `(bin, range, bearing)` for non-empty bins only.
pub fn brute_force_bins(scan: &RangeScan) -> Vec<(u8, f64, f64)> {
    let width = scan.fov / 8.0;
    let mut out = Vec::new();
    for bin in 0..8u8 {
        let lo = -scan.fov / 2.0 + bin as f64 * width;
        let mut best: Option<(f64, f64)> = None;
        for (i, &angle) in scan.angles.iter().enumerate() {
            let Some(r) = scan.ranges[i] else { continue };
            let mut b = ((angle - (-scan.fov / 2.0)) / width).floor() as i64;
            b = b.clamp(0, 7);
            if b != bin as i64 || !r.is_finite() {
                continue;
            }
            debug_assert!(angle >= lo - 1e-9);
            match best {
                Some((cur, _)) if cur <= r => {}
                _ => best = Some((r, angle)),
            }
        }
        if let Some((r, a)) = best {
            out.push((bin, r, a));
        }
    }
    out
}

pub fn random_scan(rng: &mut ChaCha8Rng) -> RangeScan {
    let fov = rng.random_range(0.5..=std::f64::consts::PI);
    let n = rng.random_range(8..=96);
    let mut angles: Vec<f64> = (0..n).map(|_| rng.random_range(-fov / 2.0..=fov / 2.0)).collect();
    angles.sort_by(f64::total_cmp);
    let empty_from = rng.random_range(0.0..1.0);
    let ranges = angles
        .iter()
        .map(|&a| {
            // Leave whole stretches empty so some bins have no returns.
            let frac = (a + fov / 2.0) / fov;
            if frac > empty_from && frac < empty_from + 0.3 || rng.random_bool(0.1) {
                None
            } else {
                Some(rng.random_range(0.05..8.0))
            }
        })
        .collect();
    RangeScan {
        angles,
        ranges,
        timestamp: rng.random_range(0.0..1000.0),
        fov,
        max_range: 8.0,
    }
}

/// Metrics recomputed with plain loops.
pub fn brute_force_metrics(poses: &[PoseSample], refs: &[(f64, f64)], zones: &[CornerZone]) -> Metrics {
    let mut errs = Vec::new();
    for &(rx, ry) in refs {
        let mut best = f64::MAX;
        for p in poses {
            let d = ((p.x - rx) * (p.x - rx) + (p.y - ry) * (p.y - ry)).sqrt();
            if d < best {
                best = d;
            }
        }
        errs.push(best);
    }
    let mean = errs.iter().sum::<f64>() / errs.len() as f64;
    let mut var = 0.0;
    for e in &errs {
        var += (e - mean) * (e - mean);
    }
    var /= errs.len() as f64;

    let mut dist = 0.0;
    for i in 1..poses.len() {
        dist += ((poses[i].x - poses[i - 1].x).powi(2) + (poses[i].y - poses[i - 1].y).powi(2)).sqrt();
    }

    let mut m = Metrics {
        trajectory_error_mean: mean,
        trajectory_error_std: var.sqrt(),
        duration: poses.last().unwrap().t - poses[0].t,
        collision_count: poses.last().unwrap().collisions - poses[0].collisions,
        distance_covered: dist,
        ..Metrics::default()
    };
    for z in zones {
        let mut entered = None;
        for (i, p) in poses.iter().enumerate() {
            if p.station >= z.start && p.station <= z.end {
                entered = Some(i);
                break;
            }
        }
        let Some(start) = entered else { continue };
        m.corners_encountered += 1;
        let mut helped = false;
        let mut exited = false;
        let mut prev_mode = None;
        for p in &poses[start..] {
            if p.station > z.end {
                exited = true;
                break;
            }
            if p.mode == ModeKind::Stuck {
                helped = true;
            }
            if p.mode == ModeKind::Teleop && prev_mode.is_some_and(|m| m != ModeKind::Teleop) {
                helped = true;
            }
            prev_mode = Some(p.mode);
        }
        if !exited {
            m.corners_unrecovered += 1;
        } else if helped {
            m.corners_recovered += 1;
        } else {
            m.corners_traversed_auto += 1;
        }
    }
    m
}

/// A short random walk with random modes and monotone collision counts.
pub fn random_log(rng: &mut ChaCha8Rng) -> (Vec<PoseSample>, Vec<(f64, f64)>, Vec<CornerZone>) {
    const MODES: [ModeKind; 5] = [
        ModeKind::Auto,
        ModeKind::Degraded,
        ModeKind::Stuck,
        ModeKind::Teleop,
        ModeKind::Idle,
    ];
    let n = rng.random_range(1..60);
    let (mut x, mut y, mut s, mut t) = (0.0, 0.0, 0.0, rng.random_range(0.0..10.0));
    let mut collisions = rng.random_range(0..3);
    let mut mode = ModeKind::Auto;
    let mut poses = Vec::with_capacity(n);
    for _ in 0..n {
        poses.push(PoseSample {
            t,
            x,
            y,
            z: 0.6,
            yaw: 0.0,
            station: s,
            v_forward: 0.0,
            collisions,
            mode,
            nav_d: 0.0,
            nav_phi: 0.0,
            nav_confidence: 1.0,
            actuation: Actuation::ZERO,
        });
        t += rng.random_range(0.01..1.0);
        let step = rng.random_range(-0.2..1.0);
        x += step;
        y += rng.random_range(-0.5..0.5);
        s += step;
        if rng.random_bool(0.05) {
            collisions += 1;
        }
        if rng.random_bool(0.15) {
            mode = MODES[rng.random_range(0..MODES.len())];
        }
    }
    let refs = (0..rng.random_range(1..8))
        .map(|_| (rng.random_range(-2.0..20.0), rng.random_range(-3.0..3.0)))
        .collect();
    let zones = (0..rng.random_range(0..5))
        .map(|_| {
            let start = rng.random_range(-2.0..25.0);
            CornerZone {
                start,
                end: start + rng.random_range(0.5..4.0),
            }
        })
        .collect();
    (poses, refs, zones)
}

pub fn metrics_match(a: &Metrics, b: &Metrics, tol: f64) -> bool {
    (a.trajectory_error_mean - b.trajectory_error_mean).abs() <= tol
        && (a.trajectory_error_std - b.trajectory_error_std).abs() <= tol
        && (a.duration - b.duration).abs() <= tol
        && (a.distance_covered - b.distance_covered).abs() <= tol
        && a.collision_count == b.collision_count
        && a.corners_encountered == b.corners_encountered
        && a.corners_traversed_auto == b.corners_traversed_auto
        && a.corners_recovered == b.corners_recovered
        && a.corners_unrecovered == b.corners_unrecovered
}
