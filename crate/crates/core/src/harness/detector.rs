//! Stand-in for the onboard object detector: geometry decides what is
//! visible, fixed rates decide what gets reported.

use crate::geometry::{wrap_angle, Vec2, Vec3};
use crate::rng::rng_from;
use crate::runlog::Detection;
use crate::vehicle::BlimpState;
use crate::world::{ArtifactClass, ArtifactPlacement, TunnelMap};
use rand::Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DetectorModel {
    pub max_range: f64,
    pub fov: f64,
    /// Probability an in-view artifact is reported on a given tick.
    pub tp_rate: f64,
    pub fp_rate_per_min: f64,
    /// Standard deviation of the reported position, per axis (m).
    pub position_noise: f64,
}

impl Default for DetectorModel {
    fn default() -> Self {
        Self::mobilenet_ssd()
    }
}

impl DetectorModel {
    /// The stronger of the two evaluated networks (AP 0.74).
    pub fn mobilenet_ssd() -> Self {
        Self {
            max_range: 6.0,
            fov: 69f64.to_radians(),
            tp_rate: 0.74,
            fp_rate_per_min: 0.2,
            position_noise: 0.3,
        }
    }

    /// Smaller, noisier network (AP 0.48) with more false positives.
    pub fn tiny_yolo() -> Self {
        Self {
            tp_rate: 0.48,
            fp_rate_per_min: 1.5,
            ..Self::mobilenet_ssd()
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(0.0..=1.0).contains(&self.tp_rate) {
            return Err("tp_rate must lie in [0, 1]".into());
        }
        if !(self.fp_rate_per_min >= 0.0) || !(self.position_noise >= 0.0) {
            return Err("fp_rate_per_min and position_noise must be non-negative".into());
        }
        if !(self.max_range > 0.0 && self.fov > 0.0 && self.fov <= std::f64::consts::TAU) {
            return Err("max_range must be positive and fov in (0, 2π]".into());
        }
        Ok(())
    }

    /// Whether `artifact` is within range and field of view with a clear
    /// line of sight from the blimp.
    pub fn in_view(&self, state: &BlimpState, map: &TunnelMap, artifact: &ArtifactPlacement) -> bool {
        let origin = state.position.xy();
        let offset = artifact.position.xy() - origin;
        let dist = offset.norm();
        if dist > self.max_range {
            return false;
        }
        if dist < 1e-9 {
            return true;
        }
        let bearing = offset.angle();
        if wrap_angle(bearing - state.yaw).abs() > self.fov / 2.0 {
            return false;
        }
        match map.raycast(origin, bearing, dist) {
            Ok(hit) => hit.is_none_or(|r| r >= dist - 1e-6),
            Err(_) => false,
        }
    }
}

/// Detections produced during one tick of length `dt`.
pub fn simulate_detections(
    state: &BlimpState,
    map: &TunnelMap,
    model: &DetectorModel,
    dt: f64,
    rng_seed: u64,
) -> Vec<Detection> {
    let mut rng = rng_from(rng_seed);
    let noise = (model.position_noise > 0.0).then(|| Normal::new(0.0, model.position_noise).expect("sigma > 0"));
    let jitter = |p: Vec3, rng: &mut rand_chacha::ChaCha8Rng| match &noise {
        Some(n) => Vec3::new(p.x + n.sample(rng), p.y + n.sample(rng), p.z + n.sample(rng)),
        None => p,
    };
    let mut out = Vec::new();
    for artifact in map.artifacts() {
        if model.in_view(state, map, artifact) && rng.random::<f64>() < model.tp_rate {
            out.push(Detection {
                class: artifact.class,
                position: jitter(artifact.position, &mut rng),
                time: state.time,
                artifact_id: Some(artifact.id.clone()),
            });
        }
    }
    let lambda = model.fp_rate_per_min * dt / 60.0;
    if lambda > 0.0 {
        let n = Poisson::new(lambda).expect("lambda > 0").sample(&mut rng) as usize;
        for _ in 0..n {
            let bearing = state.yaw + rng.random_range(-model.fov / 2.0..=model.fov / 2.0);
            let range = rng.random_range(0.5..=model.max_range.max(0.5));
            let range = map
                .raycast(state.position.xy(), bearing, range)
                .ok()
                .flatten()
                .unwrap_or(range);
            let p = state.position.xy() + Vec2::from_angle(bearing) * range;
            let class = ArtifactClass::ALL[rng.random_range(0..ArtifactClass::ALL.len())];
            out.push(Detection {
                class,
                position: jitter(Vec3::new(p.x, p.y, rng.random_range(0.0..2.0)), &mut rng),
                time: state.time,
                artifact_id: None,
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::TunnelMap;

    fn corridor_with(artifacts: Vec<ArtifactPlacement>) -> TunnelMap {
        TunnelMap::from_centerline(&[Vec2::new(0.0, 0.0), Vec2::new(30.0, 0.0)], 3.3, 2.5)
            .unwrap()
            .with_artifacts(artifacts)
            .unwrap()
    }

    fn artifact(x: f64, y: f64) -> ArtifactPlacement {
        ArtifactPlacement {
            id: "a".into(),
            class: ArtifactClass::Backpack,
            position: Vec3::new(x, y, 0.3),
        }
    }

    fn exact() -> DetectorModel {
        DetectorModel {
            tp_rate: 1.0,
            fp_rate_per_min: 0.0,
            position_noise: 0.0,
            ..DetectorModel::mobilenet_ssd()
        }
    }

    #[test]
    fn in_view_with_perfect_detector_is_exact() {
        let map = corridor_with(vec![artifact(5.0, 0.5)]);
        let state = BlimpState::at_rest(Vec3::new(2.0, 0.0, 0.6), 0.0);
        let d = simulate_detections(&state, &map, &exact(), 0.05, 1);
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].position, Vec3::new(5.0, 0.5, 0.3));
        assert_eq!(d[0].artifact_id.as_deref(), Some("a"));
    }

    #[test]
    fn behind_wall_never_detected() {
        let map = TunnelMap::from_centerline(
            &[Vec2::new(0.0, 0.0), Vec2::new(10.0, 0.0), Vec2::new(10.0, 10.0)],
            3.3,
            2.5,
        )
        .unwrap()
        .with_artifacts(vec![artifact(10.0, 4.0)])
        .unwrap();
        // Facing the artifact through the inner corner wall.
        let state = BlimpState::at_rest(Vec3::new(5.0, 0.0, 0.6), (4.0f64).atan2(5.0));
        assert!(!exact().in_view(&state, &map, &map.artifacts()[0]));
        for seed in 0..200 {
            assert!(simulate_detections(&state, &map, &exact(), 0.05, seed).is_empty());
        }
    }

    #[test]
    fn outside_fov_or_range() {
        let map = corridor_with(vec![artifact(5.0, 0.0)]);
        let model = exact();
        let behind = BlimpState::at_rest(Vec3::new(7.0, 0.0, 0.6), 0.0);
        assert!(!model.in_view(&behind, &map, &map.artifacts()[0]));
        let far = BlimpState::at_rest(Vec3::new(5.0 - 6.5, 0.0, 0.6), 0.0);
        assert!(!model.in_view(&far, &map, &map.artifacts()[0]));
    }

    #[test]
    fn false_positive_rate() {
        let map = corridor_with(vec![]);
        let state = BlimpState::at_rest(Vec3::new(2.0, 0.0, 0.6), 0.0);
        let model = DetectorModel {
            fp_rate_per_min: 60.0,
            ..exact()
        };
        let n: usize = (0..4000)
            .map(|s| simulate_detections(&state, &map, &model, 0.05, s).len())
            .sum();
        // λ = 0.05 per tick → expect 200.
        assert!((160..=240).contains(&n), "{n}");
    }
}
