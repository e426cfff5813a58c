//! Forward depth camera reduced to a horizontal range slice, and the
//! downward altimeter.

use crate::rng::rng_from;
use crate::vehicle::BlimpState;
use crate::world::TunnelMap;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

/// Shortest range a noisy beam may report (m).
const MIN_RANGE: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RangeScan {
    /// Beam angles relative to the body forward axis, ascending (rad).
    pub angles: Vec<f64>,
    pub ranges: Vec<Option<f64>>,
    pub timestamp: f64,
    pub fov: f64,
    pub max_range: f64,
}

impl RangeScan {
    pub fn len(&self) -> usize {
        self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles.is_empty()
    }

    pub fn beams(&self) -> impl Iterator<Item = (f64, Option<f64>)> + '_ {
        self.angles.iter().copied().zip(self.ranges.iter().copied())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AltitudeReading {
    pub altitude: f64,
    pub valid: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SensorParams {
    pub fov: f64,
    pub n_rays: usize,
    pub max_range: f64,
    pub depth_noise: f64,
    pub altimeter_noise: f64,
    pub altimeter_dropout: f64,
}

impl Default for SensorParams {
    fn default() -> Self {
        Self {
            fov: std::f64::consts::FRAC_PI_2,
            n_rays: 64,
            max_range: 8.0,
            depth_noise: 0.0,
            altimeter_noise: 0.0,
            altimeter_dropout: 0.0,
        }
    }
}

impl SensorParams {
    pub fn validate(&self) -> Result<(), String> {
        if self.n_rays < 8 {
            return Err(format!("n_rays {} must be at least 8", self.n_rays));
        }
        if !(self.fov > 0.0 && self.fov <= std::f64::consts::PI) {
            return Err(format!("fov {} must lie in (0, π]", self.fov));
        }
        if !(self.max_range > 0.0 && self.max_range.is_finite()) {
            return Err("max_range must be positive".into());
        }
        if !(self.depth_noise >= 0.0 && self.altimeter_noise >= 0.0) {
            return Err("noise sigmas must be non-negative".into());
        }
        if !(0.0..=1.0).contains(&self.altimeter_dropout) {
            return Err("altimeter_dropout must lie in [0, 1]".into());
        }
        Ok(())
    }
}

/// `n` evenly spaced angles from −fov/2 to +fov/2 inclusive.
pub fn beam_angles(fov: f64, n: usize) -> Vec<f64> {
    let half = fov / 2.0;
    (0..n).map(|i| -half + fov * i as f64 / (n - 1) as f64).collect()
}

/// Simulated horizontal depth slice from the blimp's current pose.
///
/// A blimp outside the tunnel gets a faulted scan where every beam is `None`.
pub fn depth_scan(
    map: &TunnelMap,
    state: &BlimpState,
    fov: f64,
    n_rays: usize,
    max_range: f64,
    noise_sigma: f64,
    rng_seed: u64,
) -> RangeScan {
    assert!(n_rays >= 8, "depth_scan needs at least 8 rays");
    assert!(fov > 0.0 && fov <= std::f64::consts::PI, "fov must lie in (0, π]");
    let angles = beam_angles(fov, n_rays);
    let origin = state.position.xy();
    let ranges = if map.contains(origin) {
        let mut rng = rng_from(rng_seed);
        let noise = (noise_sigma > 0.0).then(|| Normal::new(0.0, noise_sigma).expect("sigma > 0"));
        angles
            .iter()
            .map(|&a| {
                let hit = map.raycast_unchecked(origin, state.yaw + a, max_range)?;
                match &noise {
                    Some(n) => {
                        let r = hit + n.sample(&mut rng);
                        Some(r.clamp(MIN_RANGE, max_range))
                    }
                    None => Some(hit),
                }
            })
            .collect()
    } else {
        vec![None; n_rays]
    };
    RangeScan {
        angles,
        ranges,
        timestamp: state.time,
        fov,
        max_range,
    }
}

pub fn altimeter(state: &BlimpState, noise_sigma: f64, dropout_prob: f64, rng_seed: u64) -> AltitudeReading {
    let mut rng = rng_from(rng_seed);
    let dropped = dropout_prob > 0.0 && rng.random::<f64>() < dropout_prob;
    let noise = if noise_sigma > 0.0 {
        Normal::new(0.0, noise_sigma).expect("sigma > 0").sample(&mut rng)
    } else {
        0.0
    };
    if dropped {
        return AltitudeReading {
            altitude: 0.0,
            valid: false,
        };
    }
    AltitudeReading {
        altitude: (state.position.z + noise).max(0.0),
        valid: true,
    }
}
