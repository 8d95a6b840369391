//! Pose sensing with optional Gaussian noise.

use nalgebra::{UnitQuaternion, Vector3};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::robot::BaseState;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct PoseNoise {
    /// Per-axis position standard deviation (m).
    pub sigma_pos: f64,
    /// Per-axis small-angle orientation standard deviation (rad).
    pub sigma_rot: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoseEstimate {
    pub position: Vector3<f64>,
    pub orientation: UnitQuaternion<f64>,
}

impl PoseEstimate {
    /// `[x, y, z, qx, qy, qz, qw]`.
    pub fn to_array(&self) -> [f64; 7] {
        let q = self.orientation.as_ref();
        [self.position.x, self.position.y, self.position.z, q.i, q.j, q.k, q.w]
    }
}

/// True pose, perturbed when the noise model is non-zero. The generator is
/// not touched when noise is off.
pub fn sense_pose(base: &BaseState, noise: &PoseNoise, rng: &mut impl Rng) -> PoseEstimate {
    let mut position = base.position;
    let mut orientation = base.orientation;
    if noise.sigma_pos > 0.0 {
        let n = Normal::new(0.0, noise.sigma_pos).expect("finite sigma");
        position += Vector3::new(n.sample(rng), n.sample(rng), n.sample(rng));
    }
    if noise.sigma_rot > 0.0 {
        let n = Normal::new(0.0, noise.sigma_rot).expect("finite sigma");
        let delta = Vector3::new(n.sample(rng), n.sample(rng), n.sample(rng));
        orientation = UnitQuaternion::from_scaled_axis(delta) * orientation;
    }
    PoseEstimate { position, orientation }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn noise_off_is_identity() {
        let b = BaseState::at(Vector3::new(1.0, 2.0, 0.37), 0.3);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let p = sense_pose(&b, &PoseNoise::default(), &mut rng);
        assert_eq!(p.position, b.position);
        assert_eq!(p.orientation, b.orientation);
    }

    #[test]
    fn position_noise_has_requested_spread() {
        let b = BaseState::at(Vector3::zeros(), 0.0);
        let noise = PoseNoise { sigma_pos: 0.01, sigma_rot: 0.02 };
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = 10_000;
        let xs: Vec<f64> = (0..n)
            .map(|_| {
                let p = sense_pose(&b, &noise, &mut rng);
                assert!((p.orientation.as_ref().norm() - 1.0).abs() < 1e-12);
                p.position.x
            })
            .collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!((var.sqrt() - 0.01).abs() < 0.0015);
    }
}
