//! Low-accuracy arm model.
//!
//! The arm reports exactly what it was commanded, but realizes the command
//! with a per-trial systematic offset (resampled every trial, so the error
//! is not learnable across trials) plus fresh per-command jitter.
//! Orientation is realized exactly; the error budget is translational.

use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, UnitBall, UnitSphere};

use crate::geometry::Vec3;

#[derive(Debug, Clone)]
pub struct ArmModel {
    systematic_offset: Vec3,
    jitter_sigma: f64,
}

impl ArmModel {
    /// Draws a fresh arm for one trial: systematic offset uniform in the
    /// ball of radius `offset_radius`.
    pub fn sample(offset_radius: f64, jitter_sigma: f64, rng: &mut ChaCha8Rng) -> Self {
        let p: [f64; 3] = UnitBall.sample(rng);
        ArmModel {
            systematic_offset: Vec3::new(p[0], p[1], p[2]) * offset_radius,
            jitter_sigma,
        }
    }

    pub fn systematic_offset(&self) -> Vec3 {
        self.systematic_offset
    }

    /// Position actually reached for a commanded position.
    pub fn execute(&self, commanded: Vec3, rng: &mut ChaCha8Rng) -> Vec3 {
        let jitter = Normal::new(0.0, self.jitter_sigma).unwrap();
        commanded
            + self.systematic_offset
            + Vec3::new(jitter.sample(rng), jitter.sample(rng), jitter.sample(rng))
    }
}

/// Random error vector of exactly the given length (uniform direction),
/// used for the injected camera-model error.
pub fn random_error_vector(length_m: f64, rng: &mut ChaCha8Rng) -> Vec3 {
    if length_m == 0.0 {
        return Vec3::ZERO;
    }
    let d: [f64; 3] = UnitSphere.sample(rng);
    Vec3::new(d[0], d[1], d[2]) * length_m
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn offset_stays_inside_the_ball() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let arm = ArmModel::sample(0.03, 0.003, &mut rng);
            assert!(arm.systematic_offset().norm() <= 0.03 + 1e-12);
        }
    }

    #[test]
    fn actual_pose_differs_from_reported_when_offset_is_nonzero() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let arm = ArmModel::sample(0.03, 0.003, &mut rng);
        if arm.systematic_offset().norm() > 1e-6 {
            let cmd = Vec3::new(0.1, 0.2, 0.3);
            let actual = arm.execute(cmd, &mut rng);
            assert!(actual.distance(cmd) > 1e-6);
        }
    }

    #[test]
    fn injected_error_has_the_requested_length() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let e = random_error_vector(0.04, &mut rng);
            assert!((e.norm() - 0.04).abs() < 1e-12);
        }
        assert_eq!(random_error_vector(0.0, &mut rng), Vec3::ZERO);
    }
}
