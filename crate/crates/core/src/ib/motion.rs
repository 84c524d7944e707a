//! Prescribed rigid-body trajectories.

use nalgebra::{Rotation3, Vector3};
use serde::{Deserialize, Serialize};

/// Constant linear and angular velocity about a moving centre.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RigidMotion {
    /// Centre at `t = 0`.
    pub center: [f64; 3],
    #[serde(default)]
    pub velocity: [f64; 3],
    /// Rotation axis scaled by the rate in radians per step.
    #[serde(default)]
    pub angular_velocity: [f64; 3],
}

impl RigidMotion {
    pub fn fixed(center: [f64; 3]) -> Self {
        RigidMotion {
            center,
            ..Default::default()
        }
    }

    pub fn is_static(&self) -> bool {
        self.velocity == [0.0; 3] && self.angular_velocity == [0.0; 3]
    }

    pub fn center_at(&self, t: f64) -> [f64; 3] {
        [
            self.center[0] + self.velocity[0] * t,
            self.center[1] + self.velocity[1] * t,
            self.center[2] + self.velocity[2] * t,
        ]
    }

    pub fn rotation_at(&self, t: f64) -> Rotation3<f64> {
        Rotation3::from_scaled_axis(Vector3::from(self.angular_velocity) * t)
    }

    /// Body-frame offset `r` to world position at time `t`.
    pub fn place(&self, r: [f64; 3], t: f64) -> [f64; 3] {
        let p = self.rotation_at(t) * Vector3::from(r);
        let c = self.center_at(t);
        [p[0] + c[0], p[1] + c[1], p[2] + c[2]]
    }

    /// `omega x (x - c(t)) + v`.
    pub fn velocity_at(&self, x: [f64; 3], t: f64) -> [f64; 3] {
        let c = self.center_at(t);
        let w = self.angular_velocity;
        let r = [x[0] - c[0], x[1] - c[1], x[2] - c[2]];
        [
            w[1] * r[2] - w[2] * r[1] + self.velocity[0],
            w[2] * r[0] - w[0] * r[2] + self.velocity[1],
            w[0] * r[1] - w[1] * r[0] + self.velocity[2],
        ]
    }

    /// Steps for one full turn, if rotating.
    pub fn period(&self) -> Option<f64> {
        let w = Vector3::from(self.angular_velocity).norm();
        (w > 0.0).then(|| 2.0 * std::f64::consts::PI / w)
    }
}
