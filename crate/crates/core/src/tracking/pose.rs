use nalgebra::{Quaternion, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

/// Orientation quaternion in `(w, x, y, z)` order, right-handed, Z up.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quat {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Quat {
    pub const IDENTITY: Quat = Quat {
        w: 1.0,
        x: 0.0,
        y: 0.0,
        z: 0.0,
    };

    pub fn new(w: f64, x: f64, y: f64, z: f64) -> Self {
        Self { w, x, y, z }
    }

    pub fn norm(&self) -> f64 {
        (self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.w.is_finite() && self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    /// Rotation of `angle` radians about the table normal.
    pub fn from_yaw(angle: f64) -> Self {
        let (s, c) = (angle / 2.0).sin_cos();
        Self::new(c, 0.0, 0.0, s)
    }

    pub fn to_unit(self) -> UnitQuaternion<f64> {
        UnitQuaternion::from_quaternion(Quaternion::new(self.w, self.x, self.y, self.z))
    }

    pub fn from_unit(q: &UnitQuaternion<f64>) -> Self {
        Self::new(q.w, q.i, q.j, q.k)
    }

    pub fn rotate(&self, v: [f64; 3]) -> [f64; 3] {
        let r = self.to_unit() * Vector3::from(v);
        [r.x, r.y, r.z]
    }
}

impl Default for Quat {
    fn default() -> Self {
        Self::IDENTITY
    }
}

/// Timestamped 6-DoF pose of one tracked rigid body.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RigidBodyPose {
    pub body_id: u16,
    /// Seconds on the session's monotonic clock.
    pub timestamp: f64,
    /// Meters.
    pub position: [f64; 3],
    pub orientation: Quat,
}

/// One tracker update: the poses of every visible body at a single instant.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PoseFrame {
    pub sequence: u64,
    pub poses: Vec<RigidBodyPose>,
}

impl PoseFrame {
    pub fn pose_of(&self, body_id: u16) -> Option<&RigidBodyPose> {
        self.poses.iter().find(|p| p.body_id == body_id)
    }
}
