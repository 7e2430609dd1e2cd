//! Rotary dial gesture: RBI yaw inside the dial zone becomes step navigation.

use crate::tracking::{Quat, RigidBodyPose};
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

pub const DEFAULT_DETENT_DEG: f64 = 30.0;
pub const DEFAULT_JITTER_FLOOR_DEG: f64 = 0.5;
/// Tolerance for quaternions given to [`yaw_from_quaternion`].
pub const UNIT_TOLERANCE: f64 = 1e-6;
/// Accumulated rotation this close to a detent already counts as one.
const DETENT_EPSILON: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
#[error("quaternion norm {0} is not unit")]
pub struct NonUnitQuaternion(pub f64);

/// Yaw of the ZYX Euler decomposition (rotation about the table normal), in (-π, π].
pub fn yaw_from_quaternion(q: &Quat) -> Result<f64, NonUnitQuaternion> {
    let n = q.norm();
    if !n.is_finite() || (n - 1.0).abs() > UNIT_TOLERANCE {
        return Err(NonUnitQuaternion(n));
    }
    Ok(yaw_unchecked(q))
}

fn yaw_unchecked(q: &Quat) -> f64 {
    let yaw = (2.0 * (q.w * q.z + q.x * q.y)).atan2(1.0 - 2.0 * (q.y * q.y + q.z * q.z));
    if yaw <= -PI {
        PI
    } else {
        yaw
    }
}

/// Wraps an angle difference into (-π, π].
pub fn wrap_angle(a: f64) -> f64 {
    let r = (a + PI).rem_euclid(TAU) - PI;
    if r <= -PI {
        r + TAU
    } else {
        r
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DialConfig {
    pub detent_deg: f64,
    pub jitter_floor_deg: f64,
    /// +1: positive yaw steps forward; -1: negative yaw steps forward.
    pub direction_sign: i8,
}

impl Default for DialConfig {
    fn default() -> Self {
        Self {
            detent_deg: DEFAULT_DETENT_DEG,
            jitter_floor_deg: DEFAULT_JITTER_FLOOR_DEG,
            direction_sign: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DialConfigError {
    #[error("detent must be in (0, 180] degrees, got {0}")]
    Detent(f64),
    #[error("jitter floor must be in [0, detent), got {0}")]
    JitterFloor(f64),
    #[error("direction sign must be +1 or -1, got {0}")]
    Direction(i8),
}

impl DialConfig {
    pub fn validate(&self) -> Result<(), DialConfigError> {
        if !(self.detent_deg > 0.0 && self.detent_deg <= 180.0) {
            return Err(DialConfigError::Detent(self.detent_deg));
        }
        if !(self.jitter_floor_deg >= 0.0 && self.jitter_floor_deg < self.detent_deg) {
            return Err(DialConfigError::JitterFloor(self.jitter_floor_deg));
        }
        if self.direction_sign != 1 && self.direction_sign != -1 {
            return Err(DialConfigError::Direction(self.direction_sign));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NavDirection {
    Next,
    Prev,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepNavEvent {
    pub direction: NavDirection,
    pub timestamp: f64,
    pub source: String,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DialState {
    pub active: bool,
    pub last_yaw: Option<f64>,
    /// Radians applied since the last detent.
    pub accumulated: f64,
    pub detent_angle: f64,
    pub jitter_floor: f64,
    pub direction_sign: f64,
}

impl Default for DialState {
    fn default() -> Self {
        Self::new(&DialConfig::default())
    }
}

impl DialState {
    pub fn new(config: &DialConfig) -> Self {
        Self {
            active: false,
            last_yaw: None,
            accumulated: 0.0,
            detent_angle: config.detent_deg.to_radians(),
            jitter_floor: config.jitter_floor_deg.to_radians(),
            direction_sign: if config.direction_sign < 0 { -1.0 } else { 1.0 },
        }
    }

    pub fn reset(&mut self) {
        self.active = false;
        self.last_yaw = None;
        self.accumulated = 0.0;
    }

    /// Feeds one RBI pose. Poses with an unusable quaternion are skipped.
    pub fn update(&mut self, pose: &RigidBodyPose, in_zone: bool, source: &str) -> Vec<StepNavEvent> {
        if !in_zone {
            self.reset();
            return Vec::new();
        }
        let n = pose.orientation.norm();
        if !n.is_finite() || n < 0.5 {
            return Vec::new();
        }
        let q = pose.orientation;
        let yaw = yaw_unchecked(&Quat::new(q.w / n, q.x / n, q.y / n, q.z / n));

        let Some(last) = self.last_yaw.filter(|_| self.active) else {
            self.active = true;
            self.last_yaw = Some(yaw);
            self.accumulated = 0.0;
            return Vec::new();
        };
        let delta = wrap_angle(yaw - last);
        if delta.abs() < self.jitter_floor {
            return Vec::new();
        }
        self.last_yaw = Some(yaw);
        self.accumulated += delta;

        let mut events = Vec::new();
        while self.accumulated.abs() >= self.detent_angle - DETENT_EPSILON {
            let sign = self.accumulated.signum();
            events.push(StepNavEvent {
                direction: if sign == self.direction_sign {
                    NavDirection::Next
                } else {
                    NavDirection::Prev
                },
                timestamp: pose.timestamp,
                source: source.to_string(),
            });
            self.accumulated -= sign * self.detent_angle;
        }
        events
    }
}

/// Functional form of [`DialState::update`].
pub fn dial_update(
    state: &DialState,
    pose: &RigidBodyPose,
    in_zone: bool,
    source: &str,
) -> (DialState, Vec<StepNavEvent>) {
    let mut next = *state;
    let events = next.update(pose, in_zone, source);
    (next, events)
}
