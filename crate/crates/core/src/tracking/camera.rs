//! Ideal pinhole cameras and multi-view marker triangulation.
//!
//! Camera frame: x right, y down, z forward. `CameraModel::orientation`
//! rotates camera-frame vectors into the world frame.

use super::pose::Quat;
use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

/// Rays closer than this to parallel cannot be intersected (rad).
pub const PARALLEL_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Intrinsics {
    pub focal_px: f64,
    pub principal_point: [f64; 2],
    pub resolution: [u32; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraModel {
    pub position: [f64; 3],
    pub orientation: Quat,
    pub intrinsics: Intrinsics,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TriangulationError {
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(&'static str),
    #[error("camera {0} is invalid")]
    InvalidCamera(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Triangulation {
    pub point: [f64; 3],
    /// RMS distance from the point to the back-projected rays (m).
    pub rms_residual: f64,
}

impl CameraModel {
    /// Camera at `position` looking at `target`, with `up` roughly opposite image y.
    pub fn look_at(position: [f64; 3], target: [f64; 3], up: [f64; 3], intrinsics: Intrinsics) -> Self {
        let forward = (Vector3::from(target) - Vector3::from(position)).normalize();
        let right = forward.cross(&Vector3::from(up)).normalize();
        let down = forward.cross(&right);
        let m = Matrix3::from_columns(&[right, down, forward]);
        let q = nalgebra::UnitQuaternion::from_rotation_matrix(
            &nalgebra::Rotation3::from_matrix_unchecked(m),
        );
        Self {
            position,
            orientation: Quat::from_unit(&q),
            intrinsics,
        }
    }

    pub fn is_valid(&self) -> bool {
        (self.orientation.norm() - 1.0).abs() <= 1e-9
            && self.intrinsics.resolution.iter().all(|r| *r > 0)
            && self.intrinsics.focal_px > 0.0
            && self.position.iter().all(|c| c.is_finite())
    }

    /// World-frame unit direction of the ray through `pixel`.
    pub fn ray_direction(&self, pixel: [f64; 2]) -> Vector3<f64> {
        let k = &self.intrinsics;
        let d = Vector3::new(
            (pixel[0] - k.principal_point[0]) / k.focal_px,
            (pixel[1] - k.principal_point[1]) / k.focal_px,
            1.0,
        );
        (self.orientation.to_unit() * d).normalize()
    }

    /// Pixel coordinates of a world point, or `None` when it is behind the camera.
    pub fn project(&self, point: [f64; 3]) -> Option<[f64; 2]> {
        let rel = Vector3::from(point) - Vector3::from(self.position);
        let c = self.orientation.to_unit().inverse() * rel;
        if c.z <= 0.0 {
            return None;
        }
        let k = &self.intrinsics;
        Some([
            k.focal_px * c.x / c.z + k.principal_point[0],
            k.focal_px * c.y / c.z + k.principal_point[1],
        ])
    }
}

/// Least-squares intersection of the rays through each observed pixel.
pub fn triangulate_marker(observations: &[(CameraModel, [f64; 2])]) -> Result<Triangulation, TriangulationError> {
    if observations.len() < 2 {
        return Err(TriangulationError::DegenerateGeometry("fewer than two observations"));
    }
    if let Some(i) = observations.iter().position(|(c, _)| !c.is_valid()) {
        return Err(TriangulationError::InvalidCamera(i));
    }
    let rays: Vec<(Vector3<f64>, Vector3<f64>)> = observations
        .iter()
        .map(|(cam, px)| (Vector3::from(cam.position), cam.ray_direction(*px)))
        .collect();

    let max_angle = rays
        .iter()
        .enumerate()
        .flat_map(|(i, a)| rays[i + 1..].iter().map(move |b| a.1.cross(&b.1).norm().asin()))
        .fold(0.0f64, f64::max);
    if max_angle < PARALLEL_TOLERANCE {
        return Err(TriangulationError::DegenerateGeometry("rays are parallel"));
    }

    // Σ (I - d dᵀ) x = Σ (I - d dᵀ) o
    let mut a = Matrix3::zeros();
    let mut b = Vector3::zeros();
    for (o, d) in &rays {
        let proj = Matrix3::identity() - d * d.transpose();
        a += proj;
        b += proj * o;
    }
    let x = a
        .lu()
        .solve(&b)
        .ok_or(TriangulationError::DegenerateGeometry("singular normal equations"))?;

    let sq: f64 = rays
        .iter()
        .map(|(o, d)| {
            let v = x - o;
            (v - d * d.dot(&v)).norm_squared()
        })
        .sum();
    Ok(Triangulation {
        point: [x.x, x.y, x.z],
        rms_residual: (sq / rays.len() as f64).sqrt(),
    })
}
