//! Marker constellations and their validity rules.

use nalgebra::{Matrix3, Rotation3, UnitQuaternion, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::Path;

pub const MIN_MARKERS: usize = 4;
/// Minimum pairwise marker separation in meters.
pub const MIN_SEPARATION: f64 = 0.005;
/// A rotation is a symmetry when every rotated marker lands within this many meters of a marker.
pub const SYMMETRY_TOLERANCE: f64 = 1e-6;
const RANDOM_ROTATIONS: usize = 100;
const RANDOM_ROTATION_SEED: u64 = 42;

/// Marker positions (meters) of one rigid body in its own frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarkerTemplate {
    pub body_id: u16,
    pub name: String,
    pub markers: Vec<[f64; 3]>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TemplateViolation {
    TooFewMarkers { count: usize },
    MarkersTooClose { first: usize, second: usize, distance: f64 },
    Symmetric { axis: [f64; 3], angle: f64 },
    NonFinite { index: usize },
}

impl TemplateViolation {
    /// The rule that failed.
    pub fn rule(&self) -> &'static str {
        match self {
            TemplateViolation::TooFewMarkers { .. } => "marker count ≥ 4",
            TemplateViolation::MarkersTooClose { .. } => "pairwise distance > 5 mm",
            TemplateViolation::Symmetric { .. } => "asymmetric",
            TemplateViolation::NonFinite { .. } => "finite coordinates",
        }
    }
}

impl fmt::Display for TemplateViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TemplateViolation::TooFewMarkers { count } => {
                write!(f, "{}: only {count} markers", self.rule())
            }
            TemplateViolation::MarkersTooClose { first, second, distance } => write!(
                f,
                "{}: markers {first} and {second} are {:.2} mm apart",
                self.rule(),
                distance * 1e3
            ),
            TemplateViolation::Symmetric { axis, angle } => write!(
                f,
                "{}: rotation of {:.1}° about [{:.3}, {:.3}, {:.3}] maps the set onto itself",
                self.rule(),
                angle.to_degrees(),
                axis[0],
                axis[1],
                axis[2]
            ),
            TemplateViolation::NonFinite { index } => {
                write!(f, "{}: marker {index}", self.rule())
            }
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum TemplateLoadError {
    #[error("reading template: {0}")]
    Io(#[from] std::io::Error),
    #[error("parsing template: {0}")]
    Json(#[from] serde_json::Error),
}

impl MarkerTemplate {
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn load(path: &Path) -> Result<Self, TemplateLoadError> {
        Ok(Self::from_json(&std::fs::read_to_string(path)?)?)
    }

    /// The template shipped with the repository for the dial puck.
    pub fn reference_rbi() -> Self {
        Self::from_json(include_str!("../../fixtures/rbi_template.json"))
            .expect("bundled template parses")
    }

    pub fn centroid(&self) -> Vector3<f64> {
        let n = self.markers.len().max(1) as f64;
        self.markers
            .iter()
            .fold(Vector3::zeros(), |acc, m| acc + Vector3::from(*m))
            / n
    }

    pub fn validate(&self) -> Result<(), Vec<TemplateViolation>> {
        validate_template(self)
    }
}

/// The 24 proper rotations of the cube (signed permutation matrices with det +1).
fn cube_rotations() -> Vec<Matrix3<f64>> {
    let perms = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    let mut out = Vec::with_capacity(24);
    for p in perms {
        for signs in 0..8u8 {
            let mut m = Matrix3::zeros();
            for (row, &col) in p.iter().enumerate() {
                m[(row, col)] = if signs >> row & 1 == 1 { -1.0 } else { 1.0 };
            }
            if m.determinant() > 0.0 {
                out.push(m);
            }
        }
    }
    out
}

/// Uniform random rotations from a fixed seed, skipping near-identity draws.
fn seeded_rotations() -> Vec<Matrix3<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(RANDOM_ROTATION_SEED);
    let mut out = Vec::with_capacity(RANDOM_ROTATIONS);
    while out.len() < RANDOM_ROTATIONS {
        let q = random_unit_quaternion(&mut rng);
        if q.angle() > 1e-3 {
            out.push(*q.to_rotation_matrix().matrix());
        }
    }
    out
}

/// Shoemake's uniform sampling on SO(3).
pub fn random_unit_quaternion<R: Rng>(rng: &mut R) -> UnitQuaternion<f64> {
    use std::f64::consts::TAU;
    let (u1, u2, u3): (f64, f64, f64) = (rng.random(), rng.random(), rng.random());
    let a = (1.0 - u1).sqrt();
    let b = u1.sqrt();
    UnitQuaternion::from_quaternion(nalgebra::Quaternion::new(
        b * (TAU * u3).cos(),
        a * (TAU * u2).sin(),
        a * (TAU * u2).cos(),
        b * (TAU * u3).sin(),
    ))
}

/// Orthonormal frame (as matrix columns) spanned by two non-parallel vectors.
fn frame_of(a: &Vector3<f64>, b: &Vector3<f64>) -> Matrix3<f64> {
    let e1 = a.normalize();
    let e3 = a.cross(b).normalize();
    let e2 = e3.cross(&e1);
    Matrix3::from_columns(&[e1, e2, e3])
}

/// Every rotation that could map the centered set onto itself. A symmetry
/// is fixed by where it sends one non-parallel marker pair, so each
/// distance-preserving image pair yields exactly one candidate.
fn pair_candidates(centered: &[Vector3<f64>]) -> Vec<Matrix3<f64>> {
    let n = centered.len();
    let anchor = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .max_by(|&(a, b), &(c, d)| {
            let s = centered[a].cross(&centered[b]).norm();
            let t = centered[c].cross(&centered[d]).norm();
            s.total_cmp(&t)
        });
    let Some((i, j)) = anchor else {
        return Vec::new();
    };
    let (a, b) = (centered[i], centered[j]);
    if a.cross(&b).norm() < 1e-12 {
        return Vec::new();
    }
    let from = frame_of(&a, &b);
    let mut out = Vec::new();
    for k in 0..n {
        for l in 0..n {
            let (c, d) = (centered[k], centered[l]);
            if k == l
                || (c.norm() - a.norm()).abs() > SYMMETRY_TOLERANCE
                || (d.norm() - b.norm()).abs() > SYMMETRY_TOLERANCE
                || ((c - d).norm() - (a - b).norm()).abs() > SYMMETRY_TOLERANCE
            {
                continue;
            }
            out.push(frame_of(&c, &d) * from.transpose());
        }
    }
    out
}

/// All markers on one line through the centroid: any rotation about it is a symmetry.
fn collinear_axis(centered: &[Vector3<f64>]) -> Option<Vector3<f64>> {
    let longest = centered.iter().max_by(|a, b| a.norm().total_cmp(&b.norm()))?;
    let axis = longest.try_normalize(1e-12)?;
    centered
        .iter()
        .all(|p| p.cross(&axis).norm() <= SYMMETRY_TOLERANCE)
        .then_some(axis)
}

/// The nontrivial rotations checked for self-mapping: the cube group, seeded
/// random rotations, and the rotations induced by marker pair correspondences.
fn symmetry_candidates(centered: &[Vector3<f64>]) -> Vec<Matrix3<f64>> {
    let identity = Matrix3::identity();
    let mut out = cube_rotations();
    out.extend(seeded_rotations());
    out.extend(pair_candidates(centered));
    out.retain(|r| (r - identity).abs().max() > 1e-9);
    out
}

fn maps_onto_itself(points: &[Vector3<f64>], rotation: &Matrix3<f64>) -> bool {
    let mut used = vec![false; points.len()];
    points.iter().all(|p| {
        let q = rotation * p;
        match points
            .iter()
            .enumerate()
            .find(|(j, m)| !used[*j] && (q - *m).norm() <= SYMMETRY_TOLERANCE)
        {
            Some((j, _)) => {
                used[j] = true;
                true
            }
            None => false,
        }
    })
}

pub fn validate_template(t: &MarkerTemplate) -> Result<(), Vec<TemplateViolation>> {
    let mut violations = Vec::new();
    if t.markers.len() < MIN_MARKERS {
        violations.push(TemplateViolation::TooFewMarkers {
            count: t.markers.len(),
        });
    }
    for (i, m) in t.markers.iter().enumerate() {
        if m.iter().any(|c| !c.is_finite()) {
            violations.push(TemplateViolation::NonFinite { index: i });
        }
    }
    if !violations.is_empty() && t.markers.iter().flatten().any(|c| !c.is_finite()) {
        return Err(violations);
    }

    for i in 0..t.markers.len() {
        for j in i + 1..t.markers.len() {
            let d = (Vector3::from(t.markers[i]) - Vector3::from(t.markers[j])).norm();
            if d <= MIN_SEPARATION {
                violations.push(TemplateViolation::MarkersTooClose {
                    first: i,
                    second: j,
                    distance: d,
                });
            }
        }
    }

    if t.markers.len() >= 2 {
        let c = t.centroid();
        let centered: Vec<Vector3<f64>> =
            t.markers.iter().map(|m| Vector3::from(*m) - c).collect();
        if let Some(axis) = collinear_axis(&centered) {
            violations.push(TemplateViolation::Symmetric {
                axis: [axis.x, axis.y, axis.z],
                angle: std::f64::consts::PI,
            });
        } else if let Some(r) = symmetry_candidates(&centered)
            .iter()
            .find(|r| maps_onto_itself(&centered, r))
        {
            let rot = Rotation3::from_matrix_unchecked(*r);
            let (axis, angle) = rot
                .axis_angle()
                .map(|(a, ang)| ([a.x, a.y, a.z], ang))
                .unwrap_or(([0.0, 0.0, 1.0], 0.0));
            violations.push(TemplateViolation::Symmetric { axis, angle });
        }
    }

    if violations.is_empty() {
        Ok(())
    } else {
        Err(violations)
    }
}
