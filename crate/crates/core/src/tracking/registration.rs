//! Least-squares rigid registration of observed markers onto a template.
//!
//! Marker labels are unknown, so correspondences are searched first: a
//! backtracking assignment keeps only partial matchings whose pairwise
//! distances agree with the template within [`DISTANCE_TOLERANCE`]. Every
//! complete matching is then solved with Kabsch and ranked by RMS residual.

use super::pose::{Quat, RigidBodyPose};
use super::template::{validate_template, MarkerTemplate, TemplateViolation};
use nalgebra::{Matrix3, Rotation3, UnitQuaternion, Vector3, SVD};

/// Pairwise distance mismatch allowed while searching correspondences (m).
pub const DISTANCE_TOLERANCE: f64 = 0.01;
/// Fits with a larger RMS residual are rejected (m).
pub const MAX_RMS: f64 = 0.01;
/// Two assignments closer than this in RMS make the fit ambiguous.
pub const AMBIGUITY_EPSILON: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct RigidFit {
    pub rotation: UnitQuaternion<f64>,
    pub translation: Vector3<f64>,
    /// Root-mean-square marker residual (m).
    pub rms: f64,
    /// `assignment[i]` is the template marker matched to observation `i`.
    pub assignment: Vec<usize>,
}

impl RigidFit {
    pub fn to_pose(&self, body_id: u16, timestamp: f64) -> RigidBodyPose {
        RigidBodyPose {
            body_id,
            timestamp,
            position: [self.translation.x, self.translation.y, self.translation.z],
            orientation: Quat::from_unit(&self.rotation),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FitError {
    #[error("expected {expected} observed markers, got {got}")]
    CountMismatch { expected: usize, got: usize },
    #[error("template invalid: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    InvalidTemplate(Vec<TemplateViolation>),
    #[error("observed marker {0} is not finite")]
    NonFinite(usize),
    #[error("ambiguous correspondence: residuals {best} and {runner_up} are indistinguishable")]
    AmbiguousFit { best: f64, runner_up: f64 },
    #[error("no acceptable fit (best rms {rms:?} m)")]
    NoFit { rms: Option<f64> },
}

/// Kabsch: the proper rotation and translation minimizing `Σ |R·src + t - dst|²`.
pub fn kabsch(src: &[Vector3<f64>], dst: &[Vector3<f64>]) -> (UnitQuaternion<f64>, Vector3<f64>, f64) {
    assert_eq!(src.len(), dst.len());
    let n = src.len() as f64;
    let cs = src.iter().sum::<Vector3<f64>>() / n;
    let cd = dst.iter().sum::<Vector3<f64>>() / n;
    let h: Matrix3<f64> = src
        .iter()
        .zip(dst)
        .fold(Matrix3::zeros(), |acc, (s, d)| acc + (d - cd) * (s - cs).transpose());
    let svd = SVD::new(h, true, true);
    let u = svd.u.expect("svd u");
    let v_t = svd.v_t.expect("svd v_t");
    let mut correction = Matrix3::identity();
    if (u * v_t).determinant() < 0.0 {
        correction[(2, 2)] = -1.0;
    }
    let r = u * correction * v_t;
    let rotation = UnitQuaternion::from_rotation_matrix(&Rotation3::from_matrix_unchecked(r));
    let rm = rotation.to_rotation_matrix();
    let translation = cd - rm * cs;
    let sq: f64 = src
        .iter()
        .zip(dst)
        .map(|(s, d)| (rm * s + translation - d).norm_squared())
        .sum();
    (rotation, translation, (sq / n).sqrt())
}

/// A validated template with its pairwise distances cached.
#[derive(Debug, Clone)]
pub struct RigidBodyModel {
    template: MarkerTemplate,
    points: Vec<Vector3<f64>>,
    distances: Vec<Vec<f64>>,
}

impl RigidBodyModel {
    pub fn new(template: MarkerTemplate) -> Result<Self, Vec<TemplateViolation>> {
        validate_template(&template)?;
        let points: Vec<Vector3<f64>> = template.markers.iter().map(|m| Vector3::from(*m)).collect();
        let distances = pairwise(&points);
        Ok(Self {
            template,
            points,
            distances,
        })
    }

    pub fn template(&self) -> &MarkerTemplate {
        &self.template
    }

    pub fn fit(&self, observed: &[[f64; 3]]) -> Result<RigidFit, FitError> {
        let n = self.points.len();
        if observed.len() != n {
            return Err(FitError::CountMismatch {
                expected: n,
                got: observed.len(),
            });
        }
        if let Some(i) = observed.iter().position(|p| p.iter().any(|c| !c.is_finite())) {
            return Err(FitError::NonFinite(i));
        }
        let obs: Vec<Vector3<f64>> = observed.iter().map(|p| Vector3::from(*p)).collect();
        let obs_dist = pairwise(&obs);

        let mut candidates = Vec::new();
        let mut assignment = Vec::with_capacity(n);
        let mut used = vec![false; n];
        self.search(&obs_dist, &mut assignment, &mut used, &mut candidates);

        let mut fits: Vec<RigidFit> = candidates
            .into_iter()
            .map(|assignment| {
                let src: Vec<Vector3<f64>> = assignment.iter().map(|&t| self.points[t]).collect();
                let (rotation, translation, rms) = kabsch(&src, &obs);
                RigidFit {
                    rotation,
                    translation,
                    rms,
                    assignment,
                }
            })
            .collect();
        fits.sort_by(|a, b| a.rms.total_cmp(&b.rms));

        let Some(best) = fits.first() else {
            return Err(FitError::NoFit { rms: None });
        };
        if best.rms > MAX_RMS {
            return Err(FitError::NoFit { rms: Some(best.rms) });
        }
        if let Some(second) = fits.get(1) {
            if second.rms - best.rms < AMBIGUITY_EPSILON {
                return Err(FitError::AmbiguousFit {
                    best: best.rms,
                    runner_up: second.rms,
                });
            }
        }
        Ok(fits.swap_remove(0))
    }

    fn search(
        &self,
        obs_dist: &[Vec<f64>],
        assignment: &mut Vec<usize>,
        used: &mut [bool],
        out: &mut Vec<Vec<usize>>,
    ) {
        let k = assignment.len();
        if k == self.points.len() {
            out.push(assignment.clone());
            return;
        }
        for t in 0..self.points.len() {
            if used[t] {
                continue;
            }
            let consistent = assignment
                .iter()
                .enumerate()
                .all(|(j, &tj)| (obs_dist[k][j] - self.distances[t][tj]).abs() <= DISTANCE_TOLERANCE);
            if !consistent {
                continue;
            }
            used[t] = true;
            assignment.push(t);
            self.search(obs_dist, assignment, used, out);
            assignment.pop();
            used[t] = false;
        }
    }
}

fn pairwise(points: &[Vector3<f64>]) -> Vec<Vec<f64>> {
    points
        .iter()
        .map(|a| points.iter().map(|b| (a - b).norm()).collect())
        .collect()
}

/// Validates `template` and fits it to `observed` (any marker order).
pub fn fit_rigid_body(template: &MarkerTemplate, observed: &[[f64; 3]]) -> Result<RigidFit, FitError> {
    RigidBodyModel::new(template.clone())
        .map_err(FitError::InvalidTemplate)?
        .fit(observed)
}
