//! Planar projective maps between table millimeters and projector pixels.

use nalgebra::{DMatrix, Matrix3, Vector3};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub const MIN_DETERMINANT: f64 = 1e-12;
const COLLINEAR_TOLERANCE: f64 = 1e-9;
const RANK_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum HomographyError {
    #[error("homography is singular (|det| = {0:e})")]
    SingularHomography(f64),
    #[error("degenerate configuration: {0}")]
    DegenerateConfiguration(&'static str),
    #[error("point maps to infinity")]
    PointAtInfinity,
}

/// A 3×3 homography with a nonzero determinant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Homography {
    matrix: Matrix3<f64>,
}

impl Homography {
    pub fn new(matrix: Matrix3<f64>) -> Result<Self, HomographyError> {
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(HomographyError::DegenerateConfiguration("non-finite entry"));
        }
        let det = matrix.determinant();
        if det.abs() <= MIN_DETERMINANT || !det.is_finite() {
            return Err(HomographyError::SingularHomography(det));
        }
        Ok(Self { matrix })
    }

    pub fn identity() -> Self {
        Self {
            matrix: Matrix3::identity(),
        }
    }

    pub fn from_row_major(values: [f64; 9]) -> Result<Self, HomographyError> {
        Self::new(Matrix3::from_row_slice(&values))
    }

    pub fn to_row_major(&self) -> [f64; 9] {
        let m = &self.matrix;
        std::array::from_fn(|i| m[(i / 3, i % 3)])
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.matrix
    }

    pub fn inverse(&self) -> Self {
        let inv = self.matrix.try_inverse().expect("checked invertible");
        Self { matrix: inv }
    }

    pub fn apply(&self, p: [f64; 2]) -> Result<[f64; 2], HomographyError> {
        let v = self.matrix * Vector3::new(p[0], p[1], 1.0);
        if v.z.abs() < f64::EPSILON * (v.x.abs() + v.y.abs()).max(1.0) {
            return Err(HomographyError::PointAtInfinity);
        }
        Ok([v.x / v.z, v.y / v.z])
    }
}

impl Serialize for Homography {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_row_major().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Homography {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let values = <[f64; 9]>::deserialize(d)?;
        Homography::from_row_major(values).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HomographyFit {
    pub homography: Homography,
    /// Forward reprojection RMS in destination units.
    pub rms: f64,
}

/// Similarity moving the centroid to the origin with mean distance √2.
fn normalizer(points: &[[f64; 2]]) -> Matrix3<f64> {
    let n = points.len() as f64;
    let cx = points.iter().map(|p| p[0]).sum::<f64>() / n;
    let cy = points.iter().map(|p| p[1]).sum::<f64>() / n;
    let mean = points
        .iter()
        .map(|p| ((p[0] - cx).powi(2) + (p[1] - cy).powi(2)).sqrt())
        .sum::<f64>()
        / n;
    let s = if mean > 0.0 { std::f64::consts::SQRT_2 / mean } else { 1.0 };
    Matrix3::new(s, 0.0, -s * cx, 0.0, s, -s * cy, 0.0, 0.0, 1.0)
}

fn has_collinear_triple(points: &[[f64; 2]]) -> bool {
    let n = points.len();
    let scale = points
        .iter()
        .flat_map(|p| p.iter())
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(1.0);
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                let (a, b, c) = (points[i], points[j], points[k]);
                let cross = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
                if cross.abs() <= COLLINEAR_TOLERANCE * scale * scale {
                    return true;
                }
            }
        }
    }
    false
}

fn apply_raw(m: &Matrix3<f64>, p: [f64; 2]) -> [f64; 2] {
    let v = m * Vector3::new(p[0], p[1], 1.0);
    [v.x / v.z, v.y / v.z]
}

/// Normalized DLT over `(source, destination)` pairs, scaled so `h[2][2] = 1`.
pub fn fit_homography(pairs: &[([f64; 2], [f64; 2])]) -> Result<HomographyFit, HomographyError> {
    let n = pairs.len();
    if n < 4 {
        return Err(HomographyError::DegenerateConfiguration("fewer than four correspondences"));
    }
    if pairs.iter().any(|(s, d)| s.iter().chain(d.iter()).any(|v| !v.is_finite())) {
        return Err(HomographyError::DegenerateConfiguration("non-finite coordinate"));
    }
    let src: Vec<[f64; 2]> = pairs.iter().map(|p| p.0).collect();
    let dst: Vec<[f64; 2]> = pairs.iter().map(|p| p.1).collect();
    if n == 4 && (has_collinear_triple(&src) || has_collinear_triple(&dst)) {
        return Err(HomographyError::DegenerateConfiguration("three collinear points"));
    }

    let ts = normalizer(&src);
    let td = normalizer(&dst);
    let rows = (2 * n).max(9);
    let mut a = DMatrix::<f64>::zeros(rows, 9);
    for (i, (s, d)) in src.iter().zip(&dst).enumerate() {
        let s = apply_raw(&ts, *s);
        let d = apply_raw(&td, *d);
        let (x, y, u, v) = (s[0], s[1], d[0], d[1]);
        let r = 2 * i;
        for (c, val) in [-x, -y, -1.0, 0.0, 0.0, 0.0, u * x, u * y, u].into_iter().enumerate() {
            a[(r, c)] = val;
        }
        for (c, val) in [0.0, 0.0, 0.0, -x, -y, -1.0, v * x, v * y, v].into_iter().enumerate() {
            a[(r + 1, c)] = val;
        }
    }
    let svd = a.svd(false, true);
    let v_t = svd.v_t.expect("requested v_t");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[i].total_cmp(&svd.singular_values[j]));
    let largest = svd.singular_values[order[order.len() - 1]];
    if svd.singular_values[order[1]] <= RANK_TOLERANCE * largest {
        return Err(HomographyError::DegenerateConfiguration("correspondences do not determine a unique homography"));
    }
    let h = v_t.row(order[0]);
    let hn = Matrix3::new(h[0], h[1], h[2], h[3], h[4], h[5], h[6], h[7], h[8]);
    let td_inv = td.try_inverse().expect("similarity is invertible");
    let full = td_inv * hn * ts;
    if full[(2, 2)].abs() < 1e-12 * full.abs().max() {
        return Err(HomographyError::DegenerateConfiguration("origin maps to infinity"));
    }
    let homography = Homography::new(full / full[(2, 2)])?;

    let mut sq = 0.0;
    for (s, d) in pairs {
        let p = homography.apply(*s)?;
        sq += (p[0] - d[0]).powi(2) + (p[1] - d[1]).powi(2);
    }
    Ok(HomographyFit {
        homography,
        rms: (sq / n as f64).sqrt(),
    })
}
