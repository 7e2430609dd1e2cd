//! Brown–Conrady lens model and image rectification by inverse mapping.

use super::image::CameraImage;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistortionModel {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub k1: f64,
    pub k2: f64,
    pub p1: f64,
    pub p2: f64,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("invalid distortion model: {0}")]
pub struct InvalidModel(pub &'static str);

impl DistortionModel {
    pub fn pinhole(fx: f64, fy: f64, cx: f64, cy: f64) -> Self {
        Self {
            fx,
            fy,
            cx,
            cy,
            k1: 0.0,
            k2: 0.0,
            p1: 0.0,
            p2: 0.0,
        }
    }

    pub fn validate(&self) -> Result<(), InvalidModel> {
        let all = [self.fx, self.fy, self.cx, self.cy, self.k1, self.k2, self.p1, self.p2];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(InvalidModel("non-finite parameter"));
        }
        if self.fx <= 0.0 || self.fy <= 0.0 {
            return Err(InvalidModel("focal lengths must be positive"));
        }
        Ok(())
    }

    pub fn is_identity(&self) -> bool {
        self.k1 == 0.0 && self.k2 == 0.0 && self.p1 == 0.0 && self.p2 == 0.0
    }

    /// Maps an ideal (undistorted) pixel to where the lens images it.
    pub fn distort(&self, u: f64, v: f64) -> (f64, f64) {
        let x = (u - self.cx) / self.fx;
        let y = (v - self.cy) / self.fy;
        let r2 = x * x + y * y;
        let radial = 1.0 + self.k1 * r2 + self.k2 * r2 * r2;
        let xd = x * radial + 2.0 * self.p1 * x * y + self.p2 * (r2 + 2.0 * x * x);
        let yd = y * radial + self.p1 * (r2 + 2.0 * y * y) + 2.0 * self.p2 * x * y;
        (self.fx * xd + self.cx, self.fy * yd + self.cy)
    }
}

fn sample_bilinear(img: &CameraImage, sx: f64, sy: f64) -> [u8; 3] {
    let (w, h) = (img.width as f64, img.height as f64);
    if !(sx >= 0.0 && sy >= 0.0 && sx <= w - 1.0 && sy <= h - 1.0) {
        return [0; 3];
    }
    let x0 = sx.floor() as u32;
    let y0 = sy.floor() as u32;
    let x1 = (x0 + 1).min(img.width - 1);
    let y1 = (y0 + 1).min(img.height - 1);
    let (tx, ty) = (sx - x0 as f64, sy - y0 as f64);
    let (a, b, c, d) = (img.pixel(x0, y0), img.pixel(x1, y0), img.pixel(x0, y1), img.pixel(x1, y1));
    std::array::from_fn(|k| {
        let top = a[k] as f64 * (1.0 - tx) + b[k] as f64 * tx;
        let bottom = c[k] as f64 * (1.0 - tx) + d[k] as f64 * tx;
        (top * (1.0 - ty) + bottom * ty).round().clamp(0.0, 255.0) as u8
    })
}

/// Each output pixel samples the source where the lens would have imaged it.
/// Samples falling outside the source are black.
pub fn rectify_image(img: &CameraImage, model: &DistortionModel) -> Result<CameraImage, InvalidModel> {
    model.validate()?;
    if model.is_identity() {
        return Ok(img.clone());
    }
    let mut out = CameraImage {
        width: img.width,
        height: img.height,
        pixels: vec![0; img.pixels.len()],
        timestamp: img.timestamp,
    };
    for v in 0..img.height {
        for u in 0..img.width {
            let (sx, sy) = model.distort(u as f64, v as f64);
            out.set_pixel(u, v, sample_bilinear(img, sx, sy));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gradient(w: u32, h: u32) -> CameraImage {
        let mut img = CameraImage::filled(w, h, [0; 3]).unwrap();
        for y in 0..h {
            for x in 0..w {
                img.set_pixel(x, y, [(x * 7 % 256) as u8, (y * 11 % 256) as u8, ((x + y) % 256) as u8]);
            }
        }
        img
    }

    #[test]
    fn zero_distortion_is_identity() {
        let img = gradient(64, 48);
        let m = DistortionModel::pinhole(50.0, 50.0, 32.0, 24.0);
        assert_eq!(rectify_image(&img, &m).unwrap(), img);
    }

    #[test]
    fn center_pixel_is_fixed() {
        let img = gradient(64, 48);
        let m = DistortionModel {
            k1: 0.2,
            k2: -0.1,
            p1: 0.01,
            p2: -0.02,
            ..DistortionModel::pinhole(50.0, 50.0, 32.0, 24.0)
        };
        let out = rectify_image(&img, &m).unwrap();
        assert_eq!(out.pixel(32, 24), img.pixel(32, 24));
    }

    #[test]
    fn invalid_models() {
        let img = gradient(4, 4);
        let mut m = DistortionModel::pinhole(1.0, 1.0, 2.0, 2.0);
        m.k1 = f64::NAN;
        assert!(rectify_image(&img, &m).is_err());
        let m = DistortionModel::pinhole(0.0, 1.0, 2.0, 2.0);
        assert!(rectify_image(&img, &m).is_err());
    }
}
