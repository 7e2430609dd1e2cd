//! 8-bit RGB frames and the binary PPM (P6) format.

use std::path::Path;

#[derive(Debug, thiserror::Error)]
pub enum ImageError {
    #[error("buffer holds {got} bytes, {width}x{height} RGB needs {expected}")]
    BufferLength { width: u32, height: u32, expected: usize, got: usize },
    #[error("image dimensions must be positive")]
    EmptyImage,
    #[error("bad PPM: {0}")]
    Ppm(&'static str),
    #[error("reading image: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CameraImage {
    pub width: u32,
    pub height: u32,
    /// Row-major RGB.
    pub pixels: Vec<u8>,
    pub timestamp: f64,
}

impl CameraImage {
    pub fn new(width: u32, height: u32, pixels: Vec<u8>, timestamp: f64) -> Result<Self, ImageError> {
        if width == 0 || height == 0 {
            return Err(ImageError::EmptyImage);
        }
        let expected = width as usize * height as usize * 3;
        if pixels.len() != expected {
            return Err(ImageError::BufferLength {
                width,
                height,
                expected,
                got: pixels.len(),
            });
        }
        Ok(Self {
            width,
            height,
            pixels,
            timestamp,
        })
    }

    pub fn filled(width: u32, height: u32, rgb: [u8; 3]) -> Result<Self, ImageError> {
        let pixels = rgb.repeat(width as usize * height as usize);
        Self::new(width, height, pixels, 0.0)
    }

    pub fn pixel(&self, x: u32, y: u32) -> [u8; 3] {
        let i = (y as usize * self.width as usize + x as usize) * 3;
        [self.pixels[i], self.pixels[i + 1], self.pixels[i + 2]]
    }

    pub fn set_pixel(&mut self, x: u32, y: u32, rgb: [u8; 3]) {
        let i = (y as usize * self.width as usize + x as usize) * 3;
        self.pixels[i..i + 3].copy_from_slice(&rgb);
    }

    pub fn to_ppm(&self) -> Vec<u8> {
        let mut out = format!("P6\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend_from_slice(&self.pixels);
        out
    }

    pub fn from_ppm(bytes: &[u8]) -> Result<Self, ImageError> {
        let mut pos = 0;
        let magic = next_token(bytes, &mut pos).ok_or(ImageError::Ppm("missing magic"))?;
        if magic != b"P6" {
            return Err(ImageError::Ppm("not a binary PPM"));
        }
        let mut number = |what| -> Result<u32, ImageError> {
            let tok = next_token(bytes, &mut pos).ok_or(ImageError::Ppm(what))?;
            std::str::from_utf8(tok)
                .ok()
                .and_then(|s| s.parse().ok())
                .ok_or(ImageError::Ppm(what))
        };
        let width = number("bad width")?;
        let height = number("bad height")?;
        let maxval = number("bad maxval")?;
        if maxval != 255 {
            return Err(ImageError::Ppm("only maxval 255 is supported"));
        }
        // exactly one whitespace byte separates the header from the raster
        if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
            return Err(ImageError::Ppm("missing raster"));
        }
        let raster = &bytes[pos + 1..];
        let expected = (width as usize)
            .checked_mul(height as usize)
            .and_then(|n| n.checked_mul(3))
            .ok_or(ImageError::Ppm("dimensions overflow"))?;
        if raster.len() < expected {
            return Err(ImageError::Ppm("truncated raster"));
        }
        Self::new(width, height, raster[..expected].to_vec(), 0.0)
    }

    pub fn load_ppm(path: &Path) -> Result<Self, ImageError> {
        Self::from_ppm(&std::fs::read(path)?)
    }
}

/// Next whitespace-delimited header token, skipping `#` comments.
fn next_token<'a>(bytes: &'a [u8], pos: &mut usize) -> Option<&'a [u8]> {
    loop {
        while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if *pos < bytes.len() && bytes[*pos] == b'#' {
            while *pos < bytes.len() && bytes[*pos] != b'\n' {
                *pos += 1;
            }
            continue;
        }
        break;
    }
    let start = *pos;
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    (*pos > start).then(|| &bytes[start..*pos])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ppm_round_trip() {
        let mut img = CameraImage::filled(3, 2, [10, 20, 30]).unwrap();
        img.set_pixel(2, 1, [255, 0, 7]);
        let back = CameraImage::from_ppm(&img.to_ppm()).unwrap();
        assert_eq!(back, img);
    }

    #[test]
    fn ppm_with_comment() {
        let mut bytes = b"P6\n# made by hand\n1 1\n255\n".to_vec();
        bytes.extend_from_slice(&[1, 2, 3]);
        assert_eq!(CameraImage::from_ppm(&bytes).unwrap().pixel(0, 0), [1, 2, 3]);
    }

    #[test]
    fn ppm_rejects_garbage() {
        assert!(CameraImage::from_ppm(b"P3\n1 1\n255\n000").is_err());
        assert!(CameraImage::from_ppm(b"P6\n2 2\n255\n\x01\x02").is_err());
        assert!(CameraImage::from_ppm(b"P6\n99999999999 1\n255\n").is_err());
        assert!(CameraImage::from_ppm(b"").is_err());
    }

    #[test]
    fn buffer_length_checked() {
        assert!(matches!(
            CameraImage::new(2, 2, vec![0; 11], 0.0),
            Err(ImageError::BufferLength { expected: 12, .. })
        ));
    }
}
