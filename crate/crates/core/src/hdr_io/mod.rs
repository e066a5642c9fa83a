//! HDR image loading and luminance extraction.
//!
//! Two on-disk formats are understood: Radiance RGBE (`.hdr`, flat or
//! new-style run-length scanlines) and Portable Float Map (`.pfm`, color or
//! grayscale, either endianness). Both come with writers so files can be
//! produced for tests and for `dump-filters`.

pub mod pfm;
pub mod rgbe;

use std::fs::File;
use std::io::{BufReader, Read};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::plane::Plane;

/// Smallest accepted image side, in pixels.
pub const MIN_DIMENSION: usize = 8;

/// Rec.709 luma weights.
pub const REC709: [f64; 3] = [0.2126, 0.7152, 0.0722];

/// Linear-light RGB raster with relative-radiance semantics.
#[derive(Debug, Clone, PartialEq)]
pub struct HdrImage {
    width: usize,
    height: usize,
    rgb: Vec<[f32; 3]>,
}

impl HdrImage {
    /// Builds an image, rejecting rasters smaller than 8x8 and any pixel
    /// that is negative or non-finite.
    pub fn new(width: usize, height: usize, rgb: Vec<[f32; 3]>) -> Result<Self> {
        if width < MIN_DIMENSION || height < MIN_DIMENSION {
            return Err(Error::ImageTooSmall {
                width,
                height,
                min: MIN_DIMENSION,
            });
        }
        if rgb.len() != width * height {
            return Err(Error::InvalidParameter(format!(
                "{width}x{height} image needs {} pixels, got {}",
                width * height,
                rgb.len()
            )));
        }
        for (i, px) in rgb.iter().enumerate() {
            if let Some(&c) = px.iter().find(|c| !c.is_finite() || **c < 0.0) {
                return Err(Error::InvalidPixel {
                    x: i % width,
                    y: i / width,
                    value: c as f64,
                });
            }
        }
        Ok(Self { width, height, rgb })
    }

    /// Gray image with all three channels equal to the plane's samples.
    pub fn from_gray(plane: &Plane) -> Result<Self> {
        let rgb = plane
            .as_slice()
            .iter()
            .map(|&v| {
                let v = v as f32;
                [v, v, v]
            })
            .collect();
        Self::new(plane.width(), plane.height(), rgb)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn pixels(&self) -> &[[f32; 3]] {
        &self.rgb
    }

    pub fn pixel(&self, x: usize, y: usize) -> [f32; 3] {
        self.rgb[y * self.width + x]
    }

    /// Multiplies every channel by `factor` (must be finite and ≥ 0).
    pub fn scaled(&self, factor: f32) -> Result<Self> {
        let rgb = self
            .rgb
            .iter()
            .map(|p| [p[0] * factor, p[1] * factor, p[2] * factor])
            .collect();
        Self::new(self.width, self.height, rgb)
    }
}

/// Per-pixel luminance in cd/m².
#[derive(Debug, Clone, PartialEq)]
pub struct LuminanceMap(Plane);

impl LuminanceMap {
    pub fn new(plane: Plane) -> Result<Self> {
        if let Some((i, &v)) = plane
            .as_slice()
            .iter()
            .enumerate()
            .find(|(_, v)| !v.is_finite() || **v < 0.0)
        {
            return Err(Error::InvalidPixel {
                x: i % plane.width(),
                y: i / plane.width(),
                value: v,
            });
        }
        Ok(Self(plane))
    }

    pub fn plane(&self) -> &Plane {
        &self.0
    }

    pub fn into_plane(self) -> Plane {
        self.0
    }

    pub fn dims(&self) -> (usize, usize) {
        self.0.dims()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ImageFormat {
    Rgbe,
    Pfm,
    #[default]
    Auto,
}

impl FromStr for ImageFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rgbe" | "hdr" => Ok(Self::Rgbe),
            "pfm" => Ok(Self::Pfm),
            "auto" => Ok(Self::Auto),
            other => Err(Error::UnsupportedFormat(other.to_string())),
        }
    }
}

/// Sniffs the format from the leading magic bytes.
pub fn detect_format(head: &[u8]) -> Result<ImageFormat> {
    if head.starts_with(b"#?") {
        Ok(ImageFormat::Rgbe)
    } else if head.starts_with(b"PF") || head.starts_with(b"Pf") {
        Ok(ImageFormat::Pfm)
    } else {
        Err(Error::UnsupportedFormat(format!(
            "unrecognized magic {:?}",
            String::from_utf8_lossy(&head[..head.len().min(4)])
        )))
    }
}

pub fn load_image(path: impl AsRef<Path>, format: ImageFormat) -> Result<HdrImage> {
    let mut bytes = Vec::new();
    BufReader::new(File::open(path.as_ref())?).read_to_end(&mut bytes)?;
    decode_image(&bytes, format)
}

pub fn decode_image(bytes: &[u8], format: ImageFormat) -> Result<HdrImage> {
    let format = match format {
        ImageFormat::Auto => detect_format(bytes)?,
        f => f,
    };
    match format {
        ImageFormat::Rgbe => rgbe::decode(bytes),
        ImageFormat::Pfm => pfm::decode(bytes),
        ImageFormat::Auto => unreachable!(),
    }
}

/// Weighted channel sum per pixel, optionally rescaled so the brightest
/// pixel equals `peak_scale` cd/m². An all-black raster is left unscaled.
pub fn to_luminance(
    img: &HdrImage,
    coeffs: [f64; 3],
    peak_scale: Option<f64>,
) -> Result<LuminanceMap> {
    if coeffs.iter().any(|c| !c.is_finite() || *c < 0.0) || coeffs.iter().sum::<f64>() <= 0.0 {
        return Err(Error::DegenerateCoefficients);
    }
    if let Some(peak) = peak_scale {
        if !(peak.is_finite() && peak > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "peak_scale must be positive, got {peak}"
            )));
        }
    }
    let lum: Vec<f64> = img
        .rgb
        .iter()
        .map(|p| coeffs[0] * p[0] as f64 + coeffs[1] * p[1] as f64 + coeffs[2] * p[2] as f64)
        .collect();
    let mut plane = Plane::new(img.width, img.height, lum)?;
    if let Some(peak) = peak_scale {
        let max = plane.max();
        if max > 0.0 {
            let k = peak / max;
            plane.as_mut_slice().iter_mut().for_each(|v| *v *= k);
        }
    }
    LuminanceMap::new(plane)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gray(w: usize, h: usize, v: f32) -> HdrImage {
        HdrImage::new(w, h, vec![[v, v, v]; w * h]).unwrap()
    }

    #[test]
    fn rejects_small_and_invalid_images() {
        assert!(matches!(
            HdrImage::new(7, 8, vec![[0.0; 3]; 56]),
            Err(Error::ImageTooSmall { .. })
        ));
        let mut px = vec![[1.0f32; 3]; 64];
        px[9] = [1.0, -0.5, 1.0];
        assert!(matches!(
            HdrImage::new(8, 8, px),
            Err(Error::InvalidPixel { x: 1, y: 1, .. })
        ));
        let mut px = vec![[1.0f32; 3]; 64];
        px[0] = [f32::NAN, 0.0, 0.0];
        assert!(HdrImage::new(8, 8, px).is_err());
    }

    #[test]
    fn gray_pixel_maps_to_itself() {
        let l = to_luminance(&gray(8, 8, 3.5), REC709, None).unwrap();
        assert!(l.plane().as_slice().iter().all(|&v| (v - 3.5).abs() < 1e-12));
    }

    #[test]
    fn pure_red_gives_rec709_weight() {
        let mut px = vec![[0.0f32; 3]; 64];
        px[0] = [1.0, 0.0, 0.0];
        let img = HdrImage::new(8, 8, px).unwrap();
        let l = to_luminance(&img, REC709, None).unwrap();
        assert!((l.plane().get(0, 0) - 0.2126).abs() < 1e-15);
    }

    #[test]
    fn peak_scale_rescales_max() {
        let mut px = vec![[1.0f32; 3]; 64];
        px[5] = [2.0, 2.0, 2.0];
        let img = HdrImage::new(8, 8, px).unwrap();
        let l = to_luminance(&img, REC709, Some(1000.0)).unwrap();
        assert!((l.plane().max() - 1000.0).abs() < 1e-9);
        assert!((l.plane().get(0, 0) - 500.0).abs() < 1e-9);
    }

    #[test]
    fn degenerate_coefficients() {
        let img = gray(8, 8, 1.0);
        assert!(matches!(
            to_luminance(&img, [0.0, 0.0, 0.0], None),
            Err(Error::DegenerateCoefficients)
        ));
        assert!(matches!(
            to_luminance(&img, [-0.1, 1.0, 0.1], None),
            Err(Error::DegenerateCoefficients)
        ));
    }

    #[test]
    fn luminance_is_linear() {
        let px: Vec<[f32; 3]> = (0..64)
            .map(|i| [i as f32 * 0.25, (64 - i) as f32, (i % 7) as f32])
            .collect();
        let img = HdrImage::new(8, 8, px).unwrap();
        let a = 4.0f32;
        let base = to_luminance(&img, REC709, None).unwrap();
        let scaled = to_luminance(&img.scaled(a).unwrap(), REC709, None).unwrap();
        for (s, b) in scaled.plane().as_slice().iter().zip(base.plane().as_slice()) {
            assert!((s - a as f64 * b).abs() <= 1e-12 * (1.0 + s.abs()));
        }
    }

    #[test]
    fn detects_formats() {
        assert_eq!(detect_format(b"#?RADIANCE\n").unwrap(), ImageFormat::Rgbe);
        assert_eq!(detect_format(b"PF\n").unwrap(), ImageFormat::Pfm);
        assert_eq!(detect_format(b"Pf\n").unwrap(), ImageFormat::Pfm);
        assert!(matches!(
            detect_format(b"\x89PNG"),
            Err(Error::UnsupportedFormat(_))
        ));
    }
}
