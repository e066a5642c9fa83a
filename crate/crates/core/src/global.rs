//! Global frequency features.
//!
//! The perceptual map is transformed with an unnormalized 2-D DFT, the
//! spectrum is re-centred so the DC bin sits at `(floor(M/2), floor(N/2))`,
//! and two maps are derived per bin: the log magnitude `ln(|F| + 1)` weighted
//! by a Butterworth band-pass mask, and the phase `atan2(Im, Re)` in
//! `(-pi, pi]`.
//!
//! Cutoff radii are in frequency-bin units and, by default, are not scaled
//! with image size. Images whose half-diagonal is well under the lower
//! cutoff (100 bins) only see the rising edge of the band. Set
//! `normalize_radii` to scale both radii by `diagonal / 1080`.

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::encoding::PerceptualMap;
use crate::error::{Error, Result};
use crate::plane::Plane;

/// Diagonal, in pixels, at which `normalize_radii` leaves the radii as given.
pub const REFERENCE_DIAGONAL: f64 = 1080.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ButterworthParams {
    /// Upper (low-pass) cutoff radius.
    pub d1: f64,
    /// Lower (high-pass) cutoff radius.
    pub d2: f64,
    pub n1: u32,
    pub n2: u32,
    pub normalize_radii: bool,
}

impl Default for ButterworthParams {
    fn default() -> Self {
        Self {
            d1: 400.0,
            d2: 100.0,
            n1: 4,
            n2: 2,
            normalize_radii: false,
        }
    }
}

impl ButterworthParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.d2.is_finite() && self.d2 > 0.0 && self.d1.is_finite() && self.d1 > self.d2) {
            return Err(Error::InvalidParameter(format!(
                "butterworth: need d1 > d2 > 0, got d1={} d2={}",
                self.d1, self.d2
            )));
        }
        if self.n1 == 0 || self.n2 == 0 {
            return Err(Error::InvalidParameter(format!(
                "butterworth: orders must be >= 1, got n1={} n2={}",
                self.n1, self.n2
            )));
        }
        Ok(())
    }

    /// Radii actually used for a `width x height` spectrum.
    pub fn effective_radii(&self, width: usize, height: usize) -> (f64, f64) {
        if self.normalize_radii {
            let k = (width as f64).hypot(height as f64) / REFERENCE_DIAGONAL;
            (self.d1 * k, self.d2 * k)
        } else {
            (self.d1, self.d2)
        }
    }
}

/// Centre-shifted spectrum, `width x height` complex bins.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    width: usize,
    height: usize,
    bins: Vec<Complex64>,
}

impl Spectrum {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    /// Bin at shifted coordinates (DC at the centre).
    pub fn get(&self, u: usize, v: usize) -> Complex64 {
        self.bins[v * self.width + u]
    }

    pub fn bins(&self) -> &[Complex64] {
        &self.bins
    }

    /// Bin at unshifted frequency `(u, v)`, DC at `(0, 0)`.
    pub fn get_unshifted(&self, u: usize, v: usize) -> Complex64 {
        let su = (u + self.width / 2) % self.width;
        let sv = (v + self.height / 2) % self.height;
        self.get(su, sv)
    }

    /// Inverse DFT back to the spatial domain (real part).
    pub fn inverse(&self) -> Plane {
        let (w, h) = self.dims();
        let mut data: Vec<Complex64> = (0..h)
            .flat_map(|v| (0..w).map(move |u| (u, v)))
            .map(|(u, v)| self.get_unshifted(u, v))
            .collect();
        fft2_in_place(&mut data, w, h, true);
        let scale = 1.0 / (w * h) as f64;
        Plane::new(w, h, data.iter().map(|c| c.re * scale).collect()).expect("sized")
    }
}

fn fft2_in_place(data: &mut [Complex64], width: usize, height: usize, inverse: bool) {
    let mut planner = FftPlanner::<f64>::new();
    let (row_fft, col_fft) = if inverse {
        (planner.plan_fft_inverse(width), planner.plan_fft_inverse(height))
    } else {
        (planner.plan_fft_forward(width), planner.plan_fft_forward(height))
    };
    row_fft.process(data);
    let mut column = vec![Complex64::new(0.0, 0.0); height];
    for x in 0..width {
        for (y, c) in column.iter_mut().enumerate() {
            *c = data[y * width + x];
        }
        col_fft.process(&mut column);
        for (y, c) in column.iter().enumerate() {
            data[y * width + x] = *c;
        }
    }
}

/// Unnormalized forward DFT, centre-shifted.
pub fn dft2(map: &PerceptualMap) -> Spectrum {
    let plane = map.plane();
    let (w, h) = plane.dims();
    let mut data: Vec<Complex64> = plane
        .as_slice()
        .iter()
        .map(|&v| Complex64::new(v, 0.0))
        .collect();
    fft2_in_place(&mut data, w, h, false);
    let mut bins = vec![Complex64::new(0.0, 0.0); w * h];
    for v in 0..h {
        let sv = (v + h / 2) % h;
        for u in 0..w {
            let su = (u + w / 2) % w;
            bins[sv * w + su] = data[v * w + u];
        }
    }
    Spectrum {
        width: w,
        height: h,
        bins,
    }
}

/// Band-pass gain at radius `d`; zero at the DC bin.
#[inline]
pub fn butterworth_gain(d: f64, d1: f64, d2: f64, n1: u32, n2: u32) -> f64 {
    if d <= 0.0 {
        return 0.0;
    }
    let low_pass = 1.0 - 1.0 / (1.0 + (d1 / d).powi(2 * n1 as i32));
    let high_pass = 1.0 / (1.0 + (d2 / d).powi(2 * n2 as i32));
    low_pass * high_pass
}

pub fn make_butterworth_mask(width: usize, height: usize, p: &ButterworthParams) -> Result<Plane> {
    p.validate()?;
    let (d1, d2) = p.effective_radii(width, height);
    let (cx, cy) = ((width / 2) as f64, (height / 2) as f64);
    Ok(Plane::from_fn(width, height, |u, v| {
        let d = (u as f64 - cx).hypot(v as f64 - cy);
        butterworth_gain(d, d1, d2, p.n1, p.n2)
    }))
}

/// Masked log-magnitude and phase maps of one image (`B^f`, `B^p`).
#[derive(Debug, Clone, PartialEq)]
pub struct GlobalFeature {
    pub freq_map: Plane,
    pub phase_map: Plane,
}

impl GlobalFeature {
    pub fn dims(&self) -> (usize, usize) {
        self.freq_map.dims()
    }
}

#[inline]
fn phase(c: Complex64) -> f64 {
    let p = c.im.atan2(c.re);
    if p <= -PI {
        PI
    } else {
        p
    }
}

/// Builds `B^f` and `B^p` from a spectrum. Without a mask the log magnitude
/// is left unweighted.
pub fn global_feature_from_spectrum(spectrum: &Spectrum, mask: Option<&Plane>) -> Result<GlobalFeature> {
    let (w, h) = spectrum.dims();
    let log_mag: Vec<f64> = spectrum.bins.iter().map(|c| (c.norm() + 1.0).ln()).collect();
    let mut freq_map = Plane::new(w, h, log_mag)?;
    if let Some(mask) = mask {
        freq_map = freq_map.zip_map(mask, |a, m| a * m)?;
    }
    let phase_map = Plane::new(w, h, spectrum.bins.iter().map(|&c| phase(c)).collect())?;
    Ok(GlobalFeature {
        freq_map,
        phase_map,
    })
}

pub fn extract_global_feature(map: &PerceptualMap, p: &ButterworthParams) -> Result<GlobalFeature> {
    let (w, h) = map.dims();
    let mask = make_butterworth_mask(w, h, p)?;
    global_feature_from_spectrum(&dft2(map), Some(&mask))
}
