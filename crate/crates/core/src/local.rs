//! Local frequency features: odd log-Gabor edge responses and the
//! highlight-emphasis exposure mask.
//!
//! Kernel coordinates are normalized so the kernel spans [-1, 1] along each
//! axis; with the default frequency of 2.5 the carrier completes 2.5 cycles
//! across the kernel. The log-Gaussian envelope is evaluated on `|x'|` and
//! `|y'|` and set to zero on the rotated axes, where it is singular, so
//! the kernel stays odd in `x'`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::encoding::PerceptualMap;
use crate::error::{Error, Result};
use crate::plane::Plane;

/// Rotated coordinates closer than this to an axis count as lying on it.
const AXIS_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaborParams {
    pub frequency: f64,
    pub sigma_x: f64,
    pub sigma_y: f64,
    pub kernel_size: usize,
    /// Orientation angles in radians.
    pub orientations: Vec<f64>,
}

impl Default for GaborParams {
    fn default() -> Self {
        Self {
            frequency: 2.5,
            sigma_x: 0.55,
            sigma_y: 0.55,
            kernel_size: 15,
            orientations: vec![0.0, PI / 2.0],
        }
    }
}

impl GaborParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(format!("gabor: {msg}")));
        if self.kernel_size < 3 || self.kernel_size.is_multiple_of(2) {
            return bad(format!("kernel_size must be odd and >= 3, got {}", self.kernel_size));
        }
        if !(self.frequency.is_finite() && self.frequency > 0.0) {
            return bad(format!("frequency must be positive, got {}", self.frequency));
        }
        for (name, s) in [("sigma_x", self.sigma_x), ("sigma_y", self.sigma_y)] {
            if !(s.is_finite() && s > 0.0) {
                return bad(format!("{name} must be positive, got {s}"));
            }
        }
        if self.orientations.is_empty() || self.orientations.iter().any(|t| !t.is_finite()) {
            return bad("orientations must be a non-empty list of finite angles".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExposureMaskParams {
    pub sigma: f64,
    pub mu: f64,
}

impl Default for ExposureMaskParams {
    fn default() -> Self {
        Self { sigma: 0.2, mu: 250.0 }
    }
}

impl ExposureMaskParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma.is_finite() && self.sigma > 0.0) || !self.mu.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "exposure mask: sigma must be positive and mu finite, got sigma={} mu={}",
                self.sigma, self.mu
            )));
        }
        Ok(())
    }
}

/// Nonnegative per-pixel edge magnitude (`G_r`, `G_d`).
#[derive(Debug, Clone, PartialEq)]
pub struct LocalFeatureMap(Plane);

impl LocalFeatureMap {
    pub fn new(plane: Plane) -> Result<Self> {
        if plane.as_slice().iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::InvalidParameter(
                "local feature map must be finite and nonnegative".into(),
            ));
        }
        Ok(Self(plane))
    }

    pub fn plane(&self) -> &Plane {
        &self.0
    }

    pub fn dims(&self) -> (usize, usize) {
        self.0.dims()
    }
}

/// Samples the odd log-Gabor kernel for orientation `theta`.
pub fn make_log_gabor_kernel(p: &GaborParams, theta: f64) -> Plane {
    let size = p.kernel_size;
    let half = ((size - 1) / 2) as f64;
    let (sin_t, cos_t) = theta.sin_cos();
    let norm = 1.0 / (2.0 * PI * p.sigma_x * p.sigma_y);
    let mut k = Plane::from_fn(size, size, |i, j| {
        let x = (i as f64 - half) / half;
        let y = (j as f64 - half) / half;
        let xr = x * cos_t + y * sin_t;
        let yr = y * cos_t - x * sin_t;
        if xr.abs() < AXIS_EPS || yr.abs() < AXIS_EPS {
            return 0.0;
        }
        let lx = (xr.abs() / p.sigma_x).ln();
        let ly = (yr.abs() / p.sigma_y).ln();
        norm * (-0.5 * (lx * lx + ly * ly)).exp() * (2.0 * PI * p.frequency * xr).sin()
    });
    let mean = k.mean();
    k.as_mut_slice().iter_mut().for_each(|v| *v -= mean);
    k
}

/// Mirror index with edge repetition (`c b a | a b c | c b a`).
#[inline]
fn reflect(i: isize, n: usize) -> usize {
    let n = n as isize;
    let mut i = i;
    loop {
        if i < 0 {
            i = -i - 1;
        } else if i >= n {
            i = 2 * n - i - 1;
        } else {
            return i as usize;
        }
    }
}

/// Same-size 2-D convolution with symmetric border padding.
pub fn convolve_symmetric(img: &Plane, kernel: &Plane) -> Plane {
    let (w, h) = img.dims();
    let (kw, kh) = kernel.dims();
    let (hx, hy) = ((kw / 2) as isize, (kh / 2) as isize);
    let mut out = vec![0.0; w * h];
    out.par_chunks_mut(w).enumerate().for_each(|(y, row)| {
        for (x, dst) in row.iter_mut().enumerate() {
            let mut acc = 0.0;
            for j in 0..kh {
                let sy = reflect(y as isize + hy - j as isize, h);
                for i in 0..kw {
                    let sx = reflect(x as isize + hx - i as isize, w);
                    acc += kernel.get(i, j) * img.get(sx, sy);
                }
            }
            *dst = acc;
        }
    });
    Plane::new(w, h, out).expect("output sized to input")
}

/// Precomputed kernels for one parameter set.
#[derive(Debug, Clone)]
pub struct GaborBank {
    kernel_size: usize,
    kernels: Vec<Plane>,
}

impl GaborBank {
    pub fn new(p: &GaborParams) -> Result<Self> {
        p.validate()?;
        Ok(Self {
            kernel_size: p.kernel_size,
            kernels: p
                .orientations
                .iter()
                .map(|&t| make_log_gabor_kernel(p, t))
                .collect(),
        })
    }

    pub fn kernels(&self) -> &[Plane] {
        &self.kernels
    }

    /// Signed response of each orientation, in bank order.
    pub fn responses(&self, map: &PerceptualMap) -> Result<Vec<Plane>> {
        let (w, h) = map.dims();
        if w < self.kernel_size || h < self.kernel_size {
            return Err(Error::ImageTooSmall {
                width: w,
                height: h,
                min: self.kernel_size,
            });
        }
        Ok(self
            .kernels
            .iter()
            .map(|k| convolve_symmetric(map.plane(), k))
            .collect())
    }

    /// Root-sum-square of the orientation responses.
    pub fn extract(&self, map: &PerceptualMap) -> Result<LocalFeatureMap> {
        let responses = self.responses(map)?;
        let mut sq = Plane::filled(map.dims().0, map.dims().1, 0.0);
        for r in &responses {
            for (acc, v) in sq.as_mut_slice().iter_mut().zip(r.as_slice()) {
                *acc += v * v;
            }
        }
        Ok(LocalFeatureMap(sq.map(f64::sqrt)))
    }
}

pub fn extract_local_features(map: &PerceptualMap, p: &GaborParams) -> Result<LocalFeatureMap> {
    GaborBank::new(p)?.extract(map)
}

/// `1 + exp(-(L - mu)^2 / (2 sigma^2)) / (2 pi sigma)`, computed from the
/// reference image's perceptual values.
pub fn make_exposure_mask(reference: &PerceptualMap, p: &ExposureMaskParams) -> Plane {
    let peak = 1.0 / (2.0 * PI * p.sigma);
    let denom = 2.0 * p.sigma * p.sigma;
    reference.plane().map(|l| {
        let d = l - p.mu;
        1.0 + peak * (-(d * d) / denom).exp()
    })
}

pub fn apply_exposure_mask(g: &LocalFeatureMap, mask: &Plane) -> Result<LocalFeatureMap> {
    LocalFeatureMap::new(g.0.zip_map(mask, |a, m| a * m)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pmap(plane: Plane) -> PerceptualMap {
        PerceptualMap::new(plane).unwrap()
    }

    /// Dense reference: explicit zero-padded canvas built by mirroring, then
    /// a plain correlation with the flipped kernel.
    fn dense_convolution(img: &Plane, k: &Plane) -> Plane {
        let (w, h) = img.dims();
        let r = k.width() / 2;
        let pw = w + 2 * r;
        let ph = h + 2 * r;
        let mirror = |i: isize, n: isize| -> usize {
            if i < 0 {
                (-i - 1) as usize
            } else if i >= n {
                (2 * n - i - 1) as usize
            } else {
                i as usize
            }
        };
        let padded = Plane::from_fn(pw, ph, |x, y| {
            img.get(
                mirror(x as isize - r as isize, w as isize),
                mirror(y as isize - r as isize, h as isize),
            )
        });
        let ks = k.width();
        Plane::from_fn(w, h, |x, y| {
            let mut s = 0.0;
            for j in 0..ks {
                for i in 0..ks {
                    s += k.get(ks - 1 - i, ks - 1 - j) * padded.get(x + i, y + j);
                }
            }
            s
        })
    }

    fn random_plane(w: usize, h: usize, seed: u64) -> Plane {
        // splitmix64
        let mut s = seed;
        Plane::from_fn(w, h, |_, _| {
            s = s.wrapping_add(0x9e3779b97f4a7c15);
            let mut z = s;
            z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
            ((z ^ (z >> 31)) >> 11) as f64 / (1u64 << 53) as f64 * 300.0
        })
    }

    #[test]
    fn kernel_zero_dc_and_odd() {
        let p = GaborParams::default();
        let k = make_log_gabor_kernel(&p, 0.0);
        assert!(k.sum().abs() < 1e-12);
        let n = p.kernel_size;
        for j in 0..n {
            for i in 0..n {
                assert!((k.get(n - 1 - i, j) + k.get(i, j)).abs() < 1e-14);
            }
        }
        // centre row and column lie on the rotated axes
        assert!(k.get(n / 2, 3).abs() < 1e-14 && k.get(2, n / 2).abs() < 1e-14);
        assert!(k.as_slice().iter().any(|v| v.abs() > 1e-3));
    }

    #[test]
    fn quarter_turn_kernel_is_transpose() {
        let p = GaborParams::default();
        let k0 = make_log_gabor_kernel(&p, 0.0);
        let k90 = make_log_gabor_kernel(&p, PI / 2.0);
        let t = k0.transpose();
        for (a, b) in k90.as_slice().iter().zip(t.as_slice()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_image_has_no_response() {
        let img = pmap(Plane::filled(32, 24, 137.5));
        let g = extract_local_features(&img, &GaborParams::default()).unwrap();
        assert!(g.plane().max() <= 1e-9);
    }

    #[test]
    fn matches_dense_convolution() {
        let p = GaborParams::default();
        for seed in 0..4 {
            let img = random_plane(16, 16, seed);
            for &t in &p.orientations {
                let k = make_log_gabor_kernel(&p, t);
                let fast = convolve_symmetric(&img, &k);
                let slow = dense_convolution(&img, &k);
                for (a, b) in fast.as_slice().iter().zip(slow.as_slice()) {
                    assert!((a - b).abs() <= 1e-10);
                }
            }
        }
    }

    #[test]
    fn step_edge_response_is_local() {
        let (w, h) = (40, 20);
        let img = Plane::from_fn(w, h, |x, _| if x < 20 { 10.0 } else { 200.0 });
        let p = GaborParams::default();
        let k = make_log_gabor_kernel(&p, 0.0);
        let resp = convolve_symmetric(&img, &k);
        let dense = dense_convolution(&img, &k);
        for (a, b) in resp.as_slice().iter().zip(dense.as_slice()) {
            assert!((a - b).abs() <= 1e-10);
        }
        let row: Vec<f64> = (0..w).map(|x| resp.get(x, h / 2).abs()).collect();
        // odd kernel on a step: response mirrors about the edge and vanishes
        // farther than the kernel half-width from it
        let half = p.kernel_size / 2;
        for x in 0..w {
            assert!((row[x] - row[w - 1 - x]).abs() <= 1e-9 * (1.0 + row[x]));
            if x + half < 19 || x > 20 + half {
                assert!(row[x] < 1e-9, "leak at column {x}");
            }
        }
        assert!(row[19] > 1.0);
        let g = extract_local_features(&pmap(img), &p).unwrap();
        assert!(g.plane().get(19, h / 2) > 10.0 * g.plane().get(5, h / 2));
    }

    #[test]
    fn transpose_swaps_orientations() {
        let img = random_plane(24, 18, 7);
        let bank = GaborBank::new(&GaborParams::default()).unwrap();
        let r = bank.responses(&pmap(img.clone())).unwrap();
        let rt = bank.responses(&pmap(img.transpose())).unwrap();
        let (r0t, r1t) = (r[0].transpose(), r[1].transpose());
        for i in 0..r0t.as_slice().len() {
            assert!((rt[1].as_slice()[i] - r0t.as_slice()[i]).abs() < 1e-9);
            assert!((rt[0].as_slice()[i] - r1t.as_slice()[i]).abs() < 1e-9);
        }
        let g = bank.extract(&pmap(img.clone())).unwrap();
        let gt = bank.extract(&pmap(img.transpose())).unwrap();
        for (a, b) in gt.plane().as_slice().iter().zip(g.plane().transpose().as_slice()) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn commutes_with_horizontal_mirror() {
        let img = random_plane(21, 17, 3);
        let p = GaborParams::default();
        let g = extract_local_features(&pmap(img.clone()), &p).unwrap();
        let gm = extract_local_features(&pmap(img.flip_horizontal()), &p).unwrap();
        for (a, b) in gm.plane().as_slice().iter().zip(g.plane().flip_horizontal().as_slice()) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn too_small_for_kernel() {
        let img = pmap(Plane::filled(14, 30, 1.0));
        assert!(matches!(
            extract_local_features(&img, &GaborParams::default()),
            Err(Error::ImageTooSmall { min: 15, .. })
        ));
    }

    #[test]
    fn param_validation() {
        let mut p = GaborParams { kernel_size: 14, ..Default::default() };
        assert!(p.validate().is_err());
        p = GaborParams { frequency: 0.0, ..Default::default() };
        assert!(p.validate().is_err());
        p = GaborParams { sigma_y: -1.0, ..Default::default() };
        assert!(p.validate().is_err());
        assert!(ExposureMaskParams { sigma: 0.0, mu: 250.0 }.validate().is_err());
    }

    #[test]
    fn exposure_mask_values() {
        let p = ExposureMaskParams::default();
        let m = make_exposure_mask(&pmap(Plane::new(3, 1, vec![250.0, 252.0, 0.0]).unwrap()), &p);
        assert!((m.get(0, 0) - (1.0 + 1.0 / (2.0 * PI * 0.2))).abs() < 1e-12);
        assert!((m.get(0, 0) - 1.79577).abs() < 1e-5);
        assert!((m.get(1, 0) - 1.0).abs() < 1e-12);
        assert_eq!(m.get(2, 0), 1.0);
    }

    #[test]
    fn apply_mask_cases() {
        let g = LocalFeatureMap::new(Plane::new(2, 1, vec![2.0, 0.5]).unwrap()).unwrap();
        let ones = Plane::filled(2, 1, 1.0);
        assert_eq!(apply_exposure_mask(&g, &ones).unwrap(), g);
        let m = Plane::new(2, 1, vec![1.5, 3.0]).unwrap();
        assert_eq!(apply_exposure_mask(&g, &m).unwrap().plane().get(0, 0), 3.0);
        let zero = LocalFeatureMap::new(Plane::filled(2, 1, 0.0)).unwrap();
        assert!(apply_exposure_mask(&zero, &m).unwrap().plane().as_slice().iter().all(|&v| v == 0.0));
        assert!(matches!(
            apply_exposure_mask(&g, &Plane::filled(1, 2, 1.0)),
            Err(Error::DimensionMismatch(..))
        ));
    }

    proptest! {
        #[test]
        fn mask_at_least_one(l in -1e4f64..1e4) {
            let m = make_exposure_mask(&pmap(Plane::filled(1, 1, l)), &ExposureMaskParams::default());
            prop_assert!(m.get(0, 0) >= 1.0);
            if (l - 250.0).abs() >= 2.0 {
                prop_assert!((m.get(0, 0) - 1.0).abs() <= 1e-12);
            }
        }
    }
}
