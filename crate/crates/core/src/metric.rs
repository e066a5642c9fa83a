//! End-to-end scoring of a reference/distorted image pair.

use std::path::Path;

use crate::config::{Encoding, MetricConfig};
use crate::encoding::{pq_encode, pu_encode, PerceptualMap, PuTable};
use crate::error::{Error, Result};
use crate::global::{dft2, global_feature_from_spectrum, make_butterworth_mask};
use crate::hdr_io::{load_image, to_luminance, HdrImage, ImageFormat};
use crate::local::{apply_exposure_mask, make_exposure_mask, GaborBank};
use crate::similarity::{lgfm_score, FeatureSet, QualityScore};

/// A configured metric. Construction validates parameters, loads the PU
/// table and builds the Gabor kernels once; scoring is then pure.
#[derive(Debug, Clone)]
pub struct Lgfm {
    config: MetricConfig,
    pu_table: PuTable,
    gabor: GaborBank,
}

impl Lgfm {
    pub fn new(config: MetricConfig) -> Result<Self> {
        config.validate()?;
        let pu_table = match &config.pu.table {
            Some(path) => PuTable::load(path)?,
            None => PuTable::builtin(),
        };
        let gabor = GaborBank::new(&config.gabor)?;
        Ok(Self {
            config,
            pu_table,
            gabor,
        })
    }

    pub fn config(&self) -> &MetricConfig {
        &self.config
    }

    pub fn perceptual(&self, img: &HdrImage) -> Result<PerceptualMap> {
        let lum = to_luminance(img, self.config.luminance.coeffs, self.config.luminance.peak_scale)?;
        match self.config.encoding {
            Encoding::Pu => Ok(pu_encode(&lum, &self.pu_table)),
            Encoding::Pq => pq_encode(&lum, self.config.pq.out_scale),
        }
    }

    /// Features of a reference/distorted pair. The exposure mask is derived
    /// from the reference and applied to both local maps.
    pub fn features(&self, reference: &PerceptualMap, distorted: &PerceptualMap) -> Result<(FeatureSet, FeatureSet)> {
        Error::check_dims(reference.dims(), distorted.dims())?;
        let (w, h) = reference.dims();
        let mut local_r = self.gabor.extract(reference)?;
        let mut local_d = self.gabor.extract(distorted)?;
        if self.config.use_mg {
            let mask = make_exposure_mask(reference, &self.config.exposure_mask);
            local_r = apply_exposure_mask(&local_r, &mask)?;
            local_d = apply_exposure_mask(&local_d, &mask)?;
        }
        let bw_mask = if self.config.use_mb {
            Some(make_butterworth_mask(w, h, &self.config.butterworth)?)
        } else {
            None
        };
        let global_r = global_feature_from_spectrum(&dft2(reference), bw_mask.as_ref())?;
        let global_d = global_feature_from_spectrum(&dft2(distorted), bw_mask.as_ref())?;
        Ok((
            FeatureSet {
                local: local_r,
                global: global_r,
            },
            FeatureSet {
                local: local_d,
                global: global_d,
            },
        ))
    }

    pub fn score_perceptual(&self, reference: &PerceptualMap, distorted: &PerceptualMap) -> Result<QualityScore> {
        let (r, d) = self.features(reference, distorted)?;
        lgfm_score(&r, &d, &self.config.similarity)
    }

    pub fn score(&self, reference: &HdrImage, distorted: &HdrImage) -> Result<QualityScore> {
        Error::check_dims(reference.dims(), distorted.dims())?;
        self.score_perceptual(&self.perceptual(reference)?, &self.perceptual(distorted)?)
    }

    pub fn score_files(&self, reference: impl AsRef<Path>, distorted: impl AsRef<Path>) -> Result<QualityScore> {
        let r = load_image(reference, ImageFormat::Auto)?;
        let d = load_image(distorted, ImageFormat::Auto)?;
        self.score(&r, &d)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plane::Plane;
    use crate::similarity::Mode;

    fn scene(w: usize, h: usize) -> HdrImage {
        let p = Plane::from_fn(w, h, |x, y| {
            let fx = x as f64 / w as f64;
            let fy = y as f64 / h as f64;
            10f64.powf(4.0 * fx - 1.0) * (1.0 + 0.5 * (12.0 * fy).sin())
        });
        HdrImage::from_gray(&p).unwrap()
    }

    #[test]
    fn identical_pair_scores_one() {
        let img = scene(48, 40);
        for encoding in [Encoding::Pu, Encoding::Pq] {
            for mode in [Mode::Full, Mode::LocalOnly, Mode::GlobalOnly] {
                let mut cfg = MetricConfig { encoding, ..Default::default() };
                cfg.similarity.mode = mode;
                let q = Lgfm::new(cfg).unwrap().score(&img, &img).unwrap();
                assert_eq!(q.q_lgfm, 1.0);
            }
        }
    }

    #[test]
    fn dimension_mismatch() {
        let m = Lgfm::new(MetricConfig::default()).unwrap();
        assert!(matches!(
            m.score(&scene(32, 32), &scene(32, 33)),
            Err(Error::DimensionMismatch(..))
        ));
    }

    #[test]
    fn distortion_lowers_score() {
        let m = Lgfm::new(MetricConfig::default()).unwrap();
        let a = scene(64, 48);
        let b = a.scaled(0.5).unwrap();
        let q = m.score(&a, &b).unwrap();
        assert!(q.q_lgfm < 1.0 && q.q_lgfm > 0.0);
        assert_eq!(q.q_lgfm, q.q_local.unwrap() * q.q_global.unwrap());
    }

    #[test]
    fn bad_pu_table_path() {
        let mut cfg = MetricConfig::default();
        cfg.pu.table = Some("/nonexistent/pu.csv".into());
        assert!(matches!(Lgfm::new(cfg), Err(Error::Io(_))));
    }
}
