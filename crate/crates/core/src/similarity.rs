//! Feature similarity, weighted pooling and the final score.
//!
//! Each feature pair is compared with the stabilized ratio
//! `(2ab + T) / (a² + b² + T)`. The two global similarities (log magnitude
//! and phase) are merged as a weighted geometric mean, and each similarity
//! map is collapsed to a scalar by a weighted average whose weights are the
//! pointwise larger of the two feature magnitudes.
//!
//! All reductions run sequentially in a fixed order so scores are
//! bit-reproducible no matter how the caller schedules work.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::global::GlobalFeature;
use crate::local::LocalFeatureMap;
use crate::plane::Plane;

/// Which weight map pools which similarity map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pairing {
    /// Gabor weights pool the local map; log-magnitude weights pool the
    /// global map.
    #[default]
    Matched,
    /// Gabor weights pool the global map and log-magnitude weights pool the
    /// local map, as the weight subscripts are printed in the original
    /// formulation.
    Literal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    #[default]
    Full,
    LocalOnly,
    GlobalOnly,
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(Self::Full),
            "local_only" | "local" => Ok(Self::LocalOnly),
            "global_only" | "global" => Ok(Self::GlobalOnly),
            _ => Err(Error::Config(format!("unknown mode {s:?}"))),
        }
    }
}

impl std::str::FromStr for Pairing {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "matched" => Ok(Self::Matched),
            "literal" => Ok(Self::Literal),
            _ => Err(Error::Config(format!("unknown pairing {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimilarityParams {
    pub t0: f64,
    pub t1: f64,
    pub t2: f64,
    pub alpha: f64,
    pub pairing: Pairing,
    pub mode: Mode,
}

impl Default for SimilarityParams {
    fn default() -> Self {
        Self {
            t0: 0.014,
            t1: 8.0,
            t2: 1.0,
            alpha: 0.5,
            pairing: Pairing::Matched,
            mode: Mode::Full,
        }
    }
}

impl SimilarityParams {
    pub fn validate(&self) -> Result<()> {
        for (name, t) in [("t0", self.t0), ("t1", self.t1), ("t2", self.t2)] {
            if !(t.is_finite() && t > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "similarity: {name} must be positive, got {t}"
                )));
            }
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::InvalidParameter(format!(
                "similarity: alpha must lie in [0, 1], got {}",
                self.alpha
            )));
        }
        Ok(())
    }
}

/// Final and partial scores. A partial score is `None` when the mode did
/// not compute it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QualityScore {
    pub q_lgfm: f64,
    pub q_local: Option<f64>,
    pub q_global: Option<f64>,
}

/// Features of one image, ready for comparison.
#[derive(Debug, Clone)]
pub struct FeatureSet {
    /// Gabor edge magnitude, after any exposure masking.
    pub local: LocalFeatureMap,
    pub global: GlobalFeature,
}

pub fn similarity_map(a: &Plane, b: &Plane, t: f64) -> Result<Plane> {
    if !(t > 0.0) {
        return Err(Error::InvalidParameter(format!("stabilizer must be positive, got {t}")));
    }
    a.zip_map(b, |x, y| (2.0 * x * y + t) / (x * x + y * y + t))
}

/// `max(S_f, 0)^alpha * max(S_p, 0)^(1 - alpha)`.
pub fn combine_global(s_freq: &Plane, s_phase: &Plane, alpha: f64) -> Result<Plane> {
    s_freq.zip_map(s_phase, |f, p| f.max(0.0).powf(alpha) * p.max(0.0).powf(1.0 - alpha))
}

pub fn make_weight_map(a: &Plane, b: &Plane) -> Result<Plane> {
    a.zip_map(b, |x, y| x.abs().max(y.abs()))
}

/// Weighted mean of `s`; falls back to the plain mean when all weights
/// vanish.
pub fn pool(s: &Plane, w: &Plane) -> Result<f64> {
    Error::check_dims(s.dims(), w.dims())?;
    let mut num = 0.0;
    let mut den = 0.0;
    for (&sv, &wv) in s.as_slice().iter().zip(w.as_slice()) {
        if !(wv >= 0.0) {
            return Err(Error::InvalidParameter(format!("negative pooling weight {wv}")));
        }
        num += wv * sv;
        den += wv;
    }
    if den == 0.0 {
        return Ok(s.mean());
    }
    Ok(num / den)
}

pub fn lgfm_score(
    reference: &FeatureSet,
    distorted: &FeatureSet,
    p: &SimilarityParams,
) -> Result<QualityScore> {
    p.validate()?;
    let g_r = reference.local.plane();
    let g_d = distorted.local.plane();
    let bf_r = &reference.global.freq_map;
    let bf_d = &distorted.global.freq_map;
    Error::check_dims(g_r.dims(), g_d.dims())?;
    Error::check_dims(g_r.dims(), bf_r.dims())?;
    Error::check_dims(bf_r.dims(), bf_d.dims())?;

    let gabor = (g_r, g_d);
    let freq = (bf_r, bf_d);
    let (local_w, global_w) = match p.pairing {
        Pairing::Matched => (gabor, freq),
        Pairing::Literal => (freq, gabor),
    };

    let q_local = match p.mode {
        Mode::Full | Mode::LocalOnly => {
            let s_l = similarity_map(g_r, g_d, p.t0)?;
            Some(pool(&s_l, &make_weight_map(local_w.0, local_w.1)?)?)
        }
        Mode::GlobalOnly => None,
    };
    let q_global = match p.mode {
        Mode::Full | Mode::GlobalOnly => {
            let s_f = similarity_map(bf_r, bf_d, p.t1)?;
            let s_p = similarity_map(
                &reference.global.phase_map,
                &distorted.global.phase_map,
                p.t2,
            )?;
            let s_g = combine_global(&s_f, &s_p, p.alpha)?;
            Some(pool(&s_g, &make_weight_map(global_w.0, global_w.1)?)?)
        }
        Mode::LocalOnly => None,
    };
    let q_lgfm = q_local.unwrap_or(1.0) * q_global.unwrap_or(1.0);
    Ok(QualityScore {
        q_lgfm,
        q_local,
        q_global,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn row(v: &[f64]) -> Plane {
        Plane::new(v.len(), 1, v.to_vec()).unwrap()
    }

    #[test]
    fn similarity_examples() {
        let a = row(&[0.0, 5.0, -2.0, 1.0]);
        assert!(similarity_map(&a, &a, 0.014).unwrap().as_slice().iter().all(|&s| s == 1.0));
        let z = row(&[0.0; 3]);
        assert!(similarity_map(&z, &z, 8.0).unwrap().as_slice().iter().all(|&s| s == 1.0));
        let s = similarity_map(&row(&[1.0]), &row(&[3.0]), 0.014).unwrap();
        assert!((s.get(0, 0) - 6.014 / 10.014).abs() < 1e-15);
        assert!((s.get(0, 0) - 0.60056).abs() < 1e-5);
        assert!(matches!(
            similarity_map(&row(&[1.0]), &row(&[1.0, 2.0]), 1.0),
            Err(Error::DimensionMismatch(..))
        ));
        assert!(similarity_map(&a, &a, 0.0).is_err());
    }

    #[test]
    fn combine_examples() {
        let ones = row(&[1.0, 1.0]);
        assert_eq!(combine_global(&ones, &ones, 0.5).unwrap(), ones);
        let s = combine_global(&row(&[0.64]), &row(&[0.25]), 0.5).unwrap();
        assert!((s.get(0, 0) - 0.4).abs() < 1e-15);
        let s = combine_global(&row(&[0.9, 0.9]), &row(&[-0.3, 0.5]), 0.5).unwrap();
        assert_eq!(s.get(0, 0), 0.0);
        assert!(s.get(1, 0) > 0.0);
    }

    #[test]
    fn pool_examples() {
        assert_eq!(pool(&row(&[1.0, 0.0]), &row(&[3.0, 1.0])).unwrap(), 0.75);
        assert!((pool(&row(&[0.7; 4]), &row(&[1.0, 2.0, 0.0, 9.0])).unwrap() - 0.7).abs() < 1e-15);
        assert_eq!(pool(&row(&[1.0, 0.5]), &row(&[0.0, 0.0])).unwrap(), 0.75);
        assert!(pool(&row(&[1.0]), &row(&[-1.0])).is_err());
    }

    #[test]
    fn weight_examples() {
        let a = row(&[-2.0, 3.0]);
        assert_eq!(make_weight_map(&a, &a).unwrap(), row(&[2.0, 3.0]));
        assert_eq!(make_weight_map(&row(&[-2.0]), &row(&[1.0])).unwrap().get(0, 0), 2.0);
        let z = row(&[0.0, 0.0]);
        let w = make_weight_map(&z, &z).unwrap();
        assert_eq!(w, z);
        assert_eq!(pool(&row(&[0.2, 0.4]), &w).unwrap(), 0.30000000000000004);
    }

    #[test]
    fn params_validation() {
        assert!(SimilarityParams { t1: 0.0, ..Default::default() }.validate().is_err());
        assert!(SimilarityParams { alpha: 1.5, ..Default::default() }.validate().is_err());
        assert!(SimilarityParams::default().validate().is_ok());
    }

    proptest! {
        #[test]
        fn similarity_symmetric_and_bounded(a in -1e3f64..1e3, b in -1e3f64..1e3, t in 1e-3f64..10.0) {
            let s_ab = similarity_map(&row(&[a]), &row(&[b]), t).unwrap().get(0, 0);
            let s_ba = similarity_map(&row(&[b]), &row(&[a]), t).unwrap().get(0, 0);
            prop_assert_eq!(s_ab, s_ba);
            prop_assert!(s_ab <= 1.0 + 1e-15);
            // 1 - S = (a - b)^2 / (a^2 + b^2 + T); resolvable differences give S < 1
            if (a - b).abs() > 1e-6 * (a.abs() + b.abs() + 1.0) {
                prop_assert!(s_ab < 1.0);
            }
        }
    }
}
