//! Evaluation against subjective scores.
//!
//! Objective scores are mapped onto the subjective scale by a fitted
//! five-parameter logistic before RMSE is computed; rank correlations use
//! the raw scores.

pub mod logistic;
pub mod nelder_mead;
pub mod rank;

use serde::{Deserialize, Serialize};

use crate::encoding::PerceptualMap;
use crate::error::{Error, Result};

pub use logistic::{fit_logistic, logistic_map, FitReport, RegressionParams};
pub use rank::{krocc, srocc};

/// PSNR reported for identical inputs.
pub const PSNR_CAP_DB: f64 = 99.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRecord {
    pub image_id: String,
    pub q: f64,
    pub mos: f64,
}

pub fn rmse(mapped: &[f64], mos: &[f64]) -> Result<f64> {
    if mapped.len() != mos.len() {
        return Err(Error::LengthMismatch(mapped.len(), mos.len()));
    }
    if mapped.is_empty() {
        return Err(Error::DegenerateInput("no samples".into()));
    }
    let sse: f64 = mapped.iter().zip(mos).map(|(a, b)| (a - b).powi(2)).sum();
    Ok((sse / mapped.len() as f64).sqrt())
}

/// PSNR between two perceptually encoded maps, capped at 99 dB.
pub fn pu_psnr(reference: &PerceptualMap, distorted: &PerceptualMap, peak: f64) -> Result<f64> {
    if !(peak.is_finite() && peak > 0.0) {
        return Err(Error::InvalidParameter(format!("peak must be positive, got {peak}")));
    }
    let diff = reference.plane().zip_map(distorted.plane(), |a, b| (a - b) * (a - b))?;
    let mse = diff.mean();
    if mse == 0.0 {
        return Ok(PSNR_CAP_DB);
    }
    Ok((10.0 * (peak * peak / mse).log10()).min(PSNR_CAP_DB))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MappedScore {
    pub image_id: String,
    pub q: f64,
    pub mos: f64,
    /// `q` after the fitted logistic mapping.
    pub q_mapped: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub n: usize,
    pub gamma: [f64; 5],
    pub srocc: f64,
    pub krocc: f64,
    pub rmse: f64,
    /// Per-image scores, ordered by `(q, mos, image_id)`.
    pub images: Vec<MappedScore>,
}

/// Fits the logistic mapping and computes SROCC, KROCC and RMSE. The result
/// is independent of record order.
pub fn evaluate(records: &[ScoreRecord]) -> Result<EvalReport> {
    let mut sorted: Vec<&ScoreRecord> = records.iter().collect();
    sorted.sort_by(|a, b| {
        a.q.total_cmp(&b.q)
            .then(a.mos.total_cmp(&b.mos))
            .then_with(|| a.image_id.cmp(&b.image_id))
    });
    let q: Vec<f64> = sorted.iter().map(|r| r.q).collect();
    let mos: Vec<f64> = sorted.iter().map(|r| r.mos).collect();
    let fit = fit_logistic(records)?;
    let mapped: Vec<f64> = q.iter().map(|&v| fit.params.map(v)).collect();
    Ok(EvalReport {
        n: records.len(),
        gamma: fit.params.gamma,
        srocc: srocc(&q, &mos)?,
        krocc: krocc(&q, &mos)?,
        rmse: rmse(&mapped, &mos)?,
        images: sorted
            .iter()
            .zip(&mapped)
            .map(|(r, &q_mapped)| MappedScore {
                image_id: r.image_id.clone(),
                q: r.q,
                mos: r.mos,
                q_mapped,
            })
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plane::Plane;

    fn pm(v: &[f64]) -> PerceptualMap {
        PerceptualMap::new(Plane::new(v.len(), 1, v.to_vec()).unwrap()).unwrap()
    }

    #[test]
    fn rmse_examples() {
        assert_eq!(rmse(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert!((rmse(&[3.0, 4.0], &[0.0, 0.0]).unwrap() - 12.5f64.sqrt()).abs() < 1e-15);
        assert_eq!(
            rmse(&[4.0, 3.0, 1.0], &[0.0, 0.0, 2.0]).unwrap(),
            rmse(&[1.0, 4.0, 3.0], &[2.0, 0.0, 0.0]).unwrap()
        );
        assert!(matches!(rmse(&[1.0], &[]), Err(Error::LengthMismatch(1, 0))));
    }

    #[test]
    fn psnr_examples() {
        let a = pm(&[10.0, 20.0, 30.0, 40.0]);
        assert_eq!(pu_psnr(&a, &a, 255.0).unwrap(), 99.0);
        // every sample off by the peak: MSE = peak^2
        let b = pm(&[265.0, 275.0, 285.0, 295.0]);
        assert!(pu_psnr(&a, &b, 255.0).unwrap().abs() < 1e-12);
        let c = pm(&[15.0, 15.0, 35.0, 35.0]);
        let db = pu_psnr(&a, &c, 255.0).unwrap();
        assert!((db - 10.0 * 2601f64.log10()).abs() < 1e-12);
        assert!((db - 34.151).abs() < 1e-3);
        assert!(pu_psnr(&a, &pm(&[1.0]), 255.0).is_err());
    }

    #[test]
    fn evaluate_identity_scores() {
        let recs: Vec<ScoreRecord> = (0..12)
            .map(|i| ScoreRecord {
                image_id: i.to_string(),
                q: i as f64 * 0.5,
                mos: i as f64 * 0.5,
            })
            .collect();
        let r = evaluate(&recs).unwrap();
        assert_eq!(r.srocc, 1.0);
        assert_eq!(r.krocc, 1.0);
        assert!(r.rmse < 1e-8);
        let mut shuffled = recs.clone();
        shuffled.swap(0, 7);
        shuffled.swap(3, 11);
        assert_eq!(evaluate(&shuffled).unwrap(), r);
    }
}
