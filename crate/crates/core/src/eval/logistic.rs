//! Five-parameter logistic mapping from objective to subjective scale,
//!
//! `S = g1 * (1/2 - 1 / (1 + exp(g2 * (q - g3)))) + g4 * q + g5`,
//!
//! fitted by least squares with Nelder–Mead.
//!
//! The search runs in standardized coordinates (`q` centred on its median
//! and divided by its standard deviation, `mos` centred on its mean and
//! divided by its range) and is mapped back afterwards. The starting point
//! `g3 = median(q)`, `g2 = 1/std(q)`, `g1 = range(mos)`, `g4 = 0`,
//! `g5 = mean(mos)` is the origin-plus-ones point of that space.

use serde::{Deserialize, Serialize};

use super::nelder_mead::{self, Minimum, Options};
use super::ScoreRecord;
use crate::error::{Error, Result};

/// Extra restarts from the best point found so far, each with a fresh
/// simplex. The first is unconditional; later ones run only while they
/// still improve the objective.
const MAX_RESTARTS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegressionParams {
    pub gamma: [f64; 5],
}

impl RegressionParams {
    pub fn map(&self, q: f64) -> f64 {
        logistic_map(q, self)
    }
}

pub fn logistic_map(q: f64, g: &RegressionParams) -> f64 {
    let [g1, g2, g3, g4, g5] = g.gamma;
    let z = g2 * (q - g3);
    // exp overflow saturates the sigmoid at 0 or 1
    let sig = if z > 700.0 {
        0.0
    } else if z < -700.0 {
        1.0
    } else {
        1.0 / (1.0 + z.exp())
    };
    g1 * (0.5 - sig) + g4 * q + g5
}

#[derive(Debug, Clone)]
pub struct FitReport {
    pub params: RegressionParams,
    /// Sum of squared residuals.
    pub sse: f64,
    pub rmse: f64,
    pub evaluations: usize,
    /// Best standardized objective after each simplex iteration, across all
    /// restarts.
    pub best_trace: Vec<f64>,
}

struct Scaling {
    q_center: f64,
    q_scale: f64,
    mos_center: f64,
    mos_scale: f64,
}

impl Scaling {
    fn to_gamma(&self, a: &[f64]) -> RegressionParams {
        let (qc, qs, mc, ms) = (self.q_center, self.q_scale, self.mos_center, self.mos_scale);
        RegressionParams {
            gamma: [
                ms * a[0],
                a[1] / qs,
                qc + qs * a[2],
                ms * a[3] / qs,
                ms * (a[4] - a[3] * qc / qs) + mc,
            ],
        }
    }
}

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// Least-squares fit of the logistic mapping. Records are put in a
/// canonical order first, so the result does not depend on input order.
pub fn fit_logistic(records: &[ScoreRecord]) -> Result<FitReport> {
    if records.len() < 5 {
        return Err(Error::DegenerateInput(format!(
            "need at least 5 records to fit 5 parameters, got {}",
            records.len()
        )));
    }
    if records.iter().any(|r| !(r.q.is_finite() && r.mos.is_finite())) {
        return Err(Error::DegenerateInput("non-finite score".into()));
    }
    let mut pts: Vec<(f64, f64)> = records.iter().map(|r| (r.q, r.mos)).collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let n = pts.len() as f64;

    let qs: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let q_mean = qs.iter().sum::<f64>() / n;
    let q_std = (qs.iter().map(|q| (q - q_mean).powi(2)).sum::<f64>() / n).sqrt();
    if !(q_std > 0.0) || qs[0] == qs[qs.len() - 1] {
        return Err(Error::DegenerateInput("objective scores are constant".into()));
    }
    let mos_min = pts.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let mos_max = pts.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    let mos_range = mos_max - mos_min;
    let scaling = Scaling {
        q_center: median(&qs),
        q_scale: q_std,
        mos_center: pts.iter().map(|p| p.1).sum::<f64>() / n,
        mos_scale: if mos_range > 0.0 { mos_range } else { 1.0 },
    };

    let z: Vec<(f64, f64)> = pts
        .iter()
        .map(|&(q, m)| {
            (
                (q - scaling.q_center) / scaling.q_scale,
                (m - scaling.mos_center) / scaling.mos_scale,
            )
        })
        .collect();
    let objective = |a: &[f64]| -> f64 {
        let p = RegressionParams {
            gamma: [a[0], a[1], a[2], a[3], a[4]],
        };
        z.iter().map(|&(q, m)| (logistic_map(q, &p) - m).powi(2)).sum()
    };

    let opts = Options::default();
    let steps = [0.25, 0.25, 0.25, 0.1, 0.1];
    let start = [1.0, 1.0, 0.0, 0.0, 0.0];
    let mut best: Minimum = nelder_mead::minimize(objective, &start, &steps, opts);
    let mut evaluations = best.evals;
    let mut trace = std::mem::take(&mut best.best_trace);
    for restart in 0..MAX_RESTARTS {
        if evaluations >= opts.max_evals {
            break;
        }
        // alternate the perturbation direction so the new simplex is not
        // a copy of the collapsed one
        let sign = if restart % 2 == 0 { 1.0 } else { -1.0 };
        let steps: Vec<f64> = steps.iter().map(|s| sign * s).collect();
        let remaining = Options {
            max_evals: opts.max_evals - evaluations,
            ..opts
        };
        let mut next = nelder_mead::minimize(objective, &best.x, &steps, remaining);
        evaluations += next.evals;
        let improved = next.f < best.f;
        let cap = best.f;
        trace.extend(next.best_trace.drain(..).map(|v| v.min(cap)));
        if improved {
            best = next;
        }
        if restart > 0 && !improved {
            break;
        }
    }

    let params = scaling.to_gamma(&best.x);
    let sse: f64 = pts.iter().map(|&(q, m)| (params.map(q) - m).powi(2)).sum();
    Ok(FitReport {
        params,
        sse,
        rmse: (sse / n).sqrt(),
        evaluations,
        best_trace: trace,
    })
}
