//! Perceptual encodings of absolute luminance.
//!
//! Two encodings are provided:
//!
//! - **PU** (perceptually uniform): a lookup table of `(log10 L, code)` knots,
//!   interpolated linearly in the log domain. The bundled table spans
//!   1e-5 to 1e10 cd/m² and is scaled so that the 0.1–80 cd/m² range lines up
//!   with 8-bit sRGB code values. Another table can be supplied as a
//!   two-column CSV.
//! - **PQ**: the SMPTE ST 2084 inverse EOTF, multiplied by an output scale so
//!   that its code values land in a range comparable to PU units.
//!
//! Inputs outside either domain are clamped rather than rejected.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::hdr_io::LuminanceMap;
use crate::plane::Plane;

const BUILTIN_PU_TABLE: &str = include_str!("../data/pu_table.csv");

/// Minimum luminance range a PU table must cover, as log10 cd/m².
const PU_REQUIRED_RANGE: (f64, f64) = (-5.0, 8.0);

pub const PQ_PEAK: f64 = 10000.0;
const PQ_M1: f64 = 2610.0 / 16384.0;
const PQ_M2: f64 = 2523.0 / 4096.0 * 128.0;
const PQ_C1: f64 = 3424.0 / 4096.0;
const PQ_C2: f64 = 2413.0 / 4096.0 * 32.0;
const PQ_C3: f64 = 2392.0 / 4096.0 * 32.0;

/// Per-pixel perceptual code values (`L_r`, `L_d` in the metric).
#[derive(Debug, Clone, PartialEq)]
pub struct PerceptualMap(Plane);

impl PerceptualMap {
    pub fn new(plane: Plane) -> Result<Self> {
        if plane.as_slice().iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(
                "perceptual map contains non-finite values".into(),
            ));
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

#[derive(Debug, Clone, PartialEq)]
pub struct PuTable {
    log_lum: Vec<f64>,
    code: Vec<f64>,
}

impl PuTable {
    pub fn new(log_lum: Vec<f64>, code: Vec<f64>) -> Result<Self> {
        if log_lum.len() != code.len() {
            return Err(Error::InvalidTable("column lengths differ".into()));
        }
        if log_lum.len() < 2 {
            return Err(Error::InvalidTable(format!(
                "need at least 2 rows, got {}",
                log_lum.len()
            )));
        }
        if log_lum.iter().chain(&code).any(|v| !v.is_finite()) {
            return Err(Error::InvalidTable("non-finite entry".into()));
        }
        for col in [&log_lum, &code] {
            if let Some(i) = col.windows(2).position(|w| w[1] <= w[0]) {
                return Err(Error::InvalidTable(format!(
                    "not strictly increasing at row {}",
                    i + 1
                )));
            }
        }
        let (lo, hi) = PU_REQUIRED_RANGE;
        if log_lum[0] > lo || log_lum[log_lum.len() - 1] < hi {
            return Err(Error::InvalidTable(format!(
                "covers 1e{}..1e{} cd/m², need at least 1e{lo}..1e{hi}",
                log_lum[0],
                log_lum[log_lum.len() - 1]
            )));
        }
        Ok(Self { log_lum, code })
    }

    /// Parses a two-column CSV of `log10 luminance, code value`. A header row
    /// is accepted if its first field is not numeric.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_reader(text.as_bytes());
        let (mut xs, mut ys) = (Vec::new(), Vec::new());
        for (i, rec) in reader.records().enumerate() {
            let rec = rec.map_err(|e| Error::InvalidTable(e.to_string()))?;
            if rec.len() != 2 {
                return Err(Error::InvalidTable(format!(
                    "row {} has {} columns, expected 2",
                    i + 1,
                    rec.len()
                )));
            }
            let parsed = (rec[0].parse::<f64>(), rec[1].parse::<f64>());
            match parsed {
                (Ok(x), Ok(y)) => {
                    xs.push(x);
                    ys.push(y);
                }
                _ if i == 0 => continue,
                _ => {
                    return Err(Error::InvalidTable(format!(
                        "row {} is not numeric",
                        i + 1
                    )))
                }
            }
        }
        Self::new(xs, ys)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_csv(&fs::read_to_string(path)?)
    }

    /// The table compiled into the library.
    pub fn builtin() -> Self {
        Self::from_csv(BUILTIN_PU_TABLE).expect("bundled PU table is valid")
    }

    pub fn knots(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.log_lum.iter().copied().zip(self.code.iter().copied())
    }

    pub fn luminance_range(&self) -> (f64, f64) {
        (
            10f64.powf(self.log_lum[0]),
            10f64.powf(self.log_lum[self.log_lum.len() - 1]),
        )
    }

    /// Encodes a single luminance value (cd/m²).
    pub fn encode(&self, lum: f64) -> f64 {
        let n = self.log_lum.len();
        // log10(0) = -inf clamps to the first knot
        let lg = lum.max(0.0).log10();
        if !(lg > self.log_lum[0]) {
            return self.code[0];
        }
        if lg >= self.log_lum[n - 1] {
            return self.code[n - 1];
        }
        let i = self.log_lum.partition_point(|&k| k <= lg);
        let (x0, x1) = (self.log_lum[i - 1], self.log_lum[i]);
        let (y0, y1) = (self.code[i - 1], self.code[i]);
        y0 + (lg - x0) / (x1 - x0) * (y1 - y0)
    }
}

pub fn pu_encode(lum: &LuminanceMap, table: &PuTable) -> PerceptualMap {
    PerceptualMap(lum.plane().map(|l| table.encode(l)))
}

/// SMPTE ST 2084 inverse EOTF of one luminance value, in [0, 1].
#[inline]
pub fn pq_value(lum: f64) -> f64 {
    let y = (lum / PQ_PEAK).clamp(0.0, 1.0);
    let yn = y.powf(PQ_M1);
    ((PQ_C1 + PQ_C2 * yn) / (1.0 + PQ_C3 * yn)).powf(PQ_M2)
}

pub fn pq_encode(lum: &LuminanceMap, out_scale: f64) -> Result<PerceptualMap> {
    if !(out_scale.is_finite() && out_scale > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "PQ out_scale must be positive, got {out_scale}"
        )));
    }
    Ok(PerceptualMap(lum.plane().map(|l| pq_value(l) * out_scale)))
}
