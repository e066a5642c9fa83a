//! Run configuration.
//!
//! A config file is TOML. Top-level keys select the encoding, the mask
//! switches, and execution options; each stage has its own table:
//!
//! ```toml
//! encoding = "pu"        # or "pq"
//! use_mg = true          # exposure mask on local features
//! use_mb = true          # Butterworth mask on global features
//! format = "json"        # or "csv"
//! threads = 0            # 0 = all cores
//!
//! [luminance]
//! coeffs = [0.2126, 0.7152, 0.0722]
//! # peak_scale = 1000.0
//!
//! [pu]
//! # table = "my_pu_table.csv"
//!
//! [pq]
//! out_scale = 255.0      # PQ code values are [0, 1] * out_scale
//!
//! [gabor]
//! frequency = 2.5
//! sigma_x = 0.55
//! sigma_y = 0.55
//! kernel_size = 15
//! orientations = [0.0, 1.5707963267948966]
//!
//! [exposure_mask]
//! sigma = 0.2
//! mu = 250.0
//!
//! [butterworth]
//! d1 = 400.0
//! d2 = 100.0
//! n1 = 4
//! n2 = 2
//! normalize_radii = false
//!
//! [similarity]
//! t0 = 0.014
//! t1 = 8.0
//! t2 = 1.0
//! alpha = 0.5
//! pairing = "matched"    # or "literal"
//! mode = "full"          # "local_only", "global_only"
//! ```
//!
//! The PQ `out_scale` default of 255 puts PQ code values on the same numeric
//! scale as PU units, so the exposure-mask centre (250) means roughly the
//! same thing under both encodings.
//!
//! Precedence is command-line flags, then the config file, then built-in
//! defaults. `LGFM_PU_TABLE` overrides `pu.table`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::global::ButterworthParams;
use crate::hdr_io::REC709;
use crate::local::{ExposureMaskParams, GaborParams};
use crate::similarity::SimilarityParams;

pub const PU_TABLE_ENV: &str = "LGFM_PU_TABLE";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Encoding {
    #[default]
    Pu,
    Pq,
}

impl std::str::FromStr for Encoding {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pu" => Ok(Self::Pu),
            "pq" => Ok(Self::Pq),
            _ => Err(Error::Config(format!("unknown encoding {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
}

impl std::str::FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(Self::Json),
            "csv" => Ok(Self::Csv),
            _ => Err(Error::Config(format!("unknown output format {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LuminanceParams {
    pub coeffs: [f64; 3],
    pub peak_scale: Option<f64>,
}

impl Default for LuminanceParams {
    fn default() -> Self {
        Self {
            coeffs: REC709,
            peak_scale: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PuParams {
    /// CSV table path; the bundled table when unset.
    pub table: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PqParams {
    pub out_scale: f64,
}

impl Default for PqParams {
    fn default() -> Self {
        Self { out_scale: 255.0 }
    }
}

/// Every parameter that can change a score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricConfig {
    pub encoding: Encoding,
    pub use_mg: bool,
    pub use_mb: bool,
    pub luminance: LuminanceParams,
    pub pu: PuParams,
    pub pq: PqParams,
    pub gabor: GaborParams,
    pub exposure_mask: ExposureMaskParams,
    pub butterworth: ButterworthParams,
    pub similarity: SimilarityParams,
}

impl Default for MetricConfig {
    fn default() -> Self {
        Self {
            encoding: Encoding::Pu,
            use_mg: true,
            use_mb: true,
            luminance: LuminanceParams::default(),
            pu: PuParams::default(),
            pq: PqParams::default(),
            gabor: GaborParams::default(),
            exposure_mask: ExposureMaskParams::default(),
            butterworth: ButterworthParams::default(),
            similarity: SimilarityParams::default(),
        }
    }
}

impl MetricConfig {
    pub fn validate(&self) -> Result<()> {
        self.gabor.validate()?;
        self.exposure_mask.validate()?;
        self.butterworth.validate()?;
        self.similarity.validate()?;
        if !(self.pq.out_scale.is_finite() && self.pq.out_scale > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "pq.out_scale must be positive, got {}",
                self.pq.out_scale
            )));
        }
        let c = &self.luminance.coeffs;
        if c.iter().any(|v| !v.is_finite() || *v < 0.0) || c.iter().sum::<f64>() <= 0.0 {
            return Err(Error::DegenerateCoefficients);
        }
        Ok(())
    }

    /// SHA-256 over the canonical JSON form, hex encoded.
    pub fn param_hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }
}

/// Metric parameters plus execution options that never affect scores.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunConfig {
    pub metric: MetricConfig,
    pub format: OutputFormat,
    /// Worker threads for batch runs; 0 uses all cores.
    pub threads: usize,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ExecKeys {
    #[serde(default)]
    format: OutputFormat,
    #[serde(default)]
    threads: usize,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let mut table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        let mut exec = toml::Table::new();
        for key in ["format", "threads"] {
            if let Some(v) = table.remove(key) {
                exec.insert(key.to_string(), v);
            }
        }
        let exec: ExecKeys = exec
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        let metric: MetricConfig = table
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        Ok(Self {
            metric,
            format: exec.format,
            threads: exec.threads,
        })
    }

    /// Loads a config file. A relative `pu.table` is resolved against the
    /// file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)?;
        if let (Some(table), Some(dir)) = (&cfg.metric.pu.table, path.parent()) {
            if table.is_relative() {
                cfg.metric.pu.table = Some(dir.join(table));
            }
        }
        Ok(cfg)
    }

    /// Applies `LGFM_PU_TABLE` if it is set and non-empty.
    pub fn apply_env(&mut self) {
        if let Some(path) = std::env::var_os(PU_TABLE_ENV).filter(|p| !p.is_empty()) {
            self.metric.pu.table = Some(PathBuf::from(path));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::similarity::{Mode, Pairing};

    #[test]
    fn documented_example_parses_to_defaults() {
        let doc = include_str!("config.rs")
            .lines()
            .skip_while(|l| !l.starts_with("//! ```toml"))
            .skip(1)
            .take_while(|l| !l.starts_with("//! ```"))
            .map(|l| l.trim_start_matches("//!").trim_start())
            .collect::<Vec<_>>()
            .join("\n");
        let cfg = RunConfig::from_toml(&doc).unwrap();
        assert_eq!(cfg, RunConfig::default());
    }

    #[test]
    fn partial_file_overrides_only_given_keys() {
        let cfg = RunConfig::from_toml(
            "encoding = \"pq\"\nthreads = 3\n[similarity]\nmode = \"local_only\"\npairing = \"literal\"\n",
        )
        .unwrap();
        assert_eq!(cfg.metric.encoding, Encoding::Pq);
        assert_eq!(cfg.threads, 3);
        assert_eq!(cfg.metric.similarity.mode, Mode::LocalOnly);
        assert_eq!(cfg.metric.similarity.pairing, Pairing::Literal);
        assert_eq!(cfg.metric.similarity.t1, 8.0);
        assert_eq!(cfg.metric.gabor, GaborParams::default());
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(RunConfig::from_toml("encodng = \"pu\"").is_err());
        assert!(RunConfig::from_toml("[gabor]\nfreq = 2.0").is_err());
        assert!(RunConfig::from_toml("threads = \"many\"").is_err());
    }

    #[test]
    fn hash_tracks_parameters_only() {
        let a = MetricConfig::default();
        let mut b = a.clone();
        assert_eq!(a.param_hash(), b.param_hash());
        b.similarity.t0 = 0.015;
        assert_ne!(a.param_hash(), b.param_hash());
        assert_eq!(a.param_hash().len(), 64);
    }

    #[test]
    fn validation() {
        let mut c = MetricConfig::default();
        assert!(c.validate().is_ok());
        c.pq.out_scale = -1.0;
        assert!(c.validate().is_err());
        let mut c = MetricConfig::default();
        c.luminance.coeffs = [0.0; 3];
        assert!(matches!(c.validate(), Err(Error::DegenerateCoefficients)));
    }
}
