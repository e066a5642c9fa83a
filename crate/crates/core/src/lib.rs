//! Local–global feature quality metric for HDR images.
//!
//! Pipeline: decode → luminance → perceptual encoding (PU or PQ) →
//! local log-Gabor gradients and global Fourier features → similarity maps
//! → weighted pooling into one score per image pair.

// `!(x > 0.0)` is used on purpose so NaN takes the rejecting branch
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod batch;
pub mod config;
pub mod encoding;
pub mod error;
pub mod eval;
pub mod global;
pub mod hdr_io;
pub mod local;
pub mod metric;
pub mod plane;
pub mod similarity;

pub use config::{Encoding, MetricConfig, OutputFormat, RunConfig};
pub use error::{Error, Result};
pub use hdr_io::{load_image, HdrImage, ImageFormat, LuminanceMap};
pub use metric::Lgfm;
pub use plane::Plane;
pub use similarity::{Mode, Pairing, QualityScore};
