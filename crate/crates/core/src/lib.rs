//! Unsupervised change detection for co-registered image pairs.
//!
//! The crate is organised around the three stages of the detector:
//!
//! * [`diffgen`] builds a difference image (DI) from the two acquisitions,
//!   either with the plain log-ratio operator or with the Gauss-log ratio
//!   operator that compares Gaussian-smoothed log images over a 3x3 window.
//! * [`srad`] removes speckle from the DI with speckle reducing anisotropic
//!   diffusion.
//! * [`cluster`] splits the DI into changed and unchanged pixels, either
//!   with plain fuzzy c-means or with the MRF-regularised variant (MRFFCM).
//!
//! [`metrics`] scores a change map against a reference map, [`raster`]
//! holds the image types, PGM I/O, noise injection and the synthetic test
//! pairs, and [`pipeline`] / [`benchmark`] compose everything into the
//! detection presets and the noise benchmark.

pub mod benchmark;
pub mod cluster;
pub mod diffgen;
mod error;
pub mod metrics;
pub mod pipeline;
pub mod raster;
pub mod srad;

pub use cluster::{ClassStats, Membership, MrffcmParams, MrffcmState};
pub use error::{Error, Result};
pub use metrics::{ConfusionCounts, MetricReport};
pub use pipeline::{PipelineConfig, Preset};
pub use raster::{BinaryMap, Label, NoiseKind, NoiseSpec, Raster, SyntheticPair};
