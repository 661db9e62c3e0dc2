//! Neuromorphic filtering of pixel-detector clusters.
//!
//! Charge waveforms are delta-encoded into spike trains ([`codec`]), pooled
//! spatially ([`reduce`]), and classified as high or low transverse momentum
//! by small integer spiking networks ([`snn`]) that are trained by an
//! evolutionary search ([`evo`]). [`sweep`] explores the encoding and training
//! hyperparameters; [`metrics`] holds the physics figures of merit.

pub mod cluster;
pub mod codec;
pub mod error;
pub mod evo;
pub mod metrics;
pub mod pipeline;
pub mod raster;
pub mod reduce;
pub mod scalar;
pub mod snn;
pub mod sweep;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub use cluster::{ClassLabel, DatasetManifest, FrameShape};
pub use raster::SpikeRaster;
pub use reduce::{PatternKind, ReductionPattern};
pub use snn::{BiasSource, IoCounts, LeakMode, NetworkGenome};

/// Cluster sample with `f64` charges.
pub type ClusterSample = cluster::ClusterSample<f64>;
/// Cluster sample with `f32` charges, half the memory for large datasets.
pub type ClusterSampleF32 = cluster::ClusterSample<f32>;
/// Encoder parameters over `f64` charges.
pub type EncoderParams = codec::EncoderParams<f64>;
