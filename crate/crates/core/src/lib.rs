//! Heatmap-based motion forecasting toolkit.
//!
//! This crate implements the non-neural core of a heatmap forecasting
//! pipeline for traffic agents:
//!
//! * [`gridgeom`] — world/pixel geometry for agent-centric top-view grids and
//!   the dynamic grid-scaling policies (static, horizon-based, velocity-based);
//! * [`raster`] — scene rasterization into 27-channel top-view inputs and
//!   Gaussian target heatmaps;
//! * [`sampler`] — coverage-optimal coordinate extraction: a box-sum
//!   convolution sized from the miss-rate threshold followed by greedy argmax
//!   with window exclusion;
//! * [`metrics`] — miss rate with the velocity-scaled rectangular threshold,
//!   minADE/minFDE, intent bucketing, and soft mAP;
//! * [`losses`] — per-cell focal and cross-entropy grid losses;
//! * [`baseline`] — analytic constant-velocity / constant-heading-rate
//!   predictors so the whole pipeline runs without a trained model;
//! * [`io`] — the scenario JSON schema, the HGRD binary raster format,
//!   prediction files, and a deterministic synthetic scenario generator;
//! * [`pipeline`] — glue running predict -> sample -> evaluate over scenario
//!   sets.

pub mod baseline;
pub mod cli;
pub mod error;
pub mod gridgeom;
pub mod heatmap;
pub mod io;
pub mod losses;
pub mod metrics;
pub mod pipeline;
pub mod raster;
pub mod sampler;
pub mod scenario;

pub use error::{Error, Result};
pub use gridgeom::{GridSpec, PixelIndex, ScalingPolicy, Vec2};
pub use heatmap::{ChannelRaster, Heatmap};
pub use metrics::{Horizon, MetricReport};
pub use sampler::{KernelSize, SampleSet};
pub use scenario::Scenario;
