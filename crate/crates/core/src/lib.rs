//! Urban mobility entropy engine.
//!
//! Check-in records are sharded by device, stamped onto a city lattice and
//! turned into per-cell entropy fields, which render as contour rasters.
//! The math is generic over [`Scalar`] (`f32` or `f64`); lattice and
//! geodesy stay in `f64`. The aliases below fix the scalar to `f64`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod digest;
pub mod entropy;
pub mod error;
pub mod field;
pub mod geo;
pub mod ingest;
pub mod pipeline;
pub mod raster;
pub mod scalar;
pub mod store;
pub mod synth;

pub use entropy::{MetricKind, TimeBand, TimeFilter};
pub use error::{Error, Result};
pub use geo::{BBox, Cell, CityConfig, Lattice};
pub use scalar::{KahanSum, Scalar};

pub type MetricField = field::GridMetricField<f64>;
pub type ClassBreakdown = field::ClassBreakdown<f64>;
pub type Profiles = geo::ProfileGrid<f64>;
pub type UserVector = entropy::UserFeatureVector<f64>;
pub type Raster = raster::ScalarRaster<f64>;
pub type Histogram = field::DistributionHistogram<f64>;
pub type Stats = field::RegionStats<f64>;
