//! Unsupervised retinal vessel segmentation.
//!
//! The library implements a classical pipeline: a multiscale vesselness
//! filter turns a fundus photograph into a tubularity response, a fixed
//! intensity threshold binarizes it, and a connectivity filter scores every
//! white pixel with the size of its connected component so that small
//! speckle can be removed by thresholding the scores. A local-sensitive
//! variant of the connectivity filter additionally bridges small gaps
//! between nearby components while traversing, trading a tolerance budget
//! for reconnected vessel branches. Morphological closing is provided as a
//! baseline post-processing step, and the `metrics` module computes the
//! TP-rate / TN-rate / accuracy numbers used to compare methods.
//!
//! Modules:
//! - [`raster`]: 8-bit grayscale/RGB rasters and binary masks.
//! - [`io`]: PNG and PGM/PPM reading/writing, score-map persistence.
//! - [`vesselness`]: Gaussian-derivative Hessian, eigenvalues, vesselness.
//! - [`connectivity`]: grid distance, rings, connectivity filters.
//! - [`morphology`]: binary dilation, erosion, closing.
//! - [`metrics`]: confusion counts, rates, report aggregation.
//!
//! The floating-point front end is generic over the scalar type via
//! [`Scalar`] (implemented for `f32` and `f64`); concrete aliases for the
//! common instantiations are exported at the crate root.

pub mod connectivity;
pub mod error;
pub mod io;
pub mod metrics;
pub mod morphology;
pub mod raster;
mod scalar;
pub mod vesselness;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Vesselness parameters instantiated at `f32`.
pub type FrangiParams32 = vesselness::FrangiParams<f32>;
/// Vesselness parameters instantiated at `f64`.
pub type FrangiParams64 = vesselness::FrangiParams<f64>;
/// Hessian field instantiated at `f32`.
pub type HessianField32 = vesselness::HessianField<f32>;
/// Hessian field instantiated at `f64`.
pub type HessianField64 = vesselness::HessianField<f64>;
/// Grid distance parameters instantiated at `f32`.
pub type DistanceParams32 = connectivity::DistanceParams<f32>;
/// Grid distance parameters instantiated at `f64`.
pub type DistanceParams64 = connectivity::DistanceParams<f64>;
