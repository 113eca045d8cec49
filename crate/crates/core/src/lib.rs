//! Indoor millimeter-wave ray tracing and map-assisted localization.
//!
//! - [`geometry`]: vectors, convex planar surfaces, and the map model.
//! - [`raytracer`]: hybrid shooting-bouncing-rays tracer refined by the
//!   method of images, with a free-space-plus-interaction-loss link budget.
//! - [`localization`]: candidate generation from (angle, time of flight)
//!   observations, single-linkage clustering, multi-base-station fusion, and
//!   the classic three-point angle fix.
//! - [`simharness`]: Monte Carlo experiments over random users with noisy
//!   measurements, producing RMS error tables and CDFs.

pub mod geometry;
pub mod localization;
pub mod raytracer;
pub mod simharness;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

pub use geometry::{IndoorMap, Surface, Vec3};
