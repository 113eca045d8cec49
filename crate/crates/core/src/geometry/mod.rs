//! Exact 3-D primitives and the indoor map model.
//!
//! Surfaces are zero-thickness, two-sided convex polygons. Every operation
//! here is pure and all types are immutable once built, so maps can be
//! shared freely across worker threads.

mod grid;
mod map;
mod ray;
mod surface;
mod vec3;

pub use map::{load_map, load_map_str, Bounds, IndoorMap, MapError, MapRecord};
pub use ray::{intersect, Interaction, InteractionKind, Ray, Step};
pub use surface::{
    reflect_direction, Hit, Surface, SurfaceError, SurfaceRecord, COPLANAR_TOL, DEFAULT_TRANSMISSION_LOSS_DB, EPS_HIT,
};
pub use vec3::Vec3;

/// Reflection of `p` across the supporting plane of `surface`.
pub fn mirror_point(p: Vec3, surface: &Surface) -> Vec3 {
    surface.mirror_point(p)
}
