use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::Vec3;

/// Self-intersection guard: hits closer than this to a ray origin are ignored.
pub const EPS_HIT: f64 = 1e-9;

/// Maximum out-of-plane deviation of any polygon vertex.
pub const COPLANAR_TOL: f64 = 1e-9;

/// Default through-obstruction loss in dB.
pub const DEFAULT_TRANSMISSION_LOSS_DB: f64 = 7.2;

/// Boundary slack for point-in-polygon tests, in meters.
const EDGE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SurfaceError {
    #[error("polygon needs at least 3 vertices, got {0}")]
    TooFewVertices(usize),
    #[error("vertex {0} is not finite")]
    NonFinite(usize),
    #[error("polygon is degenerate (zero area or repeated vertex)")]
    Degenerate,
    #[error("vertex {index} lies {deviation:.3e} m off the polygon plane")]
    NonCoplanar { index: usize, deviation: f64 },
    #[error("polygon is not convex and simple")]
    NotConvex,
    #[error("transmission loss must be finite and non-negative")]
    InvalidLoss,
}

/// A zero-thickness, two-sided convex planar polygon.
///
/// Vertices are stored in the order given; the normal follows the right-hand
/// rule over that order.
#[derive(Debug, Clone, PartialEq)]
pub struct Surface {
    id: String,
    vertices: Vec<Vec3>,
    normal: Vec3,
    /// Plane is `normal · p = offset`.
    offset: f64,
    material: String,
    transmission_loss_db: f64,
}

/// A ray or segment crossing of a surface.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hit {
    pub point: Vec3,
    pub distance: f64,
}

impl Surface {
    pub fn new(
        id: impl Into<String>,
        vertices: Vec<Vec3>,
        material: impl Into<String>,
        transmission_loss_db: f64,
    ) -> Result<Self, SurfaceError> {
        if vertices.len() < 3 {
            return Err(SurfaceError::TooFewVertices(vertices.len()));
        }
        if let Some(i) = vertices.iter().position(|v| !v.is_finite()) {
            return Err(SurfaceError::NonFinite(i));
        }
        if !(transmission_loss_db.is_finite() && transmission_loss_db >= 0.0) {
            return Err(SurfaceError::InvalidLoss);
        }

        // Newell's method gives the area-weighted normal even for slightly
        // non-planar input, which is what we then test planarity against.
        let n = vertices.len();
        let mut area = Vec3::ZERO;
        for i in 0..n {
            area += vertices[i].cross(vertices[(i + 1) % n]);
        }
        let scale = vertices.iter().map(|v| v.distance(vertices[0])).fold(0.0, f64::max);
        if area.norm() <= 1e-12 * scale.max(1.0).powi(2) {
            return Err(SurfaceError::Degenerate);
        }
        let normal = area.normalized();

        let centroid = vertices.iter().fold(Vec3::ZERO, |acc, &v| acc + v) / n as f64;
        let offset = normal.dot(centroid);
        for (index, v) in vertices.iter().enumerate() {
            let deviation = (normal.dot(*v) - offset).abs();
            if deviation > COPLANAR_TOL {
                return Err(SurfaceError::NonCoplanar { index, deviation });
            }
        }

        // Convex and simple: every turn has the same sign and the turns sum
        // to exactly one revolution.
        let mut total_turn = 0.0;
        for i in 0..n {
            let a = vertices[i];
            let b = vertices[(i + 1) % n];
            let c = vertices[(i + 2) % n];
            let e1 = b - a;
            let e2 = c - b;
            if e1.norm() <= EDGE_TOL || e2.norm() <= EDGE_TOL {
                return Err(SurfaceError::Degenerate);
            }
            let sin_turn = e1.cross(e2).dot(normal);
            if sin_turn < -EDGE_TOL * e1.norm() * e2.norm() {
                return Err(SurfaceError::NotConvex);
            }
            total_turn += sin_turn.atan2(e1.dot(e2));
        }
        if (total_turn - 2.0 * PI).abs() > 1e-6 {
            return Err(SurfaceError::NotConvex);
        }

        Ok(Self {
            id: id.into(),
            vertices,
            normal,
            offset,
            material: material.into(),
            transmission_loss_db,
        })
    }

    /// Axis-aligned rectangle spanning `min`..`max`, where exactly one axis is
    /// flat. Convenient for walls, floors and test fixtures.
    pub fn axis_rect(id: impl Into<String>, min: Vec3, max: Vec3) -> Result<Self, SurfaceError> {
        let v = if min.x == max.x {
            vec![
                Vec3::new(min.x, min.y, min.z),
                Vec3::new(min.x, max.y, min.z),
                Vec3::new(min.x, max.y, max.z),
                Vec3::new(min.x, min.y, max.z),
            ]
        } else if min.y == max.y {
            vec![
                Vec3::new(min.x, min.y, min.z),
                Vec3::new(max.x, min.y, min.z),
                Vec3::new(max.x, min.y, max.z),
                Vec3::new(min.x, min.y, max.z),
            ]
        } else if min.z == max.z {
            vec![
                Vec3::new(min.x, min.y, min.z),
                Vec3::new(max.x, min.y, min.z),
                Vec3::new(max.x, max.y, min.z),
                Vec3::new(min.x, max.y, min.z),
            ]
        } else {
            return Err(SurfaceError::Degenerate);
        };
        Self::new(id, v, "generic", DEFAULT_TRANSMISSION_LOSS_DB)
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn normal(&self) -> Vec3 {
        self.normal
    }

    pub fn material(&self) -> &str {
        &self.material
    }

    pub fn transmission_loss_db(&self) -> f64 {
        self.transmission_loss_db
    }

    /// Signed distance of `p` from the supporting plane, positive on the
    /// normal side.
    pub fn signed_distance(&self, p: Vec3) -> f64 {
        self.normal.dot(p) - self.offset
    }

    /// Reflection of `p` across the supporting plane.
    pub fn mirror_point(&self, p: Vec3) -> Vec3 {
        p - self.normal * (2.0 * self.signed_distance(p))
    }

    /// Whether a point already on (or very near) the plane lies within the
    /// polygon, boundary inclusive.
    pub fn contains_projected(&self, p: Vec3) -> bool {
        let n = self.vertices.len();
        (0..n).all(|i| {
            let a = self.vertices[i];
            let edge = self.vertices[(i + 1) % n] - a;
            edge.cross(p - a).dot(self.normal) >= -EDGE_TOL * edge.norm()
        })
    }

    /// Nearest crossing of the half-line `origin + t·dir` with the polygon for
    /// `t > EPS_HIT`. `dir` must be a unit vector. Both faces count.
    pub fn intersect_ray(&self, origin: Vec3, dir: Vec3) -> Option<Hit> {
        self.intersect_within(origin, dir, f64::INFINITY)
    }

    /// As [`Surface::intersect_ray`] but only for `EPS_HIT < t < max_distance`.
    pub fn intersect_within(&self, origin: Vec3, dir: Vec3, max_distance: f64) -> Option<Hit> {
        let denom = self.normal.dot(dir);
        if denom.abs() < 1e-15 {
            return None;
        }
        let t = -self.signed_distance(origin) / denom;
        if !(t > EPS_HIT && t < max_distance) {
            return None;
        }
        let point = origin + dir * t;
        self.contains_projected(point).then_some(Hit { point, distance: t })
    }

    /// Euclidean distance from `p` to the closest point of the polygon.
    pub fn distance_to_point(&self, p: Vec3) -> f64 {
        let h = self.signed_distance(p);
        let foot = p - self.normal * h;
        if self.contains_projected(foot) {
            return h.abs();
        }
        let n = self.vertices.len();
        (0..n)
            .map(|i| point_segment_distance(p, self.vertices[i], self.vertices[(i + 1) % n]))
            .fold(f64::INFINITY, f64::min)
    }

    pub(crate) fn bounds(&self) -> (Vec3, Vec3) {
        let first = self.vertices[0];
        self.vertices.iter().fold((first, first), |(lo, hi), &v| {
            (lo.component_min(v), hi.component_max(v))
        })
    }
}

fn point_segment_distance(p: Vec3, a: Vec3, b: Vec3) -> f64 {
    let ab = b - a;
    let t = ((p - a).dot(ab) / ab.norm_squared()).clamp(0.0, 1.0);
    p.distance(a + ab * t)
}

/// Mirror direction `d` about a surface with unit normal `normal`. The sign
/// of the normal does not matter.
pub fn reflect_direction(d: Vec3, normal: Vec3) -> Vec3 {
    let r = d - normal * (2.0 * d.dot(normal));
    // Renormalize to keep unit length from drifting over repeated bounces.
    r / r.norm()
}

/// Serialized form of a surface, as it appears in map files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurfaceRecord {
    pub id: String,
    pub vertices: Vec<[f64; 3]>,
    pub material: String,
    #[serde(default = "default_loss")]
    pub transmission_loss_db: f64,
}

fn default_loss() -> f64 {
    DEFAULT_TRANSMISSION_LOSS_DB
}

impl From<&Surface> for SurfaceRecord {
    fn from(s: &Surface) -> Self {
        Self {
            id: s.id.clone(),
            vertices: s.vertices.iter().map(|&v| v.into()).collect(),
            material: s.material.clone(),
            transmission_loss_db: s.transmission_loss_db,
        }
    }
}

impl TryFrom<SurfaceRecord> for Surface {
    type Error = SurfaceError;

    fn try_from(r: SurfaceRecord) -> Result<Self, Self::Error> {
        Surface::new(
            r.id,
            r.vertices.into_iter().map(Vec3::from).collect(),
            r.material,
            r.transmission_loss_db,
        )
    }
}
