//! Quasi-uniform launch directions from a tessellated icosahedron.
//!
//! Every icosahedron face is split into `N²` sub-triangles on a barycentric
//! grid and the grid points are pushed out to the unit sphere. Points on
//! shared edges and corners are identified by their exact barycentric
//! weights over the original vertices, so the vertex count is exactly
//! `10·N² + 2` with no floating-point deduplication.

use std::collections::HashMap;

use crate::geometry::Vec3;

use super::TraceError;

/// Mean angular spacing of the launch grid is roughly this many degrees
/// divided by the tessellation factor.
pub const SPACING_DEGREES_AT_N1: f64 = 69.0;

#[derive(Debug, Clone, PartialEq)]
pub struct LaunchGrid {
    tessellation: u32,
    directions: Vec<Vec3>,
}

impl LaunchGrid {
    pub fn tessellation(&self) -> u32 {
        self.tessellation
    }

    pub fn directions(&self) -> &[Vec3] {
        &self.directions
    }

    pub fn len(&self) -> usize {
        self.directions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.directions.is_empty()
    }

    /// Nominal inter-ray angle, 69°/N, in radians.
    pub fn nominal_spacing(&self) -> f64 {
        nominal_spacing(self.tessellation)
    }
}

pub fn nominal_spacing(tessellation: u32) -> f64 {
    (SPACING_DEGREES_AT_N1 / tessellation as f64).to_radians()
}

/// Expected number of directions for tessellation factor `n`.
pub fn direction_count(n: u32) -> usize {
    10 * (n as usize) * (n as usize) + 2
}

/// The 12 unit vertices and 20 faces of a regular icosahedron.
pub(crate) fn icosahedron() -> ([Vec3; 12], Vec<[usize; 3]>) {
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let raw = [
        (-1.0, phi, 0.0),
        (1.0, phi, 0.0),
        (-1.0, -phi, 0.0),
        (1.0, -phi, 0.0),
        (0.0, -1.0, phi),
        (0.0, 1.0, phi),
        (0.0, -1.0, -phi),
        (0.0, 1.0, -phi),
        (phi, 0.0, -1.0),
        (phi, 0.0, 1.0),
        (-phi, 0.0, -1.0),
        (-phi, 0.0, 1.0),
    ];
    let verts = raw.map(|(x, y, z)| Vec3::new(x, y, z));

    // Edges of the unnormalized solid all have length 2; faces are the
    // mutually adjacent triples.
    let adjacent = |a: usize, b: usize| (verts[a].distance(verts[b]) - 2.0).abs() < 1e-9;
    let mut faces = Vec::with_capacity(20);
    for a in 0..12 {
        for b in a + 1..12 {
            for c in b + 1..12 {
                if adjacent(a, b) && adjacent(b, c) && adjacent(a, c) {
                    faces.push([a, b, c]);
                }
            }
        }
    }
    debug_assert_eq!(faces.len(), 20);
    (verts.map(Vec3::normalized), faces)
}

/// Builds the launch grid for tessellation factor `n`.
pub fn launch_directions(n: u32) -> Result<LaunchGrid, TraceError> {
    if n == 0 {
        return Err(TraceError::InvalidConfig(
            "tessellation factor must be at least 1".into(),
        ));
    }
    let (verts, faces) = icosahedron();
    let n_us = n as usize;

    // Key: the non-zero (vertex, weight) pairs, sorted by vertex.
    let mut index: HashMap<Vec<(usize, usize)>, ()> = HashMap::with_capacity(direction_count(n));
    let mut directions = Vec::with_capacity(direction_count(n));
    for face in &faces {
        for i in 0..=n_us {
            for j in 0..=n_us - i {
                let k = n_us - i - j;
                let mut key: Vec<(usize, usize)> = [(face[0], i), (face[1], j), (face[2], k)]
                    .into_iter()
                    .filter(|&(_, w)| w > 0)
                    .collect();
                key.sort_unstable();
                if index.insert(key.clone(), ()).is_some() {
                    continue;
                }
                let p = key.iter().fold(Vec3::ZERO, |acc, &(v, w)| acc + verts[v] * w as f64);
                directions.push(p.normalized());
            }
        }
    }
    debug_assert_eq!(directions.len(), direction_count(n));
    Ok(LaunchGrid {
        tessellation: n,
        directions,
    })
}
