//! Uniform voxel grid over a map's bounds for nearest-hit queries.
//!
//! Each surface is registered in every cell its bounding box touches; a ray
//! walks the cells it crosses in order (3-D DDA) and stops at the first
//! cell whose exit distance lies beyond the best hit found so far.

use super::{Bounds, Hit, Surface, Vec3};

/// Target number of cells along the longest axis.
const RESOLUTION: f64 = 24.0;
const MAX_CELLS_PER_AXIS: usize = 64;
/// Registration padding so surfaces lying on a cell face land in both cells.
const PAD: f64 = 1e-6;

#[derive(Debug, Clone)]
pub(crate) struct SurfaceGrid {
    origin: Vec3,
    cell: Vec3,
    dims: [usize; 3],
    cells: Vec<Vec<u32>>,
}

impl SurfaceGrid {
    pub(crate) fn build(bounds: Bounds, surfaces: &[Surface]) -> Self {
        let extent = bounds.extent();
        let longest = extent.x.max(extent.y).max(extent.z).max(1e-9);
        let target = longest / RESOLUTION;
        let axis = |e: f64| -> (usize, f64) {
            if e <= 1e-9 {
                (1, 1.0)
            } else {
                let n = ((e / target).ceil() as usize).clamp(1, MAX_CELLS_PER_AXIS);
                (n, e / n as f64)
            }
        };
        let (nx, cx) = axis(extent.x);
        let (ny, cy) = axis(extent.y);
        let (nz, cz) = axis(extent.z);
        let mut grid = Self {
            origin: bounds.min,
            cell: Vec3::new(cx, cy, cz),
            dims: [nx, ny, nz],
            cells: vec![Vec::new(); nx * ny * nz],
        };
        for (i, s) in surfaces.iter().enumerate() {
            let (lo, hi) = s.bounds();
            let a = grid.cell_coords(lo - Vec3::new(PAD, PAD, PAD));
            let b = grid.cell_coords(hi + Vec3::new(PAD, PAD, PAD));
            for z in a[2]..=b[2] {
                for y in a[1]..=b[1] {
                    for x in a[0]..=b[0] {
                        let idx = grid.index([x, y, z]);
                        grid.cells[idx].push(i as u32);
                    }
                }
            }
        }
        grid
    }

    fn cell_coords(&self, p: Vec3) -> [usize; 3] {
        let rel = p - self.origin;
        let f = |v: f64, c: f64, n: usize| ((v / c).floor().max(0.0) as usize).min(n - 1);
        [
            f(rel.x, self.cell.x, self.dims[0]),
            f(rel.y, self.cell.y, self.dims[1]),
            f(rel.z, self.cell.z, self.dims[2]),
        ]
    }

    fn index(&self, c: [usize; 3]) -> usize {
        (c[2] * self.dims[1] + c[1]) * self.dims[0] + c[0]
    }

    /// Nearest hit with distance in `(EPS_HIT, max_distance)`.
    pub(crate) fn first_hit(
        &self,
        surfaces: &[Surface],
        origin: Vec3,
        dir: Vec3,
        max_distance: f64,
    ) -> Option<(usize, Hit)> {
        let o = [
            origin.x - self.origin.x,
            origin.y - self.origin.y,
            origin.z - self.origin.z,
        ];
        let d = [dir.x, dir.y, dir.z];
        let size = [self.cell.x, self.cell.y, self.cell.z];

        // Clip the ray to the grid box.
        let mut t_enter: f64 = 0.0;
        let mut t_leave = max_distance;
        for k in 0..3 {
            let lo = 0.0 - PAD;
            let hi = size[k] * self.dims[k] as f64 + PAD;
            if d[k].abs() < 1e-300 {
                if o[k] < lo || o[k] > hi {
                    return None;
                }
            } else {
                let t1 = (lo - o[k]) / d[k];
                let t2 = (hi - o[k]) / d[k];
                t_enter = t_enter.max(t1.min(t2));
                t_leave = t_leave.min(t1.max(t2));
            }
        }
        if t_enter > t_leave {
            return None;
        }

        let mut cell = [0usize; 3];
        let mut step = [0isize; 3];
        let mut t_next = [f64::INFINITY; 3];
        let mut t_delta = [f64::INFINITY; 3];
        for k in 0..3 {
            let p = o[k] + d[k] * t_enter;
            let c = ((p / size[k]).floor().max(0.0) as usize).min(self.dims[k] - 1);
            cell[k] = c;
            if d[k] > 0.0 {
                step[k] = 1;
                t_delta[k] = size[k] / d[k];
                t_next[k] = ((c + 1) as f64 * size[k] - o[k]) / d[k];
            } else if d[k] < 0.0 {
                step[k] = -1;
                t_delta[k] = -size[k] / d[k];
                t_next[k] = (c as f64 * size[k] - o[k]) / d[k];
            }
        }

        let mut best: Option<(usize, Hit)> = None;
        let mut limit = max_distance;
        loop {
            for &s in &self.cells[self.index(cell)] {
                let s = s as usize;
                if let Some(hit) = surfaces[s].intersect_within(origin, dir, limit) {
                    let better = match best {
                        Some((bi, bh)) => hit.distance < bh.distance || (hit.distance == bh.distance && s < bi),
                        None => true,
                    };
                    if better {
                        best = Some((s, hit));
                        // Keep equal-distance hits eligible for the index tie-break.
                        limit = hit.distance + 1e-12 * hit.distance.max(1.0);
                    }
                }
            }
            let axis = if t_next[0] <= t_next[1] && t_next[0] <= t_next[2] {
                0
            } else if t_next[1] <= t_next[2] {
                1
            } else {
                2
            };
            let cell_exit = t_next[axis];
            if let Some((_, h)) = best {
                if h.distance <= cell_exit {
                    return best;
                }
            }
            if cell_exit > t_leave {
                return best;
            }
            let next = cell[axis] as isize + step[axis];
            if next < 0 || next >= self.dims[axis] as isize {
                return best;
            }
            cell[axis] = next as usize;
            t_next[axis] += t_delta[axis];
        }
    }
}
