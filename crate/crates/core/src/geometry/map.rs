use std::collections::HashSet;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::grid::SurfaceGrid;
use super::surface::{Surface, SurfaceError, SurfaceRecord, EPS_HIT};
use super::Vec3;

#[derive(Debug, thiserror::Error)]
pub enum MapError {
    #[error("failed to read map: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed map file: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("unsupported units {0:?} (expected \"meters\")")]
    Units(String),
    #[error("map has no surfaces")]
    Empty,
    #[error("duplicate surface id {0:?}")]
    DuplicateId(String),
    #[error("surface {0:?} extends outside the map bounds")]
    OutOfBounds(String),
    #[error("surface {id:?}: {source}")]
    InvalidSurface {
        id: String,
        #[source]
        source: SurfaceError,
    },
}

/// Axis-aligned box, inclusive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    pub min: Vec3,
    pub max: Vec3,
}

impl Bounds {
    pub fn new(min: Vec3, max: Vec3) -> Self {
        Self { min, max }
    }

    pub fn contains(&self, p: Vec3) -> bool {
        const TOL: f64 = 1e-9;
        p.x >= self.min.x - TOL
            && p.y >= self.min.y - TOL
            && p.z >= self.min.z - TOL
            && p.x <= self.max.x + TOL
            && p.y <= self.max.y + TOL
            && p.z <= self.max.z + TOL
    }

    pub fn extent(&self) -> Vec3 {
        self.max - self.min
    }
}

/// The environment shared by the tracer and the localizer.
#[derive(Debug, Clone)]
pub struct IndoorMap {
    name: String,
    surfaces: Vec<Surface>,
    bounds: Bounds,
    grid: SurfaceGrid,
}

impl PartialEq for IndoorMap {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name && self.surfaces == other.surfaces && self.bounds == other.bounds
    }
}

impl IndoorMap {
    /// Builds a map whose bounds are the extents of its surfaces.
    pub fn new(name: impl Into<String>, surfaces: Vec<Surface>) -> Result<Self, MapError> {
        if surfaces.is_empty() {
            return Err(MapError::Empty);
        }
        let (mut lo, mut hi) = surfaces[0].bounds();
        for s in &surfaces[1..] {
            let (a, b) = s.bounds();
            lo = lo.component_min(a);
            hi = hi.component_max(b);
        }
        Self::with_bounds(name, surfaces, Bounds::new(lo, hi))
    }

    /// Builds a map with explicit bounds. Unlike map files, the surface list
    /// may be empty here, which models free space.
    pub fn with_bounds(name: impl Into<String>, surfaces: Vec<Surface>, bounds: Bounds) -> Result<Self, MapError> {
        let mut seen = HashSet::new();
        for s in &surfaces {
            if !seen.insert(s.id()) {
                return Err(MapError::DuplicateId(s.id().to_string()));
            }
            let (a, b) = s.bounds();
            if !(bounds.contains(a) && bounds.contains(b)) {
                return Err(MapError::OutOfBounds(s.id().to_string()));
            }
        }
        let grid = SurfaceGrid::build(bounds, &surfaces);
        Ok(Self {
            name: name.into(),
            surfaces,
            bounds,
            grid,
        })
    }

    pub fn free_space(bounds: Bounds) -> Self {
        Self {
            name: "free space".into(),
            surfaces: Vec::new(),
            bounds,
            grid: SurfaceGrid::build(bounds, &[]),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn surfaces(&self) -> &[Surface] {
        &self.surfaces
    }

    pub fn surface(&self, index: usize) -> &Surface {
        &self.surfaces[index]
    }

    pub fn bounds(&self) -> Bounds {
        self.bounds
    }

    /// Nearest surface hit along a half-line, as (surface index, hit).
    pub fn first_hit(&self, origin: Vec3, dir: Vec3) -> Option<(usize, super::Hit)> {
        self.first_hit_within(origin, dir, f64::INFINITY)
    }

    pub fn first_hit_within(&self, origin: Vec3, dir: Vec3, max_distance: f64) -> Option<(usize, super::Hit)> {
        self.grid.first_hit(&self.surfaces, origin, dir, max_distance)
    }

    /// All polygon crossings strictly inside the open segment `a`–`b`,
    /// nearest first. Crossings within `EPS_HIT` of either end are ignored.
    pub fn segment_crossings(&self, a: Vec3, b: Vec3) -> Vec<(usize, super::Hit)> {
        let len = a.distance(b);
        if len <= 2.0 * EPS_HIT {
            return Vec::new();
        }
        let dir = (b - a) / len;
        let mut out: Vec<(usize, super::Hit)> = self
            .surfaces
            .iter()
            .enumerate()
            .filter_map(|(i, s)| s.intersect_within(a, dir, len - EPS_HIT).map(|h| (i, h)))
            .collect();
        out.sort_by(|x, y| x.1.distance.total_cmp(&y.1.distance).then(x.0.cmp(&y.0)));
        out
    }

    /// True when the straight segment crosses no surface.
    pub fn is_line_of_sight(&self, a: Vec3, b: Vec3) -> bool {
        self.segment_crossings(a, b).is_empty()
    }

    /// Distance from `p` to the nearest surface, or infinity for free space.
    pub fn clearance(&self, p: Vec3) -> f64 {
        self.surfaces
            .iter()
            .map(|s| s.distance_to_point(p))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn to_record(&self) -> MapRecord {
        MapRecord {
            name: self.name.clone(),
            units: METERS.to_string(),
            surfaces: self.surfaces.iter().map(SurfaceRecord::from).collect(),
        }
    }

    /// Writes the map in the same format [`load_map`] reads.
    pub fn write_json<W: Write>(&self, writer: W) -> Result<(), MapError> {
        serde_json::to_writer_pretty(writer, &self.to_record())?;
        Ok(())
    }
}

const METERS: &str = "meters";

/// On-disk map layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapRecord {
    pub name: String,
    pub units: String,
    pub surfaces: Vec<SurfaceRecord>,
}

impl TryFrom<MapRecord> for IndoorMap {
    type Error = MapError;

    fn try_from(record: MapRecord) -> Result<Self, MapError> {
        if record.units != METERS {
            return Err(MapError::Units(record.units));
        }
        let surfaces = record
            .surfaces
            .into_iter()
            .map(|r| {
                let id = r.id.clone();
                Surface::try_from(r).map_err(|source| MapError::InvalidSurface { id, source })
            })
            .collect::<Result<Vec<_>, _>>()?;
        IndoorMap::new(record.name, surfaces)
    }
}

/// Parses and validates a map file.
pub fn load_map<R: Read>(source: R) -> Result<IndoorMap, MapError> {
    let record: MapRecord = serde_json::from_reader(source)?;
    IndoorMap::try_from(record)
}

pub fn load_map_str(source: &str) -> Result<IndoorMap, MapError> {
    load_map(source.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    const ONE_WALL: &str = r#"{
        "name": "one wall",
        "units": "meters",
        "surfaces": [
            { "id": "w1", "vertices": [[0,0,0],[4,0,0],[4,0,3],[0,0,3]], "material": "drywall" }
        ]
    }"#;

    #[test]
    fn loads_minimal_map() {
        let map = load_map_str(ONE_WALL).unwrap();
        assert_eq!(map.surfaces().len(), 1);
        assert_eq!(map.surface(0).transmission_loss_db(), 7.2);
        assert_eq!(map.surface(0).material(), "drywall");
    }

    #[test]
    fn names_non_coplanar_surface() {
        let src = ONE_WALL.replace("[4,0,3]", "[4,0.5,3]");
        let err = load_map_str(&src).unwrap_err();
        assert!(matches!(&err, MapError::InvalidSurface { id, .. } if id == "w1"));
        assert!(err.to_string().contains("w1"));
    }

    #[test]
    fn rejects_unknown_units_and_fields() {
        let src = ONE_WALL.replace("meters", "feet");
        assert!(matches!(load_map_str(&src), Err(MapError::Units(u)) if u == "feet"));
        let src = ONE_WALL.replace("\"units\"", "\"colour\": 1, \"units\"");
        assert!(matches!(load_map_str(&src), Err(MapError::Parse(_))));
        assert!(matches!(load_map_str("{"), Err(MapError::Parse(_))));
    }

    #[test]
    fn rejects_empty_and_duplicate() {
        let empty = r#"{"name":"e","units":"meters","surfaces":[]}"#;
        assert!(matches!(load_map_str(empty), Err(MapError::Empty)));
        let dup = r#"{"name":"d","units":"meters","surfaces":[
            {"id":"a","vertices":[[0,0,0],[1,0,0],[1,1,0]],"material":"m"},
            {"id":"a","vertices":[[0,0,1],[1,0,1],[1,1,1]],"material":"m"}]}"#;
        assert!(matches!(load_map_str(dup), Err(MapError::DuplicateId(_))));
    }

    #[test]
    fn round_trip_is_fixed_point() {
        let map = load_map_str(ONE_WALL).unwrap();
        let mut buf = Vec::new();
        map.write_json(&mut buf).unwrap();
        let again = load_map(buf.as_slice()).unwrap();
        assert_eq!(map, again);
        let mut buf2 = Vec::new();
        again.write_json(&mut buf2).unwrap();
        assert_eq!(buf, buf2);
    }

    fn brute_force_hit(map: &IndoorMap, origin: Vec3, dir: Vec3) -> Option<(usize, f64)> {
        let mut best = None;
        let mut limit = f64::INFINITY;
        for (i, s) in map.surfaces().iter().enumerate() {
            if let Some(hit) = s.intersect_within(origin, dir, limit) {
                limit = hit.distance;
                best = Some((i, hit.distance));
            }
        }
        best
    }

    #[test]
    fn grid_agrees_with_brute_force() {
        use rand::{Rng, SeedableRng};
        let map = load_map_str(include_str!("../../fixtures/office_synthetic.map.json")).unwrap();
        let b = map.bounds();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20_000 {
            let origin = Vec3::new(
                rng.gen_range(b.min.x..=b.max.x),
                rng.gen_range(b.min.y..=b.max.y),
                rng.gen_range(b.min.z..=b.max.z),
            );
            let dir = Vec3::from_angles(
                rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI),
                rng.gen_range(-1.5..1.5),
            );
            let fast = map.first_hit(origin, dir).map(|(i, h)| (i, h.distance));
            let slow = brute_force_hit(&map, origin, dir);
            match (fast, slow) {
                (Some((_, a)), Some((_, b))) => assert!((a - b).abs() < 1e-9, "{origin} {dir}"),
                (a, b) => assert_eq!(a, b, "{origin} {dir}"),
            }
        }
    }

    #[test]
    fn segment_crossings_are_sorted_and_exclude_endpoints() {
        let walls = (1..=3)
            .rev()
            .map(|i| {
                let x = i as f64;
                Surface::axis_rect(format!("w{i}"), Vec3::new(x, -1.0, -1.0), Vec3::new(x, 1.0, 1.0)).unwrap()
            })
            .collect();
        let map = IndoorMap::new("walls", walls).unwrap();
        let hits = map.segment_crossings(Vec3::ZERO, Vec3::new(3.0, 0.0, 0.0));
        let ids: Vec<&str> = hits.iter().map(|(i, _)| map.surface(*i).id()).collect();
        assert_eq!(ids, ["w1", "w2"]);
        assert!(!map.is_line_of_sight(Vec3::ZERO, Vec3::new(1.5, 0.0, 0.0)));
        assert!(map.is_line_of_sight(Vec3::ZERO, Vec3::new(0.0, 0.0, 0.5)));
    }
}
