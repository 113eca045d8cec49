#![allow(dead_code)]

use std::path::Path;

use mmwave_loc::geometry::{load_map, mirror_point, Bounds, IndoorMap, InteractionKind, Surface, Vec3};
use mmwave_loc::raytracer::MultipathComponent;
use mmwave_loc::SPEED_OF_LIGHT;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn office() -> IndoorMap {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/office_synthetic.map.json");
    load_map(std::fs::File::open(path).unwrap()).unwrap()
}

/// Wall in the plane y = 0 spanning x in [-50, 50] and z in [-50, 50].
pub fn floor_wall_map() -> IndoorMap {
    let wall = Surface::axis_rect("wall", Vec3::new(-50.0, 0.0, -50.0), Vec3::new(50.0, 0.0, 50.0)).unwrap();
    IndoorMap::with_bounds("one wall", vec![wall], cube(60.0)).unwrap()
}

pub fn cube(half: f64) -> Bounds {
    Bounds::new(Vec3::new(-half, -half, -half), Vec3::new(half, half, half))
}

/// Uniform point at `height` inside the map, at least `clearance` from
/// every surface.
pub fn free_point(map: &IndoorMap, rng: &mut ChaCha8Rng, height: f64, clearance: f64) -> Vec3 {
    let b = map.bounds();
    loop {
        let p = Vec3::new(rng.gen_range(b.min.x..b.max.x), rng.gen_range(b.min.y..b.max.y), height);
        if map.clearance(p) >= clearance {
            return p;
        }
    }
}

/// Base-station / user pairs on the office map used by several suites.
pub fn office_pairs() -> Vec<(Vec3, Vec3)> {
    vec![
        (Vec3::new(12.5, 12.5, 2.5), Vec3::new(4.0, 8.0, 1.5)),
        (Vec3::new(25.0, 6.0, 2.5), Vec3::new(31.0, 20.0, 1.5)),
        (Vec3::new(37.5, 12.5, 2.5), Vec3::new(44.0, 3.0, 1.5)),
        (Vec3::new(5.0, 6.0, 2.5), Vec3::new(7.5, 21.0, 1.5)),
        (Vec3::new(15.0, 19.5, 2.5), Vec3::new(18.0, 12.3, 1.5)),
    ]
}

pub fn angle_between(a: Vec3, b: Vec3) -> f64 {
    a.cross(b).norm().atan2(a.dot(b))
}

/// Geometric defects of traced components: endpoints, length and delay
/// consistency, image unfolding, interaction points on their polygons,
/// equal angles at reflections and straight transmissions.
pub fn invariant_violations(map: &IndoorMap, tx: Vec3, rx: Vec3, comps: &[MultipathComponent]) -> Vec<String> {
    let mut out = Vec::new();
    for c in comps {
        let label = c.signature_label(map).to_string();
        let mut fail = |what: String| out.push(format!("{label}: {what}"));
        if c.vertices.first() != Some(&tx) || c.vertices.last() != Some(&rx) {
            fail("endpoints".into());
        }
        if c.vertices.len() != c.interactions.len() + 2 {
            fail("vertex count".into());
            continue;
        }
        let summed: f64 = c.vertices.windows(2).map(|w| w[0].distance(w[1])).sum();
        if (summed - c.path_length).abs() > 1e-9 {
            fail(format!("length {summed} vs {}", c.path_length));
        }
        if (c.tof * SPEED_OF_LIGHT - c.path_length).abs() > 1e-12 * c.path_length {
            fail("tof".into());
        }
        // Mirror the receiver back through the reflectors.
        let mut image = rx;
        for step in c.interactions.iter().rev() {
            if step.kind == InteractionKind::Reflection {
                image = mirror_point(image, map.surface(step.surface));
            }
        }
        if (tx.distance(image) - c.path_length).abs() > 1e-9 {
            fail(format!("unfolded length {} vs {}", tx.distance(image), c.path_length));
        }
        for (i, step) in c.interactions.iter().enumerate() {
            let s = map.surface(step.surface);
            let p = c.vertices[i + 1];
            if s.signed_distance(p).abs() > 1e-9 || !s.contains_projected(p) {
                fail(format!("vertex {p} off its surface"));
            }
            let incoming = (p - c.vertices[i]).normalized();
            let outgoing = (c.vertices[i + 2] - p).normalized();
            match step.kind {
                InteractionKind::Reflection => {
                    let a = angle_between(-incoming, s.normal()).min(angle_between(-incoming, -s.normal()));
                    let b = angle_between(outgoing, s.normal()).min(angle_between(outgoing, -s.normal()));
                    if (a - b).abs() > 1e-9 {
                        fail(format!("reflection angles {a} vs {b}"));
                    }
                    if s.normal().dot(incoming) * s.normal().dot(outgoing) >= 0.0 {
                        fail("reflection crosses the surface".into());
                    }
                }
                InteractionKind::Transmission => {
                    if angle_between(incoming, outgoing) > 1e-9 {
                        fail("transmission bends".into());
                    }
                }
            }
        }
    }
    out
}
