//! The surveying "three-point problem": recover a planar position from the
//! two angles that three known stations subtend at it.
//!
//! The locus of points seeing a chord under a fixed angle is a pair of
//! circular arcs through the chord's endpoints. Both loci pass through the
//! middle station, so each pairing of circles meets in at most one other
//! point: the mirror image of the middle station across the line of
//! centers. Every candidate is checked against the measured angles.

use std::f64::consts::PI;

use crate::geometry::Vec3;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ThreePointError {
    #[error("base stations must be pairwise distinct")]
    CoincidentStations,
    #[error("subtended angle {0} rad is outside (0, pi)")]
    AngleOutOfRange(f64),
    /// The user lies on (or numerically on) the circle through all three
    /// stations, where both loci coincide and the fix is undetermined.
    #[error("user is on the circle through all three base stations; position is undetermined")]
    Degenerate,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct P2 {
    x: f64,
    y: f64,
}

impl P2 {
    fn of(v: Vec3) -> Self {
        Self { x: v.x, y: v.y }
    }
    fn sub(self, o: P2) -> P2 {
        P2 {
            x: self.x - o.x,
            y: self.y - o.y,
        }
    }
    fn add(self, o: P2) -> P2 {
        P2 {
            x: self.x + o.x,
            y: self.y + o.y,
        }
    }
    fn scale(self, s: f64) -> P2 {
        P2 {
            x: self.x * s,
            y: self.y * s,
        }
    }
    fn dot(self, o: P2) -> f64 {
        self.x * o.x + self.y * o.y
    }
    fn cross(self, o: P2) -> f64 {
        self.x * o.y - self.y * o.x
    }
    fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }
    fn dist(self, o: P2) -> f64 {
        self.sub(o).norm()
    }
}

/// Unsigned angle at `p` between the directions to `a` and `b`.
fn subtended(p: P2, a: P2, b: P2) -> f64 {
    let u = a.sub(p);
    let v = b.sub(p);
    u.cross(v).abs().atan2(u.dot(v))
}

/// Both circles through `a` and `b` on which the chord subtends `theta`.
fn locus_centers(a: P2, b: P2, theta: f64) -> [P2; 2] {
    let mid = a.add(b).scale(0.5);
    let chord = b.sub(a);
    let perp = P2 {
        x: -chord.y,
        y: chord.x,
    }
    .scale(1.0 / chord.norm());
    let h = 0.5 * chord.norm() / theta.tan();
    [mid.add(perp.scale(h)), mid.add(perp.scale(-h))]
}

const ANGLE_TOL: f64 = 1e-6;
const COINCIDENT_REL: f64 = 1e-7;

/// Positions (at the stations' mean height) where stations 1,2 subtend
/// `theta1` and stations 2,3 subtend `theta2`. Computed in the horizontal
/// plane; station heights are ignored.
pub fn three_point_fix(stations: [Vec3; 3], theta1: f64, theta2: f64) -> Result<Vec<Vec3>, ThreePointError> {
    for theta in [theta1, theta2] {
        if !(theta > 0.0 && theta < PI) {
            return Err(ThreePointError::AngleOutOfRange(theta));
        }
    }
    let [s1, s2, s3] = stations.map(P2::of);
    let scale = s1.dist(s2).max(s2.dist(s3)).max(s1.dist(s3));
    let tiny = 1e-9 * scale.max(f64::MIN_POSITIVE);
    if s1.dist(s2) <= tiny || s2.dist(s3) <= tiny || s1.dist(s3) <= tiny || scale == 0.0 {
        return Err(ThreePointError::CoincidentStations);
    }
    let height = (stations[0].z + stations[1].z + stations[2].z) / 3.0;

    let matches = |p: P2| {
        (subtended(p, s1, s2) - theta1).abs() <= ANGLE_TOL && (subtended(p, s2, s3) - theta2).abs() <= ANGLE_TOL
    };

    let mut fixes: Vec<P2> = Vec::new();
    for c1 in locus_centers(s1, s2, theta1) {
        for c2 in locus_centers(s2, s3, theta2) {
            let gap = c2.sub(c1);
            if gap.norm() <= COINCIDENT_REL * scale {
                // Both loci are the circumcircle. The angles are constant on
                // each arc between stations, so test one point per arc.
                if circumcircle_arc_midpoints(c1, [s1, s2, s3]).into_iter().any(matches) {
                    return Err(ThreePointError::Degenerate);
                }
                continue;
            }
            let u = gap.scale(1.0 / gap.norm());
            let rel = s2.sub(c1);
            let foot = c1.add(u.scale(rel.dot(u)));
            let p = foot.scale(2.0).sub(s2);
            if [s1, s2, s3].iter().any(|s| s.dist(p) <= tiny) {
                continue;
            }
            if matches(p) && !fixes.iter().any(|q| q.dist(p) <= tiny) {
                fixes.push(p);
            }
        }
    }
    fixes.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    Ok(fixes.into_iter().map(|p| Vec3::new(p.x, p.y, height)).collect())
}

fn circumcircle_arc_midpoints(center: P2, stations: [P2; 3]) -> [P2; 3] {
    let radius = stations[0].dist(center);
    let mut angles = stations.map(|s| (s.y - center.y).atan2(s.x - center.x));
    angles.sort_by(f64::total_cmp);
    let mid = |a: f64, b: f64| {
        let t = 0.5 * (a + b);
        P2 {
            x: center.x + radius * t.cos(),
            y: center.y + radius * t.sin(),
        }
    };
    [
        mid(angles[0], angles[1]),
        mid(angles[1], angles[2]),
        mid(angles[2], angles[0] + 2.0 * PI),
    ]
}

/// Angle subtended at `user` by two stations, in the horizontal plane.
pub fn subtended_angle(user: Vec3, a: Vec3, b: Vec3) -> f64 {
    subtended(P2::of(user), P2::of(a), P2::of(b))
}
