use std::collections::BTreeSet;

use rayon::prelude::*;

use crate::geometry::{reflect_direction, IndoorMap, InteractionKind, Step, Vec3, EPS_HIT};

use super::launch::{launch_directions, LaunchGrid};
use super::power::{fspl_db, path_power_dbm, reflection_loss_db, InteractionLoss};
use super::{MultipathComponent, TraceConfig, TraceError};

/// SBR branches are abandoned once their estimated power is this far below
/// the detection floor. The estimate uses the SBR ray's own incidence
/// angles, which differ from the refined path's by about one grid spacing.
const PRUNE_MARGIN_DB: f64 = 6.0;

/// A tracer bound to one configuration, caching its launch grid.
#[derive(Debug, Clone)]
pub struct Tracer {
    cfg: TraceConfig,
    grid: LaunchGrid,
}

impl Tracer {
    pub fn new(cfg: TraceConfig) -> Result<Self, TraceError> {
        cfg.validate()?;
        let grid = launch_directions(cfg.tessellation)?;
        Ok(Self { cfg, grid })
    }

    pub fn config(&self) -> &TraceConfig {
        &self.cfg
    }

    pub fn grid(&self) -> &LaunchGrid {
        &self.grid
    }

    /// All multipath components from `tx` to `rx`, sorted by time of flight
    /// and then signature.
    pub fn trace(&self, map: &IndoorMap, tx: Vec3, rx: Vec3) -> Result<Vec<MultipathComponent>, TraceError> {
        let bounds = map.bounds();
        if !bounds.contains(tx) {
            return Err(TraceError::TxOutOfBounds(tx));
        }
        if !bounds.contains(rx) {
            return Err(TraceError::RxOutOfBounds(rx));
        }
        if tx.distance(rx) <= EPS_HIT {
            return Err(TraceError::Coincident);
        }

        // Shooting from both ends makes the result reciprocal and catches
        // paths that one end's launch grid happens to straddle.
        let mut signatures = self.shoot_all(map, tx, rx);
        signatures.extend(
            self.shoot_all(map, rx, tx)
                .into_iter()
                .map(|s| s.into_iter().rev().collect::<Vec<Step>>()),
        );

        let mut components = Vec::new();
        for signature in &signatures {
            let Some(vertices) = refine_path(map, tx, rx, signature) else {
                continue;
            };
            let component = build_component(map, &self.cfg, signature.clone(), vertices)?;
            if component.received_power_dbm >= self.cfg.min_power_dbm {
                components.push(component);
            }
        }
        components.sort_by(|a, b| {
            a.tof
                .total_cmp(&b.tof)
                .then_with(|| a.interactions.cmp(&b.interactions))
        });
        Ok(components)
    }

    /// Distinct interaction signatures of every launched ray that passed
    /// through the reception sphere. The direct path, through whatever it
    /// crosses, is always a candidate: rays grazing an edge can miss it.
    fn shoot_all(&self, map: &IndoorMap, tx: Vec3, rx: Vec3) -> BTreeSet<Vec<Step>> {
        let shooter = Shooter {
            map,
            cfg: &self.cfg,
            rx,
            capture_per_meter: self.cfg.capture_alpha * self.grid.nominal_spacing() / 2.0,
        };
        let mut found = self
            .grid
            .directions()
            .par_iter()
            .fold(
                || (BTreeSet::new(), Vec::new()),
                |(mut acc, mut history), &direction| {
                    let start = Branch {
                        origin: tx,
                        direction,
                        length: 0.0,
                        loss_db: 0.0,
                        reflections: 0,
                        transmissions: 0,
                    };
                    shooter.shoot(start, &mut history, &mut acc);
                    (acc, history)
                },
            )
            .map(|(acc, _)| acc)
            .reduce(BTreeSet::new, |mut a, mut b| {
                a.append(&mut b);
                a
            });
        let direct: Vec<Step> = map
            .segment_crossings(tx, rx)
            .into_iter()
            .map(|(index, _)| Step::transmit(index))
            .collect();
        if direct.len() <= self.cfg.max_transmissions as usize {
            found.insert(direct);
        }
        found
    }
}

struct Shooter<'a> {
    map: &'a IndoorMap,
    cfg: &'a TraceConfig,
    rx: Vec3,
    capture_per_meter: f64,
}

/// Branch state of one SBR ray. The interaction history lives in a shared
/// stack owned by the caller, so forking does not allocate.
#[derive(Clone, Copy)]
struct Branch {
    origin: Vec3,
    direction: Vec3,
    length: f64,
    loss_db: f64,
    reflections: u32,
    transmissions: u32,
}

impl Shooter<'_> {
    fn shoot(&self, ray: Branch, history: &mut Vec<Step>, found: &mut BTreeSet<Vec<Step>>) {
        let hit = self.map.first_hit(ray.origin, ray.direction);
        let segment_end = hit.map_or(f64::INFINITY, |(_, h)| h.distance);

        // Reception sphere around the RX, radius growing with unfolded length.
        let to_rx = self.rx - ray.origin;
        let along = to_rx.dot(ray.direction);
        if along > 0.0 && along <= segment_end {
            let miss = (to_rx - ray.direction * along).norm();
            if miss <= self.capture_per_meter * (ray.length + along) && !found.contains(history) {
                found.insert(history.clone());
            }
        }

        let Some((index, hit)) = hit else {
            return;
        };
        let reach = ray.length + hit.distance;
        let estimate = self.cfg.tx_power_dbm - fspl_db(reach, self.cfg.frequency_hz) - ray.loss_db;
        if estimate < self.cfg.min_power_dbm - PRUNE_MARGIN_DB {
            return;
        }

        let surface = self.map.surface(index);
        let normal = surface.normal();
        if ray.reflections < self.cfg.max_reflections {
            let theta = incidence_angle(ray.direction, normal);
            let loss = reflection_loss_db(theta).expect("incidence angle is within [0, pi/2]");
            history.push(Step::reflect(index));
            self.shoot(
                Branch {
                    origin: hit.point,
                    direction: reflect_direction(ray.direction, normal),
                    length: reach,
                    loss_db: ray.loss_db + loss,
                    reflections: ray.reflections + 1,
                    ..ray
                },
                history,
                found,
            );
            history.pop();
        }
        if ray.transmissions < self.cfg.max_transmissions {
            history.push(Step::transmit(index));
            self.shoot(
                Branch {
                    origin: hit.point,
                    length: reach,
                    loss_db: ray.loss_db + surface.transmission_loss_db(),
                    transmissions: ray.transmissions + 1,
                    ..ray
                },
                history,
                found,
            );
            history.pop();
        }
    }
}

/// Angle between a propagation direction and a surface normal, folded into
/// [0, π/2].
pub(crate) fn incidence_angle(dir: Vec3, normal: Vec3) -> f64 {
    dir.cross(normal).norm().atan2(dir.dot(normal).abs())
}

/// Traces with a one-off [`Tracer`].
pub fn trace(map: &IndoorMap, tx: Vec3, rx: Vec3, cfg: &TraceConfig) -> Result<Vec<MultipathComponent>, TraceError> {
    Tracer::new(cfg.clone())?.trace(map, tx, rx)
}

/// Exact path for an interaction signature, by the method of images.
///
/// The receiver is mirrored through the reflecting surfaces from last to
/// first; each reflection point is where the segment towards the current
/// image crosses its surface. Transmissions do not bend the path, so they
/// are checked afterwards: every segment must cross exactly the transmitting
/// surfaces the signature lists for it, in order, and nothing else.
///
/// Returns the vertex list `[tx, p1, .., pk, rx]` (reflection and
/// transmission points interleaved in signature order), or `None` when the
/// signature is not geometrically realizable.
pub fn refine_path(map: &IndoorMap, tx: Vec3, rx: Vec3, signature: &[Step]) -> Option<Vec<Vec3>> {
    let reflectors: Vec<usize> = signature
        .iter()
        .filter(|s| s.kind == InteractionKind::Reflection)
        .map(|s| s.surface)
        .collect();
    let m = reflectors.len();

    // images[j]: RX mirrored through the last j reflectors.
    let mut images = Vec::with_capacity(m + 1);
    images.push(rx);
    for &s in reflectors.iter().rev() {
        let last = *images.last().unwrap();
        images.push(map.surface(s).mirror_point(last));
    }

    let mut bounce_points = Vec::with_capacity(m);
    let mut from = tx;
    for (i, &s) in reflectors.iter().enumerate() {
        let surface = map.surface(s);
        let target = images[m - i];
        let da = surface.signed_distance(from);
        let db = surface.signed_distance(target);
        if da.abs() <= EPS_HIT || db.abs() <= EPS_HIT || (da > 0.0) == (db > 0.0) {
            return None;
        }
        let q = from + (target - from) * (da / (da - db));
        if !surface.contains_projected(q) {
            return None;
        }
        bounce_points.push(q);
        from = q;
    }

    // Walk the legs between bounces and splice in the transmission points.
    let mut vertices = Vec::with_capacity(signature.len() + 2);
    vertices.push(tx);
    let mut steps = signature.iter().peekable();
    for (leg, &end) in bounce_points.iter().chain([&rx]).enumerate() {
        let start = *vertices.last().unwrap();
        if start.distance(end) <= 2.0 * EPS_HIT {
            return None;
        }
        let crossings = map.segment_crossings(start, end);
        let mut crossed = crossings.iter();
        while let Some(step) = steps.next_if(|s| s.kind == InteractionKind::Transmission) {
            let (surface, hit) = crossed.next()?;
            if *surface != step.surface {
                return None;
            }
            vertices.push(hit.point);
        }
        if crossed.next().is_some() {
            return None;
        }
        if leg < m {
            steps.next();
            vertices.push(end);
        }
    }
    vertices.push(rx);
    Some(vertices)
}

fn build_component(
    map: &IndoorMap,
    cfg: &TraceConfig,
    interactions: Vec<Step>,
    vertices: Vec<Vec3>,
) -> Result<MultipathComponent, TraceError> {
    let path_length: f64 = vertices.windows(2).map(|w| w[0].distance(w[1])).sum();
    let n = vertices.len();
    let aod = (vertices[1] - vertices[0]).to_angles();
    let aoa = (vertices[n - 2] - vertices[n - 1]).to_angles();

    let losses: Vec<InteractionLoss> = interactions
        .iter()
        .enumerate()
        .map(|(i, step)| {
            let surface = map.surface(step.surface);
            match step.kind {
                InteractionKind::Reflection => {
                    let incoming = (vertices[i + 1] - vertices[i]).normalized();
                    InteractionLoss::Reflection {
                        theta_i: incidence_angle(incoming, surface.normal()),
                    }
                }
                InteractionKind::Transmission => InteractionLoss::Transmission {
                    loss_db: surface.transmission_loss_db(),
                },
            }
        })
        .collect();
    let received_power_dbm = path_power_dbm(cfg, path_length, &losses)?;

    Ok(MultipathComponent {
        aod,
        aoa,
        tof: MultipathComponent::tof_from_length(path_length),
        path_length,
        received_power_dbm,
        interactions,
        vertices,
    })
}
