use std::fmt;

use serde::{Deserialize, Serialize};

use super::{Hit, Surface, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InteractionKind {
    Reflection,
    Transmission,
}

impl InteractionKind {
    pub fn code(self) -> char {
        match self {
            InteractionKind::Reflection => 'R',
            InteractionKind::Transmission => 'T',
        }
    }
}

impl fmt::Display for InteractionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.code())
    }
}

/// One step of an interaction signature: which surface (index into the
/// map's surface list) and how the wave met it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Step {
    pub surface: usize,
    pub kind: InteractionKind,
}

impl Step {
    pub fn reflect(surface: usize) -> Self {
        Self {
            surface,
            kind: InteractionKind::Reflection,
        }
    }

    pub fn transmit(surface: usize) -> Self {
        Self {
            surface,
            kind: InteractionKind::Transmission,
        }
    }
}

/// A recorded interaction with the point where it happened.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interaction {
    pub step: Step,
    pub point: Vec3,
}

/// A ray being followed through the map, carrying its unfolded history.
#[derive(Debug, Clone, PartialEq)]
pub struct Ray {
    pub origin: Vec3,
    pub direction: Vec3,
    pub accumulated_length: f64,
    pub accumulated_loss_db: f64,
    pub interactions: Vec<Interaction>,
}

impl Ray {
    /// Fresh ray with no history. `direction` is normalized here.
    pub fn new(origin: Vec3, direction: Vec3) -> Self {
        Self {
            origin,
            direction: direction.normalized(),
            accumulated_length: 0.0,
            accumulated_loss_db: 0.0,
            interactions: Vec::new(),
        }
    }

    pub fn at(&self, t: f64) -> Vec3 {
        self.origin + self.direction * t
    }

    /// Continues from `hit` in `direction`, recording the interaction.
    pub fn spawn(&self, hit: Hit, step: Step, direction: Vec3, loss_db: f64) -> Ray {
        let mut interactions = Vec::with_capacity(self.interactions.len() + 1);
        interactions.extend_from_slice(&self.interactions);
        interactions.push(Interaction { step, point: hit.point });
        Ray {
            origin: hit.point,
            direction,
            accumulated_length: self.accumulated_length + hit.distance,
            accumulated_loss_db: self.accumulated_loss_db + loss_db,
            interactions,
        }
    }

    pub fn signature(&self) -> Vec<Step> {
        self.interactions.iter().map(|i| i.step).collect()
    }
}

/// Nearest intersection of the ray's half-line with `surface` beyond the
/// self-intersection guard, if any.
pub fn intersect(ray: &Ray, surface: &Surface) -> Option<Hit> {
    surface.intersect_ray(ray.origin, ray.direction)
}
