//! Hybrid shooting-bouncing-rays / method-of-images tracer.
//!
//! Rays are shot from the transmitter along a tessellated-icosahedron grid
//! and split into a reflected and a transmitted child at every surface they
//! meet. A ray that passes within the reception sphere of the receiver
//! records its interaction signature. Each distinct signature is then solved
//! exactly with successive receiver images, so the reported geometry never
//! depends on the launch grid, only the set of discovered paths does.

mod launch;
mod power;
mod trace;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::geometry::{IndoorMap, Step, Vec3};
use crate::SPEED_OF_LIGHT;

pub use launch::{direction_count, launch_directions, nominal_spacing, LaunchGrid};
pub use power::{fspl_db, path_power_dbm, reflection_coefficient, reflection_loss_db, InteractionLoss};
pub use trace::{refine_path, trace, Tracer};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TraceError {
    #[error("transmitter {0} is outside the map bounds")]
    TxOutOfBounds(Vec3),
    #[error("receiver {0} is outside the map bounds")]
    RxOutOfBounds(Vec3),
    #[error("transmitter and receiver coincide")]
    Coincident,
    #[error("incidence angle {0} rad is outside [0, pi/2]")]
    AngleOutOfRange(f64),
    #[error("invalid trace configuration: {0}")]
    InvalidConfig(String),
}

/// Tracer settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TraceConfig {
    pub frequency_hz: f64,
    pub tx_power_dbm: f64,
    pub max_reflections: u32,
    pub max_transmissions: u32,
    pub tessellation: u32,
    /// Scales the reception-sphere radius `alpha · L · γ / 2`.
    pub capture_alpha: f64,
    /// Paths weaker than this are discarded.
    pub min_power_dbm: f64,
}

impl Default for TraceConfig {
    fn default() -> Self {
        Self {
            frequency_hz: 73e9,
            tx_power_dbm: 0.0,
            max_reflections: 3,
            max_transmissions: 3,
            tessellation: 50,
            capture_alpha: 2.0,
            min_power_dbm: -120.0,
        }
    }
}

impl TraceConfig {
    pub fn validate(&self) -> Result<(), TraceError> {
        let bad = |msg: &str| Err(TraceError::InvalidConfig(msg.to_string()));
        if self.tessellation == 0 {
            return bad("tessellation factor must be at least 1");
        }
        if !(self.frequency_hz > 0.0 && self.frequency_hz.is_finite()) {
            return bad("frequency must be positive");
        }
        if !(self.capture_alpha > 0.0 && self.capture_alpha.is_finite()) {
            return bad("capture_alpha must be positive");
        }
        if !self.tx_power_dbm.is_finite() || self.min_power_dbm.is_nan() {
            return bad("power levels must be numbers");
        }
        Ok(())
    }
}

/// One propagation path between a transmitter and a receiver.
#[derive(Debug, Clone, PartialEq)]
pub struct MultipathComponent {
    /// (azimuth, elevation) in radians of the departing ray at the TX.
    pub aod: (f64, f64),
    /// (azimuth, elevation) in radians pointing from the RX back along the
    /// arriving ray.
    pub aoa: (f64, f64),
    pub tof: f64,
    pub path_length: f64,
    pub received_power_dbm: f64,
    pub interactions: Vec<Step>,
    /// TX, interaction points in order, RX.
    pub vertices: Vec<Vec3>,
}

impl MultipathComponent {
    pub fn is_los(&self) -> bool {
        self.interactions.is_empty()
    }

    pub fn reflection_count(&self) -> usize {
        self.interactions
            .iter()
            .filter(|s| s.kind == crate::geometry::InteractionKind::Reflection)
            .count()
    }

    pub fn transmission_count(&self) -> usize {
        self.interactions.len() - self.reflection_count()
    }

    /// `tof` recomputed from the path length.
    pub fn tof_from_length(path_length: f64) -> f64 {
        path_length / SPEED_OF_LIGHT
    }

    /// Human-readable signature such as `R:north>T:door_3`, or `LOS`.
    pub fn signature_label(&self, map: &IndoorMap) -> String {
        SignatureLabel {
            steps: &self.interactions,
            map,
        }
        .to_string()
    }
}

/// Formats an interaction signature with surface ids.
pub struct SignatureLabel<'a> {
    pub steps: &'a [Step],
    pub map: &'a IndoorMap,
}

impl fmt::Display for SignatureLabel<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.steps.is_empty() {
            return f.write_str("LOS");
        }
        for (i, s) in self.steps.iter().enumerate() {
            if i > 0 {
                f.write_str(">")?;
            }
            write!(f, "{}:{}", s.kind, self.map.surface(s.surface).id())?;
        }
        Ok(())
    }
}
