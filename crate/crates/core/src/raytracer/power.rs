//! Link budget: free-space path loss, the linear reflection-coefficient
//! model, and a fixed per-obstruction transmission loss.

use std::f64::consts::{FRAC_PI_2, PI};

use crate::SPEED_OF_LIGHT;

use super::{TraceConfig, TraceError};

const REFLECTION_SLOPE_PER_RAD: f64 = 0.56;
const REFLECTION_INTERCEPT: f64 = 0.096;

/// |Γ| for an incidence angle in radians measured from the surface normal.
pub fn reflection_coefficient(theta_i: f64) -> Result<f64, TraceError> {
    if !(0.0..=FRAC_PI_2).contains(&theta_i) {
        return Err(TraceError::AngleOutOfRange(theta_i));
    }
    Ok((REFLECTION_SLOPE_PER_RAD * theta_i + REFLECTION_INTERCEPT).clamp(0.0, 1.0))
}

/// Reflection loss in dB (positive), i.e. `-20·log10|Γ|`.
pub fn reflection_loss_db(theta_i: f64) -> Result<f64, TraceError> {
    Ok(-20.0 * reflection_coefficient(theta_i)?.log10())
}

/// Free-space path loss in dB at distance `d` meters and `frequency_hz`.
pub fn fspl_db(d: f64, frequency_hz: f64) -> f64 {
    20.0 * (4.0 * PI * d * frequency_hz / SPEED_OF_LIGHT).log10()
}

/// What happened at one vertex of a path, for power accounting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InteractionLoss {
    /// Specular bounce at the given incidence angle (radians from normal).
    Reflection { theta_i: f64 },
    /// Penetration with a fixed loss in dB.
    Transmission { loss_db: f64 },
}

/// Received power in dBm for a path of total unfolded `path_length` with
/// the listed interactions, using isotropic antennas.
pub fn path_power_dbm(
    cfg: &TraceConfig,
    path_length: f64,
    interactions: &[InteractionLoss],
) -> Result<f64, TraceError> {
    if !(path_length > 0.0) {
        return Err(TraceError::InvalidConfig(format!(
            "path length must be positive, got {path_length}"
        )));
    }
    let mut p = cfg.tx_power_dbm - fspl_db(path_length, cfg.frequency_hz);
    for loss in interactions {
        p -= match *loss {
            InteractionLoss::Reflection { theta_i } => reflection_loss_db(theta_i)?,
            InteractionLoss::Transmission { loss_db } => loss_db,
        };
    }
    Ok(p)
}
