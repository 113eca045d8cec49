//! Map-assisted localization from per-path angle and time of flight.
//!
//! Each observation is one multipath component seen at a base station: its
//! departure angle when the user receives, or its arrival angle when the
//! user transmits. Either way the localizer launches a ray from the base
//! station along that angle and walks it through the map until the
//! time-of-flight budget is spent, forking at every surface. The candidate
//! endpoints of all observations are clustered and the densest cluster
//! wins.

mod candidates;
mod cluster;
mod io;
mod locate;
mod three_point;

use crate::geometry::{Step, Vec3};
use crate::raytracer::MultipathComponent;
use crate::SPEED_OF_LIGHT;

pub use candidates::{generate_candidates, DEFAULT_MAX_INTERACTIONS};
pub use cluster::{cluster_candidates, ClusterEstimate, DEFAULT_CLUSTER_THRESHOLD};
pub use io::{read_observations_csv, write_observations_csv, ObservationFileError};
pub use locate::{locate, pooled_candidates, Diagnostics, Estimate};
pub use three_point::{subtended_angle, three_point_fix, ThreePointError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LocateError {
    #[error("no observations supplied")]
    NoObservations,
    #[error("observation {observation}: time of flight leaves no path length to walk")]
    BudgetExhausted { observation: usize },
    #[error("observation {observation}: {reason}")]
    InvalidObservation { observation: usize, reason: String },
    #[error("no candidate locations could be generated")]
    NoCandidates,
}

/// One multipath component as measured at a base station.
#[derive(Debug, Clone, PartialEq)]
pub struct PathObservation {
    pub bs_id: u32,
    pub bs_position: Vec3,
    /// Radians. Departure angle (user receives) or arrival angle (user
    /// transmits); both point from the base station into the channel.
    pub azimuth: f64,
    pub elevation: f64,
    /// Seconds.
    pub tof: f64,
}

impl PathObservation {
    /// Downlink: the base station transmitted `component` to the user.
    pub fn from_downlink(bs_id: u32, component: &MultipathComponent) -> Self {
        Self {
            bs_id,
            bs_position: component.vertices[0],
            azimuth: component.aod.0,
            elevation: component.aod.1,
            tof: component.tof,
        }
    }

    /// Uplink: the user transmitted `component` and the base station received it.
    pub fn from_uplink(bs_id: u32, component: &MultipathComponent) -> Self {
        Self {
            bs_id,
            bs_position: *component.vertices.last().expect("component has vertices"),
            azimuth: component.aoa.0,
            elevation: component.aoa.1,
            tof: component.tof,
        }
    }

    /// Direct path from `bs_position` to `target`.
    pub fn toward(bs_id: u32, bs_position: Vec3, target: Vec3) -> Self {
        let (azimuth, elevation) = (target - bs_position).to_angles();
        Self {
            bs_id,
            bs_position,
            azimuth,
            elevation,
            tof: target.distance(bs_position) / SPEED_OF_LIGHT,
        }
    }

    pub fn direction(&self) -> Vec3 {
        Vec3::from_angles(self.azimuth, self.elevation)
    }

    pub fn path_length(&self) -> f64 {
        self.tof * SPEED_OF_LIGHT
    }

    fn validate(&self, observation: usize) -> Result<(), LocateError> {
        let invalid = |reason: &str| {
            Err(LocateError::InvalidObservation {
                observation,
                reason: reason.to_string(),
            })
        };
        if !(self.azimuth.is_finite() && self.elevation.is_finite()) {
            return invalid("angles must be finite");
        }
        if !self.bs_position.is_finite() {
            return invalid("base station position must be finite");
        }
        if !self.tof.is_finite() {
            return invalid("time of flight must be finite");
        }
        Ok(())
    }
}

/// A hypothesized user position from one branch of one observation.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateLocation {
    pub position: Vec3,
    pub bs_id: u32,
    /// Index of the source observation in the caller's list.
    pub observation: usize,
    /// Interactions along the branch, base station outwards.
    pub signature: Vec<Step>,
    /// Length budget minus walked length; zero up to rounding.
    pub residual_length: f64,
}
