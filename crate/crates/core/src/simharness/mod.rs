//! Monte Carlo localization experiments.
//!
//! A [`Scenario`] places random users on a map, traces every user against
//! its nearest covering base stations once, and then replays those channels
//! through the localizer with fresh measurement noise per trial. Noise is
//! drawn as standard normals from a generator keyed by (seed, user, trial,
//! base station) and scaled by the configured sigmas, so runs that differ
//! only in sigma or base-station count see the same underlying draws.

mod file;
mod scenario;
mod stats;

use serde::{Deserialize, Serialize};

use crate::geometry::Vec3;
use crate::localization::{DEFAULT_CLUSTER_THRESHOLD, DEFAULT_MAX_INTERACTIONS};
use crate::raytracer::{TraceConfig, TraceError};

pub use file::{ScenarioFile, ScenarioFileError};
pub use scenario::{run_scenario, BsLink, PreparedUser, Scenario};
pub use stats::{export_cdf, write_per_user_csv, write_summary_csv, DistanceBin, ErrorStats, LinkClass, UserResult};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum HarnessError {
    #[error("invalid scenario: {0}")]
    InvalidConfig(String),
    #[error("could not place {wanted} covered users after {attempts} attempts")]
    CoverageImpossible { wanted: usize, attempts: usize },
    #[error(transparent)]
    Trace(#[from] TraceError),
}

/// Base stations of the bundled synthetic office, 2.5 m above the floor.
pub fn default_bs_positions() -> Vec<Vec3> {
    [
        (12.5, 12.5),
        (37.5, 12.5),
        (5.0, 6.0),
        (25.0, 6.0),
        (45.0, 6.0),
        (15.0, 19.5),
        (35.0, 19.5),
    ]
    .into_iter()
    .map(|(x, y)| Vec3::new(x, y, 2.5))
    .collect()
}

/// Experiment parameters. Angles are radians and times seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub bs_positions: Vec<Vec3>,
    pub n_users: usize,
    pub n_trials: usize,
    /// Standard deviation applied to azimuth and to elevation separately.
    pub sigma_aod: f64,
    pub sigma_tof: f64,
    pub rng_seed: u64,
    /// How many of the nearest covering base stations localize each user.
    pub bs_count: usize,
    pub trace: TraceConfig,
    pub max_interactions: u32,
    pub cluster_threshold: f64,
    pub user_height: f64,
    /// Users closer than this to any surface are redrawn.
    pub min_clearance: f64,
    /// Usable components a base station must deliver to count as covering.
    pub min_components: usize,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            bs_positions: default_bs_positions(),
            n_users: 100,
            n_trials: 100,
            sigma_aod: 0.5_f64.to_radians(),
            sigma_tof: 0.25e-9,
            rng_seed: 1,
            bs_count: 1,
            trace: TraceConfig::default(),
            max_interactions: DEFAULT_MAX_INTERACTIONS,
            cluster_threshold: DEFAULT_CLUSTER_THRESHOLD,
            user_height: 1.5,
            min_clearance: 0.25,
            min_components: 2,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |msg: String| Err(HarnessError::InvalidConfig(msg));
        if self.bs_positions.is_empty() {
            return bad("at least one base station is required".into());
        }
        if self.bs_positions.iter().any(|p| !p.is_finite()) {
            return bad("base station positions must be finite".into());
        }
        if self.n_users == 0 {
            return bad("n_users must be at least 1".into());
        }
        if self.n_trials == 0 {
            return bad("n_trials must be at least 1".into());
        }
        check_sigma("sigma_aod", self.sigma_aod)?;
        check_sigma("sigma_tof", self.sigma_tof)?;
        if !(1..=self.bs_positions.len()).contains(&self.bs_count) {
            return bad(format!(
                "bs_count {} must be between 1 and the number of base stations ({})",
                self.bs_count,
                self.bs_positions.len()
            ));
        }
        if !(self.cluster_threshold > 0.0 && self.cluster_threshold.is_finite()) {
            return bad("cluster_threshold must be positive".into());
        }
        if !(self.user_height.is_finite() && self.min_clearance >= 0.0 && self.min_clearance.is_finite()) {
            return bad("user_height and min_clearance must be finite, clearance non-negative".into());
        }
        if self.min_components == 0 {
            return bad("min_components must be at least 1".into());
        }
        self.trace.validate()?;
        Ok(())
    }
}

pub(crate) fn check_sigma(name: &str, sigma: f64) -> Result<(), HarnessError> {
    if sigma >= 0.0 && sigma.is_finite() {
        Ok(())
    } else {
        Err(HarnessError::InvalidConfig(format!(
            "{name} must be a non-negative number"
        )))
    }
}
