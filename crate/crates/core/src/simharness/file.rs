use std::fs::File;
use std::io::{BufReader, Read};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::geometry::{load_map, IndoorMap, MapError, Vec3};
use crate::localization::{DEFAULT_CLUSTER_THRESHOLD, DEFAULT_MAX_INTERACTIONS};
use crate::raytracer::TraceConfig;

use super::{default_bs_positions, HarnessError, ScenarioConfig};

#[derive(Debug, thiserror::Error)]
pub enum ScenarioFileError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed scenario file: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("map {path}: {source}")]
    Map {
        path: PathBuf,
        #[source]
        source: MapError,
    },
    #[error(transparent)]
    Invalid(#[from] HarnessError),
}

/// On-disk scenario. Angles are degrees and times nanoseconds; the map path
/// is resolved relative to the scenario file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioFile {
    pub map: PathBuf,
    pub bs_positions: Vec<Vec3>,
    pub n_users: usize,
    pub n_trials: usize,
    pub sigma_aod_deg: f64,
    pub sigma_tof_ns: f64,
    pub rng_seed: u64,
    /// Base-station counts to simulate, each producing its own CDF.
    pub bs_counts: Vec<usize>,
    pub trace: TraceConfig,
    pub max_interactions: u32,
    pub cluster_threshold_m: f64,
    pub user_height_m: f64,
    pub min_clearance_m: f64,
    pub min_components: usize,
}

impl Default for ScenarioFile {
    fn default() -> Self {
        Self {
            map: PathBuf::new(),
            bs_positions: default_bs_positions(),
            n_users: 100,
            n_trials: 100,
            sigma_aod_deg: 0.5,
            sigma_tof_ns: 0.25,
            rng_seed: 1,
            bs_counts: vec![1, 2, 3],
            trace: TraceConfig::default(),
            max_interactions: DEFAULT_MAX_INTERACTIONS,
            cluster_threshold_m: DEFAULT_CLUSTER_THRESHOLD,
            user_height_m: 1.5,
            min_clearance_m: 0.25,
            min_components: 2,
        }
    }
}

impl ScenarioFile {
    pub fn from_reader<R: Read>(source: R) -> Result<Self, ScenarioFileError> {
        Ok(serde_json::from_reader(source)?)
    }

    /// Reads a scenario and the map it names.
    pub fn load(path: &Path) -> Result<(Self, IndoorMap), ScenarioFileError> {
        let file = File::open(path).map_err(|source| ScenarioFileError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let scenario = Self::from_reader(BufReader::new(file))?;
        let map_path = path.parent().unwrap_or(Path::new("")).join(&scenario.map);
        let map_file = File::open(&map_path).map_err(|source| ScenarioFileError::Io {
            path: map_path.clone(),
            source,
        })?;
        let map =
            load_map(BufReader::new(map_file)).map_err(|source| ScenarioFileError::Map { path: map_path, source })?;
        Ok((scenario, map))
    }

    /// Library configuration for one base-station count.
    pub fn config(&self, bs_count: usize) -> Result<ScenarioConfig, HarnessError> {
        let cfg = ScenarioConfig {
            bs_positions: self.bs_positions.clone(),
            n_users: self.n_users,
            n_trials: self.n_trials,
            sigma_aod: self.sigma_aod_deg.to_radians(),
            sigma_tof: self.sigma_tof_ns * 1e-9,
            rng_seed: self.rng_seed,
            bs_count,
            trace: self.trace.clone(),
            max_interactions: self.max_interactions,
            cluster_threshold: self.cluster_threshold_m,
            user_height: self.user_height_m,
            min_clearance: self.min_clearance_m,
            min_components: self.min_components,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Largest base-station count requested.
    pub fn max_bs_count(&self) -> Result<usize, HarnessError> {
        self.bs_counts
            .iter()
            .copied()
            .max()
            .ok_or_else(|| HarnessError::InvalidConfig("bs_counts must not be empty".into()))
    }
}
