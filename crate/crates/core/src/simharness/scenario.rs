use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::geometry::{IndoorMap, Vec3};
use crate::localization::{locate, PathObservation};
use crate::raytracer::{MultipathComponent, TraceError, Tracer};

use super::stats::{ErrorStats, UserResult};
use super::{check_sigma, HarnessError, ScenarioConfig};

/// Stream reserved for user placement; noise streams pack (user, trial, bs)
/// into the low 64 bits and never reach it.
const PLACEMENT_STREAM: u64 = u64::MAX;
const MAX_USERS: usize = 1 << 24;
const MAX_TRIALS: usize = 1 << 24;
const MAX_BS: usize = 1 << 16;

/// Channel from one covering base station to a user.
#[derive(Debug, Clone, PartialEq)]
pub struct BsLink {
    pub bs_index: usize,
    pub distance: f64,
    pub los: bool,
    /// Traced components with at most `max_interactions` interactions.
    pub components: Vec<MultipathComponent>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PreparedUser {
    pub position: Vec3,
    /// Covering base stations, nearest first.
    pub links: Vec<BsLink>,
}

/// Users placed and traced once; [`Scenario::run`] only redraws noise.
#[derive(Debug, Clone)]
pub struct Scenario {
    map: IndoorMap,
    cfg: ScenarioConfig,
    users: Vec<PreparedUser>,
    resamples: usize,
}

impl Scenario {
    /// Places `cfg.n_users` users and traces each against its `max_bs`
    /// nearest covering base stations.
    pub fn prepare(map: &IndoorMap, cfg: &ScenarioConfig, max_bs: usize) -> Result<Self, HarnessError> {
        cfg.validate()?;
        if !(1..=cfg.bs_positions.len()).contains(&max_bs) {
            return Err(HarnessError::InvalidConfig(format!(
                "cannot assign {max_bs} base stations out of {}",
                cfg.bs_positions.len()
            )));
        }
        if cfg.n_users >= MAX_USERS || cfg.n_trials >= MAX_TRIALS || cfg.bs_positions.len() >= MAX_BS {
            return Err(HarnessError::InvalidConfig("scenario is too large".into()));
        }
        let bounds = map.bounds();
        if let Some(p) = cfg.bs_positions.iter().find(|p| !bounds.contains(**p)) {
            return Err(HarnessError::InvalidConfig(format!(
                "base station {p} lies outside the map"
            )));
        }
        if cfg.user_height < bounds.min.z || cfg.user_height > bounds.max.z {
            return Err(HarnessError::InvalidConfig(format!(
                "user height {} m lies outside the map",
                cfg.user_height
            )));
        }

        let tracer = Tracer::new(cfg.trace.clone())?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
        rng.set_stream(PLACEMENT_STREAM);
        let max_attempts = 1000.max(200 * cfg.n_users);

        let mut users = Vec::with_capacity(cfg.n_users);
        let mut attempts = 0;
        let mut resamples = 0;
        while users.len() < cfg.n_users {
            if attempts == max_attempts {
                return Err(HarnessError::CoverageImpossible {
                    wanted: cfg.n_users,
                    attempts,
                });
            }
            attempts += 1;
            let x = sample_between(&mut rng, bounds.min.x, bounds.max.x);
            let y = sample_between(&mut rng, bounds.min.y, bounds.max.y);
            let position = Vec3::new(x, y, cfg.user_height);
            if map.clearance(position) < cfg.min_clearance {
                continue;
            }
            let links = covering_links(map, &tracer, cfg, position, max_bs)?;
            if links.is_empty() {
                resamples += 1;
                log::info!("user at {position} has no covering base station; resampling");
                continue;
            }
            users.push(PreparedUser { position, links });
        }
        if resamples > 0 {
            log::info!("resampled {resamples} uncovered user positions");
        }
        Ok(Self {
            map: map.clone(),
            cfg: cfg.clone(),
            users,
            resamples,
        })
    }

    pub fn map(&self) -> &IndoorMap {
        &self.map
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.cfg
    }

    pub fn users(&self) -> &[PreparedUser] {
        &self.users
    }

    /// Users redrawn because no base station covered them.
    pub fn resamples(&self) -> usize {
        self.resamples
    }

    /// Localizes every user `n_trials` times with each user's `bs_count`
    /// nearest covering base stations (fewer if fewer cover it).
    pub fn run(&self, bs_count: usize, sigma_aod: f64, sigma_tof: f64) -> Result<ErrorStats, HarnessError> {
        check_sigma("sigma_aod", sigma_aod)?;
        check_sigma("sigma_tof", sigma_tof)?;
        if bs_count == 0 {
            return Err(HarnessError::InvalidConfig("bs_count must be at least 1".into()));
        }
        let users = self
            .users
            .par_iter()
            .enumerate()
            .map(|(u, user)| self.run_user(u, user, bs_count, sigma_aod, sigma_tof))
            .collect();
        Ok(ErrorStats::new(bs_count, sigma_aod, sigma_tof, users))
    }

    /// Localizes every prepared (user, base station) link on its own, one
    /// result per link. Each link is classified by its own distance and line
    /// of sight, which spreads single-station results over all distance bins.
    pub fn run_links(&self, sigma_aod: f64, sigma_tof: f64) -> Result<ErrorStats, HarnessError> {
        check_sigma("sigma_aod", sigma_aod)?;
        check_sigma("sigma_tof", sigma_tof)?;
        let pairs: Vec<(usize, usize)> = self
            .users
            .iter()
            .enumerate()
            .flat_map(|(u, user)| (0..user.links.len()).map(move |l| (u, l)))
            .collect();
        let results = pairs
            .par_iter()
            .map(|&(u, l)| {
                let user = &self.users[u];
                self.run_links_of(u, user, &user.links[l..=l], sigma_aod, sigma_tof)
            })
            .collect();
        Ok(ErrorStats::new(1, sigma_aod, sigma_tof, results))
    }

    fn run_user(
        &self,
        index: usize,
        user: &PreparedUser,
        bs_count: usize,
        sigma_aod: f64,
        sigma_tof: f64,
    ) -> UserResult {
        let links = &user.links[..bs_count.min(user.links.len())];
        self.run_links_of(index, user, links, sigma_aod, sigma_tof)
    }

    fn run_links_of(
        &self,
        index: usize,
        user: &PreparedUser,
        links: &[BsLink],
        sigma_aod: f64,
        sigma_tof: f64,
    ) -> UserResult {
        let mut sum_sq = 0.0;
        let mut ok = 0usize;
        let mut observations = Vec::new();
        for trial in 0..self.cfg.n_trials {
            observations.clear();
            for link in links {
                let mut rng = noise_rng(self.cfg.rng_seed, index, trial, link.bs_index);
                for component in &link.components {
                    let mut obs = PathObservation::from_downlink(link.bs_index as u32, component);
                    let (za, ze, zt): (f64, f64, f64) = (
                        rng.sample(StandardNormal),
                        rng.sample(StandardNormal),
                        rng.sample(StandardNormal),
                    );
                    obs.azimuth += sigma_aod * za;
                    obs.elevation += sigma_aod * ze;
                    obs.tof += sigma_tof * zt;
                    observations.push(obs);
                }
            }
            match locate(
                &self.map,
                &observations,
                self.cfg.max_interactions,
                self.cfg.cluster_threshold,
            ) {
                Ok(est) => {
                    sum_sq += est.position.distance(user.position).powi(2);
                    ok += 1;
                }
                Err(e) => log::debug!("user {index} trial {trial}: {e}"),
            }
        }
        UserResult {
            user: index,
            position: user.position,
            bs_used: links.iter().map(|l| l.bs_index).collect(),
            distance: links[0].distance,
            los: links.iter().any(|l| l.los),
            rms_error: (ok > 0).then(|| (sum_sq / ok as f64).sqrt()),
            failed_trials: self.cfg.n_trials - ok,
        }
    }
}

/// Prepares a scenario for `cfg.bs_count` base stations and runs it at the
/// configured sigmas.
pub fn run_scenario(map: &IndoorMap, cfg: &ScenarioConfig) -> Result<ErrorStats, HarnessError> {
    Scenario::prepare(map, cfg, cfg.bs_count)?.run(cfg.bs_count, cfg.sigma_aod, cfg.sigma_tof)
}

fn sample_between(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    if hi > lo {
        rng.gen_range(lo..hi)
    } else {
        lo
    }
}

fn noise_rng(seed: u64, user: usize, trial: usize, bs: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((user as u64) << 40) | ((trial as u64) << 16) | bs as u64);
    rng
}

/// Nearest base stations (up to `max_bs`) that deliver at least
/// `min_components` usable components to `user`.
fn covering_links(
    map: &IndoorMap,
    tracer: &Tracer,
    cfg: &ScenarioConfig,
    user: Vec3,
    max_bs: usize,
) -> Result<Vec<BsLink>, HarnessError> {
    let mut order: Vec<(usize, f64)> = cfg
        .bs_positions
        .iter()
        .enumerate()
        .map(|(i, bs)| (i, bs.distance(user)))
        .collect();
    order.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));

    let mut links = Vec::new();
    for (bs_index, distance) in order {
        if links.len() == max_bs {
            break;
        }
        let bs = cfg.bs_positions[bs_index];
        let components = match tracer.trace(map, bs, user) {
            Ok(c) => c,
            Err(TraceError::Coincident) => continue,
            Err(e) => return Err(e.into()),
        };
        let usable: Vec<MultipathComponent> = components
            .into_iter()
            .filter(|c| c.interactions.len() <= cfg.max_interactions as usize)
            .collect();
        if usable.len() >= cfg.min_components {
            links.push(BsLink {
                bs_index,
                distance,
                los: map.is_line_of_sight(bs, user),
                components: usable,
            });
        }
    }
    Ok(links)
}
