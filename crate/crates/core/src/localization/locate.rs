use std::cmp::Ordering;
use std::collections::BTreeMap;

use crate::geometry::{IndoorMap, InteractionKind, Vec3};

use super::candidates::generate_candidates;
use super::cluster::{cluster_candidates, ClusterEstimate};
use super::{CandidateLocation, LocateError, PathObservation};

/// Tolerance, in cluster thresholds, for matching a perfectly tight cluster
/// to the end of a direct ray.
const REFUTE_BASE_FACTOR: f64 = 0.5;
/// Extra tolerance per unit of cluster RMS radius. Measurement noise spreads
/// a cluster and offsets it from the direct ray alike.
const REFUTE_SPREAD_FACTOR: f64 = 3.0;

/// Position and observation rays (unit direction, length) per base station.
type Stations = BTreeMap<u32, (Vec3, Vec<(Vec3, f64)>)>;

/// Position fix plus everything needed to audit it.
#[derive(Debug, Clone, PartialEq)]
pub struct Estimate {
    pub position: Vec3,
    pub diagnostics: Diagnostics,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostics {
    /// Every cluster, in the order produced by clustering.
    pub clusters: Vec<ClusterEstimate>,
    /// Index into `clusters` of the chosen one.
    pub selected: usize,
    /// Per cluster: the map rules its centroid out (see [`locate`]).
    pub refuted: Vec<bool>,
    /// Set when the chosen cluster is backed by fewer than two observations.
    pub ambiguous: bool,
    pub candidate_count: usize,
    /// Observations skipped because their length budget was not positive.
    pub dropped_observations: Vec<usize>,
}

impl Diagnostics {
    pub fn selected_cluster(&self) -> &ClusterEstimate {
        &self.clusters[self.selected]
    }
}

/// Candidates for every observation, pooled and deterministically ordered by
/// (base station, observation index, signature).
pub fn pooled_candidates(
    map: &IndoorMap,
    observations: &[PathObservation],
    max_interactions: u32,
) -> Result<(Vec<CandidateLocation>, Vec<usize>), LocateError> {
    let mut pooled = Vec::new();
    let mut dropped = Vec::new();
    for (i, obs) in observations.iter().enumerate() {
        match generate_candidates(map, obs, i, max_interactions) {
            Ok(c) => pooled.extend(c),
            Err(LocateError::BudgetExhausted { .. }) => dropped.push(i),
            Err(e) => return Err(e),
        }
    }
    pooled.sort_by(|a, b| {
        (a.bs_id, a.observation)
            .cmp(&(b.bs_id, b.observation))
            .then_with(|| a.signature.cmp(&b.signature))
    });
    Ok((pooled, dropped))
}

/// Map-assisted fix from one or more base stations.
///
/// Candidates from all observations are pooled and clustered. The chosen
/// cluster is the one with the most members among those the map does not
/// refute; ties go to the cluster backed by more distinct observations,
/// then the tighter one (RMS radius), then the one with the smaller mean
/// length residual. The estimate averages one member per observation in
/// that cluster, the one nearest the cluster centroid, so an observation
/// whose branches land twice near the user does not pull the fix.
///
/// A cluster is refuted when its centroid lies outside the map, or when the
/// straight segment from an observing base station to the centroid crosses
/// at most `max_interactions` surfaces, yet the cluster holds no
/// reflection-free candidate from that station and no observation ray of
/// the station ends near the centroid (within half `cluster_threshold`
/// plus three cluster RMS radii, across and along the ray): had the user
/// been there, the direct path would have been observed. Without this, the mirror image of a user
/// across a wall that every observed path crosses scores exactly as well
/// as the user. Only when every cluster is refuted does the plain ranking
/// decide.
pub fn locate(
    map: &IndoorMap,
    observations: &[PathObservation],
    max_interactions: u32,
    cluster_threshold: f64,
) -> Result<Estimate, LocateError> {
    if observations.is_empty() {
        return Err(LocateError::NoObservations);
    }
    let (candidates, dropped_observations) = pooled_candidates(map, observations, max_interactions)?;
    if candidates.is_empty() {
        return Err(LocateError::NoCandidates);
    }
    let clusters = cluster_candidates(&candidates, cluster_threshold);

    let stations = stations(observations);
    let refuted: Vec<bool> = clusters
        .iter()
        .map(|c| is_refuted(map, &stations, c, max_interactions, cluster_threshold))
        .collect();
    let selected = (0..clusters.len())
        .min_by(|&a, &b| rank(&clusters[a], refuted[a], &clusters[b], refuted[b]))
        .expect("at least one cluster");
    let best = &clusters[selected];
    Ok(Estimate {
        position: one_per_observation_centroid(best),
        diagnostics: Diagnostics {
            ambiguous: best.distinct_observations() < 2,
            clusters: clusters.clone(),
            selected,
            refuted,
            candidate_count: candidates.len(),
            dropped_observations,
        },
    })
}

fn stations(observations: &[PathObservation]) -> Stations {
    let mut out = Stations::new();
    for obs in observations {
        out.entry(obs.bs_id)
            .or_insert_with(|| (obs.bs_position, Vec::new()))
            .1
            .push((obs.direction(), obs.path_length()));
    }
    out
}

fn is_refuted(
    map: &IndoorMap,
    stations: &Stations,
    cluster: &ClusterEstimate,
    max_interactions: u32,
    threshold: f64,
) -> bool {
    let p = cluster.centroid;
    if !map.bounds().contains(p) {
        return true;
    }
    stations.iter().any(|(&id, (bs, rays))| {
        let straight_member = cluster
            .members
            .iter()
            .any(|m| m.bs_id == id && m.signature.iter().all(|s| s.kind == InteractionKind::Transmission));
        if straight_member {
            return false;
        }
        let tol = REFUTE_BASE_FACTOR * threshold + REFUTE_SPREAD_FACTOR * cluster.rms_radius();
        let v = p - *bs;
        let explained = rays.iter().any(|&(dir, length)| {
            let along = v.dot(dir);
            along > 0.0 && (v - dir * along).norm() <= tol && (along - length).abs() <= tol
        });
        !explained && map.segment_crossings(*bs, p).len() <= max_interactions as usize
    })
}

fn one_per_observation_centroid(cluster: &ClusterEstimate) -> Vec3 {
    let mut nearest: BTreeMap<(u32, usize), (f64, Vec3)> = BTreeMap::new();
    for m in &cluster.members {
        let d = m.position.distance(cluster.centroid);
        let slot = nearest.entry((m.bs_id, m.observation)).or_insert((d, m.position));
        if d < slot.0 {
            *slot = (d, m.position);
        }
    }
    let sum = nearest.values().fold(Vec3::ZERO, |acc, &(_, p)| acc + p);
    sum / nearest.len() as f64
}

/// `Less` means `a` is preferred.
fn rank(a: &ClusterEstimate, a_refuted: bool, b: &ClusterEstimate, b_refuted: bool) -> Ordering {
    a_refuted
        .cmp(&b_refuted)
        .then_with(|| b.member_count.cmp(&a.member_count))
        .then_with(|| b.distinct_observations().cmp(&a.distinct_observations()))
        .then_with(|| a.rms_radius().total_cmp(&b.rms_radius()))
        .then_with(|| a.mean_abs_residual().total_cmp(&b.mean_abs_residual()))
}
