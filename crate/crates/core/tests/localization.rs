mod common;

use mmwave_loc::geometry::{IndoorMap, Surface, Vec3};
use mmwave_loc::localization::{
    cluster_candidates, generate_candidates, locate, pooled_candidates, subtended_angle, three_point_fix,
    CandidateLocation, PathObservation, ThreePointError,
};
use mmwave_loc::raytracer::{TraceConfig, Tracer};
use proptest::prelude::*;

fn tracer() -> Tracer {
    Tracer::new(TraceConfig {
        tessellation: 30,
        ..TraceConfig::default()
    })
    .unwrap()
}

#[test]
fn every_component_inverts_to_the_user() {
    let map = common::office();
    let tracer = tracer();
    for (bs, user) in common::office_pairs() {
        for (i, c) in tracer.trace(&map, bs, user).unwrap().iter().enumerate() {
            if c.interactions.len() > 3 {
                continue;
            }
            let obs = PathObservation::from_downlink(0, c);
            let cands = generate_candidates(&map, &obs, i, 3).unwrap();
            assert!(cands.len() <= 8);
            let hit = cands
                .iter()
                .find(|k| k.position.distance(user) <= 1e-6)
                .unwrap_or_else(|| panic!("no candidate at the user for {}", c.signature_label(&map)));
            assert_eq!(hit.signature, c.interactions);
            assert!(hit.residual_length.abs() <= 1e-6);
        }
    }
}

fn downlink(map: &IndoorMap, tracer: &Tracer, bs_id: u32, bs: Vec3, user: Vec3) -> Vec<PathObservation> {
    tracer
        .trace(map, bs, user)
        .unwrap()
        .iter()
        .filter(|c| c.interactions.len() <= 3)
        .map(|c| PathObservation::from_downlink(bs_id, c))
        .collect()
}

#[test]
fn noiseless_fixes_are_exact() {
    let map = common::office();
    let tracer = tracer();
    for (bs, user) in common::office_pairs() {
        let obs = downlink(&map, &tracer, 0, bs, user);
        let est = locate(&map, &obs, 3, 0.4).unwrap();
        assert!(est.position.distance(user) <= 1e-6, "{} vs {user}", est.position);
        assert_eq!(est.diagnostics.selected_cluster().distinct_observations(), obs.len());
    }
}

#[test]
fn uplink_and_downlink_agree() {
    let map = common::office();
    let tracer = tracer();
    for (bs, user) in common::office_pairs() {
        let down = locate(&map, &downlink(&map, &tracer, 0, bs, user), 3, 0.4).unwrap();
        let up_obs: Vec<PathObservation> = tracer
            .trace(&map, user, bs)
            .unwrap()
            .iter()
            .filter(|c| c.interactions.len() <= 3)
            .map(|c| PathObservation::from_uplink(0, c))
            .collect();
        let up = locate(&map, &up_obs, 3, 0.4).unwrap();
        assert!(up.position.distance(down.position) <= 1e-9);
        assert!(up.position.distance(user) <= 1e-6);
    }
}

#[test]
fn multiple_base_stations_fuse() {
    let map = common::office();
    let tracer = tracer();
    let user = Vec3::new(18.0, 12.3, 1.5);
    let mut obs = downlink(&map, &tracer, 0, Vec3::new(15.0, 19.5, 2.5), user);
    let first = obs.len();
    obs.extend(downlink(&map, &tracer, 1, Vec3::new(25.0, 6.0, 2.5), user));
    let est = locate(&map, &obs, 3, 0.4).unwrap();
    assert!(est.position.distance(user) <= 1e-6);
    let chosen = est.diagnostics.selected_cluster();
    assert!(chosen.members.iter().any(|m| m.bs_id == 0 && m.observation < first));
    assert!(chosen.members.iter().any(|m| m.bs_id == 1 && m.observation >= first));
    let (cands, _) = pooled_candidates(&map, &obs, 3).unwrap();
    assert!(cands.len() <= 8 * obs.len());
}

/// One line-of-sight and two reflected components: the LOS ray meets
/// nothing, the single bounce forks once, and the double bounce forks at
/// both walls on its reflected branch. Six candidates, three at the user.
#[test]
fn los_plus_two_reflections_topology() {
    let w1 = Surface::axis_rect("w1", Vec3::new(-10.0, 0.0, -5.0), Vec3::new(20.0, 0.0, 5.0)).unwrap();
    let w2 = Surface::axis_rect("w2", Vec3::new(10.0, 0.0, -5.0), Vec3::new(10.0, 20.0, 5.0)).unwrap();
    let map = IndoorMap::with_bounds("corner", vec![w1, w2], common::cube(30.0)).unwrap();
    let bs = Vec3::new(0.0, 4.0, 0.0);
    let user = Vec3::new(6.0, 3.0, 0.0);
    let obs = [
        PathObservation::toward(0, bs, user),
        // Image of the user through w1.
        PathObservation::toward(0, bs, Vec3::new(6.0, -3.0, 0.0)),
        // Image through w2 and then w1 (bounce order w1, w2).
        PathObservation::toward(0, bs, Vec3::new(14.0, -3.0, 0.0)),
    ];
    let (cands, _) = pooled_candidates(&map, &obs, 3).unwrap();
    assert_eq!(cands.len(), 6);
    let per_obs: Vec<usize> = (0..3)
        .map(|i| cands.iter().filter(|c| c.observation == i).count())
        .collect();
    assert_eq!(per_obs, [1, 2, 3]);

    let est = locate(&map, &obs, 3, 0.4).unwrap();
    let modal = est.diagnostics.selected_cluster();
    assert_eq!(modal.member_count, 3);
    assert_eq!(modal.distinct_observations(), 3);
    assert!(est.position.distance(user) < 1e-9);
    assert!(est.diagnostics.clusters.iter().all(|c| c.member_count <= 3));
}

#[test]
fn three_point_example() {
    let st = [
        Vec3::new(0.0, 0.0, 0.0),
        Vec3::new(10.0, 0.0, 0.0),
        Vec3::new(0.0, 10.0, 0.0),
    ];
    let user = Vec3::new(3.0, 2.0, 0.0);
    let t1 = subtended_angle(user, st[0], st[1]);
    let t2 = subtended_angle(user, st[1], st[2]);
    let fixes = three_point_fix(st, t1, t2).unwrap();
    assert!(fixes.iter().any(|p| p.distance(user) < 1e-9));

    // On the circumcircle (center (5,5), radius √50) the fix is degenerate.
    let on_circle = Vec3::new(5.0 + 50f64.sqrt() * 0.6, 5.0 - 50f64.sqrt() * 0.8, 0.0);
    let t1 = subtended_angle(on_circle, st[0], st[1]);
    let t2 = subtended_angle(on_circle, st[1], st[2]);
    assert!(matches!(three_point_fix(st, t1, t2), Err(ThreePointError::Degenerate)));
}

#[test]
fn three_point_symmetric_user_has_two_mirror_solutions() {
    // Collinear stations: the stations' line is a mirror axis for every fix.
    let st = [
        Vec3::new(-5.0, 0.0, 0.0),
        Vec3::new(0.0, 0.0, 0.0),
        Vec3::new(5.0, 0.0, 0.0),
    ];
    let user = Vec3::new(0.0, 4.0, 0.0);
    let t1 = subtended_angle(user, st[0], st[1]);
    let t2 = subtended_angle(user, st[1], st[2]);
    let fixes = three_point_fix(st, t1, t2).unwrap();
    assert_eq!(fixes.len(), 2);
    assert!(fixes.iter().any(|p| p.distance(user) < 1e-9));
    assert!(fixes.iter().any(|p| p.distance(Vec3::new(0.0, -4.0, 0.0)) < 1e-9));
}

fn candidate(p: (f64, f64, f64), i: usize) -> CandidateLocation {
    CandidateLocation {
        position: Vec3::new(p.0, p.1, p.2),
        bs_id: 0,
        observation: i,
        signature: vec![],
        residual_length: 0.0,
    }
}

proptest! {
    #[test]
    fn clustering_commutes_with_translation(
        pts in prop::collection::vec((-3.0..3.0f64, -3.0..3.0f64, -1.0..1.0f64), 1..40),
        shift in (-100.0..100.0f64, -100.0..100.0f64, -100.0..100.0f64),
    ) {
        let cands: Vec<CandidateLocation> = pts.iter().enumerate().map(|(i, &p)| candidate(p, i)).collect();
        let t = Vec3::new(shift.0, shift.1, shift.2);
        let moved: Vec<CandidateLocation> = cands
            .iter()
            .map(|c| CandidateLocation { position: c.position + t, ..c.clone() })
            .collect();
        let a = cluster_candidates(&cands, 0.4);
        let b = cluster_candidates(&moved, 0.4);
        // Memberships are compared by observation index; near-threshold
        // pairs may flip under rounding, so only matching partitions are
        // checked for centroids.
        let key = |cs: &[mmwave_loc::localization::ClusterEstimate]| {
            let mut k: Vec<Vec<usize>> = cs.iter().map(|c| {
                let mut m: Vec<usize> = c.members.iter().map(|x| x.observation).collect();
                m.sort();
                m
            }).collect();
            k.sort();
            k
        };
        if key(&a) == key(&b) {
            for ca in &a {
                let first = ca.members[0].observation;
                let cb = b.iter().find(|c| c.members.iter().any(|m| m.observation == first)).unwrap();
                prop_assert!((cb.centroid - (ca.centroid + t)).norm() <= 1e-9);
            }
        }
        prop_assert_eq!(a.iter().map(|c| c.member_count).sum::<usize>(), pts.len());
    }

    #[test]
    fn candidate_count_is_bounded(
        x in 1.0..49.0f64,
        y in 1.0..24.0f64,
        az in -std::f64::consts::PI..std::f64::consts::PI,
        el in -0.6..0.6f64,
        length in 0.5..60.0f64,
        k in 0u32..=3,
    ) {
        let map = common::office();
        let obs = PathObservation {
            bs_id: 0,
            bs_position: Vec3::new(x, y, 2.0),
            azimuth: az,
            elevation: el,
            tof: length / mmwave_loc::SPEED_OF_LIGHT,
        };
        let cands = generate_candidates(&map, &obs, 0, k).unwrap();
        // A branch that must cross more than k surfaces yields nothing.
        prop_assert!(cands.len() <= 1 << k);
        for c in &cands {
            prop_assert!(c.signature.len() <= k as usize);
            prop_assert!(c.residual_length.abs() <= 1e-6);
        }
    }
}
