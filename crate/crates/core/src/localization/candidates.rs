use crate::geometry::{reflect_direction, IndoorMap, Step, Vec3, EPS_HIT};
use crate::SPEED_OF_LIGHT;

use super::{CandidateLocation, LocateError, PathObservation};

/// Default cap on reflections plus transmissions per candidate branch.
pub const DEFAULT_MAX_INTERACTIONS: u32 = 3;

/// Back-solves one observation into candidate user positions.
///
/// A ray leaves the base station along the observed angle with a length
/// budget of `c · tof`. Whenever it meets a surface before the budget runs
/// out it forks into a reflected and a transmitted continuation; each
/// branch ends exactly where its unfolded length reaches the budget. A fork
/// that would take a branch past `max_interactions` drops that branch, so
/// one observation yields at most `2^max_interactions` candidates.
///
/// A surface within `EPS_HIT` of a branch end does not fork it.
pub fn generate_candidates(
    map: &IndoorMap,
    obs: &PathObservation,
    observation: usize,
    max_interactions: u32,
) -> Result<Vec<CandidateLocation>, LocateError> {
    obs.validate(observation)?;
    let budget = SPEED_OF_LIGHT * obs.tof;
    if !(budget > EPS_HIT) {
        return Err(LocateError::BudgetExhausted { observation });
    }

    let mut walker = BranchWalker {
        map,
        obs,
        observation,
        budget,
        max_interactions: max_interactions as usize,
        steps: Vec::with_capacity(max_interactions as usize),
        out: Vec::new(),
    };
    walker.walk(obs.bs_position, obs.direction(), 0.0);
    let mut out = walker.out;
    out.sort_by(|a, b| a.signature.cmp(&b.signature));
    Ok(out)
}

struct BranchWalker<'a> {
    map: &'a IndoorMap,
    obs: &'a PathObservation,
    observation: usize,
    budget: f64,
    max_interactions: usize,
    steps: Vec<Step>,
    out: Vec<CandidateLocation>,
}

impl BranchWalker<'_> {
    fn walk(&mut self, origin: Vec3, dir: Vec3, travelled: f64) {
        let remaining = self.budget - travelled;
        let Some((index, hit)) = self.map.first_hit_within(origin, dir, remaining - EPS_HIT) else {
            let position = origin + dir * remaining;
            self.out.push(CandidateLocation {
                position,
                bs_id: self.obs.bs_id,
                observation: self.observation,
                signature: self.steps.clone(),
                residual_length: self.budget - (travelled + remaining),
            });
            return;
        };
        if self.steps.len() >= self.max_interactions {
            return;
        }
        let reached = travelled + hit.distance;
        let normal = self.map.surface(index).normal();

        self.steps.push(Step::reflect(index));
        self.walk(hit.point, reflect_direction(dir, normal), reached);
        self.steps.pop();

        self.steps.push(Step::transmit(index));
        self.walk(hit.point, dir, reached);
        self.steps.pop();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Bounds, Surface};

    fn big_bounds() -> Bounds {
        Bounds::new(Vec3::new(-50.0, -50.0, -50.0), Vec3::new(50.0, 50.0, 50.0))
    }

    fn obs_along(dir: Vec3, length: f64) -> PathObservation {
        let (az, el) = dir.to_angles();
        PathObservation {
            bs_id: 1,
            bs_position: Vec3::ZERO,
            azimuth: az,
            elevation: el,
            tof: length / SPEED_OF_LIGHT,
        }
    }

    #[test]
    fn free_space_gives_one_candidate() {
        let map = IndoorMap::free_space(big_bounds());
        let c = generate_candidates(&map, &obs_along(Vec3::X, 3.0), 0, 3).unwrap();
        assert_eq!(c.len(), 1);
        assert!(c[0].position.distance(Vec3::new(3.0, 0.0, 0.0)) < 1e-12);
        assert!(c[0].signature.is_empty());
        assert!(c[0].residual_length.abs() < 1e-9);
    }

    #[test]
    fn one_wall_forks_into_reflection_and_transmission() {
        let wall = Surface::axis_rect("w", Vec3::new(2.0, -10.0, -10.0), Vec3::new(2.0, 10.0, 10.0)).unwrap();
        let map = IndoorMap::with_bounds("w", vec![wall], big_bounds()).unwrap();
        let dir = Vec3::new(1.0, 0.5, 0.0).normalized();
        let hit_len = 2.0 / dir.x;
        let c = generate_candidates(&map, &obs_along(dir, hit_len + 3.0), 0, 3).unwrap();
        assert_eq!(c.len(), 2);
        let hit = dir * hit_len;
        let reflected = c.iter().find(|k| k.signature == [Step::reflect(0)]).unwrap();
        let transmitted = c.iter().find(|k| k.signature == [Step::transmit(0)]).unwrap();
        let mirrored = Vec3::new(-dir.x, dir.y, dir.z);
        assert!(reflected.position.distance(hit + mirrored * 3.0) < 1e-9);
        assert!(transmitted.position.distance(hit + dir * 3.0) < 1e-9);
        // Reflected endpoint stays on the base-station side.
        assert!(reflected.position.x < 2.0);
    }

    #[test]
    fn branches_past_the_interaction_cap_are_dropped() {
        let walls: Vec<Surface> = (1..=5)
            .map(|i| {
                let x = i as f64;
                Surface::axis_rect(format!("w{i}"), Vec3::new(x, -10.0, -10.0), Vec3::new(x, 10.0, 10.0)).unwrap()
            })
            .collect();
        let map = IndoorMap::with_bounds("stack", walls, big_bounds()).unwrap();
        for k in 0..=4 {
            let c = generate_candidates(&map, &obs_along(Vec3::new(1.0, 0.1, 0.0), 20.0), 0, k).unwrap();
            assert!(c.len() <= 1 << k, "k={k}: {} candidates", c.len());
            assert!(c.iter().all(|x| x.signature.len() <= k as usize));
        }
    }

    #[test]
    fn non_positive_budget_is_rejected() {
        let map = IndoorMap::free_space(big_bounds());
        let mut obs = obs_along(Vec3::X, 1.0);
        obs.tof = -1e-9;
        assert!(matches!(
            generate_candidates(&map, &obs, 4, 3),
            Err(LocateError::BudgetExhausted { observation: 4 })
        ));
    }
}
