use crate::geometry::Vec3;

use super::CandidateLocation;

/// Default single-linkage distance, in meters.
pub const DEFAULT_CLUSTER_THRESHOLD: f64 = 0.40;

/// A group of mutually chained candidates and their centroid.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterEstimate {
    pub centroid: Vec3,
    pub member_count: usize,
    pub members: Vec<CandidateLocation>,
}

impl ClusterEstimate {
    fn from_members(members: Vec<CandidateLocation>) -> Self {
        let n = members.len();
        let sum = members.iter().fold(Vec3::ZERO, |acc, c| acc + c.position);
        Self {
            centroid: sum / n as f64,
            member_count: n,
            members,
        }
    }

    /// Number of distinct (base station, observation) sources represented.
    pub fn distinct_observations(&self) -> usize {
        let mut sources: Vec<(u32, usize)> = self.members.iter().map(|m| (m.bs_id, m.observation)).collect();
        sources.sort_unstable();
        sources.dedup();
        sources.len()
    }

    /// Root-mean-square distance of members from the centroid.
    pub fn rms_radius(&self) -> f64 {
        let ss: f64 = self
            .members
            .iter()
            .map(|m| (m.position - self.centroid).norm_squared())
            .sum();
        (ss / self.member_count as f64).sqrt()
    }

    pub fn mean_abs_residual(&self) -> f64 {
        self.members.iter().map(|m| m.residual_length.abs()).sum::<f64>() / self.member_count as f64
    }
}

/// Union-find with path compression and union by rank.
#[derive(Debug, Clone)]
struct DisjointSet {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            rank: vec![0; n],
        }
    }

    fn find(&mut self, mut node: usize) -> usize {
        let mut root = node;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        while self.parent[node] != root {
            let next = self.parent[node];
            self.parent[node] = root;
            node = next;
        }
        root
    }

    fn union(&mut self, a: usize, b: usize) {
        let (mut a, mut b) = (self.find(a), self.find(b));
        if a == b {
            return;
        }
        if self.rank[a] < self.rank[b] {
            std::mem::swap(&mut a, &mut b);
        }
        self.parent[b] = a;
        if self.rank[a] == self.rank[b] {
            self.rank[a] = self.rank[a].saturating_add(1);
        }
    }
}

/// Single-linkage grouping: two candidates share a cluster iff a chain of
/// pairwise distances no larger than `threshold` connects them. Uses at most
/// n·(n−1)/2 distance evaluations.
///
/// Clusters come out ordered by their first member's input position, and
/// members keep their input order.
pub fn cluster_candidates(candidates: &[CandidateLocation], threshold: f64) -> Vec<ClusterEstimate> {
    let n = candidates.len();
    let mut sets = DisjointSet::new(n);
    for i in 0..n {
        for j in i + 1..n {
            if candidates[i].position.distance(candidates[j].position) <= threshold {
                sets.union(i, j);
            }
        }
    }

    let mut slot_of_root = vec![usize::MAX; n];
    let mut groups: Vec<Vec<CandidateLocation>> = Vec::new();
    for (i, c) in candidates.iter().enumerate() {
        let root = sets.find(i);
        if slot_of_root[root] == usize::MAX {
            slot_of_root[root] = groups.len();
            groups.push(Vec::new());
        }
        groups[slot_of_root[root]].push(c.clone());
    }
    groups.into_iter().map(ClusterEstimate::from_members).collect()
}
