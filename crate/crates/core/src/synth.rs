//! Deterministic synthetic graph generators for tests and experiments.

use std::collections::HashSet;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::graph::StreamGraph;
use crate::{BlockId, NodeId};

/// Uniform random simple graph with (up to) `m` edges and unit weights.
pub fn random_graph(n: usize, m: usize, seed: u64) -> StreamGraph {
    random_graph_weighted(n, m, seed, 1, 1)
}

/// Uniform random simple graph with node weights in `1..=max_node_weight`
/// and edge weights in `1..=max_edge_weight`.
pub fn random_graph_weighted(
    n: usize,
    m: usize,
    seed: u64,
    max_node_weight: u64,
    max_edge_weight: u64,
) -> StreamGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let max_m = if n < 2 { 0 } else { n * (n - 1) / 2 };
    let target = m.min(max_m);
    let mut seen = HashSet::with_capacity(target);
    let mut edges = Vec::with_capacity(target);
    let mut attempts = 0usize;
    while edges.len() < target && attempts < 100 * target + 1000 {
        attempts += 1;
        let u = rng.random_range(0..n as NodeId);
        let v = rng.random_range(0..n as NodeId);
        if u == v {
            continue;
        }
        let key = (u.min(v), u.max(v));
        if seen.insert(key) {
            let w = if max_edge_weight > 1 { rng.random_range(1..=max_edge_weight) } else { 1 };
            edges.push((key.0, key.1, w));
        }
    }
    let node_weights = if max_node_weight > 1 {
        Some((0..n).map(|_| rng.random_range(1..=max_node_weight)).collect())
    } else {
        None
    };
    StreamGraph::from_edge_list(n, &edges, node_weights).expect("generated edges are valid")
}

/// Planted-partition graph: `communities` equal groups with a target edge
/// count split between intra- and inter-community pairs.
#[derive(Debug, Clone, Copy)]
pub struct PlantedConfig {
    pub n: usize,
    pub communities: usize,
    /// Target number of edges.
    pub edges: usize,
    /// Fraction of edges drawn inside a community (e.g. 10:1 -> 10/11).
    pub intra_fraction: f64,
    /// Designated high-degree nodes per community.
    pub hubs_per_community: usize,
    /// Extra intra-community edges attached to each hub.
    pub hub_extra_edges: usize,
    pub seed: u64,
}

impl PlantedConfig {
    pub fn new(n: usize, communities: usize, edges: usize, intra_fraction: f64, seed: u64) -> Self {
        Self {
            n,
            communities,
            edges,
            intra_fraction,
            hubs_per_community: 0,
            hub_extra_edges: 0,
            seed,
        }
    }

    pub fn with_hubs(mut self, per_community: usize, extra_edges: usize) -> Self {
        self.hubs_per_community = per_community;
        self.hub_extra_edges = extra_edges;
        self
    }
}

/// Generates the graph plus the planted community of every node.
pub fn planted_partition(cfg: &PlantedConfig) -> (StreamGraph, Vec<BlockId>) {
    assert!(cfg.communities >= 1 && cfg.n >= cfg.communities);
    assert!((0.0..=1.0).contains(&cfg.intra_fraction));
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    // nodes 0..n assigned to communities round-robin by contiguous ranges
    let mut community = vec![0 as BlockId; cfg.n];
    let mut members: Vec<Vec<NodeId>> = vec![Vec::new(); cfg.communities];
    let base = cfg.n / cfg.communities;
    let extra = cfg.n % cfg.communities;
    let mut next = 0usize;
    for c in 0..cfg.communities {
        let size = base + usize::from(c < extra);
        for v in next..next + size {
            community[v] = c as BlockId;
            members[c].push(v as NodeId);
        }
        next += size;
    }

    let mut seen: HashSet<(NodeId, NodeId)> = HashSet::new();
    let mut edges: Vec<(NodeId, NodeId, u64)> = Vec::new();
    let push = |seen: &mut HashSet<(NodeId, NodeId)>,
                    edges: &mut Vec<(NodeId, NodeId, u64)>,
                    u: NodeId,
                    v: NodeId| {
        if u == v {
            return false;
        }
        let key = (u.min(v), u.max(v));
        if seen.insert(key) {
            edges.push((key.0, key.1, 1));
            true
        } else {
            false
        }
    };

    let intra_target = (cfg.edges as f64 * cfg.intra_fraction).round() as usize;
    let inter_target = cfg.edges - intra_target.min(cfg.edges);
    let mut placed = 0;
    let mut attempts = 0;
    while placed < intra_target && attempts < 100 * intra_target + 1000 {
        attempts += 1;
        let c = rng.random_range(0..cfg.communities);
        if members[c].len() < 2 {
            continue;
        }
        let u = members[c][rng.random_range(0..members[c].len())];
        let v = members[c][rng.random_range(0..members[c].len())];
        if push(&mut seen, &mut edges, u, v) {
            placed += 1;
        }
    }
    placed = 0;
    attempts = 0;
    while placed < inter_target && attempts < 100 * inter_target + 1000 {
        attempts += 1;
        let u = rng.random_range(0..cfg.n as NodeId);
        let v = rng.random_range(0..cfg.n as NodeId);
        if community[u as usize] == community[v as usize] {
            continue;
        }
        if push(&mut seen, &mut edges, u, v) {
            placed += 1;
        }
    }

    for c in 0..cfg.communities {
        for h in 0..cfg.hubs_per_community.min(members[c].len()) {
            let hub = members[c][h];
            let mut added = 0;
            let mut attempts = 0;
            while added < cfg.hub_extra_edges && attempts < 100 * cfg.hub_extra_edges + 100 {
                attempts += 1;
                let v = members[c][rng.random_range(0..members[c].len())];
                if push(&mut seen, &mut edges, hub, v) {
                    added += 1;
                }
            }
        }
    }

    let g = StreamGraph::from_edge_list(cfg.n, &edges, None).expect("generated edges are valid");
    (g, community)
}
