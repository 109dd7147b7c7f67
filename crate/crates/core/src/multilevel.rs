//! Multilevel partitioning of a batch model graph.
//!
//! The model is iteratively contracted with size-constrained label
//! propagation clustering, an initial partition is computed on the coarsest
//! level with the weighted greedy selection from [`crate::fennel`], and the
//! solution is projected back through the hierarchy with a round-limited
//! local search at each level. Pinned auxiliary nodes are never merged and
//! never moved, so model-local balance (which includes the auxiliary block
//! weights) implies global balance.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::batch::{BatchModelGraph, ModelGraph};
use crate::fennel::{fennel_select, FennelError, FennelParams};
use crate::{BlockId, NodeWeight, Real};

/// Label propagation sweeps per coarsening level.
const LP_ROUNDS: u32 = 3;
/// Clusters are capped at `l_max / CLUSTER_WEIGHT_DIVISOR` so coarse nodes
/// stay well below the residual capacity of any block.
const CLUSTER_WEIGHT_DIVISOR: u64 = 4;

#[derive(Debug, thiserror::Error)]
pub enum MlError {
    #[error("no feasible block for coarse node {node} of weight {weight}; batch too coarse for the residual capacities")]
    Infeasible { node: u32, weight: NodeWeight },
}

/// Knobs of the multilevel scheme.
#[derive(Debug, Clone, Copy)]
pub struct MlConfig {
    /// Coarsening stops once a level has at most this many nodes.
    pub stop_size: usize,
    /// Local search sweeps per level during uncoarsening.
    pub refine_rounds: u32,
    /// Seeds the label propagation visit order.
    pub seed: u64,
}

impl MlConfig {
    pub fn for_k(k: u32) -> Self {
        Self { stop_size: (2 * k as usize).max(2048), refine_rounds: 3, seed: 0 }
    }
}

/// One level of the contraction hierarchy.
#[derive(Debug, Clone)]
pub struct CoarseLevel {
    pub graph: ModelGraph,
    /// Finer-level node -> node of this level.
    pub map_down: Vec<u32>,
    pub level_index: usize,
}

/// Contracts until the node count reaches `stop_size` or a level shrinks by
/// less than 10%. Cluster weights are capped at `max_cluster_weight`; pinned
/// nodes always stay singleton clusters.
pub fn coarsen(
    g: &ModelGraph,
    stop_size: usize,
    max_cluster_weight: u64,
    seed: u64,
) -> Vec<CoarseLevel> {
    let mut levels: Vec<CoarseLevel> = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let step = {
            let current = levels.last().map(|l| &l.graph).unwrap_or(g);
            if current.n() <= stop_size {
                None
            } else {
                let clusters = label_propagation(current, max_cluster_weight, &mut rng);
                let (coarse, map_down) = contract(current, &clusters);
                Some((coarse, map_down, current.n()))
            }
        };
        let Some((coarse, map_down, fine_n)) = step else { break };
        if coarse.n() * 10 > fine_n * 9 {
            break; // shrank by less than 10%; a further level would be near-identity
        }
        levels.push(CoarseLevel { graph: coarse, map_down, level_index: levels.len() });
    }
    levels
}

/// Size-constrained label propagation: every node starts as its own
/// cluster; nodes move to the most strongly connected cluster that still
/// fits the cap. Moves into pinned clusters are forbidden.
fn label_propagation(g: &ModelGraph, max_cluster_weight: u64, rng: &mut ChaCha8Rng) -> Vec<u32> {
    let n = g.n();
    let mut cluster: Vec<u32> = (0..n as u32).collect();
    let mut cluster_weight: Vec<u64> = g.weights.clone();
    let mut visit: Vec<u32> = (0..n as u32).filter(|&v| g.pinned[v as usize].is_none()).collect();

    let mut conn = vec![0u64; n];
    let mut touched: Vec<u32> = Vec::new();
    for _ in 0..LP_ROUNDS {
        visit.shuffle(rng);
        let mut moved = false;
        for &v in &visit {
            let w_v = g.weights[v as usize];
            let cur = cluster[v as usize];
            touched.clear();
            for e in &g.adj[v as usize] {
                let c = cluster[e.node as usize];
                if conn[c as usize] == 0 {
                    touched.push(c);
                }
                conn[c as usize] += e.weight;
            }
            let mut best = cur;
            let mut best_w = conn[cur as usize];
            for &c in &touched {
                if c == cur || g.pinned[c as usize].is_some() {
                    continue;
                }
                if conn[c as usize] > best_w && cluster_weight[c as usize] + w_v <= max_cluster_weight
                {
                    best = c;
                    best_w = conn[c as usize];
                }
            }
            for &c in &touched {
                conn[c as usize] = 0;
            }
            if best != cur {
                cluster_weight[cur as usize] -= w_v;
                cluster_weight[best as usize] += w_v;
                cluster[v as usize] = best;
                moved = true;
            }
        }
        if !moved {
            break;
        }
    }
    cluster
}

/// Contracts clusters into coarse nodes. Coarse IDs are assigned in
/// first-seen order over ascending fine IDs; intra-cluster edge weight is
/// dropped, crossing weights accumulate, and adjacency lists come out
/// sorted by neighbor ID.
fn contract(g: &ModelGraph, cluster: &[u32]) -> (ModelGraph, Vec<u32>) {
    let n = g.n();
    let mut coarse_of_cluster = vec![u32::MAX; n];
    let mut map_down = vec![0u32; n];
    let mut count = 0u32;
    for v in 0..n {
        let c = cluster[v] as usize;
        if coarse_of_cluster[c] == u32::MAX {
            coarse_of_cluster[c] = count;
            count += 1;
        }
        map_down[v] = coarse_of_cluster[c];
    }

    let cn = count as usize;
    let mut weights = vec![0u64; cn];
    let mut pinned: Vec<Option<BlockId>> = vec![None; cn];
    for v in 0..n {
        let cv = map_down[v] as usize;
        weights[cv] += g.weights[v];
        if let Some(b) = g.pinned[v] {
            debug_assert!(pinned[cv].is_none(), "pinned nodes must stay singleton");
            pinned[cv] = Some(b);
        }
    }

    let mut rows: Vec<Vec<crate::graph::Neighbor>> = vec![Vec::new(); cn];
    for v in 0..n {
        let cv = map_down[v];
        for e in &g.adj[v] {
            let cu = map_down[e.node as usize];
            if cu != cv {
                rows[cv as usize].push(crate::graph::Neighbor { node: cu, weight: e.weight });
            }
        }
    }
    for row in &mut rows {
        row.sort_by_key(|e| e.node);
        let mut merged: Vec<crate::graph::Neighbor> = Vec::with_capacity(row.len());
        for e in row.iter() {
            match merged.last_mut() {
                Some(last) if last.node == e.node => last.weight += e.weight,
                _ => merged.push(*e),
            }
        }
        *row = merged;
    }
    (ModelGraph { adj: rows, weights, pinned }, map_down)
}

/// Initial partition on the coarsest level: auxiliary nodes are preassigned
/// to their blocks, remaining nodes placed by weighted greedy selection in
/// descending weight order. The given `l_max` overrides the one in `p`.
pub fn initial_partition<F: Real>(
    coarsest: &ModelGraph,
    k: u32,
    l_max: u64,
    p: &FennelParams<F>,
) -> Result<Vec<BlockId>, MlError> {
    let n = coarsest.n();
    let params = FennelParams { l_max, ..*p };
    let mut asg = vec![u32::MAX; n];
    let mut block_weight = vec![0u64; k as usize];
    for v in 0..n {
        if let Some(b) = coarsest.pinned[v] {
            asg[v] = b;
            block_weight[b as usize] += coarsest.weights[v];
        }
    }
    let mut nodes: Vec<u32> =
        (0..n as u32).filter(|&v| coarsest.pinned[v as usize].is_none()).collect();
    nodes.sort_by(|&a, &b| {
        coarsest.weights[b as usize].cmp(&coarsest.weights[a as usize]).then(a.cmp(&b))
    });

    let mut nb = vec![0u64; k as usize];
    for &v in &nodes {
        nb.fill(0);
        for e in &coarsest.adj[v as usize] {
            let b = asg[e.node as usize];
            if b != u32::MAX {
                nb[b as usize] += e.weight;
            }
        }
        let w_v = coarsest.weights[v as usize];
        let b = fennel_select(v, &nb, w_v, &block_weight, &params).map_err(|e| match e {
            FennelError::NoFeasibleBlock { .. } => MlError::Infeasible { node: v, weight: w_v },
            _ => unreachable!("parameters validated at construction"),
        })?;
        asg[v as usize] = b;
        block_weight[b as usize] += w_v;
    }
    Ok(asg)
}

/// Round-limited local search. Each sweep moves nodes to the feasible block
/// with the largest cut reduction; zero-gain moves are skipped so the search
/// cannot oscillate. Pinned nodes never move. Returns the total gain.
pub fn refine(
    g: &ModelGraph,
    asg: &mut [BlockId],
    k: u32,
    l_max: u64,
    rounds: u32,
) -> u64 {
    let n = g.n();
    let mut block_weight = vec![0u64; k as usize];
    for v in 0..n {
        block_weight[asg[v] as usize] += g.weights[v];
    }
    let mut conn = vec![0u64; k as usize];
    let mut touched: Vec<BlockId> = Vec::new();
    let mut total_gain = 0u64;
    for _ in 0..rounds {
        let mut moved = false;
        for v in 0..n {
            if g.pinned[v].is_some() {
                continue;
            }
            touched.clear();
            for e in &g.adj[v] {
                let b = asg[e.node as usize];
                if conn[b as usize] == 0 {
                    touched.push(b);
                }
                conn[b as usize] += e.weight;
            }
            let cur = asg[v];
            let w_v = g.weights[v];
            let mut best = cur;
            let mut best_conn = conn[cur as usize];
            for &b in &touched {
                if b != cur
                    && conn[b as usize] > best_conn
                    && block_weight[b as usize] + w_v <= l_max
                {
                    best = b;
                    best_conn = conn[b as usize];
                }
            }
            if best != cur {
                total_gain += best_conn - conn[cur as usize];
                block_weight[cur as usize] -= w_v;
                block_weight[best as usize] += w_v;
                asg[v] = best;
                moved = true;
            }
            for &b in &touched {
                conn[b as usize] = 0;
            }
        }
        if !moved {
            break;
        }
    }
    total_gain
}

/// Projects a coarse assignment to the finer level.
pub fn project_assignment(map_down: &[u32], coarse: &[BlockId]) -> Vec<BlockId> {
    map_down.iter().map(|&c| coarse[c as usize]).collect()
}

/// Full multilevel run on a batch model: coarsen, partition the coarsest
/// level, project back up refining each level (the finest included). When
/// the model is already at or below `stop_size` the hierarchy is empty and
/// the initial partition is returned as-is.
pub fn ml_partition<F: Real>(
    model: &BatchModelGraph,
    l_max: u64,
    p: &FennelParams<F>,
    cfg: &MlConfig,
) -> Result<Vec<BlockId>, MlError> {
    let cap = (l_max / CLUSTER_WEIGHT_DIVISOR).max(1);
    let levels = coarsen(&model.graph, cfg.stop_size, cap, cfg.seed);
    let coarsest = levels.last().map(|l| &l.graph).unwrap_or(&model.graph);
    let mut asg = initial_partition(coarsest, model.k, l_max, p)?;
    for i in (0..levels.len()).rev() {
        let finer = if i == 0 { &model.graph } else { &levels[i - 1].graph };
        let mut fine_asg = project_assignment(&levels[i].map_down, &asg);
        refine(finer, &mut fine_asg, model.k, l_max, cfg.refine_rounds);
        asg = fine_asg;
    }
    Ok(asg)
}
