//! One-pass greedy block selection.
//!
//! A node goes to the feasible block maximizing `w(v, V_i) - alpha * gamma *
//! c(v) * c(V_i)^(gamma - 1)`: edge weight toward the block minus a convex
//! weight penalty. Feasibility against the hard capacity bound is enforced
//! on top of the soft penalty. The same selection serves hub placement, the
//! coarse-level initial partition (weighted), and the standalone streaming
//! baseline.

use crate::graph::StreamGraph;
use crate::order::StreamOrder;
use crate::partition::PartitionState;
use crate::{real_from_f64, real_from_u64, BlockId, EdgeWeight, NodeId, NodeWeight, Real};

#[derive(Debug, thiserror::Error)]
pub enum FennelError {
    #[error("alpha must be > 0")]
    BadAlpha,
    #[error("gamma must be > 1")]
    BadGamma,
    #[error("l_max must be >= 1")]
    BadLMax,
    #[error("no feasible block for node {node} (weight {weight}); every block would exceed the capacity bound")]
    NoFeasibleBlock { node: NodeId, weight: NodeWeight },
}

#[derive(Debug, Clone, Copy)]
pub struct FennelParams<F> {
    pub alpha: F,
    pub gamma: F,
    /// Hard per-block capacity.
    pub l_max: u64,
}

impl<F: Real> FennelParams<F> {
    pub fn new(alpha: F, gamma: F, l_max: u64) -> Result<Self, FennelError> {
        if !(alpha > F::zero()) {
            return Err(FennelError::BadAlpha);
        }
        if !(gamma > F::one()) {
            return Err(FennelError::BadGamma);
        }
        if l_max < 1 {
            return Err(FennelError::BadLMax);
        }
        Ok(Self { alpha, gamma, l_max })
    }

    /// Classical parameterization generalized to weights:
    /// `gamma = 1.5`, `alpha = sqrt(k) * omega(E) / c(V)^1.5`.
    pub fn defaults(k: u32, total_edge_weight: u64, total_node_weight: u64, l_max: u64) -> Self {
        let gamma = real_from_f64::<F>(1.5);
        let k_f = real_from_u64::<F>(k as u64);
        let alpha = if total_node_weight == 0 {
            // degenerate: the penalty is multiplied by c(v) = 0 everywhere
            k_f.sqrt()
        } else {
            let m_f = real_from_u64::<F>(total_edge_weight).max(F::one());
            let c_f = real_from_u64::<F>(total_node_weight);
            k_f.sqrt() * m_f / c_f.powf(gamma)
        };
        Self { alpha, gamma, l_max: l_max.max(1) }
    }

    pub fn for_graph(g: &StreamGraph, k: u32, l_max: u64) -> Self {
        Self::defaults(k, g.total_edge_weight(), g.total_node_weight(), l_max)
    }
}

/// Gain of placing a node of weight `c_v` with `w` edge weight toward a
/// block of current weight `bw`.
pub fn gain<F: Real>(w: EdgeWeight, c_v: NodeWeight, bw: u64, p: &FennelParams<F>) -> F {
    let penalty = p.alpha * p.gamma * real_from_u64::<F>(c_v)
        * real_from_u64::<F>(bw).powf(p.gamma - F::one());
    real_from_u64::<F>(w) - penalty
}

/// Selects the feasible block with maximal gain; ties break toward the
/// lowest block index. `neighbor_blocks[i]` is the edge weight from the node
/// to block `i`.
pub fn fennel_select<F: Real>(
    v: NodeId,
    neighbor_blocks: &[EdgeWeight],
    c_v: NodeWeight,
    block_weights: &[u64],
    p: &FennelParams<F>,
) -> Result<BlockId, FennelError> {
    debug_assert_eq!(neighbor_blocks.len(), block_weights.len());
    let mut best: Option<(BlockId, F)> = None;
    for (i, (&w, &bw)) in neighbor_blocks.iter().zip(block_weights).enumerate() {
        if bw + c_v > p.l_max {
            continue;
        }
        let g = gain(w, c_v, bw, p);
        if best.map_or(true, |(_, bg)| g > bg) {
            best = Some((i as BlockId, g));
        }
    }
    best.map(|(b, _)| b).ok_or(FennelError::NoFeasibleBlock { node: v, weight: c_v })
}

/// One-pass streaming baseline: assigns each node on arrival using edge
/// weights to already-assigned neighbors.
pub fn fennel_pass<F: Real>(
    g: &StreamGraph,
    order: &StreamOrder,
    k: u32,
    epsilon: f64,
    params: Option<FennelParams<F>>,
) -> Result<PartitionState, FennelError> {
    let mut state = PartitionState::new(g.n(), g.total_node_weight(), k, epsilon);
    let p = params.unwrap_or_else(|| FennelParams::for_graph(g, k, state.l_max()));
    let mut neighbor_blocks = vec![0u64; k as usize];
    for (v, neighbors) in g.stream(order) {
        neighbor_blocks.fill(0);
        for e in neighbors {
            if let Some(b) = state.block_of(e.node) {
                neighbor_blocks[b as usize] += e.weight;
            }
        }
        let b = fennel_select(v, &neighbor_blocks, g.node_weight(v), state.block_weights(), &p)?;
        state.assign(v, b, g.node_weight(v));
    }
    Ok(state)
}
