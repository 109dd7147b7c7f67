//! Block assignments and block weights for a k-way partition.

use crate::{BlockId, NodeId, NodeWeight};

#[derive(Debug, thiserror::Error)]
pub enum PartitionError {
    #[error("block {block} out of range [0, {k})")]
    BlockOutOfRange { block: BlockId, k: u32 },
    #[error("assignment length {found} does not match node count {expected}")]
    LengthMismatch { expected: usize, found: usize },
}

/// Ceiling of `(1 + epsilon) * total / k`, the per-block weight bound.
///
/// Computed in scaled integer arithmetic: `1 + epsilon` is taken at 1e-9
/// resolution so that exact integer products (e.g. 1.03 * 100) do not round
/// up an extra unit the way raw f64 can.
pub fn compute_l_max(total_weight: u64, k: u32, epsilon: f64) -> u64 {
    assert!(k >= 1, "k must be at least 1");
    assert!(epsilon >= 0.0 && epsilon.is_finite(), "epsilon must be finite and >= 0");
    const DENOM: u128 = 1_000_000_000;
    let scaled = ((1.0 + epsilon) * DENOM as f64).round() as u128;
    let num = scaled * total_weight as u128;
    let den = DENOM * k as u128;
    num.div_ceil(den) as u64
}

/// Per-node block assignment plus per-block weights for one partition run.
///
/// `block_weight[i]` is maintained incrementally by [`assign`](Self::assign)
/// and [`unassign`](Self::unassign) and always equals the sum of `c(v)` over
/// nodes currently in block `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionState {
    block: Vec<Option<BlockId>>,
    block_weight: Vec<NodeWeight>,
    k: u32,
    epsilon: f64,
    l_max: u64,
    total_weight: u64,
    assigned: usize,
}

impl PartitionState {
    pub fn new(n: usize, total_weight: u64, k: u32, epsilon: f64) -> Self {
        assert!(k >= 1, "k must be at least 1");
        let l_max = compute_l_max(total_weight, k, epsilon);
        Self {
            block: vec![None; n],
            block_weight: vec![0; k as usize],
            k,
            epsilon,
            l_max,
            total_weight,
            assigned: 0,
        }
    }

    /// Rebuilds a state from a complete assignment vector, e.g. one read
    /// back from an assignment file.
    pub fn from_assignment(
        blocks: &[BlockId],
        node_weights: &[NodeWeight],
        k: u32,
        epsilon: f64,
    ) -> Result<Self, PartitionError> {
        if blocks.len() != node_weights.len() {
            return Err(PartitionError::LengthMismatch {
                expected: node_weights.len(),
                found: blocks.len(),
            });
        }
        let total: u64 = node_weights.iter().sum();
        let mut state = Self::new(blocks.len(), total, k, epsilon);
        for (v, &b) in blocks.iter().enumerate() {
            if b >= k {
                return Err(PartitionError::BlockOutOfRange { block: b, k });
            }
            state.assign(v as NodeId, b, node_weights[v]);
        }
        Ok(state)
    }

    /// Number of nodes the state was built for.
    pub fn len(&self) -> usize {
        self.block.len()
    }

    pub fn is_empty(&self) -> bool {
        self.block.is_empty()
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn l_max(&self) -> u64 {
        self.l_max
    }

    pub fn total_weight(&self) -> u64 {
        self.total_weight
    }

    pub fn block_of(&self, v: NodeId) -> Option<BlockId> {
        self.block[v as usize]
    }

    pub fn block_weights(&self) -> &[NodeWeight] {
        &self.block_weight
    }

    pub fn max_block_weight(&self) -> u64 {
        self.block_weight.iter().copied().max().unwrap_or(0)
    }

    pub fn num_assigned(&self) -> usize {
        self.assigned
    }

    pub fn is_complete(&self) -> bool {
        self.assigned == self.block.len()
    }

    pub fn assign(&mut self, v: NodeId, b: BlockId, c_v: NodeWeight) {
        debug_assert!(b < self.k);
        debug_assert!(self.block[v as usize].is_none(), "node {v} assigned twice");
        self.block[v as usize] = Some(b);
        self.block_weight[b as usize] += c_v;
        self.assigned += 1;
    }

    /// Removes `v` from its block, returning the old block. Used when a
    /// restream pass logically detaches a batch before repartitioning it.
    pub fn unassign(&mut self, v: NodeId, c_v: NodeWeight) -> BlockId {
        let b = self.block[v as usize].expect("unassign of unassigned node");
        self.block[v as usize] = None;
        self.block_weight[b as usize] -= c_v;
        self.assigned -= 1;
        b
    }

    /// Recomputes block weights from scratch; test and audit facility.
    pub fn recompute_block_weights(&self, node_weights: &[NodeWeight]) -> Vec<NodeWeight> {
        let mut w = vec![0; self.k as usize];
        for (v, b) in self.block.iter().enumerate() {
            if let Some(b) = b {
                w[*b as usize] += node_weights[v];
            }
        }
        w
    }
}
