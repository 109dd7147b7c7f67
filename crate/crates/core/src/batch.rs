//! Batches and the batch model graph.
//!
//! A finished batch is partitioned on a compact model: the batch-induced
//! subgraph augmented with `k` auxiliary nodes, one pinned to each block.
//! An auxiliary edge `(v, a_i)` carries the total edge weight from `v` to
//! neighbors already assigned to block `i`, so partitioning the model sees
//! exactly the committed context. Auxiliary node `a_i` carries the current
//! weight of block `i`, which makes model-local balance imply global
//! balance. Edges to neighbors that are neither batched nor assigned are
//! dropped; nothing is known about them yet.

use std::collections::HashMap;

use crate::graph::{Neighbor, StreamGraph};
use crate::partition::PartitionState;
use crate::{BlockId, NodeId, NodeWeight};

#[derive(Debug, thiserror::Error)]
pub enum BatchError {
    #[error("batch is full (capacity {0})")]
    BatchFull(usize),
    #[error("node {0} is already in the batch")]
    DuplicateMember(NodeId),
    #[error("batch is empty")]
    EmptyBatch,
    #[error("batch member {0} already has a block assignment")]
    MemberAssigned(NodeId),
    #[error("local assignment covers {found} nodes, model has {expected}")]
    AssignmentLengthMismatch { expected: usize, found: usize },
    #[error("auxiliary node for block {aux} assigned to block {got}; pinning violated")]
    PinningViolated { aux: BlockId, got: BlockId },
    #[error("committing the batch would raise block {block} to {weight}, above the bound {l_max}")]
    CapacityExceeded { block: BlockId, weight: u64, l_max: u64 },
}

/// An ordered set of deferred nodes awaiting joint assignment.
#[derive(Debug, Clone)]
pub struct Batch {
    members: Vec<NodeId>,
    index_of: HashMap<NodeId, u32>,
    capacity: usize,
}

impl Batch {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity >= 1, "batch capacity must be >= 1");
        Self { members: Vec::with_capacity(capacity), index_of: HashMap::new(), capacity }
    }

    /// Builds a batch directly from a member list (restream chunks).
    pub fn from_members(members: Vec<NodeId>) -> Result<Self, BatchError> {
        let mut batch = Self::new(members.len().max(1));
        for v in members {
            batch.push(v)?;
        }
        Ok(batch)
    }

    pub fn push(&mut self, v: NodeId) -> Result<(), BatchError> {
        if self.members.len() == self.capacity {
            return Err(BatchError::BatchFull(self.capacity));
        }
        if self.index_of.contains_key(&v) {
            return Err(BatchError::DuplicateMember(v));
        }
        self.index_of.insert(v, self.members.len() as u32);
        self.members.push(v);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.members.len() == self.capacity
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn contains(&self, v: NodeId) -> bool {
        self.index_of.contains_key(&v)
    }

    /// Members in eviction order.
    pub fn members(&self) -> &[NodeId] {
        &self.members
    }

    pub fn local_of(&self, v: NodeId) -> Option<u32> {
        self.index_of.get(&v).copied()
    }

    pub fn clear(&mut self) {
        self.members.clear();
        self.index_of.clear();
    }
}

/// A weighted graph at some level of the multilevel hierarchy. Pinned nodes
/// are the auxiliary block anchors; they are immovable and never merged.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelGraph {
    pub adj: Vec<Vec<Neighbor>>,
    pub weights: Vec<NodeWeight>,
    /// `Some(i)` for the auxiliary node fixed to block `i`.
    pub pinned: Vec<Option<BlockId>>,
}

impl ModelGraph {
    pub fn n(&self) -> usize {
        self.weights.len()
    }

    pub fn total_weight(&self) -> u64 {
        self.weights.iter().sum()
    }

    /// Cut weight of an assignment on this graph, each edge counted once.
    pub fn cut(&self, assignment: &[BlockId]) -> u64 {
        let mut cut = 0;
        for (v, list) in self.adj.iter().enumerate() {
            for e in list {
                if (e.node as usize) > v && assignment[e.node as usize] != assignment[v] {
                    cut += e.weight;
                }
            }
        }
        cut
    }
}

/// The induced batch subgraph plus `k` pinned auxiliary block-nodes, with
/// the mapping back to global node IDs.
#[derive(Debug, Clone)]
pub struct BatchModelGraph {
    pub graph: ModelGraph,
    /// Global ID of each regular local node (locals `0..num_regular`).
    pub local_to_global: Vec<NodeId>,
    pub num_regular: usize,
    pub k: u32,
}

impl BatchModelGraph {
    /// Local ID of the auxiliary node for block `i`.
    pub fn aux_local(&self, i: BlockId) -> usize {
        self.num_regular + i as usize
    }
}

/// Builds the model graph for a batch against the current partition state.
pub fn build_batch_model(
    g: &StreamGraph,
    batch: &Batch,
    state: &PartitionState,
    k: u32,
) -> Result<BatchModelGraph, BatchError> {
    if batch.is_empty() {
        return Err(BatchError::EmptyBatch);
    }
    let r = batch.len();
    let n_local = r + k as usize;
    let mut adj: Vec<Vec<Neighbor>> = vec![Vec::new(); n_local];
    let mut weights = vec![0u64; n_local];
    let mut pinned = vec![None; n_local];
    let mut aux_weight = vec![0u64; k as usize]; // per-member accumulator

    for (lv, &v) in batch.members().iter().enumerate() {
        if state.block_of(v).is_some() {
            return Err(BatchError::MemberAssigned(v));
        }
        weights[lv] = g.node_weight(v);
        aux_weight.fill(0);
        for e in g.neighbors(v) {
            if let Some(lu) = batch.local_of(e.node) {
                // induced edge; both directions appear as the loop reaches each endpoint
                adj[lv].push(Neighbor { node: lu, weight: e.weight });
            } else if let Some(b) = state.block_of(e.node) {
                aux_weight[b as usize] += e.weight;
            }
            // unknown neighbor: dropped
        }
        for (i, &w) in aux_weight.iter().enumerate() {
            if w > 0 {
                let a = r + i;
                adj[lv].push(Neighbor { node: a as u32, weight: w });
                adj[a].push(Neighbor { node: lv as u32, weight: w });
            }
        }
    }
    for i in 0..k {
        let a = r + i as usize;
        weights[a] = state.block_weights()[i as usize];
        pinned[a] = Some(i);
    }
    Ok(BatchModelGraph {
        graph: ModelGraph { adj, weights, pinned },
        local_to_global: batch.members().to_vec(),
        num_regular: r,
        k,
    })
}

/// Writes a model-local assignment back to the global state. Verifies the
/// auxiliary pinning and checks capacity before touching the state, so a
/// failed commit leaves it unchanged.
pub fn commit_batch(
    model: &BatchModelGraph,
    local_assignment: &[BlockId],
    state: &mut PartitionState,
) -> Result<(), BatchError> {
    if local_assignment.len() != model.graph.n() {
        return Err(BatchError::AssignmentLengthMismatch {
            expected: model.graph.n(),
            found: local_assignment.len(),
        });
    }
    for i in 0..model.k {
        let got = local_assignment[model.aux_local(i)];
        if got != i {
            return Err(BatchError::PinningViolated { aux: i, got });
        }
    }
    let mut added = vec![0u64; model.k as usize];
    for lv in 0..model.num_regular {
        added[local_assignment[lv] as usize] += model.graph.weights[lv];
    }
    for (i, &extra) in added.iter().enumerate() {
        let w = state.block_weights()[i] + extra;
        if w > state.l_max() {
            return Err(BatchError::CapacityExceeded {
                block: i as BlockId,
                weight: w,
                l_max: state.l_max(),
            });
        }
    }
    for lv in 0..model.num_regular {
        let v = model.local_to_global[lv];
        state.assign(v, local_assignment[lv], model.graph.weights[lv]);
    }
    Ok(())
}
