//! Buffered streaming k-way graph partitioning.
//!
//! The partitioner consumes a graph as a node stream and assigns every node
//! to one of `k` blocks while keeping the blocks balanced and the weight of
//! cut edges low. Instead of committing each node on arrival, it parks
//! low-degree nodes in a bounded priority buffer keyed by a buffer score,
//! evicts the best-informed nodes into batches, and partitions each batch
//! jointly on a compact model graph with a multilevel scheme. High-degree
//! hubs bypass the buffer and are placed immediately as anchors. Additional
//! restreaming passes refine an existing partition batch by batch, and a
//! three-stage pipeline overlaps parsing, buffer maintenance, and batch
//! partitioning.
//!
//! Module map:
//! - [`graph`]: METIS-format loading, the stream view, assignment files.
//! - [`order`]: stream orders (source, seeded random, from file).
//! - [`partition`]: block assignments, block weights, the balance bound.
//! - [`metrics`]: edge cut, balance, stream locality (AID), batch locality (IER).
//! - [`score`]: buffer scoring functions (ANR, HAA, NSS, CMS, CBS).
//! - [`bucketpq`]: the bucket priority queue backing the buffer.
//! - [`fennel`]: one-pass greedy block selection and the streaming baseline.
//! - [`batch`]: batches, the batch model graph, and commit-back.
//! - [`multilevel`]: coarsening, initial partitioning, refinement.
//! - [`engine`]: the sequential streaming loop and restreaming passes.
//! - [`pipeline`]: the three-role parallel execution of pass one.
//! - [`synth`]: deterministic synthetic graph generators.
//!
//! All real-valued math (scores, gains, ratios) is generic over [`Real`];
//! graph node and edge weights are integers throughout.

pub mod batch;
pub mod bucketpq;
pub mod engine;
pub mod fennel;
pub mod graph;
pub mod metrics;
pub mod multilevel;
pub mod order;
pub mod partition;
pub mod pipeline;
pub mod score;
pub mod synth;

/// Node identifier: dense indices in `[0, n)`.
pub type NodeId = u32;
/// Block identifier in `[0, k)`.
pub type BlockId = u32;
/// Node weight `c(v)` (non-negative integer).
pub type NodeWeight = u64;
/// Edge weight (positive integer).
pub type EdgeWeight = u64;

/// Default scalar for scores, gains and ratios.
pub type DefaultReal = f64;

/// Scalar type for all real-valued math: f32 or f64.
pub trait Real:
    num_traits::Float
    + num_traits::FromPrimitive
    + num_traits::ToPrimitive
    + num_traits::NumAssign
    + std::iter::Sum
    + std::fmt::Debug
    + std::fmt::Display
    + Default
    + Send
    + Sync
    + 'static
{
}

impl<T> Real for T where
    T: num_traits::Float
        + num_traits::FromPrimitive
        + num_traits::ToPrimitive
        + num_traits::NumAssign
        + std::iter::Sum
        + std::fmt::Debug
        + std::fmt::Display
        + Default
        + Send
        + Sync
        + 'static
{
}

/// Lossy conversion helpers used at type boundaries.
pub(crate) fn real_from_f64<F: Real>(x: f64) -> F {
    F::from_f64(x).expect("f64 convertible to Real")
}

pub(crate) fn real_from_u64<F: Real>(x: u64) -> F {
    F::from_u64(x).expect("u64 convertible to Real")
}

pub use engine::{EngineConfig, RunResult};
pub use graph::StreamGraph;
pub use order::StreamOrder;
pub use partition::PartitionState;
pub use score::{ScoreKind, ScoringConfig};
