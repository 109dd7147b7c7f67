//! The streaming partitioning loop.
//!
//! Pass one streams nodes in order. Hubs (degree above the threshold) are
//! placed immediately by greedy selection and act as anchors; everything
//! else enters a bounded priority buffer keyed by the configured buffer
//! score. Whenever the buffer is at capacity the top node is evicted into
//! the current batch, and as soon as a node is admitted (or a hub placed)
//! the scores of its buffered neighbors rise, which pulls structurally
//! related nodes into the same batch. Full batches are partitioned jointly
//! on the batch model graph and committed. After the stream ends the buffer
//! drains through the same admission path.
//!
//! Restream passes have no buffer: nodes are taken in stream order in
//! batches of the same size, logically detached from their blocks, and
//! repartitioned through the identical model path.

use std::collections::HashMap;

use crate::batch::{build_batch_model, Batch, BatchError};
use crate::bucketpq::{bucket_count_for, BucketPq, BucketPqError};
use crate::fennel::{fennel_select, FennelError, FennelParams};
use crate::graph::{Neighbor, StreamGraph};
use crate::metrics::ier;
use crate::multilevel::{ml_partition, MlConfig, MlError};
use crate::order::StreamOrder;
use crate::partition::PartitionState;
use crate::score::{max_score, score, NodeScoreInputs, ScoreKind, ScoringConfig};
use crate::{real_from_f64, BlockId, NodeId, Real};

#[derive(Debug, thiserror::Error)]
pub enum EngineError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    BucketPq(#[from] BucketPqError),
    #[error(transparent)]
    Batch(#[from] BatchError),
    #[error(transparent)]
    Fennel(#[from] FennelError),
    #[error("pipeline failure: {0}")]
    Pipeline(String),
}

/// Everything a run needs to know. `scoring.d_max` is kept in sync with
/// `d_max` automatically; the engine-wide threshold governs both hub
/// detection and score normalization.
#[derive(Debug, Clone)]
pub struct EngineConfig<F> {
    pub k: u32,
    pub epsilon: f64,
    /// Buffer capacity.
    pub q_max: usize,
    /// Batch size.
    pub delta: usize,
    /// Hub threshold: nodes with degree above this bypass the buffer.
    pub d_max: u32,
    /// Score discretization multiplier for the bucket queue.
    pub disc_factor: F,
    pub scoring: ScoringConfig<F>,
    /// Total stream passes (1 = no restreaming).
    pub passes: u32,
    pub seed: u64,
    /// Run pass one on the three-role pipeline.
    pub parallel: bool,
    /// Override for the greedy objective's alpha; derived from the graph
    /// when absent.
    pub alpha: Option<F>,
    pub gamma: F,
    /// Coarsening stop size; `max(2k, 2048)` when absent.
    pub stop_size: Option<usize>,
    pub refine_rounds: u32,
    /// Parsed-line queue capacity (parallel mode).
    pub input_queue_cap: usize,
    /// Partition-task queue capacity (parallel mode).
    pub task_queue_cap: usize,
}

impl<F: Real> EngineConfig<F> {
    pub fn new(k: u32) -> Self {
        Self {
            k,
            epsilon: 0.03,
            q_max: 1_048_576,
            delta: 65_536,
            d_max: 10_000,
            disc_factor: real_from_f64(1000.0),
            scoring: ScoringConfig::haa_default(10_000),
            passes: 1,
            seed: 0,
            parallel: false,
            alpha: None,
            gamma: real_from_f64(1.5),
            stop_size: None,
            refine_rounds: 3,
            input_queue_cap: 4096,
            task_queue_cap: 8,
        }
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        if self.k < 1 {
            return Err(EngineError::Config("k must be >= 1".into()));
        }
        if self.q_max < 1 {
            return Err(EngineError::Config("q_max must be >= 1".into()));
        }
        if self.delta < 1 {
            return Err(EngineError::Config("delta must be >= 1".into()));
        }
        if self.d_max < 1 {
            return Err(EngineError::Config("d_max must be >= 1".into()));
        }
        if self.passes < 1 {
            return Err(EngineError::Config("passes must be >= 1".into()));
        }
        if !(self.disc_factor > F::zero()) {
            return Err(EngineError::Config("disc_factor must be > 0".into()));
        }
        if !(self.gamma > F::one()) {
            return Err(EngineError::Config("gamma must be > 1".into()));
        }
        if !(self.epsilon >= 0.0) {
            return Err(EngineError::Config("epsilon must be >= 0".into()));
        }
        Ok(())
    }

    pub(crate) fn effective_scoring(&self) -> ScoringConfig<F> {
        let mut s = self.scoring;
        s.d_max = self.d_max;
        s
    }

    pub(crate) fn ml_config(&self) -> MlConfig {
        MlConfig {
            stop_size: self.stop_size.unwrap_or_else(|| (2 * self.k as usize).max(2048)),
            refine_rounds: self.refine_rounds,
            seed: self.seed,
        }
    }

    pub(crate) fn fennel_params(&self, g: &StreamGraph, l_max: u64) -> FennelParams<F> {
        let mut p = FennelParams::for_graph(g, self.k, l_max);
        if let Some(alpha) = self.alpha {
            p.alpha = alpha;
        }
        p.gamma = self.gamma;
        p
    }
}

/// Per-batch log entry.
#[derive(Debug, Clone)]
pub struct BatchStat {
    /// Pass index, 0 for the initial streaming pass.
    pub pass: u32,
    pub index: u32,
    pub size: usize,
    pub ier: f64,
    pub ier_degenerate: bool,
    /// Running cut weight after this batch committed.
    pub cut_after: u64,
}

/// Instrumentation for a full run.
#[derive(Debug, Clone, Default)]
pub struct EngineStats {
    pub increase_key_calls: u64,
    pub q_peak: usize,
    pub batch_peak: usize,
    /// High-water estimate of engine-internal auxiliary memory (buffer
    /// entries, retained adjacency, batches, model graphs).
    pub mem_peak_bytes: usize,
    /// Nodes placed by the infeasibility fallback; balance is not
    /// guaranteed when nonzero.
    pub force_assigned: u64,
    pub hub_count: u64,
    pub final_cut: u64,
}

#[derive(Debug)]
pub struct RunResult {
    pub state: PartitionState,
    pub batch_stats: Vec<BatchStat>,
    pub stats: EngineStats,
}

impl RunResult {
    /// Mean internal edge ratio over first-pass batches.
    pub fn ier_mean(&self) -> Option<f64> {
        let pass1: Vec<&BatchStat> = self.batch_stats.iter().filter(|b| b.pass == 0).collect();
        if pass1.is_empty() {
            return None;
        }
        Some(pass1.iter().map(|b| b.ier).sum::<f64>() / pass1.len() as f64)
    }
}

/// Where the buffer reads committed block assignments from. The sequential
/// engine hands it the partition state; the pipeline hands it a lagging
/// atomic table.
pub(crate) trait BlockLookup {
    fn committed_block(&self, v: NodeId) -> Option<BlockId>;
}

impl BlockLookup for PartitionState {
    fn committed_block(&self, v: NodeId) -> Option<BlockId> {
        self.block_of(v)
    }
}

/// How CMS per-block counters are maintained: incrementally via reveal
/// events (sequential) or recomputed from the lookup on demand (pipeline,
/// where commit events are asynchronous).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum PerBlockMode {
    Incremental,
    Lazy,
}

pub(crate) struct BufferEntry {
    pub degree: u32,
    pub assigned: u32,
    pub buffered: u32,
    pub per_block: Vec<u32>,
    pub neighbors: Vec<Neighbor>,
}

fn entry_score<F: Real>(
    scoring: &ScoringConfig<F>,
    entry: &BufferEntry,
    mode: PerBlockMode,
    lookup: &dyn BlockLookup,
    scratch: &mut Vec<u32>,
) -> F {
    let per_block: &[u32] = match (scoring.kind, mode) {
        (ScoreKind::Cms, PerBlockMode::Incremental) => &entry.per_block,
        (ScoreKind::Cms, PerBlockMode::Lazy) => {
            scratch.fill(0);
            for e in &entry.neighbors {
                if let Some(b) = lookup.committed_block(e.node) {
                    scratch[b as usize] += 1;
                }
            }
            scratch
        }
        _ => &[],
    };
    score(scoring, &NodeScoreInputs::new(entry.degree, entry.assigned, entry.buffered, per_block))
}

/// The priority buffer plus the score-maintenance protocol around it.
///
/// `assigned_mask` marks nodes that count as assigned for scoring: committed
/// hubs, batch-admitted nodes, and (in the pipeline) anything already
/// enqueued for assignment.
pub(crate) struct BufferController<F: Real> {
    q: BucketPq<F>,
    entries: HashMap<NodeId, BufferEntry>,
    scoring: ScoringConfig<F>,
    k: u32,
    mode: PerBlockMode,
    assigned_mask: Vec<bool>,
    scratch: Vec<u32>,
    pub increase_key_calls: u64,
}

impl<F: Real> BufferController<F> {
    pub fn new(
        n: usize,
        k: u32,
        scoring: ScoringConfig<F>,
        disc_factor: F,
        mode: PerBlockMode,
    ) -> Result<Self, EngineError> {
        let b_count = bucket_count_for(max_score(&scoring), disc_factor);
        Ok(Self {
            q: BucketPq::new(b_count, disc_factor)?,
            entries: HashMap::new(),
            scoring,
            k,
            mode,
            assigned_mask: vec![false; n],
            scratch: vec![0; k as usize],
            increase_key_calls: 0,
        })
    }

    pub fn len(&self) -> usize {
        self.q.len()
    }

    pub fn is_empty(&self) -> bool {
        self.q.is_empty()
    }

    /// Inserts a freshly streamed node, computing its initial counters from
    /// the assigned mask, the committed-block lookup, and current buffer
    /// membership. For NSS the buffered-neighbor counters of its neighbors
    /// rise as well.
    pub fn insert_streamed(
        &mut self,
        v: NodeId,
        neighbors: Vec<Neighbor>,
        lookup: &dyn BlockLookup,
    ) -> Result<(), EngineError> {
        let track_buffered = self.scoring.kind == ScoreKind::Nss;
        let incremental_cms =
            self.scoring.kind == ScoreKind::Cms && self.mode == PerBlockMode::Incremental;
        let mut assigned = 0;
        let mut buffered = 0;
        let mut per_block = if incremental_cms { vec![0u32; self.k as usize] } else { Vec::new() };
        let mut buffered_ids: Vec<NodeId> = Vec::new();
        for e in &neighbors {
            if self.assigned_mask[e.node as usize] {
                assigned += 1;
                if incremental_cms {
                    if let Some(b) = lookup.committed_block(e.node) {
                        per_block[b as usize] += 1;
                    }
                }
            } else if self.entries.contains_key(&e.node) {
                if track_buffered {
                    buffered += 1;
                    buffered_ids.push(e.node);
                }
            }
        }
        let entry =
            BufferEntry { degree: neighbors.len() as u32, assigned, buffered, per_block, neighbors };
        let mut scratch = std::mem::take(&mut self.scratch);
        let s = entry_score(&self.scoring, &entry, self.mode, lookup, &mut scratch);
        self.scratch = scratch;
        self.q.insert(v, s)?;
        self.entries.insert(v, entry);
        for u in buffered_ids {
            let entry = self.entries.get_mut(&u).expect("buffered neighbor present");
            entry.buffered += 1;
            let s = score(
                &self.scoring,
                &NodeScoreInputs::new(entry.degree, entry.assigned, entry.buffered, &[]),
            );
            self.q.increase_key(u, s)?;
            self.increase_key_calls += 1;
        }
        Ok(())
    }

    /// Evicts the top node and hands back its retained entry. The caller is
    /// responsible for following up with [`note_assigned`](Self::note_assigned).
    pub fn extract_top(&mut self) -> Result<(NodeId, BufferEntry), EngineError> {
        let v = self.q.extract_max()?;
        let entry = self.entries.remove(&v).expect("queue and entry map in sync");
        Ok((v, entry))
    }

    /// Marks `v` assigned-for-scoring and raises the scores of its buffered
    /// neighbors. `was_buffered` distinguishes batch admissions (which leave
    /// the buffer) from hubs (which never entered it); `block` carries the
    /// committed block when already known (hubs in sequential mode).
    pub fn note_assigned(
        &mut self,
        v: NodeId,
        neighbors: &[Neighbor],
        was_buffered: bool,
        block: Option<BlockId>,
        lookup: &dyn BlockLookup,
    ) -> Result<(), EngineError> {
        self.assigned_mask[v as usize] = true;
        let track_buffered = self.scoring.kind == ScoreKind::Nss;
        let incremental_cms =
            self.scoring.kind == ScoreKind::Cms && self.mode == PerBlockMode::Incremental;
        let mut scratch = std::mem::take(&mut self.scratch);
        for e in neighbors {
            let Some(entry) = self.entries.get_mut(&e.node) else { continue };
            entry.assigned += 1;
            if was_buffered && track_buffered {
                entry.buffered -= 1;
            }
            if incremental_cms {
                if let Some(b) = block {
                    entry.per_block[b as usize] += 1;
                }
            }
            let s = entry_score(&self.scoring, entry, self.mode, lookup, &mut scratch);
            self.q.increase_key(e.node, s)?;
            self.increase_key_calls += 1;
        }
        self.scratch = scratch;
        Ok(())
    }

    /// Commit-time reveal of a pending node's block; only incremental CMS
    /// cares (the counters moved from the pending pool into a real block).
    pub fn note_block_revealed(
        &mut self,
        neighbors: &[Neighbor],
        block: BlockId,
        lookup: &dyn BlockLookup,
    ) -> Result<(), EngineError> {
        if self.scoring.kind != ScoreKind::Cms || self.mode != PerBlockMode::Incremental {
            return Ok(());
        }
        let mut scratch = std::mem::take(&mut self.scratch);
        for e in neighbors {
            let Some(entry) = self.entries.get_mut(&e.node) else { continue };
            entry.per_block[block as usize] += 1;
            let s = entry_score(&self.scoring, entry, self.mode, lookup, &mut scratch);
            self.q.increase_key(e.node, s)?;
            self.increase_key_calls += 1;
        }
        self.scratch = scratch;
        Ok(())
    }
}

/// Byte-estimate accounting for the engine's auxiliary structures.
#[derive(Debug, Default, Clone, Copy)]
pub(crate) struct MemMeter {
    current: usize,
    peak: usize,
}

pub(crate) const ENTRY_BYTES: usize = 64;
pub(crate) const NEIGHBOR_BYTES: usize = std::mem::size_of::<Neighbor>();
pub(crate) const MODEL_NODE_BYTES: usize = 48;

impl MemMeter {
    pub fn add(&mut self, bytes: usize) {
        self.current += bytes;
        self.peak = self.peak.max(self.current);
    }

    pub fn sub(&mut self, bytes: usize) {
        self.current = self.current.saturating_sub(bytes);
    }

    pub fn peak(&self) -> usize {
        self.peak
    }
}

pub(crate) fn entry_bytes(degree: usize, k: u32, kind: ScoreKind) -> usize {
    let pb = if kind == ScoreKind::Cms { 4 * k as usize } else { 0 };
    ENTRY_BYTES + degree * NEIGHBOR_BYTES + pb
}

fn model_bytes(model: &crate::batch::BatchModelGraph) -> usize {
    let edges: usize = model.graph.adj.iter().map(|l| l.len()).sum();
    model.graph.n() * MODEL_NODE_BYTES + edges * NEIGHBOR_BYTES
}

/// Owns the partition state and performs all commits: immediate single-node
/// placements and batch flushes with the infeasibility recovery ladder
/// (split the batch in half, then force-assign a lone stuck node to the
/// lightest block). Shared by the sequential engine, restream passes, and
/// the pipeline worker.
pub(crate) struct Assigner<'g, F: Real> {
    pub g: &'g StreamGraph,
    pub state: PartitionState,
    pub params: FennelParams<F>,
    pub ml_cfg: MlConfig,
    pub k: u32,
    pub cut: u64,
    pub force_assigned: u64,
    pub meter: MemMeter,
    pub batch_stats: Vec<BatchStat>,
    pub pass: u32,
    next_batch_index: u32,
}

impl<'g, F: Real> Assigner<'g, F> {
    pub fn new(g: &'g StreamGraph, cfg: &EngineConfig<F>, state: PartitionState) -> Self {
        let params = cfg.fennel_params(g, state.l_max());
        Self {
            g,
            state,
            params,
            ml_cfg: cfg.ml_config(),
            k: cfg.k,
            cut: 0,
            force_assigned: 0,
            meter: MemMeter::default(),
            batch_stats: Vec::new(),
            pass: 0,
            next_batch_index: 0,
        }
    }

    pub fn start_pass(&mut self, pass: u32) {
        self.pass = pass;
        self.next_batch_index = 0;
    }

    /// Immediate placement for hubs and single-node fallbacks.
    pub fn assign_single(&mut self, v: NodeId, neighbors: &[Neighbor]) -> BlockId {
        let mut nb = vec![0u64; self.k as usize];
        for e in neighbors {
            if let Some(b) = self.state.block_of(e.node) {
                nb[b as usize] += e.weight;
            }
        }
        let c_v = self.g.node_weight(v);
        let b = match fennel_select(v, &nb, c_v, self.state.block_weights(), &self.params) {
            Ok(b) => b,
            Err(FennelError::NoFeasibleBlock { .. }) => self.lightest_block_fallback(),
            Err(_) => unreachable!("parameters validated at construction"),
        };
        self.commit_one(v, b);
        b
    }

    fn lightest_block_fallback(&mut self) -> BlockId {
        self.force_assigned += 1;
        let weights = self.state.block_weights();
        let mut best = 0;
        for (i, &w) in weights.iter().enumerate() {
            if w < weights[best] {
                best = i;
            }
        }
        best as BlockId
    }

    fn commit_one(&mut self, v: NodeId, b: BlockId) {
        for e in self.g.neighbors(v) {
            if let Some(bu) = self.state.block_of(e.node) {
                if bu != b {
                    self.cut += e.weight;
                }
            }
        }
        self.state.assign(v, b, self.g.node_weight(v));
    }

    /// Partitions a set of unassigned members jointly, splitting in half on
    /// infeasibility. Every member is assigned when this returns Ok.
    pub fn flush_members(&mut self, members: &[NodeId]) -> Result<(), EngineError> {
        debug_assert!(!members.is_empty());
        if members.len() == 1 {
            let neighbors = self.g.neighbors(members[0]).to_vec();
            self.assign_single(members[0], &neighbors);
            return Ok(());
        }
        let batch = Batch::from_members(members.to_vec())?;
        let model = build_batch_model(self.g, &batch, &self.state, self.k)?;
        let bytes = model_bytes(&model);
        self.meter.add(bytes);
        let outcome = ml_partition(&model, self.state.l_max(), &self.params, &self.ml_cfg);
        match outcome {
            Ok(asg) => {
                crate::batch::commit_batch(&model, &asg, &mut self.state)?;
                // count each newly settled edge exactly once
                for &v in members {
                    let bv = self.state.block_of(v).expect("just committed");
                    for e in self.g.neighbors(v) {
                        if batch.contains(e.node) {
                            if e.node > v && self.state.block_of(e.node) != Some(bv) {
                                self.cut += e.weight;
                            }
                        } else if let Some(bu) = self.state.block_of(e.node) {
                            if bu != bv {
                                self.cut += e.weight;
                            }
                        }
                    }
                }
                self.meter.sub(bytes);
                Ok(())
            }
            Err(MlError::Infeasible { .. }) => {
                self.meter.sub(bytes);
                let mid = members.len().div_ceil(2);
                self.flush_members(&members[..mid])?;
                self.flush_members(&members[mid..])
            }
        }
    }

    /// Per-batch log entry; the IER is computed over the full batch before
    /// any recovery splitting.
    pub fn log_batch(&mut self, members: &[NodeId]) {
        let r = ier::<f64>(self.g, members);
        self.batch_stats.push(BatchStat {
            pass: self.pass,
            index: self.next_batch_index,
            size: members.len(),
            ier: r.value,
            ier_degenerate: r.degenerate,
            cut_after: self.cut,
        });
        self.next_batch_index += 1;
    }

    /// Patches the just-pushed log entry with the post-commit cut.
    pub fn finish_batch_log(&mut self) {
        if let Some(last) = self.batch_stats.last_mut() {
            last.cut_after = self.cut;
        }
    }
}

struct SeqEngine<'g, F: Real> {
    cfg: &'g EngineConfig<F>,
    assigner: Assigner<'g, F>,
    buffer: BufferController<F>,
    batch_members: Vec<NodeId>,
    batch_lists: Vec<Vec<Neighbor>>,
    q_peak: usize,
    batch_peak: usize,
    hub_count: u64,
}

impl<'g, F: Real> SeqEngine<'g, F> {
    fn new(g: &'g StreamGraph, cfg: &'g EngineConfig<F>) -> Result<Self, EngineError> {
        let state = PartitionState::new(g.n(), g.total_node_weight(), cfg.k, cfg.epsilon);
        let buffer = BufferController::new(
            g.n(),
            cfg.k,
            cfg.effective_scoring(),
            cfg.disc_factor,
            PerBlockMode::Incremental,
        )?;
        Ok(Self {
            cfg,
            assigner: Assigner::new(g, cfg, state),
            buffer,
            batch_members: Vec::with_capacity(cfg.delta),
            batch_lists: Vec::with_capacity(cfg.delta),
            q_peak: 0,
            batch_peak: 0,
            hub_count: 0,
        })
    }

    fn on_streamed(&mut self, v: NodeId, neighbors: &[Neighbor]) -> Result<(), EngineError> {
        if neighbors.len() as u32 > self.cfg.d_max {
            self.hub_count += 1;
            let b = self.assigner.assign_single(v, neighbors);
            self.buffer.note_assigned(v, neighbors, false, Some(b), &self.assigner.state)?;
        } else {
            self.assigner.meter.add(entry_bytes(
                neighbors.len(),
                self.cfg.k,
                self.cfg.scoring.kind,
            ));
            self.buffer.insert_streamed(v, neighbors.to_vec(), &self.assigner.state)?;
            self.q_peak = self.q_peak.max(self.buffer.len());
            debug_assert!(self.buffer.len() <= self.cfg.q_max);
        }
        Ok(())
    }

    fn admit_one(&mut self) -> Result<(), EngineError> {
        let (v, entry) = self.buffer.extract_top()?;
        self.batch_members.push(v);
        self.batch_lists.push(entry.neighbors);
        let list = self.batch_lists.last().expect("just pushed");
        self.buffer.note_assigned(v, list, true, None, &self.assigner.state)?;
        self.batch_peak = self.batch_peak.max(self.batch_members.len());
        debug_assert!(self.batch_members.len() <= self.cfg.delta);
        Ok(())
    }

    fn evict_while_at_capacity(&mut self) -> Result<(), EngineError> {
        while self.buffer.len() == self.cfg.q_max && self.batch_members.len() < self.cfg.delta {
            self.admit_one()?;
        }
        Ok(())
    }

    fn flush_batch(&mut self) -> Result<(), EngineError> {
        let members = std::mem::take(&mut self.batch_members);
        let lists = std::mem::take(&mut self.batch_lists);
        self.assigner.log_batch(&members);
        self.assigner.flush_members(&members)?;
        self.assigner.finish_batch_log();
        // pending blocks are now known; reveal them to CMS counters
        for (v, list) in members.iter().zip(&lists) {
            let b = self.assigner.state.block_of(*v).expect("batch committed");
            self.buffer.note_block_revealed(list, b, &self.assigner.state)?;
        }
        for list in &lists {
            self.assigner.meter.sub(entry_bytes(list.len(), self.cfg.k, self.cfg.scoring.kind));
        }
        Ok(())
    }

    fn run(mut self, order: &StreamOrder) -> Result<RunResult, EngineError> {
        self.assigner.start_pass(0);
        for (v, neighbors) in self.assigner.g.stream(order) {
            self.on_streamed(v, neighbors)?;
            self.evict_while_at_capacity()?;
            if self.batch_members.len() == self.cfg.delta {
                self.flush_batch()?;
            }
        }
        while !self.buffer.is_empty() {
            self.admit_one()?;
            if self.batch_members.len() == self.cfg.delta {
                self.flush_batch()?;
            }
        }
        if !self.batch_members.is_empty() {
            self.flush_batch()?;
        }
        debug_assert!(self.assigner.state.is_complete());
        let stats = EngineStats {
            increase_key_calls: self.buffer.increase_key_calls,
            q_peak: self.q_peak,
            batch_peak: self.batch_peak,
            mem_peak_bytes: self.assigner.meter.peak(),
            force_assigned: self.assigner.force_assigned,
            hub_count: self.hub_count,
            final_cut: self.assigner.cut,
        };
        Ok(RunResult {
            state: self.assigner.state,
            batch_stats: self.assigner.batch_stats,
            stats,
        })
    }
}

/// Runs the initial streaming pass sequentially.
pub fn run_pass_one<F: Real>(
    g: &StreamGraph,
    order: &StreamOrder,
    cfg: &EngineConfig<F>,
) -> Result<RunResult, EngineError> {
    cfg.validate()?;
    SeqEngine::new(g, cfg)?.run(order)
}

/// One restream pass: consecutive stream-order batches are detached from
/// their blocks and repartitioned through the batch model path. The state
/// must be complete on entry and is complete again on exit.
pub fn run_restream<F: Real>(
    g: &StreamGraph,
    order: &StreamOrder,
    cfg: &EngineConfig<F>,
    result: &mut RunResult,
    pass: u32,
) -> Result<(), EngineError> {
    cfg.validate()?;
    assert!(result.state.is_complete(), "restream requires a complete assignment");
    let state = std::mem::replace(&mut result.state, PartitionState::new(0, 0, cfg.k, 0.0));
    let mut assigner = Assigner::new(g, cfg, state);
    assigner.cut = result.stats.final_cut;
    assigner.force_assigned = result.stats.force_assigned;
    assigner.start_pass(pass);

    for chunk in order.perm().chunks(cfg.delta) {
        assigner.meter.add(chunk.len() * std::mem::size_of::<NodeId>());
        // detach members, subtracting their settled edges from the cut;
        // each internal edge is subtracted exactly once because earlier
        // chunk members are already detached and skip the check
        for &v in chunk {
            let bv = assigner.state.block_of(v).expect("complete before detach");
            for e in g.neighbors(v) {
                if let Some(bu) = assigner.state.block_of(e.node) {
                    if bu != bv {
                        assigner.cut -= e.weight;
                    }
                }
            }
            assigner.state.unassign(v, g.node_weight(v));
        }
        assigner.log_batch(chunk);
        assigner.flush_members(chunk)?;
        assigner.finish_batch_log();
        assigner.meter.sub(chunk.len() * std::mem::size_of::<NodeId>());
    }
    debug_assert!(assigner.state.is_complete());

    result.state = assigner.state;
    result.batch_stats.append(&mut assigner.batch_stats);
    result.stats.mem_peak_bytes = result.stats.mem_peak_bytes.max(assigner.meter.peak());
    result.stats.force_assigned = assigner.force_assigned;
    result.stats.final_cut = assigner.cut;
    Ok(())
}

/// Full run: pass one (sequential or pipelined) plus any restream passes.
pub fn run<F: Real>(
    g: &StreamGraph,
    order: &StreamOrder,
    cfg: &EngineConfig<F>,
) -> Result<RunResult, EngineError> {
    cfg.validate()?;
    let mut result = if cfg.parallel {
        crate::pipeline::run_parallel(g, order, cfg)?
    } else {
        run_pass_one(g, order, cfg)?
    };
    for pass in 1..cfg.passes {
        run_restream(g, order, cfg, &mut result, pass)?;
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fennel::fennel_pass;
    use crate::metrics::{check_balance, edge_cut};
    use crate::synth;

    fn small_cfg(k: u32, q_max: usize, delta: usize) -> EngineConfig<f64> {
        let mut cfg = EngineConfig::new(k);
        cfg.q_max = q_max;
        cfg.delta = delta;
        cfg
    }

    fn assert_exactly_once(result: &RunResult, n: usize) {
        assert!(result.state.is_complete());
        assert_eq!(result.state.len(), n);
    }

    #[test]
    fn config_validation_rejects_zeroes() {
        let mut cfg = EngineConfig::<f64>::new(4);
        cfg.q_max = 0;
        assert!(cfg.validate().is_err());
        let mut cfg = EngineConfig::<f64>::new(4);
        cfg.delta = 0;
        assert!(cfg.validate().is_err());
        let mut cfg = EngineConfig::<f64>::new(0);
        cfg.k = 0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn capacity_one_engine_equals_fennel_pass() {
        for seed in 0..6 {
            let g = synth::random_graph(150, 450, seed);
            let order = StreamOrder::random(150, seed * 3 + 1);
            let cfg = small_cfg(4, 1, 1);
            let result = run(&g, &order, &cfg).unwrap();
            let fennel = fennel_pass::<f64>(&g, &order, 4, cfg.epsilon, None).unwrap();
            let (engine_cut, _) = edge_cut::<f64>(&g, &result.state).unwrap();
            let (fennel_cut, _) = edge_cut::<f64>(&g, &fennel).unwrap();
            assert_eq!(engine_cut, fennel_cut, "seed {seed}");
        }
    }

    #[test]
    fn hub_branch_assigns_immediately_and_updates_neighbors() {
        // star: center 0 with degree 6 > d_max = 4, satellites degree 1
        let edges: Vec<(u32, u32, u64)> = (1..=6).map(|v| (0u32, v, 1)).collect();
        let g = StreamGraph::from_edge_list(7, &edges, None).unwrap();
        // satellites first, center last
        let order = StreamOrder::from_perm(vec![1, 2, 3, 4, 5, 6, 0]).unwrap();
        let mut cfg = small_cfg(2, 100, 2);
        cfg.d_max = 4;
        let result = run(&g, &order, &cfg).unwrap();
        assert_exactly_once(&result, 7);
        assert_eq!(result.stats.hub_count, 1);
        // the hub placement raised all six buffered satellites
        assert!(result.stats.increase_key_calls >= 6);
    }

    #[test]
    fn increase_key_calls_bounded_by_2m() {
        for kind in [ScoreKind::Anr, ScoreKind::Haa, ScoreKind::Nss, ScoreKind::Cms, ScoreKind::Cbs]
        {
            let g = synth::random_graph(400, 1600, 3);
            let order = StreamOrder::random(400, 9);
            let mut cfg = small_cfg(4, 64, 16);
            cfg.scoring = cfg.scoring.with_kind(kind);
            let result = run(&g, &order, &cfg).unwrap();
            assert_exactly_once(&result, 400);
            assert!(
                result.stats.increase_key_calls <= 2 * g.m(),
                "{kind:?}: {} calls for m = {}",
                result.stats.increase_key_calls,
                g.m()
            );
        }
    }

    #[test]
    fn all_score_kinds_complete_and_balance() {
        let g = synth::random_graph(300, 1200, 7);
        let order = StreamOrder::random(300, 2);
        for kind in [ScoreKind::Anr, ScoreKind::Haa, ScoreKind::Nss, ScoreKind::Cms, ScoreKind::Cbs]
        {
            let mut cfg = small_cfg(8, 32, 8);
            cfg.scoring = cfg.scoring.with_kind(kind);
            let result = run(&g, &order, &cfg).unwrap();
            assert_exactly_once(&result, 300);
            assert!(result.stats.force_assigned > 0 || check_balance(&result.state));
        }
    }

    #[test]
    fn incremental_cut_matches_recomputation() {
        let g = synth::random_graph(250, 900, 13);
        let order = StreamOrder::random(250, 8);
        let mut cfg = small_cfg(4, 32, 8);
        cfg.passes = 3;
        let result = run(&g, &order, &cfg).unwrap();
        let (cut, _) = edge_cut::<f64>(&g, &result.state).unwrap();
        assert_eq!(result.stats.final_cut, cut);
        for stat in &result.batch_stats {
            assert!(stat.ier >= 0.0 && stat.ier <= 1.0);
        }
    }

    #[test]
    fn sequential_runs_are_deterministic() {
        let g = synth::random_graph(300, 1000, 21);
        let order = StreamOrder::random(300, 4);
        let cfg = small_cfg(8, 64, 16);
        let a = run(&g, &order, &cfg).unwrap();
        let b = run(&g, &order, &cfg).unwrap();
        for v in 0..300 {
            assert_eq!(a.state.block_of(v), b.state.block_of(v));
        }
    }

    #[test]
    fn restream_on_optimal_assignment_is_a_fixpoint() {
        // two disjoint 6-cliques already split perfectly across two blocks
        let mut edges = Vec::new();
        for base in [0u32, 6] {
            for i in 0..6 {
                for j in (i + 1)..6 {
                    edges.push((base + i, base + j, 1));
                }
            }
        }
        let g = StreamGraph::from_edge_list(12, &edges, None).unwrap();
        let blocks: Vec<BlockId> = (0..12).map(|v| u32::from(v >= 6)).collect();
        let state =
            PartitionState::from_assignment(&blocks, g.node_weights(), 2, 0.03).unwrap();
        let (cut_before, _) = edge_cut::<f64>(&g, &state).unwrap();
        assert_eq!(cut_before, 0);

        let cfg = small_cfg(2, 4, 6);
        let mut result = RunResult {
            state,
            batch_stats: Vec::new(),
            stats: EngineStats { final_cut: cut_before, ..Default::default() },
        };
        let order = StreamOrder::source(12);
        run_restream(&g, &order, &cfg, &mut result, 1).unwrap();
        let (cut_after, _) = edge_cut::<f64>(&g, &result.state).unwrap();
        assert_eq!(cut_after, 0);
        assert_eq!(result.stats.final_cut, 0);
        for v in 0..12u32 {
            assert_eq!(result.state.block_of(v), Some(blocks[v as usize]));
        }
    }

    #[test]
    fn restream_logs_batches_and_keeps_balance() {
        let g = synth::random_graph(200, 800, 31);
        let order = StreamOrder::random(200, 5);
        let mut cfg = small_cfg(4, 32, 16);
        cfg.passes = 2;
        let result = run(&g, &order, &cfg).unwrap();
        assert_exactly_once(&result, 200);
        assert!(check_balance(&result.state));
        let pass1 = result.batch_stats.iter().filter(|b| b.pass == 0).count();
        let pass2 = result.batch_stats.iter().filter(|b| b.pass == 1).count();
        assert!(pass1 > 0);
        assert_eq!(pass2, 200usize.div_ceil(16));
    }

    #[test]
    fn empty_graph_runs_cleanly() {
        let g = StreamGraph::from_edge_list(0, &[], None).unwrap();
        let order = StreamOrder::source(0);
        let cfg = small_cfg(4, 8, 4);
        let result = run(&g, &order, &cfg).unwrap();
        assert!(result.state.is_complete());
        assert!(result.batch_stats.is_empty());
        assert_eq!(result.ier_mean(), None);
    }

    #[test]
    fn q_larger_than_graph_defers_everything_to_drain() {
        let g = synth::random_graph(100, 300, 2);
        let order = StreamOrder::random(100, 7);
        let cfg = small_cfg(4, 1000, 10);
        let result = run(&g, &order, &cfg).unwrap();
        assert_exactly_once(&result, 100);
        assert_eq!(result.stats.q_peak, 100);
        assert_eq!(result.batch_stats.len(), 10);
    }
}
