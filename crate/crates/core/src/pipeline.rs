//! Three-role parallel execution of the first streaming pass.
//!
//! An I/O reader parses the stream into owned `ParsedLine`s, a buffer
//! handler maintains the priority buffer and emits `PartitionTask`s, and a
//! partition worker executes the tasks and owns the partition state. The
//! roles are connected by bounded blocking queues, so memory stays bounded
//! through backpressure and shutdown propagates by closing channels.
//!
//! To keep scoring consistent while partitioning overlaps buffering, a node
//! counts as assigned for buffer scoring as soon as its task is enqueued;
//! committed blocks reach the handler through a lagging atomic table that
//! only the worker writes. Batch composition may therefore differ from the
//! sequential schedule, but exactly-once assignment, capacity, and balance
//! hold unchanged.

use std::sync::atomic::{AtomicU32, Ordering};
use std::sync::mpsc::{sync_channel, Receiver, SyncSender};
use std::thread;

use crate::engine::{
    entry_bytes, Assigner, BlockLookup, BufferController, EngineConfig, EngineError, EngineStats,
    MemMeter, PerBlockMode, RunResult,
};
use crate::graph::{Neighbor, StreamGraph};
use crate::order::StreamOrder;
use crate::partition::PartitionState;
use crate::{BlockId, NodeId, Real};

/// One parsed stream element.
#[derive(Debug, Clone)]
pub struct ParsedLine {
    pub node: NodeId,
    pub neighbors: Vec<Neighbor>,
}

impl ParsedLine {
    pub fn degree(&self) -> usize {
        self.neighbors.len()
    }
}

/// Work order for the partition worker.
#[derive(Debug)]
pub enum PartitionTask {
    /// A hub to place immediately; carries its neighbor snapshot.
    Single { seq: u64, node: NodeId, neighbors: Vec<Neighbor> },
    /// A finished batch to partition jointly.
    Batch { seq: u64, members: Vec<NodeId> },
}

impl PartitionTask {
    pub fn seq(&self) -> u64 {
        match self {
            Self::Single { seq, .. } | Self::Batch { seq, .. } => *seq,
        }
    }
}

const UNASSIGNED: u32 = u32::MAX;

/// Committed blocks published by the worker, read by the handler. Values
/// may lag behind the worker; once set they never change within a pass.
struct AtomicBlockTable {
    blocks: Vec<AtomicU32>,
}

impl AtomicBlockTable {
    fn new(n: usize) -> Self {
        Self { blocks: (0..n).map(|_| AtomicU32::new(UNASSIGNED)).collect() }
    }

    fn publish(&self, v: NodeId, b: BlockId) {
        self.blocks[v as usize].store(b, Ordering::Release);
    }
}

impl BlockLookup for AtomicBlockTable {
    fn committed_block(&self, v: NodeId) -> Option<BlockId> {
        match self.blocks[v as usize].load(Ordering::Acquire) {
            UNASSIGNED => None,
            b => Some(b),
        }
    }
}

struct HandlerOut {
    increase_key_calls: u64,
    q_peak: usize,
    batch_peak: usize,
    mem_peak: usize,
    tasks_emitted: u64,
}

struct WorkerOut {
    state: PartitionState,
    batch_stats: Vec<crate::engine::BatchStat>,
    cut: u64,
    force_assigned: u64,
    mem_peak: usize,
    hub_count: u64,
    tasks_executed: u64,
}

fn handler_loop<F: Real>(
    n: usize,
    cfg: &EngineConfig<F>,
    table: &AtomicBlockTable,
    line_rx: Receiver<ParsedLine>,
    task_tx: SyncSender<PartitionTask>,
) -> Result<HandlerOut, EngineError> {
    let mut buffer =
        BufferController::new(n, cfg.k, cfg.effective_scoring(), cfg.disc_factor, PerBlockMode::Lazy)?;
    let mut meter = MemMeter::default();
    let mut batch: Vec<NodeId> = Vec::with_capacity(cfg.delta);
    let mut seq = 0u64;
    let mut q_peak = 0usize;
    let mut batch_peak = 0usize;
    let kind = cfg.scoring.kind;

    let emit = |task: PartitionTask, seq: &mut u64| -> bool {
        *seq += 1;
        task_tx.send(task).is_ok()
    };

    let admit_one = |buffer: &mut BufferController<F>,
                         batch: &mut Vec<NodeId>,
                         meter: &mut MemMeter,
                         batch_peak: &mut usize|
     -> Result<(), EngineError> {
        let (v, entry) = buffer.extract_top()?;
        buffer.note_assigned(v, &entry.neighbors, true, None, table)?;
        meter.sub(entry_bytes(entry.neighbors.len(), cfg.k, kind));
        meter.add(std::mem::size_of::<NodeId>());
        batch.push(v);
        *batch_peak = (*batch_peak).max(batch.len());
        Ok(())
    };

    let mut worker_alive = true;
    while let Ok(line) = line_rx.recv() {
        if line.neighbors.len() as u32 > cfg.d_max {
            // assigned-for-scoring before the task is enqueued
            buffer.note_assigned(line.node, &line.neighbors, false, None, table)?;
            if !emit(
                PartitionTask::Single { seq, node: line.node, neighbors: line.neighbors },
                &mut seq,
            ) {
                worker_alive = false;
                break;
            }
        } else {
            meter.add(entry_bytes(line.neighbors.len(), cfg.k, kind));
            buffer.insert_streamed(line.node, line.neighbors, table)?;
            q_peak = q_peak.max(buffer.len());
        }
        while buffer.len() == cfg.q_max && batch.len() < cfg.delta {
            admit_one(&mut buffer, &mut batch, &mut meter, &mut batch_peak)?;
        }
        if batch.len() == cfg.delta {
            meter.sub(batch.len() * std::mem::size_of::<NodeId>());
            if !emit(PartitionTask::Batch { seq, members: std::mem::take(&mut batch) }, &mut seq) {
                worker_alive = false;
                break;
            }
        }
    }
    if worker_alive {
        while !buffer.is_empty() {
            admit_one(&mut buffer, &mut batch, &mut meter, &mut batch_peak)?;
            if batch.len() == cfg.delta {
                meter.sub(batch.len() * std::mem::size_of::<NodeId>());
                if !emit(
                    PartitionTask::Batch { seq, members: std::mem::take(&mut batch) },
                    &mut seq,
                ) {
                    break;
                }
            }
        }
        if !batch.is_empty() {
            meter.sub(batch.len() * std::mem::size_of::<NodeId>());
            let _ = emit(PartitionTask::Batch { seq, members: std::mem::take(&mut batch) }, &mut seq);
        }
    }
    Ok(HandlerOut {
        increase_key_calls: buffer.increase_key_calls,
        q_peak,
        batch_peak,
        mem_peak: meter.peak(),
        tasks_emitted: seq,
    })
}

fn worker_loop<F: Real>(
    g: &StreamGraph,
    cfg: &EngineConfig<F>,
    table: &AtomicBlockTable,
    task_rx: Receiver<PartitionTask>,
) -> Result<WorkerOut, EngineError> {
    let state = PartitionState::new(g.n(), g.total_node_weight(), cfg.k, cfg.epsilon);
    let mut assigner = Assigner::new(g, cfg, state);
    assigner.start_pass(0);
    let mut hub_count = 0u64;
    let mut last_seq: Option<u64> = None;
    let mut tasks_executed = 0u64;
    while let Ok(task) = task_rx.recv() {
        // tasks arrive in strictly increasing sequence order over the FIFO
        if let Some(prev) = last_seq {
            assert!(task.seq() > prev, "task order violated: {} after {prev}", task.seq());
        }
        last_seq = Some(task.seq());
        tasks_executed += 1;
        match task {
            PartitionTask::Single { node, neighbors, .. } => {
                let b = assigner.assign_single(node, &neighbors);
                table.publish(node, b);
                hub_count += 1;
            }
            PartitionTask::Batch { members, .. } => {
                assigner.log_batch(&members);
                assigner.flush_members(&members)?;
                assigner.finish_batch_log();
                for &v in &members {
                    table.publish(v, assigner.state.block_of(v).expect("batch committed"));
                }
            }
        }
    }
    Ok(WorkerOut {
        state: assigner.state,
        batch_stats: assigner.batch_stats,
        cut: assigner.cut,
        force_assigned: assigner.force_assigned,
        mem_peak: assigner.meter.peak(),
        hub_count,
        tasks_executed,
    })
}

/// Runs pass one with the three concurrent roles. Functionally equivalent
/// to the sequential pass (exactly-once, capacity, balance); batch
/// composition may differ.
pub fn run_parallel<F: Real>(
    g: &StreamGraph,
    order: &StreamOrder,
    cfg: &EngineConfig<F>,
) -> Result<RunResult, EngineError> {
    cfg.validate()?;
    if cfg.input_queue_cap < 1 || cfg.task_queue_cap < 1 {
        return Err(EngineError::Config("queue capacities must be >= 1".into()));
    }
    let table = AtomicBlockTable::new(g.n());
    let (line_tx, line_rx) = sync_channel::<ParsedLine>(cfg.input_queue_cap);
    let (task_tx, task_rx) = sync_channel::<PartitionTask>(cfg.task_queue_cap);

    let (reader_res, handler_res, worker_res) = thread::scope(|s| {
        let table_ref = &table;
        let reader = s.spawn(move || {
            for (v, neighbors) in g.stream(order) {
                let line = ParsedLine { node: v, neighbors: neighbors.to_vec() };
                if line_tx.send(line).is_err() {
                    return; // downstream failed; its error surfaces at join
                }
            }
        });
        let handler = s.spawn(move || handler_loop(g.n(), cfg, table_ref, line_rx, task_tx));
        let worker = s.spawn(move || worker_loop(g, cfg, table_ref, task_rx));
        (
            reader.join().map_err(|_| EngineError::Pipeline("reader panicked".into())),
            handler.join().map_err(|_| EngineError::Pipeline("handler panicked".into())),
            worker.join().map_err(|_| EngineError::Pipeline("worker panicked".into())),
        )
    });

    let worker_out = worker_res??;
    let handler_out = handler_res??;
    reader_res?;

    if !worker_out.state.is_complete() {
        return Err(EngineError::Pipeline(format!(
            "incomplete assignment: {} of {} nodes",
            worker_out.state.num_assigned(),
            worker_out.state.len()
        )));
    }
    debug_assert_eq!(handler_out.tasks_emitted, worker_out.tasks_executed);

    let stats = EngineStats {
        increase_key_calls: handler_out.increase_key_calls,
        q_peak: handler_out.q_peak,
        batch_peak: handler_out.batch_peak,
        // the roles run concurrently; the sum of per-role peaks bounds the
        // combined footprint
        mem_peak_bytes: handler_out.mem_peak + worker_out.mem_peak,
        force_assigned: worker_out.force_assigned,
        hub_count: worker_out.hub_count,
        final_cut: worker_out.cut,
    };
    Ok(RunResult { state: worker_out.state, batch_stats: worker_out.batch_stats, stats })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{check_balance, edge_cut};
    use crate::synth;

    fn cfg(k: u32, q_max: usize, delta: usize) -> EngineConfig<f64> {
        let mut cfg = EngineConfig::new(k);
        cfg.q_max = q_max;
        cfg.delta = delta;
        cfg.parallel = true;
        cfg
    }

    #[test]
    fn tiny_graph_minimal_queues_complete() {
        let g = synth::random_graph(20, 40, 1);
        let order = StreamOrder::source(20);
        let mut c = cfg(2, 2, 2);
        c.input_queue_cap = 1;
        c.task_queue_cap = 1;
        let result = run_parallel(&g, &order, &c).unwrap();
        assert!(result.state.is_complete());
        assert!(check_balance(&result.state));
    }

    #[test]
    fn parallel_matches_sequential_invariants() {
        for seed in 0..5 {
            let g = synth::random_graph(400, 1600, seed);
            let order = StreamOrder::random(400, seed + 50);
            let c = cfg(8, 64, 16);
            let par = run_parallel(&g, &order, &c).unwrap();
            assert!(par.state.is_complete());
            assert!(par.stats.force_assigned > 0 || check_balance(&par.state));
            let (cut, _) = edge_cut::<f64>(&g, &par.state).unwrap();
            assert_eq!(par.stats.final_cut, cut);
        }
    }

    #[test]
    fn parallel_handles_hubs_and_cms() {
        let (g, _) = synth::planted_partition(
            &synth::PlantedConfig::new(600, 6, 2400, 10.0 / 11.0, 3).with_hubs(1, 80),
        );
        let order = StreamOrder::random(600, 9);
        let mut c = cfg(4, 64, 32);
        c.d_max = 50;
        c.scoring = c.scoring.with_kind(crate::score::ScoreKind::Cms);
        let result = run_parallel(&g, &order, &c).unwrap();
        assert!(result.state.is_complete());
        assert!(result.stats.hub_count >= 6);
    }

    #[test]
    fn empty_graph_parallel() {
        let g = crate::graph::StreamGraph::from_edge_list(0, &[], None).unwrap();
        let order = StreamOrder::source(0);
        let result = run_parallel(&g, &order, &cfg(2, 4, 4)).unwrap();
        assert!(result.state.is_complete());
    }
}
