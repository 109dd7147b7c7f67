//! Quality and locality measures: edge cut, balance, neighbor-to-neighbor
//! average ID distance (AID), and the internal edge ratio (IER) of a batch.
//!
//! All functions are pure over immutable inputs.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::graph::StreamGraph;
use crate::order::StreamOrder;
use crate::partition::PartitionState;
use crate::{real_from_u64, NodeId, Real};

#[derive(Debug, thiserror::Error)]
pub enum MetricsError {
    #[error("node {0} has no block assignment")]
    UnassignedNode(NodeId),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("serialization error: {0}")]
    Serialize(#[from] serde_json::Error),
}

/// Total weight of edges whose endpoints lie in different blocks, with each
/// undirected edge counted once, and its ratio to the total edge weight.
pub fn edge_cut<F: Real>(
    g: &StreamGraph,
    state: &PartitionState,
) -> Result<(u64, F), MetricsError> {
    let mut cut = 0u64;
    for v in 0..g.n() as NodeId {
        let bv = state.block_of(v).ok_or(MetricsError::UnassignedNode(v))?;
        for e in g.neighbors(v) {
            if e.node > v {
                let bu = state.block_of(e.node).ok_or(MetricsError::UnassignedNode(e.node))?;
                if bu != bv {
                    cut += e.weight;
                }
            }
        }
    }
    let ratio = if g.total_edge_weight() == 0 {
        F::zero()
    } else {
        real_from_u64::<F>(cut) / real_from_u64::<F>(g.total_edge_weight())
    };
    Ok((cut, ratio))
}

/// True iff every block weight is within the balance bound.
pub fn check_balance(state: &PartitionState) -> bool {
    state.max_block_weight() <= state.l_max()
}

/// Per-node AID values and their mean over all nodes.
#[derive(Debug, Clone)]
pub struct AidReport<F> {
    pub per_node: Vec<F>,
    pub mean: F,
}

/// Average gap between consecutive stream positions of each node's
/// neighbors. Nodes of degree <= 1 contribute 0 (the sum is empty); the mean
/// is taken over all nodes. Lower values mean higher stream locality.
pub fn aid<F: Real>(g: &StreamGraph, order: &StreamOrder) -> AidReport<F> {
    assert_eq!(order.len(), g.n(), "order built for a different graph");
    let mut per_node = Vec::with_capacity(g.n());
    let mut positions: Vec<usize> = Vec::new();
    for v in 0..g.n() as NodeId {
        let d = g.degree(v);
        if d < 2 {
            per_node.push(F::zero());
            continue;
        }
        positions.clear();
        positions.extend(g.neighbors(v).iter().map(|e| order.position_of(e.node)));
        positions.sort_unstable();
        let gaps: u64 = positions.windows(2).map(|w| (w[1] - w[0]) as u64).sum();
        per_node.push(real_from_u64::<F>(gaps) / real_from_u64::<F>(d as u64));
    }
    let mean = if per_node.is_empty() {
        F::zero()
    } else {
        per_node.iter().copied().sum::<F>() / real_from_u64::<F>(per_node.len() as u64)
    };
    AidReport { per_node, mean }
}

/// Internal edge ratio of a batch.
#[derive(Debug, Clone, Copy)]
pub struct BatchIer<F> {
    /// `2 * weight(induced edges) / sum of weighted degrees`, in [0, 1].
    pub value: F,
    /// Set when the batch has zero total weighted degree; `value` is 0 then.
    pub degenerate: bool,
}

/// Fraction of the batch members' incident edge weight that lies entirely
/// inside the batch.
pub fn ier<F: Real>(g: &StreamGraph, members: &[NodeId]) -> BatchIer<F> {
    let mut in_batch = vec![false; g.n()];
    for &v in members {
        in_batch[v as usize] = true;
    }
    let mut internal = 0u64;
    let mut degree_total = 0u64;
    for &v in members {
        for e in g.neighbors(v) {
            degree_total += e.weight;
            if in_batch[e.node as usize] && e.node > v {
                internal += e.weight;
            }
        }
    }
    if degree_total == 0 {
        return BatchIer { value: F::zero(), degenerate: true };
    }
    BatchIer {
        value: real_from_u64::<F>(2 * internal) / real_from_u64::<F>(degree_total),
        degenerate: false,
    }
}

/// Run report. Serialized as JSON by [`MetricsReport::write_json`]; the
/// key=value text form lists the same fields one per line.
///
/// Fields: `n`, `m` (undirected edge count), `k`, `epsilon`, `l_max`,
/// `cut_weight`, `cut_ratio` (cut over total edge weight), `max_block_weight`,
/// `balanced` (max block weight <= l_max), `aid_mean` (absent when no order
/// context), `ier_mean` (mean internal edge ratio over first-pass batches,
/// absent when no batches ran), `force_assigned` (nodes placed by the
/// infeasibility fallback; balance is not guaranteed when nonzero).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricsReport {
    pub n: usize,
    pub m: u64,
    pub k: u32,
    pub epsilon: f64,
    pub l_max: u64,
    pub cut_weight: u64,
    pub cut_ratio: f64,
    pub max_block_weight: u64,
    pub balanced: bool,
    pub aid_mean: Option<f64>,
    pub ier_mean: Option<f64>,
    pub force_assigned: u64,
}

impl MetricsReport {
    pub fn build(
        g: &StreamGraph,
        state: &PartitionState,
        aid_mean: Option<f64>,
        ier_mean: Option<f64>,
        force_assigned: u64,
    ) -> Result<Self, MetricsError> {
        let (cut_weight, cut_ratio) = edge_cut::<f64>(g, state)?;
        Ok(Self {
            n: g.n(),
            m: g.m(),
            k: state.k(),
            epsilon: state.epsilon(),
            l_max: state.l_max(),
            cut_weight,
            cut_ratio,
            max_block_weight: state.max_block_weight(),
            balanced: check_balance(state),
            aid_mean,
            ier_mean,
            force_assigned,
        })
    }

    /// Line-oriented `key=value` rendering.
    pub fn to_key_value_lines(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!("n={}\n", self.n));
        s.push_str(&format!("m={}\n", self.m));
        s.push_str(&format!("k={}\n", self.k));
        s.push_str(&format!("epsilon={}\n", self.epsilon));
        s.push_str(&format!("l_max={}\n", self.l_max));
        s.push_str(&format!("cut_weight={}\n", self.cut_weight));
        s.push_str(&format!("cut_ratio={}\n", self.cut_ratio));
        s.push_str(&format!("max_block_weight={}\n", self.max_block_weight));
        s.push_str(&format!("balanced={}\n", self.balanced));
        if let Some(a) = self.aid_mean {
            s.push_str(&format!("aid_mean={a}\n"));
        }
        if let Some(i) = self.ier_mean {
            s.push_str(&format!("ier_mean={i}\n"));
        }
        s.push_str(&format!("force_assigned={}\n", self.force_assigned));
        s
    }

    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<(), MetricsError> {
        let file = File::create(path)?;
        let mut w = BufWriter::new(file);
        serde_json::to_writer_pretty(&mut w, self)?;
        w.write_all(b"\n")?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::StreamGraph;
    use crate::partition::PartitionState;
    use approx::assert_abs_diff_eq;

    fn triangle() -> StreamGraph {
        StreamGraph::from_edge_list(3, &[(0, 1, 1), (0, 2, 1), (1, 2, 1)], None).unwrap()
    }

    #[test]
    fn cut_counts_crossing_edges_once() {
        let g = triangle();
        let state = PartitionState::from_assignment(&[0, 0, 1], &[1, 1, 1], 2, 1.0).unwrap();
        let (cut, ratio) = edge_cut::<f64>(&g, &state).unwrap();
        assert_eq!(cut, 2);
        assert_abs_diff_eq!(ratio, 2.0 / 3.0);
    }

    #[test]
    fn single_block_has_zero_cut() {
        let g = triangle();
        let state = PartitionState::from_assignment(&[0, 0, 0], &[1, 1, 1], 1, 0.0).unwrap();
        let (cut, ratio) = edge_cut::<f64>(&g, &state).unwrap();
        assert_eq!(cut, 0);
        assert_eq!(ratio, 0.0);
    }

    #[test]
    fn cut_reports_unassigned_node() {
        let g = triangle();
        let mut state = PartitionState::new(3, 3, 2, 0.0);
        state.assign(0, 0, 1);
        assert!(matches!(edge_cut::<f64>(&g, &state), Err(MetricsError::UnassignedNode(_))));
    }

    #[test]
    fn cut_invariant_under_block_relabeling() {
        let g = crate::synth::random_graph(60, 160, 5);
        let weights = vec![1u64; 60];
        let blocks: Vec<u32> = (0..60).map(|v| (v * 7 % 3) as u32).collect();
        let relabeled: Vec<u32> = blocks.iter().map(|b| [2, 0, 1][*b as usize]).collect();
        let s1 = PartitionState::from_assignment(&blocks, &weights, 3, 1.0).unwrap();
        let s2 = PartitionState::from_assignment(&relabeled, &weights, 3, 1.0).unwrap();
        assert_eq!(edge_cut::<f64>(&g, &s1).unwrap().0, edge_cut::<f64>(&g, &s2).unwrap().0);
    }

    #[test]
    fn balance_uses_ceiling_bound() {
        // n=10 unit weights, k=3, eps=0.03 -> l_max = 4
        let mut blocks = vec![0u32; 4];
        blocks.extend(vec![1u32; 3]);
        blocks.extend(vec![2u32; 3]);
        let weights = vec![1u64; 10];
        let state = PartitionState::from_assignment(&blocks, &weights, 3, 0.03).unwrap();
        assert_eq!(state.l_max(), 4);
        assert!(check_balance(&state));

        let mut blocks = vec![0u32; 5];
        blocks.extend(vec![1u32; 3]);
        blocks.extend(vec![2u32; 2]);
        let state = PartitionState::from_assignment(&blocks, &weights, 3, 0.03).unwrap();
        assert!(!check_balance(&state));
    }

    #[test]
    fn balance_degenerate_single_block() {
        let state = PartitionState::from_assignment(&[0, 0, 0], &[5, 7, 2], 1, 0.0).unwrap();
        assert!(check_balance(&state));
    }

    #[test]
    fn aid_path_graph_identity_order() {
        let g = StreamGraph::from_edge_list(3, &[(0, 1, 1), (1, 2, 1)], None).unwrap();
        let order = StreamOrder::source(3);
        let report = aid::<f64>(&g, &order);
        // node 1: neighbors at positions 0 and 2, gap 2, degree 2
        assert_abs_diff_eq!(report.per_node[1], 1.0);
        // degree-1 nodes contribute 0
        assert_eq!(report.per_node[0], 0.0);
        assert_abs_diff_eq!(report.mean, 1.0 / 3.0);
    }

    #[test]
    fn aid_gap_sum_invariant_under_reversal() {
        let g = crate::synth::random_graph(80, 240, 11);
        let order = StreamOrder::random(80, 4);
        let reversed =
            StreamOrder::from_perm(order.perm().iter().rev().copied().collect()).unwrap();
        let a = aid::<f64>(&g, &order);
        let b = aid::<f64>(&g, &reversed);
        for v in 0..g.n() {
            assert_abs_diff_eq!(a.per_node[v], b.per_node[v], epsilon = 1e-12);
        }
    }

    #[test]
    fn ier_closed_and_half_open_batches() {
        let g = triangle();
        let r = ier::<f64>(&g, &[0, 1, 2]);
        assert_abs_diff_eq!(r.value, 1.0);
        assert!(!r.degenerate);

        // batch {u, v} joined by one unit edge, each with one external edge
        let g = StreamGraph::from_edge_list(4, &[(0, 1, 1), (0, 2, 1), (1, 3, 1)], None).unwrap();
        let r = ier::<f64>(&g, &[0, 1]);
        assert_abs_diff_eq!(r.value, 0.5);
    }

    #[test]
    fn ier_zero_degree_batch_is_degenerate() {
        let g = StreamGraph::from_edge_list(3, &[(0, 1, 1)], None).unwrap();
        let r = ier::<f64>(&g, &[2]);
        assert!(r.degenerate);
        assert_eq!(r.value, 0.0);
    }

    #[test]
    fn report_round_trips_through_json() {
        let g = triangle();
        let state = PartitionState::from_assignment(&[0, 0, 1], &[1, 1, 1], 2, 1.0).unwrap();
        let report = MetricsReport::build(&g, &state, Some(0.5), None, 0).unwrap();
        let f = tempfile::NamedTempFile::new().unwrap();
        report.write_json(f.path()).unwrap();
        let text = std::fs::read_to_string(f.path()).unwrap();
        let back: MetricsReport = serde_json::from_str(&text).unwrap();
        assert_eq!(back.cut_weight, 2);
        assert!(report.to_key_value_lines().contains("cut_weight=2"));
    }
}
