//! METIS-format graph I/O and the node-stream view.
//!
//! Graphs are loaded eagerly into CSR form. The streaming engine only ever
//! consumes [`StreamGraph::stream`], but metrics and the batch model builder
//! need random-access adjacency, so the loader materializes the whole graph.
//! The streaming discipline is preserved at the engine API boundary.
//!
//! File formats:
//! - Graph: METIS adjacency format. Header `n m [fmt]` with fmt codes
//!   0 (plain), 1 (edge weights), 10 (node weights), 11 (both); `%` lines are
//!   comments; node IDs in the file are 1-indexed.
//! - Assignment: `n` lines, line `i` holds the block of node `i` (0-indexed).
//! - Order: see [`crate::order`].

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::order::StreamOrder;
use crate::partition::PartitionState;
use crate::{BlockId, EdgeWeight, NodeId, NodeWeight};

/// One adjacency entry: target node plus edge weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Neighbor {
    pub node: NodeId,
    pub weight: EdgeWeight,
}

#[derive(Debug, thiserror::Error)]
pub enum GraphError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed header on line {line}: {detail}")]
    MalformedHeader { line: usize, detail: String },
    #[error("unsupported fmt code {fmt} (supported: 0, 1, 10, 11)")]
    UnsupportedFormat { fmt: String },
    #[error("adjacency line count mismatch: header declares {declared} nodes, found {found} adjacency lines")]
    LineCountMismatch { declared: usize, found: usize },
    #[error("bad token '{token}' on line {line}")]
    BadToken { line: usize, token: String },
    #[error("edge endpoint {endpoint} out of range [1, {n}] on line {line}")]
    EndpointOutOfRange { line: usize, endpoint: u64, n: usize },
    #[error("self-loop at node {node} on line {line}")]
    SelfLoop { line: usize, node: u64 },
    #[error("parallel edge between nodes {u} and {v}")]
    ParallelEdge { u: u64, v: u64 },
    #[error("asymmetric edge: {u} lists {v} but {v} does not list {u}")]
    AsymmetricEdge { u: u64, v: u64 },
    #[error("edge weight mismatch between {u} and {v}: {w_uv} vs {w_vu}")]
    EdgeWeightMismatch { u: u64, v: u64, w_uv: EdgeWeight, w_vu: EdgeWeight },
    #[error("non-positive edge weight on line {line}")]
    BadEdgeWeight { line: usize },
    #[error("edge count mismatch: header declares m={declared}, adjacency lists imply m={found}")]
    EdgeCountMismatch { declared: u64, found: u64 },
    #[error("node {0} has no block assignment")]
    UnassignedNode(NodeId),
    #[error("assignment file has {found} lines, graph has {expected} nodes")]
    AssignmentLengthMismatch { expected: usize, found: usize },
}

/// An undirected graph with integer node and edge weights, stored in CSR form.
///
/// Invariants (enforced on construction): adjacency is symmetric with equal
/// weights on both directions, no self-loops, no parallel edges, all edge
/// weights positive, and the adjacency lengths sum to `2m`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StreamGraph {
    n: usize,
    m: u64,
    node_weights: Vec<NodeWeight>,
    xadj: Vec<usize>,
    adj: Vec<Neighbor>,
    total_node_weight: u64,
    total_edge_weight: u64,
    has_node_weights: bool,
    has_edge_weights: bool,
}

impl StreamGraph {
    /// Builds a graph from an undirected edge list given as `(u, v, weight)`
    /// with each edge listed once. Node weights default to 1.
    pub fn from_edge_list(
        n: usize,
        edges: &[(NodeId, NodeId, EdgeWeight)],
        node_weights: Option<Vec<NodeWeight>>,
    ) -> Result<Self, GraphError> {
        let has_node_weights = node_weights.is_some();
        let node_weights = node_weights.unwrap_or_else(|| vec![1; n]);
        assert_eq!(node_weights.len(), n, "node weight vector length");

        let mut lists: Vec<Vec<Neighbor>> = vec![Vec::new(); n];
        let mut has_edge_weights = false;
        for &(u, v, w) in edges {
            if u == v {
                return Err(GraphError::SelfLoop { line: 0, node: u as u64 + 1 });
            }
            if u as usize >= n || v as usize >= n {
                return Err(GraphError::EndpointOutOfRange {
                    line: 0,
                    endpoint: u.max(v) as u64 + 1,
                    n,
                });
            }
            if w == 0 {
                return Err(GraphError::BadEdgeWeight { line: 0 });
            }
            has_edge_weights |= w != 1;
            lists[u as usize].push(Neighbor { node: v, weight: w });
            lists[v as usize].push(Neighbor { node: u, weight: w });
        }
        let m = edges.len() as u64;
        Self::from_lists(n, m, node_weights, lists, has_node_weights, has_edge_weights)
    }

    fn from_lists(
        n: usize,
        m: u64,
        node_weights: Vec<NodeWeight>,
        lists: Vec<Vec<Neighbor>>,
        has_node_weights: bool,
        has_edge_weights: bool,
    ) -> Result<Self, GraphError> {
        let found: u64 = lists.iter().map(|l| l.len() as u64).sum();
        if found != 2 * m {
            return Err(GraphError::EdgeCountMismatch { declared: m, found: found / 2 });
        }
        validate_symmetry(&lists)?;

        let mut xadj = Vec::with_capacity(n + 1);
        let mut adj = Vec::with_capacity(found as usize);
        xadj.push(0);
        for list in &lists {
            adj.extend_from_slice(list);
            xadj.push(adj.len());
        }
        let total_node_weight = node_weights.iter().sum();
        let total_edge_weight = adj.iter().map(|e| e.weight).sum::<u64>() / 2;
        Ok(Self {
            n,
            m,
            node_weights,
            xadj,
            adj,
            total_node_weight,
            total_edge_weight,
            has_node_weights,
            has_edge_weights,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of undirected edges.
    pub fn m(&self) -> u64 {
        self.m
    }

    pub fn node_weight(&self, v: NodeId) -> NodeWeight {
        self.node_weights[v as usize]
    }

    pub fn node_weights(&self) -> &[NodeWeight] {
        &self.node_weights
    }

    pub fn neighbors(&self, v: NodeId) -> &[Neighbor] {
        &self.adj[self.xadj[v as usize]..self.xadj[v as usize + 1]]
    }

    pub fn degree(&self, v: NodeId) -> usize {
        self.xadj[v as usize + 1] - self.xadj[v as usize]
    }

    /// Weighted degree: total weight of incident edges.
    pub fn weighted_degree(&self, v: NodeId) -> u64 {
        self.neighbors(v).iter().map(|e| e.weight).sum()
    }

    pub fn max_degree(&self) -> usize {
        (0..self.n).map(|v| self.degree(v as NodeId)).max().unwrap_or(0)
    }

    /// Total node weight `c(V)`.
    pub fn total_node_weight(&self) -> u64 {
        self.total_node_weight
    }

    /// Total edge weight with each undirected edge counted once.
    pub fn total_edge_weight(&self) -> u64 {
        self.total_edge_weight
    }

    pub fn has_node_weights(&self) -> bool {
        self.has_node_weights
    }

    pub fn has_edge_weights(&self) -> bool {
        self.has_edge_weights
    }

    /// Streams each node exactly once in the given order, with its full
    /// neighbor list. Panics if the order was built for a different `n`.
    pub fn stream<'a>(
        &'a self,
        order: &'a StreamOrder,
    ) -> impl Iterator<Item = (NodeId, &'a [Neighbor])> + 'a {
        assert_eq!(order.len(), self.n, "stream order built for a different graph");
        order.perm().iter().map(move |&v| (v, self.neighbors(v)))
    }

    /// Parses a METIS graph file.
    pub fn load_metis(path: impl AsRef<Path>) -> Result<Self, GraphError> {
        let file = File::open(path)?;
        let reader = BufReader::new(file);
        let mut lines = reader.lines();

        let mut line_no = 0usize;
        let header = loop {
            let line = match lines.next() {
                Some(l) => l?,
                None => {
                    return Err(GraphError::MalformedHeader {
                        line: line_no,
                        detail: "empty file".into(),
                    })
                }
            };
            line_no += 1;
            if !line.trim_start().starts_with('%') {
                break line;
            }
        };
        let header_line = line_no;
        let tokens: Vec<&str> = header.split_whitespace().collect();
        if tokens.len() < 2 || tokens.len() > 3 {
            return Err(GraphError::MalformedHeader {
                line: header_line,
                detail: format!("expected 'n m [fmt]', got {} tokens", tokens.len()),
            });
        }
        let n: usize = tokens[0].parse().map_err(|_| GraphError::MalformedHeader {
            line: header_line,
            detail: format!("bad node count '{}'", tokens[0]),
        })?;
        let m: u64 = tokens[1].parse().map_err(|_| GraphError::MalformedHeader {
            line: header_line,
            detail: format!("bad edge count '{}'", tokens[1]),
        })?;
        let (has_node_weights, has_edge_weights) = match tokens.get(2) {
            None => (false, false),
            Some(f) => match f.parse::<u32>() {
                Ok(0) => (false, false),
                Ok(1) => (false, true),
                Ok(10) => (true, false),
                Ok(11) => (true, true),
                _ => return Err(GraphError::UnsupportedFormat { fmt: f.to_string() }),
            },
        };

        let mut node_weights = Vec::with_capacity(n);
        let mut lists: Vec<Vec<Neighbor>> = Vec::with_capacity(n);
        for line in lines {
            let line = line?;
            line_no += 1;
            if line.trim_start().starts_with('%') {
                continue;
            }
            if lists.len() == n {
                // Any extra adjacency line is a count mismatch; tally the rest.
                return Err(GraphError::LineCountMismatch { declared: n, found: n + 1 });
            }
            let v = lists.len() as u64; // 0-indexed id of this node
            let mut tokens = line.split_whitespace();
            let weight = if has_node_weights {
                let t = tokens.next().ok_or_else(|| GraphError::BadToken {
                    line: line_no,
                    token: "<missing node weight>".into(),
                })?;
                t.parse::<NodeWeight>().map_err(|_| GraphError::BadToken {
                    line: line_no,
                    token: t.to_string(),
                })?
            } else {
                1
            };
            let mut list = Vec::new();
            loop {
                let Some(t) = tokens.next() else { break };
                let endpoint: u64 = t.parse().map_err(|_| GraphError::BadToken {
                    line: line_no,
                    token: t.to_string(),
                })?;
                if endpoint < 1 || endpoint > n as u64 {
                    return Err(GraphError::EndpointOutOfRange { line: line_no, endpoint, n });
                }
                if endpoint == v + 1 {
                    return Err(GraphError::SelfLoop { line: line_no, node: endpoint });
                }
                let w = if has_edge_weights {
                    let t = tokens.next().ok_or_else(|| GraphError::BadToken {
                        line: line_no,
                        token: "<missing edge weight>".into(),
                    })?;
                    let w: u64 = t.parse().map_err(|_| GraphError::BadToken {
                        line: line_no,
                        token: t.to_string(),
                    })?;
                    if w == 0 {
                        return Err(GraphError::BadEdgeWeight { line: line_no });
                    }
                    w
                } else {
                    1
                };
                list.push(Neighbor { node: (endpoint - 1) as NodeId, weight: w });
            }
            node_weights.push(weight);
            lists.push(list);
        }
        if lists.len() != n {
            return Err(GraphError::LineCountMismatch { declared: n, found: lists.len() });
        }
        Self::from_lists(n, m, node_weights, lists, has_node_weights, has_edge_weights)
    }

    /// Writes the graph back in METIS format. Debug facility used by the
    /// round-trip tests; output reloads to an identical graph.
    pub fn write_metis(&self, path: impl AsRef<Path>) -> Result<(), GraphError> {
        let file = File::create(path)?;
        let mut w = BufWriter::new(file);
        let fmt = match (self.has_node_weights, self.has_edge_weights) {
            (false, false) => None,
            (false, true) => Some("1"),
            (true, false) => Some("10"),
            (true, true) => Some("11"),
        };
        match fmt {
            Some(f) => writeln!(w, "{} {} {}", self.n, self.m, f)?,
            None => writeln!(w, "{} {}", self.n, self.m)?,
        }
        let mut line = String::new();
        for v in 0..self.n {
            line.clear();
            if self.has_node_weights {
                line.push_str(&self.node_weights[v].to_string());
            }
            for e in self.neighbors(v as NodeId) {
                if !line.is_empty() {
                    line.push(' ');
                }
                line.push_str(&(e.node + 1).to_string());
                if self.has_edge_weights {
                    line.push(' ');
                    line.push_str(&e.weight.to_string());
                }
            }
            writeln!(w, "{line}")?;
        }
        Ok(())
    }
}

fn validate_symmetry(lists: &[Vec<Neighbor>]) -> Result<(), GraphError> {
    // Sorted copies give O(m log d) duplicate and reverse-edge checks.
    let sorted: Vec<Vec<Neighbor>> = lists
        .iter()
        .map(|l| {
            let mut s = l.clone();
            s.sort_by_key(|e| e.node);
            s
        })
        .collect();
    for (u, list) in sorted.iter().enumerate() {
        for pair in list.windows(2) {
            if pair[0].node == pair[1].node {
                return Err(GraphError::ParallelEdge {
                    u: u as u64 + 1,
                    v: pair[0].node as u64 + 1,
                });
            }
        }
        for e in list {
            let back = &sorted[e.node as usize];
            match back.binary_search_by_key(&(u as NodeId), |x| x.node) {
                Err(_) => {
                    return Err(GraphError::AsymmetricEdge {
                        u: u as u64 + 1,
                        v: e.node as u64 + 1,
                    })
                }
                Ok(i) => {
                    if back[i].weight != e.weight {
                        return Err(GraphError::EdgeWeightMismatch {
                            u: u as u64 + 1,
                            v: e.node as u64 + 1,
                            w_uv: e.weight,
                            w_vu: back[i].weight,
                        });
                    }
                }
            }
        }
    }
    Ok(())
}

/// Writes the assignment file: `n` lines, line `i` holds the block of node `i`.
pub fn write_assignment(state: &PartitionState, path: impl AsRef<Path>) -> Result<(), GraphError> {
    let mut out = String::with_capacity(state.len() * 2);
    for v in 0..state.len() {
        match state.block_of(v as NodeId) {
            Some(b) => {
                out.push_str(&b.to_string());
                out.push('\n');
            }
            None => return Err(GraphError::UnassignedNode(v as NodeId)),
        }
    }
    let file = File::create(path)?;
    let mut w = BufWriter::new(file);
    w.write_all(out.as_bytes())?;
    Ok(())
}

/// Reads an assignment file for a graph with `n` nodes.
pub fn read_assignment(path: impl AsRef<Path>, n: usize) -> Result<Vec<BlockId>, GraphError> {
    let file = File::open(path)?;
    let reader = BufReader::new(file);
    let mut blocks = Vec::with_capacity(n);
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        blocks.push(t.parse::<BlockId>().map_err(|_| GraphError::BadToken {
            line: i + 1,
            token: t.to_string(),
        })?);
    }
    if blocks.len() != n {
        return Err(GraphError::AssignmentLengthMismatch { expected: n, found: blocks.len() });
    }
    Ok(blocks)
}
