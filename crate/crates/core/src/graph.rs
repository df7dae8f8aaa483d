//! Undirected communication graphs between nodes.
//!
//! Edge-list text format: one edge per line as `i j` (zero-based), `#` starts
//! a comment, blank lines are ignored.

use std::collections::{BTreeSet, VecDeque};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("graph needs at least 2 nodes, got {0}")]
    TooFewNodes(usize),
    #[error("edge ({0},{1}) is a self-loop")]
    SelfLoop(usize, usize),
    #[error("edge ({0},{1}) references a node outside [0,{2})")]
    IndexOutOfRange(usize, usize, usize),
    #[error("edge ({0},{1}) listed more than once")]
    DuplicateEdge(usize, usize),
    #[error("graph is not connected")]
    Disconnected,
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
}

impl GraphError {
    pub fn kind(&self) -> &'static str {
        match self {
            GraphError::Disconnected => "Disconnected",
            GraphError::Parse { .. } => "ParseError",
            _ => "InvalidGraph",
        }
    }
}

/// Static undirected simple graph on nodes `0..n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphTopology {
    n: usize,
    edges: BTreeSet<(usize, usize)>,
    adjacency: Vec<Vec<usize>>,
}

impl GraphTopology {
    /// Builds a graph, rejecting self-loops, duplicates and out-of-range
    /// indices. Connectivity is not required here; see [`check_connected`].
    pub fn new(n: usize, edges: &[(usize, usize)]) -> Result<Self, GraphError> {
        if n < 2 {
            return Err(GraphError::TooFewNodes(n));
        }
        let mut set = BTreeSet::new();
        for &(i, j) in edges {
            if i >= n || j >= n {
                return Err(GraphError::IndexOutOfRange(i, j, n));
            }
            if i == j {
                return Err(GraphError::SelfLoop(i, j));
            }
            let key = (i.min(j), i.max(j));
            if !set.insert(key) {
                return Err(GraphError::DuplicateEdge(i, j));
            }
        }
        let mut adjacency = vec![Vec::new(); n];
        for &(i, j) in &set {
            adjacency[i].push(j);
            adjacency[j].push(i);
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        Ok(Self {
            n,
            edges: set,
            adjacency,
        })
    }

    /// Like [`GraphTopology::new`] but also requires connectivity.
    pub fn connected(n: usize, edges: &[(usize, usize)]) -> Result<Self, GraphError> {
        let g = Self::new(n, edges)?;
        if !check_connected(&g) {
            return Err(GraphError::Disconnected);
        }
        Ok(g)
    }

    /// Ring `0-1-...-(n-1)-0`. For `n = 2` this is the single edge.
    pub fn cycle(n: usize) -> Result<Self, GraphError> {
        if n < 2 {
            return Err(GraphError::TooFewNodes(n));
        }
        let mut edges: Vec<_> = (0..n - 1).map(|i| (i, i + 1)).collect();
        if n > 2 {
            edges.push((n - 1, 0));
        }
        Self::new(n, &edges)
    }

    pub fn path(n: usize) -> Result<Self, GraphError> {
        if n < 2 {
            return Err(GraphError::TooFewNodes(n));
        }
        let edges: Vec<_> = (0..n - 1).map(|i| (i, i + 1)).collect();
        Self::new(n, &edges)
    }

    pub fn complete(n: usize) -> Result<Self, GraphError> {
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                edges.push((i, j));
            }
        }
        Self::new(n, &edges)
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    /// Edges as `(i, j)` with `i < j`, in ascending order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.edges.contains(&(i.min(j), i.max(j)))
    }

    /// Sorted neighbor list of `i` (excluding `i`).
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.adjacency[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adjacency[i].len()
    }

    pub fn max_degree(&self) -> usize {
        self.adjacency.iter().map(Vec::len).max().unwrap_or(0)
    }
}

/// Breadth-first reachability from node 0.
pub fn check_connected(g: &GraphTopology) -> bool {
    let mut seen = vec![false; g.n];
    let mut queue = VecDeque::from([0usize]);
    seen[0] = true;
    let mut reached = 1;
    while let Some(u) = queue.pop_front() {
        for &w in g.neighbors(u) {
            if !seen[w] {
                seen[w] = true;
                reached += 1;
                queue.push_back(w);
            }
        }
    }
    reached == g.n
}

/// Parses an edge list. When `n` is `None` the node count is one past the
/// largest index seen.
pub fn parse_edge_list(text: &str, n: Option<usize>) -> Result<GraphTopology, GraphError> {
    let mut edges = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 2 {
            return Err(GraphError::Parse {
                line: line_no,
                reason: format!("expected two node indices, found {} fields", fields.len()),
            });
        }
        let parse = |s: &str| {
            s.parse::<usize>().map_err(|_| GraphError::Parse {
                line: line_no,
                reason: format!("invalid node index {s:?}"),
            })
        };
        edges.push((parse(fields[0])?, parse(fields[1])?));
    }
    let inferred = edges.iter().map(|&(i, j)| i.max(j) + 1).max().unwrap_or(0);
    GraphTopology::new(n.unwrap_or(inferred), &edges)
}
