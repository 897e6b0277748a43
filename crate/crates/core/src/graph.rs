//! Finite graphs with a distinguished sink standing in for infinity.

use std::collections::{HashMap, VecDeque};

use serde::Serialize;
use thiserror::Error;

pub type VertexId = usize;
pub type EdgeId = usize;

/// Largest vertex count a generator will produce.
pub const MAX_VERTICES: usize = 20_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("self-loop at vertex {0}")]
    SelfLoop(VertexId),
    #[error("vertex {vertex} out of range (graph has {count} vertices)")]
    VertexOutOfRange { vertex: VertexId, count: usize },
    #[error("graph would need {requested} vertices, capacity is {limit}")]
    Capacity { requested: u128, limit: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// Undirected multigraph with stable edge ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteGraph {
    edges: Vec<(VertexId, VertexId)>,
    adjacency: Vec<Vec<EdgeId>>,
}

impl FiniteGraph {
    pub fn with_vertices(n: usize) -> Self {
        Self {
            edges: Vec::new(),
            adjacency: vec![Vec::new(); n],
        }
    }

    pub fn from_edges(n: usize, edges: &[(VertexId, VertexId)]) -> Result<Self, GraphError> {
        let mut g = Self::with_vertices(n);
        for &(u, v) in edges {
            g.add_edge(u, v)?;
        }
        Ok(g)
    }

    /// Appends an edge and returns its id. Parallel edges get distinct ids.
    pub fn add_edge(&mut self, u: VertexId, v: VertexId) -> Result<EdgeId, GraphError> {
        if u == v {
            return Err(GraphError::SelfLoop(u));
        }
        for w in [u, v] {
            if w >= self.adjacency.len() {
                return Err(GraphError::VertexOutOfRange {
                    vertex: w,
                    count: self.adjacency.len(),
                });
            }
        }
        let id = self.edges.len();
        self.edges.push((u, v));
        self.adjacency[u].push(id);
        self.adjacency[v].push(id);
        Ok(id)
    }

    pub fn vertex_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(VertexId, VertexId)] {
        &self.edges
    }

    pub fn endpoints(&self, e: EdgeId) -> (VertexId, VertexId) {
        self.edges[e]
    }

    pub fn incident(&self, v: VertexId) -> &[EdgeId] {
        &self.adjacency[v]
    }

    pub fn degree(&self, v: VertexId) -> usize {
        self.adjacency[v].len()
    }

    /// The endpoint of `e` that is not `v`.
    #[inline]
    pub fn other_end(&self, e: EdgeId, v: VertexId) -> VertexId {
        let (a, b) = self.edges[e];
        if a == v {
            b
        } else {
            a
        }
    }
}

/// A finite graph plus a root and a sink vertex representing infinity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphWithSink {
    pub graph: FiniteGraph,
    pub root: VertexId,
    pub sink: VertexId,
    pub radius: usize,
}

impl GraphWithSink {
    pub fn new(
        graph: FiniteGraph,
        root: VertexId,
        sink: VertexId,
        radius: usize,
    ) -> Result<Self, GraphError> {
        let n = graph.vertex_count();
        for v in [root, sink] {
            if v >= n {
                return Err(GraphError::VertexOutOfRange {
                    vertex: v,
                    count: n,
                });
            }
        }
        if root == sink {
            return Err(GraphError::InvalidParameter(
                "root and sink coincide".into(),
            ));
        }
        Ok(Self {
            graph,
            root,
            sink,
            radius,
        })
    }

    /// Wraps an arbitrary graph; the radius is the distance from root to the
    /// nearest vertex adjacent to the sink.
    pub fn from_graph(
        graph: FiniteGraph,
        root: VertexId,
        sink: VertexId,
    ) -> Result<Self, GraphError> {
        let mut g = Self::new(graph, root, sink, 0)?;
        let dist = g.distances_from(root, usize::MAX);
        g.radius = dist[sink].map(|d| d.saturating_sub(1)).unwrap_or(0);
        Ok(g)
    }

    pub fn vertex_count(&self) -> usize {
        self.graph.vertex_count()
    }

    pub fn edge_count(&self) -> usize {
        self.graph.edge_count()
    }

    /// Breadth-first distances from `v` up to `limit`, never expanding through the sink.
    pub fn distances_from(&self, v: VertexId, limit: usize) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.vertex_count()];
        dist[v] = Some(0);
        let mut queue = VecDeque::from([v]);
        while let Some(u) = queue.pop_front() {
            let d = dist[u].unwrap();
            if u == self.sink && u != v {
                continue;
            }
            if d >= limit {
                continue;
            }
            for &e in self.graph.incident(u) {
                let w = self.graph.other_end(e, u);
                if dist[w].is_none() {
                    dist[w] = Some(d + 1);
                    queue.push_back(w);
                }
            }
        }
        dist
    }
}

/// Result of [`max_degree_within`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DegreeBound {
    pub max_degree: usize,
    /// True when the search ball reached the sink, so the value may
    /// understate the degree bound of the untruncated graph.
    pub reached_sink: bool,
}

/// Largest degree among non-sink vertices within graph distance `r` of `v`.
pub fn max_degree_within(
    g: &GraphWithSink,
    v: VertexId,
    r: usize,
) -> Result<DegreeBound, GraphError> {
    if v == g.sink {
        return Err(GraphError::InvalidParameter(
            "degree bound requested at the sink".into(),
        ));
    }
    let dist = g.distances_from(v, r);
    let mut max_degree = 0;
    let mut reached_sink = false;
    for (u, d) in dist.iter().enumerate() {
        let Some(d) = *d else { continue };
        if u == g.sink {
            reached_sink |= d <= r;
            continue;
        }
        max_degree = max_degree.max(g.graph.degree(u));
    }
    Ok(DegreeBound {
        max_degree,
        reached_sink,
    })
}

/// Number of points of Z^d with l1 norm at most n.
pub fn lattice_ball_size(d: usize, n: usize) -> Option<u128> {
    // sum_k 2^k C(d,k) C(n,k)
    let mut total: u128 = 0;
    let mut c_d: u128 = 1;
    let mut c_n: u128 = 1;
    for k in 0..=d.min(n) {
        if k > 0 {
            c_d = c_d.checked_mul((d - k + 1) as u128)? / k as u128;
            c_n = c_n.checked_mul((n - k + 1) as u128)? / k as u128;
        }
        let pow = 1u128.checked_shl(k as u32)?;
        total = total.checked_add(pow.checked_mul(c_d)?.checked_mul(c_n)?)?;
    }
    Some(total)
}

/// The l1 ball of radius `n` in Z^d, with every lattice edge leaving the ball
/// attached to the sink. Supports up to [`MAX_VERTICES`] vertices.
pub fn build_lattice_ball(d: usize, n: usize) -> Result<GraphWithSink, GraphError> {
    if d == 0 || n == 0 {
        return Err(GraphError::InvalidParameter(format!(
            "lattice ball needs d >= 1 and n >= 1, got d={d}, n={n}"
        )));
    }
    let size = lattice_ball_size(d, n).unwrap_or(u128::MAX);
    if size >= MAX_VERTICES as u128 {
        return Err(GraphError::Capacity {
            requested: size + 1,
            limit: MAX_VERTICES,
        });
    }
    let n_i = n as i64;

    // Enumerate points lexicographically.
    let mut points: Vec<Vec<i64>> = Vec::with_capacity(size as usize);
    let mut current = vec![0i64; d];
    enumerate_ball(&mut current, 0, n_i, &mut points);
    let index: HashMap<&[i64], usize> = points
        .iter()
        .enumerate()
        .map(|(i, p)| (p.as_slice(), i))
        .collect();

    let sink = points.len();
    let mut graph = FiniteGraph::with_vertices(sink + 1);
    let mut neighbour = vec![0i64; d];
    for (i, p) in points.iter().enumerate() {
        let norm: i64 = p.iter().map(|x| x.abs()).sum();
        for axis in 0..d {
            for step in [1i64, -1] {
                neighbour.copy_from_slice(p);
                neighbour[axis] += step;
                let inside = norm + if p[axis] * step >= 0 { 1 } else { -1 } <= n_i;
                if inside {
                    // interior edges are added once, from the lower endpoint
                    if step == 1 {
                        graph.add_edge(i, index[neighbour.as_slice()])?;
                    }
                } else {
                    graph.add_edge(i, sink)?;
                }
            }
        }
    }
    let root = index[vec![0i64; d].as_slice()];
    GraphWithSink::new(graph, root, sink, n)
}

fn enumerate_ball(current: &mut Vec<i64>, axis: usize, budget: i64, out: &mut Vec<Vec<i64>>) {
    if axis == current.len() {
        out.push(current.clone());
        return;
    }
    for x in -budget..=budget {
        current[axis] = x;
        enumerate_ball(current, axis + 1, budget - x.abs(), out);
    }
    current[axis] = 0;
}

/// Rooted `b`-ary tree of the given depth; each leaf gets `b` edges to the sink.
pub fn build_tree(b: usize, depth: usize) -> Result<GraphWithSink, GraphError> {
    if b == 0 || depth == 0 {
        return Err(GraphError::InvalidParameter(format!(
            "tree needs b >= 1 and depth >= 1, got b={b}, depth={depth}"
        )));
    }
    let mut count: u128 = 0;
    let mut level: u128 = 1;
    for _ in 0..=depth {
        count = count.saturating_add(level);
        level = level.saturating_mul(b as u128);
    }
    if count >= MAX_VERTICES as u128 {
        return Err(GraphError::Capacity {
            requested: count + 1,
            limit: MAX_VERTICES,
        });
    }
    let count = count as usize;
    let sink = count;
    let mut graph = FiniteGraph::with_vertices(count + 1);
    // BFS numbering: children of vertex i are b*i+1 ..= b*i+b
    let internal = count - b.pow(depth as u32);
    for parent in 0..internal {
        for c in 1..=b {
            graph.add_edge(parent, b * parent + c)?;
        }
    }
    for leaf in internal..count {
        for _ in 0..b {
            graph.add_edge(leaf, sink)?;
        }
    }
    GraphWithSink::new(graph, 0, sink, depth)
}

/// Parses an edge list: one `u v` pair per line. Blank lines and lines
/// starting with `#` are skipped; edge ids follow the order of edge lines.
pub fn load_graph(text: &str) -> Result<FiniteGraph, GraphError> {
    let mut pairs = Vec::new();
    let mut max_id = None;
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        if fields.len() != 2 {
            return Err(GraphError::Parse {
                line: line_no,
                message: format!("expected two vertex ids, found {} fields", fields.len()),
            });
        }
        let parse = |s: &str| {
            s.parse::<usize>().map_err(|_| GraphError::Parse {
                line: line_no,
                message: format!("invalid vertex id {s:?}"),
            })
        };
        let (u, v) = (parse(fields[0])?, parse(fields[1])?);
        if u == v {
            return Err(GraphError::Parse {
                line: line_no,
                message: format!("self-loop at vertex {u}"),
            });
        }
        max_id = Some(max_id.unwrap_or(0).max(u).max(v));
        pairs.push((u, v));
    }
    let n = max_id.map_or(0, |m| m + 1);
    FiniteGraph::from_edges(n, &pairs)
}
