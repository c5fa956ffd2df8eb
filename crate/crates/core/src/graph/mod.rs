//! Sparse undirected graphs, vertex partitions, Laplacian-family operators
//! and d-regular max-flow.

mod flow;
mod lapterm;

pub use flow::{flow_path_decompose, max_flow_dregular, FlowPath, FlowResult, CAPACITY_SCALE};
pub use lapterm::{lapterm_matvec, quadform, LapTerm, WeightedTerm};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Unweighted simple graph.
///
/// Edges are stored as `(min, max)` pairs sorted lexicographically, so every
/// iteration order over the graph is deterministic.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
    offsets: Vec<usize>,
    adjacency: Vec<usize>,
    incident: Vec<usize>,
}

impl Graph {
    /// Builds a graph, rejecting self-loops, duplicates and out-of-range endpoints.
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut canon = Vec::new();
        for (u, v) in edges {
            for w in [u, v] {
                if w >= n {
                    return Err(Error::VertexOutOfRange { vertex: w, n });
                }
            }
            if u == v {
                return Err(Error::SelfLoop(u));
            }
            canon.push((u.min(v), u.max(v)));
        }
        canon.sort_unstable();
        if let Some(w) = canon.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::DuplicateEdge(w[0].0, w[0].1));
        }
        Ok(Self::from_sorted(n, canon))
    }

    /// Builds a graph from an arbitrary multigraph edge list by dropping
    /// self-loops and parallel edges.
    pub fn simplified(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut canon = Vec::new();
        for (u, v) in edges {
            for w in [u, v] {
                if w >= n {
                    return Err(Error::VertexOutOfRange { vertex: w, n });
                }
            }
            if u != v {
                canon.push((u.min(v), u.max(v)));
            }
        }
        canon.sort_unstable();
        canon.dedup();
        Ok(Self::from_sorted(n, canon))
    }

    pub fn empty(n: usize) -> Self {
        Self::from_sorted(n, Vec::new())
    }

    pub fn complete(n: usize) -> Self {
        let edges = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect();
        Self::from_sorted(n, edges)
    }

    /// Complete bipartite graph between `0..a` and `a..a+b`.
    pub fn complete_bipartite(a: usize, b: usize) -> Self {
        let edges = (0..a).flat_map(|u| (a..a + b).map(move |v| (u, v))).collect();
        Self::from_sorted(a + b, edges)
    }

    pub fn path(n: usize) -> Self {
        Self::from_sorted(n, (1..n).map(|v| (v - 1, v)).collect())
    }

    fn from_sorted(n: usize, edges: Vec<(usize, usize)>) -> Self {
        let mut degree = vec![0usize; n + 1];
        for &(u, v) in &edges {
            degree[u + 1] += 1;
            degree[v + 1] += 1;
        }
        for i in 0..n {
            degree[i + 1] += degree[i];
        }
        let offsets = degree;
        let mut fill = offsets.clone();
        let mut adjacency = vec![0; 2 * edges.len()];
        let mut incident = vec![0; 2 * edges.len()];
        for (e, &(u, v)) in edges.iter().enumerate() {
            adjacency[fill[u]] = v;
            incident[fill[u]] = e;
            fill[u] += 1;
            adjacency[fill[v]] = u;
            incident[fill[v]] = e;
            fill[v] += 1;
        }
        Self {
            n,
            edges,
            offsets,
            adjacency,
            incident,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adjacency[self.offsets[v]..self.offsets[v + 1]]
    }

    /// Edge indices incident to `v`, aligned with [`Graph::neighbors`].
    pub fn incident_edges(&self, v: usize) -> &[usize] {
        &self.incident[self.offsets[v]..self.offsets[v + 1]]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }

    pub fn edge_index(&self, u: usize, v: usize) -> Option<usize> {
        self.edges.binary_search(&(u.min(v), u.max(v))).ok()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.edge_index(u, v).is_some()
    }

    /// Subgraph induced by `vertices` together with the local-to-global map.
    /// Local ids follow the order of `vertices`.
    pub fn induced(&self, vertices: &[usize]) -> (Graph, Vec<usize>) {
        self.induced_filtered(vertices, |_| true)
    }

    /// Like [`Graph::induced`], keeping only edges whose global index passes `keep`.
    pub fn induced_filtered(&self, vertices: &[usize], keep: impl Fn(usize) -> bool) -> (Graph, Vec<usize>) {
        let mut local = vec![usize::MAX; self.n];
        for (i, &v) in vertices.iter().enumerate() {
            local[v] = i;
        }
        let mut edges = Vec::new();
        for &v in vertices {
            for (&w, &e) in self.neighbors(v).iter().zip(self.incident_edges(v)) {
                if v < w && local[w] != usize::MAX && keep(e) {
                    let (a, b) = (local[v], local[w]);
                    edges.push((a.min(b), a.max(b)));
                }
            }
        }
        edges.sort_unstable();
        (Self::from_sorted(vertices.len(), edges), vertices.to_vec())
    }

    /// Copy of the graph without the edges whose indices are flagged.
    pub fn without_edges(&self, removed: &[bool]) -> Graph {
        let edges = self
            .edges
            .iter()
            .zip(removed)
            .filter(|(_, &r)| !r)
            .map(|(&e, _)| e)
            .collect();
        Self::from_sorted(self.n, edges)
    }
}

pub const P1: u8 = 0;
pub const P2: u8 = 1;
pub const REST: u8 = 2;

/// Assignment of every vertex to one of `parts` labelled sides.
///
/// Bipartitions use labels `{0, 1}`; tripartitions `(P1, P2, V')` use
/// [`P1`], [`P2`] and [`REST`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    labels: Vec<u8>,
    parts: usize,
}

impl Partition {
    pub fn bipartition(side: &[bool]) -> Self {
        Self {
            labels: side.iter().map(|&s| s as u8).collect(),
            parts: 2,
        }
    }

    pub fn from_labels(labels: Vec<u8>, parts: usize) -> Result<Self> {
        if let Some(&bad) = labels.iter().find(|&&l| l as usize >= parts) {
            return Err(invalid(format!("label {bad} outside 0..{parts}")));
        }
        Ok(Self { labels, parts })
    }

    /// Tripartition with `V'` = every vertex not in `p1` or `p2`.
    pub fn tripartition(n: usize, p1: &[usize], p2: &[usize]) -> Result<Self> {
        let mut labels = vec![REST; n];
        for (set, label) in [(p1, P1), (p2, P2)] {
            for &v in set {
                if v >= n {
                    return Err(Error::VertexOutOfRange { vertex: v, n });
                }
                if labels[v] != REST {
                    return Err(invalid(format!("vertex {v} assigned twice")));
                }
                labels[v] = label;
            }
        }
        Ok(Self { labels, parts: 3 })
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn label(&self, v: usize) -> u8 {
        self.labels[v]
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn parts(&self) -> usize {
        self.parts
    }

    pub fn counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.parts];
        for &l in &self.labels {
            counts[l as usize] += 1;
        }
        counts
    }

    pub fn members(&self, label: u8) -> Vec<usize> {
        (0..self.labels.len()).filter(|&v| self.labels[v] == label).collect()
    }

    /// Size of the smallest side divided by the vertex count.
    pub fn min_side_fraction(&self) -> f64 {
        if self.labels.is_empty() {
            return 0.0;
        }
        let min = self.counts().into_iter().min().unwrap_or(0);
        min as f64 / self.labels.len() as f64
    }
}

/// Number of edges whose endpoints carry different labels.
pub fn cut_value(g: &Graph, p: &Partition) -> Result<usize> {
    if p.len() != g.n() {
        return Err(Error::SizeMismatch {
            expected: g.n(),
            got: p.len(),
        });
    }
    Ok(g.edges()
        .iter()
        .filter(|&&(u, v)| p.label(u) != p.label(v))
        .count())
}
