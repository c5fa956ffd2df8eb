//! Rooted binary cluster trees, Dasgupta's cost, and recursive balanced-cut
//! clustering.

use serde::{Deserialize, Serialize};

use crate::balanced_cut::{estimate_alpha, DriverConfig};
use crate::error::{invalid, Error, Result};
use crate::graph::Graph;
use crate::rng::derive_seed;

/// Rooted binary tree whose leaves are the vertices `0..n`.
///
/// Node ids `0..n` are the leaves (node id = vertex id); internal nodes use
/// ids `n..2n-1`. Internal nodes may carry a similarity weight in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ClusterTree {
    n: usize,
    root: usize,
    parent: Vec<Option<usize>>,
    children: Vec<Option<(usize, usize)>>,
    weight: Vec<Option<f64>>,
    leaf_count: Vec<usize>,
    depth: Vec<usize>,
}

/// Incremental construction of a [`ClusterTree`] by merging subtrees.
#[derive(Clone, Debug)]
pub struct TreeBuilder {
    n: usize,
    children: Vec<(usize, usize)>,
    weight: Vec<Option<f64>>,
}

impl TreeBuilder {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            children: Vec::new(),
            weight: Vec::new(),
        }
    }

    /// Creates an internal node over two existing roots and returns its id.
    pub fn merge(&mut self, left: usize, right: usize, weight: Option<f64>) -> usize {
        self.children.push((left, right));
        self.weight.push(weight);
        self.n + self.children.len() - 1
    }

    /// Left-heavy balanced tree over `vertices` in the given order; returns its root.
    pub fn balanced(&mut self, vertices: &[usize]) -> usize {
        match vertices.len() {
            0 => panic!("balanced subtree over no vertices"),
            1 => vertices[0],
            len => {
                let mid = len.div_ceil(2);
                let l = self.balanced(&vertices[..mid]);
                let r = self.balanced(&vertices[mid..]);
                self.merge(l, r, None)
            }
        }
    }

    pub fn finish(self) -> Result<ClusterTree> {
        let mut parent = vec![None; self.n + self.children.len()];
        let mut weight = vec![None; self.n];
        weight.extend(self.weight);
        let mut children = vec![None; self.n];
        for (k, &(l, r)) in self.children.iter().enumerate() {
            let id = self.n + k;
            for c in [l, r] {
                if c >= id {
                    return Err(invalid(format!("node {id} merges node {c} that does not exist yet")));
                }
                if parent[c].is_some() {
                    return Err(invalid(format!("node {c} has two parents")));
                }
                parent[c] = Some(id);
            }
            children.push(Some((l, r)));
        }
        ClusterTree::assemble(self.n, parent, children, weight)
    }
}

impl ClusterTree {
    fn assemble(
        n: usize,
        parent: Vec<Option<usize>>,
        children: Vec<Option<(usize, usize)>>,
        weight: Vec<Option<f64>>,
    ) -> Result<Self> {
        if n == 0 {
            return Err(invalid("a cluster tree needs at least one leaf"));
        }
        let total = parent.len();
        if total != 2 * n - 1 {
            return Err(invalid(format!("{n} leaves need {} nodes, got {total}", 2 * n - 1)));
        }
        let roots: Vec<usize> = (0..total).filter(|&v| parent[v].is_none()).collect();
        if roots.len() != 1 {
            return Err(invalid(format!("expected one root, found {}", roots.len())));
        }
        let root = roots[0];
        let mut tree = Self {
            n,
            root,
            parent,
            children,
            weight,
            leaf_count: vec![0; total],
            depth: vec![0; total],
        };
        // Iterative post-order for leaf counts, pre-order for depths.
        let mut order = Vec::with_capacity(total);
        let mut stack = vec![root];
        while let Some(v) = stack.pop() {
            order.push(v);
            if let Some((l, r)) = tree.children[v] {
                tree.depth[l] = tree.depth[v] + 1;
                tree.depth[r] = tree.depth[v] + 1;
                stack.push(r);
                stack.push(l);
            }
        }
        if order.len() != total {
            return Err(invalid("tree is not connected"));
        }
        for &v in order.iter().rev() {
            tree.leaf_count[v] = match tree.children[v] {
                None => 1,
                Some((l, r)) => tree.leaf_count[l] + tree.leaf_count[r],
            };
        }
        Ok(tree)
    }

    /// Builds a tree from a parent array over `2n - 1` nodes whose first `n`
    /// entries are the leaves. Children are ordered by node id.
    pub fn from_parents(n: usize, parents: &[Option<usize>], weights: &[Option<f64>]) -> Result<Self> {
        let total = parents.len();
        if weights.len() != total {
            return Err(Error::SizeMismatch {
                expected: total,
                got: weights.len(),
            });
        }
        let mut kids: Vec<Vec<usize>> = vec![Vec::new(); total];
        for (v, p) in parents.iter().enumerate() {
            if let Some(p) = *p {
                if p >= total {
                    return Err(Error::VertexOutOfRange { vertex: p, n: total });
                }
                kids[p].push(v);
            }
        }
        let mut children = Vec::with_capacity(total);
        for (v, k) in kids.iter().enumerate() {
            match (v < n, k.len()) {
                (true, 0) => children.push(None),
                (false, 2) => children.push(Some((k[0], k[1]))),
                (true, _) => return Err(invalid(format!("leaf {v} has children"))),
                (false, c) => return Err(invalid(format!("internal node {v} has {c} children, expected 2"))),
            }
        }
        Self::assemble(n, parents.to_vec(), children, weights.to_vec())
    }

    /// Left-heavy balanced tree over `0..n` in vertex order.
    pub fn balanced(n: usize) -> Result<Self> {
        let mut b = TreeBuilder::new(n);
        if n > 0 {
            b.balanced(&(0..n).collect::<Vec<_>>());
        }
        b.finish()
    }

    /// Balanced tree over `0..n` whose internal nodes at depth `k` carry
    /// `level_weights[k]`; deeper nodes carry the last entry. The weights
    /// must be non-decreasing so that they shrink toward the root.
    pub fn leveled(n: usize, level_weights: &[f64]) -> Result<Self> {
        let Some(&deepest) = level_weights.last() else {
            return Err(invalid("at least one level weight is required"));
        };
        let mut t = Self::balanced(n)?;
        let internal: Vec<usize> = t.internal_nodes().collect();
        for v in internal {
            let w = level_weights.get(t.depth(v)).copied().unwrap_or(deepest);
            t.set_weight(v, Some(w));
        }
        t.validate_weights()?;
        Ok(t)
    }

    pub fn n_leaves(&self) -> usize {
        self.n
    }

    pub fn n_nodes(&self) -> usize {
        self.parent.len()
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn parent(&self, v: usize) -> Option<usize> {
        self.parent[v]
    }

    pub fn children(&self, v: usize) -> Option<(usize, usize)> {
        self.children[v]
    }

    pub fn weight(&self, v: usize) -> Option<f64> {
        self.weight[v]
    }

    pub fn set_weight(&mut self, v: usize, w: Option<f64>) {
        self.weight[v] = w;
    }

    pub fn leaf_count(&self, v: usize) -> usize {
        self.leaf_count[v]
    }

    pub fn depth(&self, v: usize) -> usize {
        self.depth[v]
    }

    pub fn internal_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.n_nodes()).filter(|&v| self.children[v].is_some())
    }

    /// Leaves in left-to-right order, with each node's leaves occupying the
    /// half-open range `ranges[node]` of that order.
    pub fn leaf_ranges(&self) -> (Vec<usize>, Vec<(usize, usize)>) {
        let mut order = Vec::with_capacity(self.n);
        let mut ranges = vec![(0, 0); self.n_nodes()];
        let mut stack = vec![(self.root, false)];
        while let Some((v, done)) = stack.pop() {
            match (self.children[v], done) {
                (None, _) => {
                    ranges[v] = (order.len(), order.len() + 1);
                    order.push(v);
                }
                (Some((l, r)), false) => {
                    stack.push((v, true));
                    stack.push((r, false));
                    stack.push((l, false));
                }
                (Some((l, r)), true) => ranges[v] = (ranges[l].0, ranges[r].1),
            }
        }
        (order, ranges)
    }

    pub fn lca(&self, mut u: usize, mut v: usize) -> usize {
        while self.depth[u] > self.depth[v] {
            u = self.parent[u].expect("non-root has a parent");
        }
        while self.depth[v] > self.depth[u] {
            v = self.parent[v].expect("non-root has a parent");
        }
        while u != v {
            u = self.parent[u].expect("non-root has a parent");
            v = self.parent[v].expect("non-root has a parent");
        }
        u
    }

    /// Checks that every internal node has a weight in `[0, 1]` and weights
    /// never increase from a node to its parent.
    pub fn validate_weights(&self) -> Result<()> {
        for v in self.internal_nodes() {
            let w = self.weight[v].ok_or_else(|| invalid(format!("internal node {v} has no weight")))?;
            if !(0.0..=1.0).contains(&w) {
                return Err(invalid(format!("weight {w} of node {v} outside [0, 1]")));
            }
            if let Some(p) = self.parent[v] {
                let wp = self.weight[p].ok_or_else(|| invalid(format!("internal node {p} has no weight")))?;
                if wp > w {
                    return Err(invalid(format!(
                        "weight {wp} at node {p} exceeds weight {w} of its child {v}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Number of leaves below the lowest common ancestor of leaves `u` and `v`.
pub fn lca_leafcount(t: &ClusterTree, u: usize, v: usize) -> usize {
    t.leaf_count(t.lca(u, v))
}

/// `sum over edges of leaves(LCA(u, v)) * w(u, v)`; unit weights when `weights` is `None`.
pub fn dasgupta_cost(t: &ClusterTree, g: &Graph, weights: Option<&[f64]>) -> Result<f64> {
    if t.n_leaves() != g.n() {
        return Err(Error::SizeMismatch {
            expected: g.n(),
            got: t.n_leaves(),
        });
    }
    if let Some(w) = weights {
        if w.len() != g.m() {
            return Err(Error::SizeMismatch {
                expected: g.m(),
                got: w.len(),
            });
        }
    }
    Ok(g.edges()
        .iter()
        .enumerate()
        .map(|(e, &(u, v))| lca_leafcount(t, u, v) as f64 * weights.map_or(1.0, |w| w[e]))
        .sum())
}

/// Expected Dasgupta cost of a weighted generating tree on its own expected
/// graph: `sum over internal N of |L(N)| |R(N)| leaves(N) W(N)`.
pub fn expected_cost(t: &ClusterTree) -> Result<f64> {
    t.validate_weights()?;
    Ok(t.internal_nodes()
        .map(|v| {
            let (l, r) = t.children(v).expect("internal");
            (t.leaf_count(l) * t.leaf_count(r) * t.leaf_count(v)) as f64 * t.weight(v).expect("validated")
        })
        .sum())
}

/// Settings of [`recursive_cluster`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterConfig {
    /// Solver settings for every split; `a` and `alpha` are overridden.
    pub driver: DriverConfig,
    /// Balance of every split.
    pub b: f64,
    /// Subsets at most this large get a balanced tree; `max(8, n^(2/3))` when unset.
    pub size_floor: Option<usize>,
    /// Depth constant `D`; `⌈ln n⌉` when unset. Splits use `kappa = sqrt(D)`.
    pub depth_constant: Option<usize>,
}

impl ClusterConfig {
    /// Every split runs a full alpha search, so the per-solve budget is
    /// smaller than the driver's: 60 iterations on a 32-dimensional sketch.
    pub fn new(seed: u64) -> Self {
        let mut driver = DriverConfig::new(1.0 / 3.0, 1.0, seed);
        driver.max_iters = 60;
        driver.sketch_dim = Some(32);
        Self {
            driver,
            b: 1.0 / 3.0,
            size_floor: None,
            depth_constant: None,
        }
    }

    pub fn size_floor(&self, n: usize) -> usize {
        self.size_floor
            .unwrap_or_else(|| ((n as f64).powf(2.0 / 3.0).round() as usize).max(8))
    }

    pub fn depth_constant(&self, n: usize) -> usize {
        self.depth_constant
            .unwrap_or_else(|| ((n.max(2) as f64).ln().ceil() as usize).max(1))
    }
}

/// One split of the recursion.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelRecord {
    pub depth: usize,
    pub size: usize,
    pub edges: usize,
    pub alpha: f64,
    pub cut_value: usize,
    pub sides: [usize; 2],
    pub exhausted: bool,
    /// Set when the solver failed or returned a one-sided cut and the
    /// subset was split by vertex order instead.
    pub fallback: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClusterOutcome {
    pub tree: ClusterTree,
    pub levels: Vec<LevelRecord>,
    pub size_floor: usize,
}

/// Hierarchical clustering by recursive balanced cuts: every subset larger
/// than the size floor is split by [`estimate_alpha`] with balance `b`, and
/// smaller subsets get a balanced tree in vertex order.
pub fn recursive_cluster(g: &Graph, cfg: &ClusterConfig) -> Result<ClusterOutcome> {
    if !(cfg.b > 0.0 && cfg.b < 0.5) {
        return Err(invalid(format!("split balance b = {} must lie in (0, 1/2)", cfg.b)));
    }
    let n = g.n();
    let floor = cfg.size_floor(n);
    if floor < 2 {
        return Err(invalid(format!("size floor {floor} must be at least 2")));
    }
    let mut driver = cfg.driver.clone();
    driver.a = cfg.b;
    driver.kappa = (cfg.depth_constant(n) as f64).sqrt();
    let mut builder = TreeBuilder::new(n);
    let mut levels = Vec::new();
    if n > 0 {
        let all: Vec<usize> = (0..n).collect();
        split(g, &all, &driver, floor, 0, driver.seed, &mut builder, &mut levels)?;
    }
    Ok(ClusterOutcome {
        tree: builder.finish()?,
        levels,
        size_floor: floor,
    })
}

#[allow(clippy::too_many_arguments)]
fn split(
    g: &Graph,
    vertices: &[usize],
    driver: &DriverConfig,
    floor: usize,
    depth: usize,
    seed: u64,
    builder: &mut TreeBuilder,
    levels: &mut Vec<LevelRecord>,
) -> Result<usize> {
    if vertices.len() <= floor {
        return Ok(builder.balanced(vertices));
    }
    let (sub, _) = g.induced(vertices);
    let mut cfg = driver.clone();
    cfg.seed = seed;
    let mut record = LevelRecord {
        depth,
        size: vertices.len(),
        edges: sub.m(),
        alpha: 0.0,
        cut_value: 0,
        sides: [0, 0],
        exhausted: false,
        fallback: None,
    };
    let sides = match estimate_alpha(&sub, &cfg) {
        Ok(est) => {
            record.alpha = est.alpha;
            record.cut_value = est.result.value;
            record.exhausted = est.result.exhausted;
            let labels = est.result.partition.labels();
            let left: Vec<usize> = (0..vertices.len()).filter(|&k| labels[k] == 0).map(|k| vertices[k]).collect();
            let right: Vec<usize> = (0..vertices.len()).filter(|&k| labels[k] != 0).map(|k| vertices[k]).collect();
            if left.is_empty() || right.is_empty() {
                record.fallback = Some("solver returned a one-sided cut".into());
                None
            } else {
                Some((left, right))
            }
        }
        Err(e) => {
            record.fallback = Some(e.to_string());
            None
        }
    };
    let (left, right) = sides.unwrap_or_else(|| {
        let mid = vertices.len().div_ceil(2);
        (vertices[..mid].to_vec(), vertices[mid..].to_vec())
    });
    if record.fallback.is_some() {
        let (sub_left, _) = g.induced(&left);
        let (sub_right, _) = g.induced(&right);
        record.cut_value = sub.m() - sub_left.m() - sub_right.m();
    }
    record.sides = [left.len(), right.len()];
    levels.push(record);
    let l = split(g, &left, driver, floor, depth + 1, derive_seed(seed, 1), builder, levels)?;
    let r = split(g, &right, driver, floor, depth + 1, derive_seed(seed, 2), builder, levels)?;
    Ok(builder.merge(l, r, None))
}
