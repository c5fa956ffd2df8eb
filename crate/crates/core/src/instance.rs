//! Semi-random instance generation: a planted bipartition with random cut
//! edges followed by scripted monotone edits, and hierarchical stochastic
//! model graphs drawn from a weighted cluster tree.

use rand::seq::{index, SliceRandom};
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::graph::{cut_value, Graph, Partition};
use crate::hierarchy::ClusterTree;
use crate::rng::{stream, stream_rng, Rng};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    A,
    B,
}

impl Side {
    fn label(self) -> u8 {
        match self {
            Side::A => 0,
            Side::B => 1,
        }
    }
}

/// One monotone edit. Additions stay inside a side; removals only touch cut edges.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "snake_case")]
pub enum AdversaryAction {
    /// Adds every missing within-side pair independently with probability
    /// `density`, or exactly the listed `edges`.
    AddWithin {
        side: Side,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        density: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        edges: Option<Vec<(usize, usize)>>,
    },
    /// Removes `round(fraction * |cut|)` uniformly chosen cut edges, or
    /// exactly the listed `edges`.
    RemoveCut {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        fraction: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        edges: Option<Vec<(usize, usize)>>,
    },
    /// Makes `vertices` (default: the whole side) a clique.
    AddClique {
        side: Side,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        vertices: Option<Vec<usize>>,
    },
    /// Adds a random `degree`-regular multigraph on the side, simplified.
    AddExpander { side: Side, degree: usize },
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AdversaryScript {
    pub actions: Vec<AdversaryAction>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SemiRandomSpec {
    pub n: usize,
    pub a: f64,
    pub eta: f64,
    pub size_a: usize,
    pub size_b: usize,
    #[serde(default)]
    pub adversary: AdversaryScript,
    pub seed: u64,
}

impl SemiRandomSpec {
    /// Even split `⌈n/2⌉ / ⌊n/2⌋` with an empty adversary.
    pub fn balanced(n: usize, a: f64, eta: f64, seed: u64) -> Self {
        Self {
            n,
            a,
            eta,
            size_a: n - n / 2,
            size_b: n / 2,
            adversary: AdversaryScript::default(),
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a > 0.0 && self.a < 0.5) {
            return Err(invalid(format!("balance a = {} must lie in (0, 1/2)", self.a)));
        }
        if !(self.eta >= 0.0 && self.eta <= 1.0) {
            return Err(invalid(format!("cut probability eta = {} must lie in [0, 1]", self.eta)));
        }
        if self.size_a + self.size_b != self.n {
            return Err(invalid(format!(
                "side sizes {} + {} do not sum to n = {}",
                self.size_a, self.size_b, self.n
            )));
        }
        let min_side = (self.a * self.n as f64).ceil() as usize;
        if self.size_a.min(self.size_b) < min_side {
            return Err(invalid(format!("both sides need at least ⌈a n⌉ = {min_side} vertices")));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct Instance {
    pub graph: Graph,
    pub planted: Partition,
    pub planted_cut_value: usize,
    /// Cut edges drawn before any removal.
    pub alpha_bound: usize,
    pub seed: u64,
    pub spec: SemiRandomSpec,
}

/// Metadata written next to an instance's edge list.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub n: usize,
    pub m: usize,
    pub seed: u64,
    pub alpha_bound: usize,
    pub planted_cut_value: usize,
    pub planted: Vec<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spec: Option<SemiRandomSpec>,
}

impl Instance {
    pub fn sidecar(&self) -> Sidecar {
        Sidecar {
            n: self.graph.n(),
            m: self.graph.m(),
            seed: self.seed,
            alpha_bound: self.alpha_bound,
            planted_cut_value: self.planted_cut_value,
            planted: self.planted.labels().to_vec(),
            spec: Some(self.spec.clone()),
        }
    }
}

/// Calls `f(k)` for each `k < total` independently with probability `p`,
/// in increasing order, by skipping geometrically distributed gaps.
fn bernoulli_indices(total: u64, p: f64, rng: &mut Rng, mut f: impl FnMut(u64)) {
    if p <= 0.0 || total == 0 {
        return;
    }
    if p >= 1.0 {
        (0..total).for_each(f);
        return;
    }
    let log_q = (1.0 - p).ln();
    let mut k = 0u64;
    loop {
        let u: f64 = 1.0 - rng.gen::<f64>();
        let skip = (u.ln() / log_q).floor();
        if skip >= (total - k) as f64 {
            return;
        }
        k += skip as u64;
        f(k);
        k += 1;
        if k >= total {
            return;
        }
    }
}

/// Samples each unordered pair of `members` with probability `p`.
fn sample_pairs_within(members: &[usize], p: f64, rng: &mut Rng, out: &mut Vec<(usize, usize)>) {
    let s = members.len() as u64;
    let total = s * s.saturating_sub(1) / 2;
    let (mut row, mut row_start) = (0u64, 0u64);
    bernoulli_indices(total, p, rng, |k| {
        while k >= row_start + (s - 1 - row) {
            row_start += s - 1 - row;
            row += 1;
        }
        let col = row + 1 + (k - row_start);
        out.push((members[row as usize], members[col as usize]));
    });
}

/// Samples each pair of `left x right` with probability `p`.
fn sample_pairs_across(left: &[usize], right: &[usize], p: f64, rng: &mut Rng, out: &mut Vec<(usize, usize)>) {
    let width = right.len() as u64;
    let total = left.len() as u64 * width;
    bernoulli_indices(total, p, rng, |k| {
        let (u, v) = (left[(k / width) as usize], right[(k % width) as usize]);
        out.push((u.min(v), u.max(v)));
    });
}

fn canonical(u: usize, v: usize) -> (usize, usize) {
    (u.min(v), u.max(v))
}

/// Draws a planted bipartition with random cut edges and applies the
/// adversary script in order.
pub fn generate_semirandom(spec: &SemiRandomSpec) -> Result<Instance> {
    spec.validate()?;
    let n = spec.n;
    let mut labels: Vec<u8> = (0..n).map(|v| u8::from(v >= spec.size_a)).collect();
    labels.shuffle(&mut stream_rng(spec.seed, stream::PLANTED_SHUFFLE));
    let planted = Partition::from_labels(labels, 2)?;
    let sides = [planted.members(0), planted.members(1)];

    let mut cut = Vec::new();
    sample_pairs_across(&sides[0], &sides[1], spec.eta, &mut stream_rng(spec.seed, stream::CUT_EDGES), &mut cut);
    cut.sort_unstable();
    let alpha_bound = cut.len();
    let mut within: Vec<(usize, usize)> = Vec::new();

    for (k, action) in spec.adversary.actions.iter().enumerate() {
        let mut rng = stream_rng(spec.seed, stream::ADVERSARY + k as u64);
        let reject = |reason: String| Error::Monotonicity { action: k, reason };
        let check_within = |side: Side, u: usize, v: usize| -> Result<()> {
            for w in [u, v] {
                if w >= n {
                    return Err(Error::VertexOutOfRange { vertex: w, n });
                }
                if planted.label(w) != side.label() {
                    return Err(reject(format!("vertex {w} is not on side {side:?}")));
                }
            }
            if u == v {
                return Err(Error::SelfLoop(u));
            }
            Ok(())
        };
        match action {
            AdversaryAction::AddWithin { side, density, edges } => match (density, edges) {
                (Some(p), None) => {
                    if !(0.0..=1.0).contains(p) {
                        return Err(invalid(format!("density {p} outside [0, 1]")));
                    }
                    sample_pairs_within(&sides[side.label() as usize], *p, &mut rng, &mut within);
                }
                (None, Some(list)) => {
                    for &(u, v) in list {
                        check_within(*side, u, v)?;
                        within.push(canonical(u, v));
                    }
                }
                _ => return Err(invalid("add_within needs exactly one of density or edges")),
            },
            AdversaryAction::RemoveCut { fraction, edges } => match (fraction, edges) {
                (Some(f), None) => {
                    if !(0.0..=1.0).contains(f) {
                        return Err(invalid(format!("removal fraction {f} outside [0, 1]")));
                    }
                    let count = (f * cut.len() as f64).round() as usize;
                    let mut drop = vec![false; cut.len()];
                    for i in index::sample(&mut rng, cut.len(), count) {
                        drop[i] = true;
                    }
                    let mut it = drop.iter();
                    cut.retain(|_| !*it.next().unwrap());
                }
                (None, Some(list)) => {
                    let mut drop = vec![false; cut.len()];
                    for &(u, v) in list {
                        if u < n && v < n && planted.label(u) == planted.label(v) {
                            return Err(reject(format!("edge {{{u}, {v}}} is not a cut edge")));
                        }
                        match cut.binary_search(&canonical(u, v)) {
                            Ok(i) => drop[i] = true,
                            Err(_) => return Err(Error::MissingEdge(u, v)),
                        }
                    }
                    let mut it = drop.iter();
                    cut.retain(|_| !*it.next().unwrap());
                }
                _ => return Err(invalid("remove_cut needs exactly one of fraction or edges")),
            },
            AdversaryAction::AddClique { side, vertices } => {
                let members = match vertices {
                    Some(list) => {
                        for &v in list {
                            if v >= n {
                                return Err(Error::VertexOutOfRange { vertex: v, n });
                            }
                            if planted.label(v) != side.label() {
                                return Err(reject(format!("vertex {v} is not on side {side:?}")));
                            }
                        }
                        list.clone()
                    }
                    None => sides[side.label() as usize].clone(),
                };
                for (x, &u) in members.iter().enumerate() {
                    for &v in &members[x + 1..] {
                        if u != v {
                            within.push(canonical(u, v));
                        }
                    }
                }
            }
            AdversaryAction::AddExpander { side, degree } => {
                let members = &sides[side.label() as usize];
                if *degree >= members.len() {
                    return Err(invalid(format!(
                        "expander degree {degree} needs more than {} vertices",
                        members.len()
                    )));
                }
                let mut stubs: Vec<usize> = members.iter().flat_map(|&v| std::iter::repeat(v).take(*degree)).collect();
                stubs.shuffle(&mut rng);
                for pair in stubs.chunks_exact(2) {
                    if pair[0] != pair[1] {
                        within.push(canonical(pair[0], pair[1]));
                    }
                }
            }
        }
    }

    let graph = Graph::simplified(n, cut.iter().chain(&within).copied())?;
    let planted_cut_value = cut_value(&graph, &planted)?;
    Ok(Instance {
        graph,
        planted,
        planted_cut_value,
        alpha_bound,
        seed: spec.seed,
        spec: spec.clone(),
    })
}

/// Samples a graph in which each pair of leaves is joined independently with
/// probability equal to the weight of their lowest common ancestor.
pub fn generate_hsm(tree: &ClusterTree, seed: u64) -> Result<Graph> {
    tree.validate_weights()?;
    let mut rng = stream_rng(seed, stream::HSM);
    let (order, ranges) = tree.leaf_ranges();
    let leaves = |v: usize| &order[ranges[v].0..ranges[v].1];
    let mut edges = Vec::new();
    for node in tree.internal_nodes() {
        let (l, r) = tree.children(node).expect("internal node has children");
        let w = tree.weight(node).expect("validated weights");
        sample_pairs_across(leaves(l), leaves(r), w, &mut rng, &mut edges);
    }
    edges.sort_unstable();
    Graph::new(tree.n_leaves(), edges)
}

/// Removes the listed edges; every one must exist in `g`.
pub fn apply_edge_removal_adversary(g: &Graph, removals: &[(usize, usize)]) -> Result<Graph> {
    let mut removed = vec![false; g.m()];
    for &(u, v) in removals {
        match g.edge_index(u, v) {
            Some(e) => removed[e] = true,
            None => return Err(Error::MissingEdge(u, v)),
        }
    }
    Ok(g.without_edges(&removed))
}
