use std::collections::BTreeSet;

use rand::seq::{index, SliceRandom};
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::flow::demand_feedback;
use super::{offset, OracleParams};
use crate::embedding::{sqdist, Embedding};
use crate::error::{invalid, Error, Result};
use crate::graph::{max_flow_dregular, Graph, LapTerm, Partition, WeightedTerm, P1, P2, REST};
use crate::mmw::{FeedbackMatrix, OracleVerdict};
use crate::rng::{stream, stream_rng, Rng};

/// Approximate heavy centers and the vertices they cover.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeavyMap {
    /// Sampled vertices with at least `10 delta² n_ref` vertices within
    /// squared distance `rho delta`.
    pub centers: Vec<usize>,
    /// For every vertex, the nearest center within squared distance
    /// `rho delta`, or `None`.
    pub assignment: Vec<Option<usize>>,
}

/// Number of centers sampled by the heavy-vertex detection: `⌈100 δ⁻² ln n_ref⌉`.
pub fn heavy_sample_size(delta: f64, n_ref: usize) -> usize {
    let s = 100.0 / (delta * delta) * (n_ref.max(2) as f64).ln();
    if s >= usize::MAX as f64 {
        usize::MAX
    } else {
        s.ceil() as usize
    }
}

fn heavy_threshold(delta: f64, n_ref: usize) -> f64 {
    10.0 * delta * delta * n_ref as f64
}

fn draw_sample(alive: &[usize], delta: f64, n_ref: usize, rng: &mut Rng) -> Vec<usize> {
    let size = heavy_sample_size(delta, n_ref);
    if size >= alive.len() {
        return alive.to_vec();
    }
    let mut picked: Vec<usize> = index::sample(rng, alive.len(), size).into_iter().map(|k| alive[k]).collect();
    picked.sort_unstable();
    picked
}

/// Sampled candidate centers with their neighbor counts among the live
/// vertices, kept current as vertices are removed.
struct CenterPool {
    sample: Vec<usize>,
    counts: Vec<usize>,
    radius: f64,
}

impl CenterPool {
    fn new(w: &Embedding, alive: &[bool], sample: Vec<usize>, radius: f64) -> Self {
        let live: Vec<usize> = (0..alive.len()).filter(|&v| alive[v]).collect();
        let counts = sample
            .iter()
            .map(|&s| live.iter().filter(|&&j| sqdist(w, s, j) <= radius).count())
            .collect();
        Self { sample, counts, radius }
    }

    fn remove(&mut self, w: &Embedding, j: usize) {
        for (k, &s) in self.sample.iter().enumerate() {
            if sqdist(w, s, j) <= self.radius {
                self.counts[k] -= 1;
            }
        }
    }

    fn centers(&self, alive: &[bool], threshold: f64) -> Vec<usize> {
        self.sample
            .iter()
            .zip(&self.counts)
            .filter(|&(&s, &c)| alive[s] && c as f64 >= threshold)
            .map(|(&s, _)| s)
            .collect()
    }
}

fn nearest_assignment(w: &Embedding, alive: &[bool], centers: &[usize], radius: f64) -> Vec<Option<usize>> {
    (0..alive.len())
        .map(|i| {
            if !alive[i] {
                return None;
            }
            centers
                .iter()
                .map(|&c| (sqdist(w, i, c), c))
                .filter(|&(d, _)| d <= radius)
                .min_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)))
                .map(|(_, c)| c)
        })
        .collect()
}

/// Sampled heavy-vertex detection over all vertices of `w`: sample
/// `⌈100 δ⁻² ln n_ref⌉` vertices, keep those with at least `10 δ² n_ref`
/// vertices within squared distance `rho δ`, and map every vertex to its
/// nearest kept center within `rho δ`.
pub fn detect_heavy(w: &Embedding, delta: f64, rho: f64, n_ref: usize, seed: u64) -> Result<HeavyMap> {
    if rho < 2.0 {
        return Err(invalid(format!("rho = {rho} must be at least 2")));
    }
    if !(delta > 0.0) {
        return Err(invalid(format!("delta = {delta} must be positive")));
    }
    let alive = vec![true; w.n()];
    let live: Vec<usize> = (0..w.n()).collect();
    let mut rng = stream_rng(seed, stream::ORACLE + offset::REMOVAL - 1);
    let sample = draw_sample(&live, delta, n_ref, &mut rng);
    let pool = CenterPool::new(w, &alive, sample, rho * delta);
    let centers = pool.centers(&alive, heavy_threshold(delta, n_ref));
    let assignment = nearest_assignment(w, &alive, &centers, rho * delta);
    Ok(HeavyMap { centers, assignment })
}

/// A set of vertices removed together. Every member lies within the
/// carving radius of its captor, a vertex of the group that carved it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CarvedSet {
    pub center: usize,
    pub members: Vec<usize>,
    pub captors: Vec<usize>,
    /// Carving round; the contact-graph round comes last.
    pub round: usize,
}

fn carve_groups(
    w: &Embedding,
    alive: &mut [bool],
    groups: &[Vec<usize>],
    radius_sq: f64,
    round: usize,
) -> Vec<CarvedSet> {
    let mut out = Vec::with_capacity(groups.len());
    for group in groups {
        let mut members = Vec::new();
        let mut captors = Vec::new();
        for v in 0..alive.len() {
            if !alive[v] {
                continue;
            }
            if let Some(&c) = group.iter().find(|&&c| sqdist(w, v, c) <= radius_sq) {
                members.push(v);
                captors.push(c);
            }
        }
        for &v in &members {
            alive[v] = false;
        }
        if !members.is_empty() {
            out.push(CarvedSet {
                center: group[0],
                members,
                captors,
                round,
            });
        }
    }
    out
}

/// Carves, for each center in order, the live vertices within squared
/// distance `radius_sq` that earlier centers have not taken. Sets are
/// disjoint and returned one per center; a live center always belongs to
/// its own set, and a center taken earlier gets an empty one.
pub fn carve_with_radius(w: &Embedding, alive: &[bool], centers: &[usize], radius_sq: f64) -> Vec<Vec<usize>> {
    let mut alive = alive.to_vec();
    centers
        .iter()
        .map(|&c| {
            let members: Vec<usize> = (0..alive.len())
                .filter(|&v| alive[v] && sqdist(w, v, c) <= radius_sq)
                .collect();
            for &v in &members {
                alive[v] = false;
            }
            members
        })
        .collect()
}

/// Which form of the size condition on `(P1, P2)` holds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BalanceRule {
    /// `||P1| - |P2|| <= a n / 2`.
    SidesClose,
    /// The sides differ by more, but `|V'| >= a n / 10`.
    LargeRest,
    Unbalanced,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RemovalOutcome {
    /// Indices of the edges with squared length at least `delta`.
    pub long_edges: Vec<usize>,
    /// Labels [`P1`], [`P2`] and [`REST`] for `V'`.
    pub tripartition: Partition,
    pub carved: Vec<CarvedSet>,
    /// Uniform radius draws in `[1, 2]`, one per carving round.
    pub radii: Vec<f64>,
    pub ball_rounds: usize,
    pub contact_components: usize,
    /// `(k, i, j)` with `i` carved by captor `k`, `j` outside its set, and
    /// `|v_k - v_j|^2 >= |v_k - v_i|^2 + factor |v_i - v_j|^2`.
    pub triples: Vec<(usize, usize, usize)>,
    /// Edges between different parts that are not long.
    pub cut_outside_long: usize,
    pub balance_rule: BalanceRule,
}

impl RemovalOutcome {
    pub fn removed(&self) -> (Vec<usize>, Vec<usize>) {
        (self.tripartition.members(P1), self.tripartition.members(P2))
    }
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn find(&mut self, x: usize) -> usize {
        let mut r = x;
        while self.0[r] != r {
            r = self.0[r];
        }
        let mut y = x;
        while self.0[y] != r {
            let next = self.0[y];
            self.0[y] = r;
            y = next;
        }
        r
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Randomized heavy-vertex removal.
///
/// Strips the long edges, then repeatedly carves balls of squared radius
/// `2 r delta` (`r` uniform in `[1, 2]`) around a maximal set of heavy
/// centers that are pairwise at least `10 c_pair delta` apart, for as long
/// as there are at least `a / (c_pair delta)` such centers. The remaining
/// heavy centers are grouped by a contact graph over short edges and carved
/// once more. Carved sets go, largest first, to the lighter of `P1` and
/// `P2`; everything else forms `V'`.
pub fn heavy_removal(g: &Graph, w: &Embedding, params: &OracleParams, attempt: u64) -> Result<RemovalOutcome> {
    params.validate()?;
    let n = g.n();
    if w.n() != n {
        return Err(Error::SizeMismatch { expected: n, got: w.n() });
    }
    let delta = params.delta;
    let mut rng = stream_rng(params.seed, stream::ORACLE + offset::REMOVAL + attempt);
    let long: Vec<bool> = g.edges().iter().map(|&(i, j)| sqdist(w, i, j) >= delta).collect();
    let mut alive = vec![true; n];
    let live: Vec<usize> = (0..n).collect();
    let sample = draw_sample(&live, delta, params.n_ref, &mut rng);
    let mut pool = CenterPool::new(w, &alive, sample, 2.0 * delta);
    let threshold = heavy_threshold(delta, params.n_ref);
    let separation = 10.0 * params.c_pair * delta;
    let needed = params.a / (params.c_pair * delta);

    let mut carved: Vec<CarvedSet> = Vec::new();
    let mut radii = Vec::new();
    let mut ball_rounds = 0;
    let centers = loop {
        let centers = pool.centers(&alive, threshold);
        let mut spread_out: Vec<usize> = Vec::new();
        for &c in &centers {
            if spread_out.iter().all(|&u| sqdist(w, c, u) >= separation) {
                spread_out.push(c);
            }
        }
        if spread_out.is_empty() || (spread_out.len() as f64) < needed {
            break centers;
        }
        let r: f64 = rng.gen_range(1.0..=2.0);
        radii.push(r);
        let groups: Vec<Vec<usize>> = spread_out.iter().map(|&c| vec![c]).collect();
        let sets = carve_groups(w, &mut alive, &groups, 2.0 * r * delta, ball_rounds);
        for set in &sets {
            for &v in &set.members {
                pool.remove(w, v);
            }
        }
        carved.extend(sets);
        ball_rounds += 1;
    };

    // Contact graph over the remaining heavy centers.
    let mut contact_components = 0;
    if !centers.is_empty() {
        let assignment = nearest_assignment(w, &alive, &centers, 2.0 * delta);
        let slot: std::collections::HashMap<usize, usize> =
            centers.iter().enumerate().map(|(k, &c)| (c, k)).collect();
        let mut uf = UnionFind((0..centers.len()).collect());
        for (e, &(i, j)) in g.edges().iter().enumerate() {
            if long[e] || !alive[i] || !alive[j] || sqdist(w, i, j) > 200.0 * delta {
                continue;
            }
            if let (Some(fi), Some(fj)) = (assignment[i], assignment[j]) {
                if fi != fj {
                    uf.union(slot[&fi], slot[&fj]);
                }
            }
        }
        let mut groups: Vec<Vec<usize>> = Vec::new();
        let mut group_of = vec![usize::MAX; centers.len()];
        for k in 0..centers.len() {
            let root = uf.find(k);
            if group_of[root] == usize::MAX {
                group_of[root] = groups.len();
                groups.push(Vec::new());
            }
            groups[group_of[root]].push(centers[k]);
        }
        contact_components = groups.len();
        let r: f64 = rng.gen_range(1.0..=2.0);
        radii.push(r);
        carved.extend(carve_groups(w, &mut alive, &groups, 2.0 * r * delta, ball_rounds));
    }

    // Largest sets first, each to the currently lighter side.
    let mut order: Vec<usize> = (0..carved.len()).collect();
    order.sort_by_key(|&k| std::cmp::Reverse(carved[k].members.len()));
    let mut labels = vec![REST; n];
    let mut set_of = vec![usize::MAX; n];
    let (mut size1, mut size2) = (0usize, 0usize);
    for k in order {
        let label = if size1 <= size2 { P1 } else { P2 };
        for &v in &carved[k].members {
            labels[v] = label;
            set_of[v] = k;
        }
        if label == P1 {
            size1 += carved[k].members.len();
        } else {
            size2 += carved[k].members.len();
        }
    }

    let mut captor = vec![usize::MAX; n];
    for set in &carved {
        for (&v, &c) in set.members.iter().zip(&set.captors) {
            captor[v] = c;
        }
    }
    let mut cut_outside_long = 0;
    let mut triples = BTreeSet::new();
    for (e, &(i, j)) in g.edges().iter().enumerate() {
        if long[e] {
            continue;
        }
        if labels[i] != labels[j] {
            cut_outside_long += 1;
        }
        if set_of[i] == set_of[j] {
            continue;
        }
        let dij = sqdist(w, i, j);
        for (inside, outside) in [(i, j), (j, i)] {
            let k = captor[inside];
            if k == usize::MAX || k == inside || k == outside {
                continue;
            }
            if sqdist(w, k, outside) >= sqdist(w, k, inside) + params.triangle_factor * dij && dij > 0.0 {
                triples.insert((k, inside, outside));
            }
        }
    }

    let rest = n - size1 - size2;
    let a_n = params.a * params.n_ref as f64;
    let balance_rule = if (size1.abs_diff(size2) as f64) <= a_n / 2.0 {
        BalanceRule::SidesClose
    } else if rest as f64 >= a_n / 10.0 {
        BalanceRule::LargeRest
    } else {
        BalanceRule::Unbalanced
    };
    Ok(RemovalOutcome {
        long_edges: (0..g.m()).filter(|&e| long[e]).collect(),
        tripartition: Partition::from_labels(labels, 3)?,
        carved,
        radii,
        ball_rounds,
        contact_components,
        triples: triples.into_iter().collect(),
        cut_outside_long,
        balance_rule,
    })
}

/// `((1 + gamma) sdp_alpha / n) Id + f sum_p T_p` over the given triples
/// `(k, i, j)`, with `T_p` the path term `L_ki + L_ij - L_kj` and
/// `f = c_star sdp_alpha / n`. Nonnegative on every solution satisfying
/// the triangle inequalities.
pub fn triangle_feedback(n: usize, triples: &[(usize, usize, usize)], params: &OracleParams) -> Result<FeedbackMatrix> {
    let level = (1.0 + params.gamma) * params.sdp_alpha();
    let f = params.c_star * params.sdp_alpha() / n as f64;
    let mut terms = Vec::with_capacity(triples.len() + 1);
    terms.push(WeightedTerm::new(LapTerm::Identity, level / n as f64));
    for &(k, i, j) in triples {
        terms.push(WeightedTerm::new(LapTerm::path_triple(k, i, j)?, f));
    }
    Ok(FeedbackMatrix::new(n, terms, level))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeavyReport {
    pub outcome: RemovalOutcome,
    /// Removal attempts made; the last one is reported.
    pub attempts: usize,
    /// `c_removal (alpha/delta)(1 + ell/delta)`.
    pub removal_bound: f64,
    /// Flow values of the long-edge audit trials.
    pub audit_flows: Vec<f64>,
    /// Largest flow across the tripartition, when the removal bound failed
    /// and the flows were small enough to accept the partition anyway.
    pub tripartition_flow: Option<f64>,
}

fn random_balanced_split(n: usize, a: f64, rng: &mut Rng) -> (Vec<usize>, Vec<usize>) {
    let lo = ((a * n as f64).ceil() as usize).max(1);
    let hi = n.saturating_sub(lo);
    let size = if lo <= hi { rng.gen_range(lo..=hi) } else { n / 2 };
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let (left, right) = order.split_at(size);
    let (mut left, mut right) = (left.to_vec(), right.to_vec());
    left.sort_unstable();
    right.sort_unstable();
    (left, right)
}

/// The heavy-vertex oracle.
///
/// (a) Audits long edges with random balanced bipartition flows and returns
/// demand feedback if a large flow runs along long demand pairs. (b) Runs
/// [`heavy_removal`] up to `repetitions` times and accepts the first outcome
/// whose cut outside the long edges is within the removal bound. (c) If
/// none is, routes flows across the three sides of the last tripartition;
/// small flows accept it, otherwise the oracle returns demand feedback or,
/// failing that, triangle feedback on the harvested triples. When neither
/// separates the candidate the oracle reports a diagnostic error.
pub fn heavy_oracle(g: &Graph, w: &Embedding, params: &OracleParams) -> Result<OracleVerdict<HeavyReport>> {
    params.validate()?;
    let n = g.n();
    if w.n() != n {
        return Err(Error::SizeMismatch { expected: n, got: w.n() });
    }
    let margin = params.gamma * params.sdp_alpha();
    let mut audit_flows = Vec::new();
    if g.m() > 0 && n >= 2 {
        let d_audit = 2.0 * params.c_hat * params.alpha / (params.a * n as f64);
        for rep in 0..params.repetitions {
            let mut rng = stream_rng(params.seed, stream::ORACLE + offset::AUDIT + rep as u64);
            let (left, right) = random_balanced_split(n, params.a, &mut rng);
            if left.is_empty() || right.is_empty() {
                continue;
            }
            let flow = max_flow_dregular(g, &left, &right, d_audit)?;
            audit_flows.push(flow.value);
            if flow.value > params.c_hat * params.alpha {
                let m = demand_feedback(g, &flow, params)?;
                if m.inner_product(w) < -margin {
                    return Ok(OracleVerdict::No(m));
                }
            }
        }
    }

    let removal_bound = params.c_removal * params.removal_scale();
    let mut last = None;
    for attempt in 0..params.repetitions {
        let outcome = heavy_removal(g, w, params, attempt as u64)?;
        if outcome.cut_outside_long as f64 <= removal_bound {
            return Ok(OracleVerdict::Yes(HeavyReport {
                outcome,
                attempts: attempt + 1,
                removal_bound,
                audit_flows,
                tripartition_flow: None,
            }));
        }
        last = Some(outcome);
    }
    let outcome = last.expect("at least one removal attempt");

    let labels = outcome.tripartition.labels();
    let side = |keep: &dyn Fn(u8) -> bool| (0..n).filter(|&v| keep(labels[v])).collect::<Vec<_>>();
    let splits = [
        (side(&|l| l != REST), side(&|l| l == REST)),
        (side(&|l| l == P1), side(&|l| l != P1)),
        (side(&|l| l == P2), side(&|l| l != P2)),
    ];
    let max_degree = (0..n).map(|v| g.degree(v)).max().unwrap_or(0) as f64;
    let d = (100.0 * params.c_star * params.removal_scale() / n as f64).min(max_degree + 1.0);
    let flow_bound = params.c_star / 3.0 * params.removal_scale();
    let mut flows = Vec::new();
    for (src, dst) in &splits {
        if !src.is_empty() && !dst.is_empty() {
            flows.push(max_flow_dregular(g, src, dst, d)?);
        }
    }
    let max_flow = flows.iter().map(|f| f.value).fold(0.0, f64::max);
    if max_flow < flow_bound {
        return Ok(OracleVerdict::Yes(HeavyReport {
            outcome,
            attempts: params.repetitions,
            removal_bound,
            audit_flows,
            tripartition_flow: Some(max_flow),
        }));
    }
    for flow in flows.iter().filter(|f| f.value >= flow_bound) {
        let m = demand_feedback(g, flow, params)?;
        if m.inner_product(w) < -margin {
            return Ok(OracleVerdict::No(m));
        }
    }
    let m = triangle_feedback(n, &outcome.triples, params)?;
    if m.inner_product(w) < -margin {
        return Ok(OracleVerdict::No(m));
    }
    Err(Error::OracleDiagnostic(format!(
        "tripartition cut {} exceeds {removal_bound} and carries flow {max_flow}, but neither demand nor \
         triangle feedback ({} triples) separates the candidate",
        outcome.cut_outside_long,
        outcome.triples.len()
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn clusters(n: usize, split: usize) -> Embedding {
        let data = (0..n).flat_map(|i| if i < split { [1.0, 0.0] } else { [-1.0, 0.0] }).collect();
        Embedding::from_rows(2, data, n as f64).unwrap()
    }

    #[test]
    fn identical_points_are_all_covered() {
        let w = Embedding::from_rows(1, vec![1.0; 50], 50.0).unwrap();
        let map = detect_heavy(&w, 0.1, 2.0, 50, 1).unwrap();
        assert!(!map.centers.is_empty());
        assert!(map.assignment.iter().all(Option::is_some));
        assert!(detect_heavy(&w, 0.1, 1.5, 50, 1).is_err());
    }

    #[test]
    fn sparse_points_have_no_centers() {
        // Ten points pairwise at squared distance 2; each sees only itself.
        let mut data = vec![0.0; 100];
        for i in 0..10 {
            data[i * 10 + i] = 1.0;
        }
        let w = Embedding::from_rows(10, data, 10.0).unwrap();
        // 10 delta² n_ref = 2.5 > 1.
        let map = detect_heavy(&w, 0.005, 2.0, 10_000, 1).unwrap();
        assert!(map.centers.is_empty());
        assert!(map.assignment.iter().all(Option::is_none));
    }

    #[test]
    fn two_far_clusters_split_evenly() {
        let n = 40;
        let g = Graph::complete(n);
        let w = clusters(n, 20);
        let params = OracleParams::new(n, 0.4, 1.0, 2);
        let out = heavy_removal(&g, &w, &params, 0).unwrap();
        assert_eq!(out.carved.len(), 2);
        let counts = out.tripartition.counts();
        assert_eq!((counts[0], counts[1], counts[2]), (20, 20, 0));
        assert_eq!(out.balance_rule, BalanceRule::SidesClose);
        // Cross-cluster edges are long; nothing short is cut.
        assert_eq!(out.long_edges.len(), 400);
        assert_eq!(out.cut_outside_long, 0);
    }

    #[test]
    fn carving_takes_each_vertex_once() {
        let w = Embedding::from_rows(1, vec![0.0, 0.05, 0.1, 0.3, 1.0], 5.0).unwrap();
        let sets = carve_with_radius(&w, &[true; 5], &[0, 2], 0.011);
        assert_eq!(sets, vec![vec![0, 1, 2], vec![]]);
        let sets = carve_with_radius(&w, &[true, true, true, true, false], &[3, 0], 0.05);
        assert_eq!(sets, vec![vec![2, 3], vec![0, 1]]);
    }

    #[test]
    fn edgeless_graph_is_accepted() {
        let n = 20;
        let g = Graph::empty(n);
        let w = clusters(n, 10);
        let params = OracleParams::new(n, 0.4, 1.0, 4);
        match heavy_oracle(&g, &w, &params).unwrap() {
            OracleVerdict::Yes(r) => {
                assert!(r.outcome.long_edges.is_empty());
                assert_eq!(r.outcome.cut_outside_long, 0);
            }
            OracleVerdict::No(_) => panic!("expected Yes"),
        }
    }
}
