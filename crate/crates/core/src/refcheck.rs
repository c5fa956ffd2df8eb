//! Brute-force and dense-numerics reference implementations.
//!
//! Everything here is exponential or cubic and capped at small sizes. The
//! routines deliberately avoid the solver's own kernels (flows, Taylor
//! expansions, sketches, tree preprocessing) so tests can compare the two.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::embedding::Embedding;
use crate::error::{invalid, Error, Result};
use crate::graph::{Graph, LapTerm, Partition, WeightedTerm};
use crate::hierarchy::{ClusterTree, TreeBuilder};
use crate::mmw::FeedbackMatrix;

const MAX_CUT_N: usize = 20;
const MAX_TERMINAL_N: usize = 16;
const MAX_DENSE_N: usize = 128;
const MAX_TREE_N: usize = 7;

fn cap(what: &'static str, got: usize, limit: usize) -> Result<()> {
    if got > limit {
        return Err(Error::TooLarge { what, got, limit });
    }
    Ok(())
}

fn crossing(g: &Graph, mask: u32) -> usize {
    g.edges()
        .iter()
        .filter(|&&(i, j)| ((mask >> i) & 1) != ((mask >> j) & 1))
        .count()
}

/// Minimum cut over all bipartitions with both sides of at least `a n`
/// vertices, by enumeration. Side 1 of the result holds vertex 0.
pub fn exact_min_balanced_cut(g: &Graph, a: f64) -> Result<(Partition, usize)> {
    let n = g.n();
    cap("n", n, MAX_CUT_N)?;
    if !(a > 0.0 && a <= 0.5) {
        return Err(invalid(format!("balance a = {a} must lie in (0, 1/2]")));
    }
    let need = a * n as f64 - 1e-9;
    let mut best: Option<(u32, usize)> = None;
    // Fixing vertex 0 on side 1 visits each bipartition once.
    for rest in 0..(1u32 << n.saturating_sub(1)) {
        let mask = (rest << 1) | 1;
        let ones = mask.count_ones() as usize;
        if (ones as f64) < need || ((n - ones) as f64) < need {
            continue;
        }
        let value = crossing(g, mask);
        if best.map_or(true, |(_, v)| value < v) {
            best = Some((mask, value));
        }
    }
    let (mask, value) = best.ok_or_else(|| invalid(format!("no {a}-balanced bipartition of {n} vertices")))?;
    let side: Vec<bool> = (0..n).map(|i| (mask >> i) & 1 == 1).collect();
    Ok((Partition::bipartition(&side), value))
}

/// Minimum cut of the graph augmented with a super-source joined to every
/// source and a super-sink joined to every sink by edges of capacity `d`,
/// other edges having unit capacity. Returns the value and the source side.
pub fn exact_terminal_min_cut(g: &Graph, sources: &[usize], sinks: &[usize], d: f64) -> Result<(f64, Vec<bool>)> {
    let n = g.n();
    cap("n", n, MAX_TERMINAL_N)?;
    if sources.iter().chain(sinks).any(|&v| v >= n) {
        return Err(invalid("terminal out of range"));
    }
    let mut best = (f64::INFINITY, 0u32);
    for mask in 0..(1u32 << n) {
        let outside_sources = sources.iter().filter(|&&s| (mask >> s) & 1 == 0).count();
        let inside_sinks = sinks.iter().filter(|&&t| (mask >> t) & 1 == 1).count();
        let value = crossing(g, mask) as f64 + d * (outside_sources + inside_sinks) as f64;
        if value < best.0 {
            best = (value, mask);
        }
    }
    Ok((best.0, (0..n).map(|i| (best.1 >> i) & 1 == 1).collect()))
}

fn check_dense(m: &DMatrix<f64>) -> Result<usize> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(Error::SizeMismatch { expected: n, got: m.ncols() });
    }
    cap("matrix dimension", n, MAX_DENSE_N)?;
    let scale = m.amax().max(1.0);
    for i in 0..n {
        for j in 0..i {
            if (m[(i, j)] - m[(j, i)]).abs() > 1e-12 * scale {
                return Err(invalid(format!("matrix is not symmetric at ({i}, {j})")));
            }
        }
    }
    Ok(n)
}

/// `exp(M)` of a symmetric matrix through its eigendecomposition.
pub fn dense_expm(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_dense(m)?;
    let eig = SymmetricEigen::new(m.clone());
    let v = &eig.eigenvectors;
    let e = eig.eigenvalues.map(f64::exp);
    let out = v * DMatrix::from_diagonal(&e) * v.transpose();
    // Symmetrize away rounding.
    Ok((&out + out.transpose()) * 0.5)
}

/// Dense `n x n` matrix of a weighted sum of terms, entry by entry.
pub fn dense_terms(n: usize, terms: &[WeightedTerm]) -> Result<DMatrix<f64>> {
    cap("matrix dimension", n, MAX_DENSE_N)?;
    let mut m = DMatrix::<f64>::zeros(n, n);
    let check = |v: usize| {
        if v >= n {
            Err(Error::VertexOutOfRange { vertex: v, n })
        } else {
            Ok(())
        }
    };
    let edge = |m: &mut DMatrix<f64>, i: usize, j: usize, w: f64| {
        m[(i, i)] += w;
        m[(j, j)] += w;
        m[(i, j)] -= w;
        m[(j, i)] -= w;
    };
    for t in terms {
        let w = t.weight;
        match &t.term {
            LapTerm::Edge(i, j) => {
                check(*i)?;
                check(*j)?;
                edge(&mut m, *i, *j, w);
            }
            LapTerm::Complete(s) => {
                for (x, &i) in s.iter().enumerate() {
                    check(i)?;
                    for &j in &s[x + 1..] {
                        edge(&mut m, i, j, w);
                    }
                }
            }
            LapTerm::PathTriple(i, j, k) => {
                for v in [i, j, k] {
                    check(*v)?;
                }
                edge(&mut m, *i, *j, w);
                edge(&mut m, *j, *k, w);
                edge(&mut m, *i, *k, -w);
            }
            LapTerm::Diagonal(entries) => {
                for &(i, x) in entries {
                    check(i)?;
                    m[(i, i)] += w * x;
                }
            }
            LapTerm::Identity => {
                for i in 0..n {
                    m[(i, i)] += w;
                }
            }
        }
    }
    Ok(m)
}

/// Smallest eigenvalue of the dense sum of `terms`.
pub fn dense_psd_check(n: usize, terms: &[WeightedTerm]) -> Result<f64> {
    if n == 0 {
        return Ok(0.0);
    }
    Ok(SymmetricEigen::new(dense_terms(n, terms)?).eigenvalues.min())
}

/// Operator norm of a symmetric matrix by power iteration from a fixed,
/// non-degenerate start vector.
pub fn power_iteration_norm(m: &DMatrix<f64>, iterations: usize) -> Result<f64> {
    let n = check_dense(m)?;
    if n == 0 {
        return Ok(0.0);
    }
    let mut v = DVector::from_fn(n, |i, _| 1.0 + ((i as f64 + 1.0) * 0.618_033_988_75).fract());
    v /= v.norm();
    let mut estimate = 0.0;
    for _ in 0..iterations.max(1) {
        let next = m * &v;
        estimate = next.norm();
        if estimate == 0.0 {
            return Ok(0.0);
        }
        v = next / estimate;
    }
    Ok(estimate)
}

/// Dense `<M, W W^T>` for an embedding with one row per vertex.
pub fn dense_inner_product(m: &DMatrix<f64>, w: &Embedding) -> Result<f64> {
    let n = w.n();
    if m.nrows() != n {
        return Err(Error::SizeMismatch { expected: m.nrows(), got: n });
    }
    let rows = DMatrix::from_row_slice(n, w.d(), w.data());
    Ok(m.dot(&(&rows * rows.transpose())))
}

/// Dense evaluation of a feedback matrix against a feasible witness and the
/// candidate it was emitted for.
#[derive(Clone, Debug, PartialEq)]
pub struct FeedbackCheck {
    pub on_witness: f64,
    pub on_candidate: f64,
    /// Operator norm by power iteration.
    pub norm: f64,
    pub width_bound: f64,
}

impl FeedbackCheck {
    /// Nonnegative on the witness, negative on the candidate, and within
    /// its declared width up to `tol`.
    pub fn holds(&self, tol: f64) -> bool {
        self.on_witness >= -tol && self.on_candidate < 0.0 && self.norm <= self.width_bound * (1.0 + tol) + tol
    }
}

pub fn check_feedback(fb: &FeedbackMatrix, witness: &Embedding, candidate: &Embedding) -> Result<FeedbackCheck> {
    let n = candidate.n();
    let m = dense_terms(n, &fb.terms)?;
    Ok(FeedbackCheck {
        on_witness: dense_inner_product(&m, witness)?,
        on_candidate: dense_inner_product(&m, candidate)?,
        norm: power_iteration_norm(&m, 2000)?,
        width_bound: fb.width_bound,
    })
}

fn ancestors(t: &ClusterTree, mut v: usize) -> Vec<usize> {
    let mut path = vec![v];
    while let Some(p) = t.parent(v) {
        path.push(p);
        v = p;
    }
    path
}

/// Leaf count of every node, by walking each leaf to the root.
fn leaves_below(t: &ClusterTree) -> Vec<usize> {
    let mut count = vec![0; t.n_nodes()];
    for leaf in 0..t.n_leaves() {
        for a in ancestors(t, leaf) {
            count[a] += 1;
        }
    }
    count
}

fn naive_lca(t: &ClusterTree, u: usize, v: usize) -> usize {
    let up = ancestors(t, u);
    *ancestors(t, v)
        .iter()
        .find(|a| up.contains(a))
        .expect("leaves of one tree share the root")
}

/// Dasgupta cost `sum_{(x,y)} leaves(LCA(x,y)) w(x,y)` by walking ancestor
/// lists for every edge; unit weights when `weights` is `None`.
pub fn naive_dasgupta_cost(t: &ClusterTree, g: &Graph, weights: Option<&[f64]>) -> Result<f64> {
    if t.n_leaves() != g.n() {
        return Err(Error::SizeMismatch { expected: g.n(), got: t.n_leaves() });
    }
    if let Some(w) = weights {
        if w.len() != g.m() {
            return Err(Error::SizeMismatch { expected: g.m(), got: w.len() });
        }
    }
    let count = leaves_below(t);
    Ok(g.edges()
        .iter()
        .enumerate()
        .map(|(e, &(x, y))| count[naive_lca(t, x, y)] as f64 * weights.map_or(1.0, |w| w[e]))
        .sum())
}

/// `sum_{u < v} leaves(LCA(u, v)) W(LCA(u, v))` over all leaf pairs: the
/// cost of a weighted tree on its own expected graph.
pub fn expected_cost_double_sum(t: &ClusterTree) -> Result<f64> {
    let count = leaves_below(t);
    let n = t.n_leaves();
    let mut total = 0.0;
    for u in 0..n {
        for v in u + 1..n {
            let l = naive_lca(t, u, v);
            let w = t
                .weight(l)
                .ok_or_else(|| invalid(format!("internal node {l} has no weight")))?;
            total += count[l] as f64 * w;
        }
    }
    Ok(total)
}

/// A minimum-cost hierarchy over all binary trees with leaves `0..n`.
///
/// Every tree splits its leaf set at the root, so the minimum over trees
/// equals the minimum over root splits of `|S| |E(A, B)|` plus the optimal
/// costs of both halves; this recursion visits every split of every subset.
pub fn enumerate_trees_min_cost(g: &Graph) -> Result<(ClusterTree, f64)> {
    let n = g.n();
    cap("n", n, MAX_TREE_N)?;
    if n == 0 {
        return Err(invalid("a tree needs at least one leaf"));
    }
    let mut memo: HashMap<u32, (f64, u32)> = HashMap::new();
    let full = (1u32 << n) - 1;
    let cost = best_split(g, full, &mut memo);
    let mut builder = TreeBuilder::new(n);
    build(full, &memo, &mut builder);
    Ok((builder.finish()?, cost))
}

fn best_split(g: &Graph, set: u32, memo: &mut HashMap<u32, (f64, u32)>) -> f64 {
    if set.count_ones() <= 1 {
        return 0.0;
    }
    if let Some(&(c, _)) = memo.get(&set) {
        return c;
    }
    let low = set & set.wrapping_neg();
    let rest = set & !low;
    let mut best = (f64::INFINITY, 0);
    // Subsets of `rest` joined with the lowest element, excluding the whole set.
    let mut sub = rest;
    loop {
        let left = sub | low;
        if left != set {
            let right = set & !left;
            let across = g
                .edges()
                .iter()
                .filter(|&&(i, j)| {
                    let (bi, bj) = (1u32 << i, 1u32 << j);
                    (left & bi != 0 && right & bj != 0) || (left & bj != 0 && right & bi != 0)
                })
                .count();
            let c = set.count_ones() as f64 * across as f64 + best_split(g, left, memo) + best_split(g, right, memo);
            if c < best.0 {
                best = (c, left);
            }
        }
        if sub == 0 {
            break;
        }
        sub = (sub - 1) & rest;
    }
    memo.insert(set, best);
    best.0
}

fn build(set: u32, memo: &HashMap<u32, (f64, u32)>, builder: &mut TreeBuilder) -> usize {
    if set.count_ones() == 1 {
        return set.trailing_zeros() as usize;
    }
    let left = memo[&set].1;
    let l = build(left, memo, builder);
    let r = build(set & !left, memo, builder);
    builder.merge(l, r, None)
}

/// Standard error of a binomial proportion estimated from `trials` draws.
pub fn binomial_se(p: f64, trials: usize) -> f64 {
    if trials == 0 {
        return f64::INFINITY;
    }
    (p * (1.0 - p) / trials as f64).sqrt()
}

/// Fraction of `trials` calls of `event` that return true, with its
/// binomial standard error.
pub fn monte_carlo_rate(trials: usize, mut event: impl FnMut(usize) -> bool) -> (f64, f64) {
    let hits = (0..trials).filter(|&t| event(t)).count();
    let p = if trials == 0 { 0.0 } else { hits as f64 / trials as f64 };
    (p, binomial_se(p, trials))
}
