use std::collections::BTreeMap;

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{offset, OracleParams};
use crate::embedding::{flat_set, sqdist, Embedding};
use crate::error::{Error, Result};
use crate::graph::{flow_path_decompose, max_flow_dregular, FlowResult, Graph, LapTerm, Partition, WeightedTerm};
use crate::mmw::{FeedbackMatrix, OracleVerdict};
use crate::rng::{stream, stream_rng};

/// A bipartition obtained from one max-flow trial.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowCertificate {
    /// Side 0 is the source side of the minimum cut.
    pub partition: Partition,
    pub cut_edges: usize,
    pub flow_value: f64,
    /// `sum f_st |v_s - v_t|^2` over the demand pairs of the flow.
    pub demand_mass: f64,
    /// Size of each terminal set.
    pub terminal_size: usize,
    pub repetition: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FlowOrCut {
    /// A minimum cut within the cut budget.
    Cut(FlowCertificate),
    /// Every trial routed a large flow but none separated the candidate;
    /// carries the best balanced minimum cut seen.
    Certified(FlowCertificate),
    /// No trial found terminal sets of the required size.
    Degenerate { repetitions: usize },
}

impl FlowOrCut {
    pub fn certificate(&self) -> Option<&FlowCertificate> {
        match self {
            FlowOrCut::Cut(c) | FlowOrCut::Certified(c) => Some(c),
            FlowOrCut::Degenerate { .. } => None,
        }
    }
}

/// `((1 + gamma) sdp_alpha / n) Id - D`, where `D` is the Laplacian of the
/// demand pairs `(source, sink)` of the flow's path decomposition, each
/// weighted by the flow it carries.
///
/// For a feasible `X'`, the triangle inequalities along each path give
/// `<D, X'> <= sum_e f_e |v_i - v_j|^2 <=` the objective of `X'`, so the
/// feedback is nonnegative on every `X'` of value at most `(1 + gamma) sdp_alpha`.
pub fn demand_feedback(g: &Graph, flow: &FlowResult, params: &OracleParams) -> Result<FeedbackMatrix> {
    let n = g.n();
    let mut pairs: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for path in flow_path_decompose(g, flow)? {
        let (s, t) = (path.source(), path.sink());
        if s != t {
            *pairs.entry((s.min(t), s.max(t))).or_insert(0.0) += path.amount;
        }
    }
    let level = (1.0 + params.gamma) * params.sdp_alpha();
    let mut terms = Vec::with_capacity(pairs.len() + 1);
    terms.push(WeightedTerm::new(LapTerm::Identity, level / n as f64));
    terms.extend(
        pairs
            .into_iter()
            .map(|((i, j), f)| WeightedTerm::new(LapTerm::Edge(i, j), -f)),
    );
    Ok(FeedbackMatrix::new(n, terms, level))
}

fn demand_mass(m: &FeedbackMatrix, w: &Embedding) -> f64 {
    m.terms
        .iter()
        .filter_map(|t| match t.term {
            LapTerm::Edge(i, j) => Some(-t.weight * sqdist(w, i, j)),
            _ => None,
        })
        .sum()
}

/// Terminal sets from one Gaussian direction, by a linear scan over the
/// sorted projections of `support`. If the widest gap between consecutive
/// projections that leaves at least `k_min` vertices on each side is at
/// least `sigma`, the two sides of that gap are the terminal sets.
/// Otherwise the `k` lowest and `k` highest projections are used, for the
/// largest `k` in `[k_min, k_max]` that keeps them `sigma` apart.
fn terminal_sets(
    w: &Embedding,
    support: &[usize],
    u: &[f64],
    sigma: f64,
    (k_min, k_max): (usize, usize),
) -> Option<(Vec<usize>, Vec<usize>)> {
    let mut proj: Vec<(f64, usize)> = support
        .iter()
        .map(|&i| (w.vector(i).iter().zip(u).map(|(a, b)| a * b).sum::<f64>(), i))
        .collect();
    proj.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
    let s = proj.len();
    let k = k_min.max(1);
    if s < 2 * k {
        return None;
    }
    let ids = |range: std::ops::Range<usize>| proj[range].iter().map(|p| p.1).collect::<Vec<_>>();
    let (split, gap) = (k..=s - k)
        .map(|c| (c, proj[c].0 - proj[c - 1].0))
        .fold((k, f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best });
    if gap >= sigma {
        return Some((ids(0..split), ids(split..s)));
    }
    let tail_gap = |t: usize| proj[s - t].0 - proj[t - 1].0;
    if tail_gap(k) < sigma {
        return None;
    }
    // The tail gap shrinks as the tails grow; find the last size keeping it.
    let (mut lo, mut hi) = (k, k_max.clamp(k, s / 2));
    while lo < hi {
        let mid = (lo + hi + 1) / 2;
        if tail_gap(mid) >= sigma {
            lo = mid;
        } else {
            hi = mid - 1;
        }
    }
    Some((ids(0..lo), ids(s - lo..s)))
}

/// Repeatedly projects the candidate on a random direction, routes a
/// `d_cap`-regular flow between the two ends of the projection, and either
/// returns a small balanced cut, returns the demand-pair feedback when it
/// separates the candidate, or certifies that all trials routed flow along
/// short demand pairs.
pub fn flow_or_cut(g: &Graph, w: &Embedding, params: &OracleParams) -> Result<OracleVerdict<FlowOrCut>> {
    flow_or_cut_observed(g, w, params, &mut |_| {})
}

/// [`flow_or_cut`], reporting the minimum cut of every flow trial to
/// `observe`, including trials that end in feedback.
pub fn flow_or_cut_observed(
    g: &Graph,
    w: &Embedding,
    params: &OracleParams,
    observe: &mut dyn FnMut(&FlowCertificate),
) -> Result<OracleVerdict<FlowOrCut>> {
    params.validate()?;
    let n = g.n();
    if w.n() != n {
        return Err(Error::SizeMismatch { expected: n, got: w.n() });
    }
    let flat = flat_set(w, params.norm_threshold);
    let mut is_flat = vec![false; n];
    for &i in &flat {
        is_flat[i] = true;
    }
    let support: Vec<usize> = (0..n).filter(|&i| !is_flat[i]).collect();
    let (k_min, k_max) = (params.k_min(n), params.k_max(n));
    let d_cap = params.d_cap(n);
    let margin = params.gamma * params.sdp_alpha();
    let min_side = params.a / 10.0;
    let mut best: Option<FlowCertificate> = None;

    for rep in 0..params.repetitions {
        let mut rng = stream_rng(params.seed, stream::ORACLE + offset::FLOW + rep as u64);
        let u: Vec<f64> = (0..w.d()).map(|_| StandardNormal.sample(&mut rng)).collect();
        let Some((low, high)) = terminal_sets(w, &support, &u, params.sigma(), (k_min, k_max)) else {
            continue;
        };
        let flow = max_flow_dregular(g, &low, &high, d_cap)?;
        let mut cert = FlowCertificate {
            cut_edges: flow.cut_edges(g),
            partition: flow.mincut.clone(),
            flow_value: flow.value,
            demand_mass: 0.0,
            terminal_size: low.len(),
            repetition: rep,
        };
        if flow.value <= params.cut_budget() {
            observe(&cert);
            return Ok(OracleVerdict::Yes(FlowOrCut::Cut(cert)));
        }
        let m = demand_feedback(g, &flow, params)?;
        cert.demand_mass = demand_mass(&m, w);
        observe(&cert);
        if m.inner_product(w) < -margin {
            return Ok(OracleVerdict::No(m));
        }
        let better = match &best {
            None => true,
            Some(b) => {
                let (ok_new, ok_old) = (
                    cert.partition.min_side_fraction() >= min_side,
                    b.partition.min_side_fraction() >= min_side,
                );
                (ok_new, std::cmp::Reverse(cert.cut_edges)) > (ok_old, std::cmp::Reverse(b.cut_edges))
            }
        };
        if better {
            best = Some(cert);
        }
    }
    Ok(OracleVerdict::Yes(match best {
        Some(cert) => FlowOrCut::Certified(cert),
        None => FlowOrCut::Degenerate {
            repetitions: params.repetitions,
        },
    }))
}
