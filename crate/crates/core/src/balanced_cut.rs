//! The balanced-cut driver: sketched MMW against the stacked oracle,
//! repeated over shrinking distance scales with long edges and heavy
//! regions removed between rounds.

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use std::time::Instant;

use crate::embedding::Embedding;
use crate::error::{invalid, Error, Result};
use crate::graph::{cut_value, Graph, LapTerm, Partition, REST};
use crate::mmw::{mmw_solve, MmwConfig, MmwOutcome, OracleVerdict, TaylorDegree};
use crate::oracles::{
    flatness_balance_oracle, flow_or_cut_observed, heavy_oracle, FlowCertificate, FlowOrCut, HeavyReport, OracleParams,
};
use crate::rng::{derive_seed, stream, stream_rng};

/// Every knob of the driver. Oracle constants left at `None` take the
/// defaults of [`OracleParams::new`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DriverConfig {
    pub a: f64,
    /// Target cut value, in edges.
    pub alpha: f64,
    pub kappa: f64,
    pub delta_final: f64,
    pub seed: u64,
    pub delta0: f64,
    pub max_rounds: usize,
    pub gamma: f64,
    pub epsilon: f64,
    pub max_iters: usize,
    pub taylor_tol: f64,
    pub taylor_max: usize,
    /// Sketch dimension; `⌈40 ln n⌉` when unset.
    pub sketch_dim: Option<usize>,
    pub threads: usize,
    pub cut_threshold: f64,
    pub norm_threshold: f64,
    pub c_pair: f64,
    pub c_star: f64,
    pub c_hat: f64,
    pub c_removal: f64,
    pub triangle_factor: f64,
    pub repetitions: Option<usize>,
    pub sigma: Option<f64>,
    pub flatness_divisor: Option<f64>,
}

impl DriverConfig {
    pub fn new(a: f64, alpha: f64, seed: u64) -> Self {
        let base = OracleParams::new(2, a, alpha.max(f64::MIN_POSITIVE), seed);
        Self {
            a,
            alpha,
            kappa: 1.0,
            delta_final: 5e-5,
            seed,
            delta0: 1.0 / 200.0,
            max_rounds: 5,
            gamma: base.gamma,
            epsilon: 1.5,
            max_iters: 300,
            taylor_tol: 1e-6,
            taylor_max: 400,
            sketch_dim: None,
            threads: 1,
            cut_threshold: base.cut_threshold,
            norm_threshold: base.norm_threshold,
            c_pair: base.c_pair,
            c_star: base.c_star,
            c_hat: base.c_hat,
            c_removal: base.c_removal,
            triangle_factor: base.triangle_factor,
            repetitions: None,
            sigma: None,
            flatness_divisor: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a > 0.0 && self.a < 0.5) {
            return Err(invalid(format!("balance a = {} must lie in (0, 1/2)", self.a)));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(invalid(format!("alpha = {} must be positive", self.alpha)));
        }
        if !(self.delta_final > 0.0 && self.delta0 > 0.0) {
            return Err(invalid("distance scales must be positive"));
        }
        if self.max_rounds == 0 {
            return Err(invalid("at least one round is required"));
        }
        Ok(())
    }

    /// Number of rounds: `⌈log_100(delta0 / delta_final)⌉`, at least one and
    /// at most `max_rounds`.
    pub fn rounds(&self) -> usize {
        let t = (self.delta0 / self.delta_final).ln() / 100f64.ln();
        (t.ceil().max(1.0) as usize).min(self.max_rounds)
    }

    /// Distance scale of round `i` (1-based): `delta0 / 100^(i-1)`.
    pub fn delta(&self, round: usize) -> f64 {
        self.delta0 / 100f64.powi(round as i32 - 1)
    }

    /// Cut size at which a round accepts the flow bipartition.
    pub fn exit_threshold(&self, delta: f64, n: usize) -> f64 {
        self.cut_threshold * self.alpha * (1.0 + delta * self.kappa * (n.max(2) as f64).ln().sqrt())
    }

    fn oracle_params(&self, n_round: usize, n: usize, delta: f64, seed: u64) -> OracleParams {
        let mut p = OracleParams::new(n_round, self.a, self.alpha, seed);
        p.gamma = self.gamma;
        p.delta = delta;
        p.kappa = self.kappa;
        p.ell = n_round as f64 / n as f64;
        p.n_ref = n;
        p.c_pair = self.c_pair;
        p.c_star = self.c_star;
        p.c_hat = self.c_hat;
        p.c_removal = self.c_removal;
        p.cut_threshold = self.cut_threshold;
        p.norm_threshold = self.norm_threshold;
        p.triangle_factor = self.triangle_factor;
        p.sigma = self.sigma;
        p.flatness_divisor = self.flatness_divisor;
        if let Some(r) = self.repetitions {
            p.repetitions = r;
        }
        p
    }

    fn mmw_config(&self, n_round: usize, sdp_alpha: f64, seed: u64) -> MmwConfig {
        MmwConfig {
            epsilon: self.epsilon,
            max_iters: self.max_iters,
            taylor: TaylorDegree::Adaptive {
                tol: self.taylor_tol,
                max: self.taylor_max,
            },
            r: n_round as f64,
            d: self.sketch_dim.unwrap_or_else(|| MmwConfig::default_dimension(n_round)),
            gamma: self.gamma,
            alpha: sdp_alpha,
            zeta: 1.0,
            seed,
            enforce_theory: false,
            threads: self.threads,
        }
    }
}

/// How a round ended.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoundOutcome {
    /// The flow bipartition was within the exit threshold.
    Exit,
    /// Long edges and the heavy sets were removed.
    Removed,
    /// Last round; its flow bipartition is used although above the threshold.
    LastRound,
    Exhausted,
    /// An oracle could neither accept nor separate.
    Diagnostic,
    /// Too few vertices remained to run.
    Empty,
}

/// One line of the provenance ledger.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: usize,
    pub delta: f64,
    pub n_vertices: usize,
    pub m_edges: usize,
    pub mmw_iterations: usize,
    pub feedback: FeedbackCounts,
    pub max_taylor_degree: usize,
    pub outcome: RoundOutcome,
    /// Cut edges of the round's flow bipartition, within the round graph.
    pub flow_cut: Option<usize>,
    pub exit_threshold: f64,
    /// Long edges removed after the round.
    pub long_edges: usize,
    /// Short edges between different parts of the removal tripartition.
    pub tripartition_cut: usize,
    pub p1_size: usize,
    pub p2_size: usize,
    pub detail: Option<String>,
    /// Wall-clock time of the round; not serialized, so outputs stay reproducible.
    #[serde(skip)]
    pub elapsed_ms: f64,
}

/// Feedback returned during a round, by oracle.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeedbackCounts {
    pub flatness: usize,
    pub balance: usize,
    pub flow: usize,
    pub heavy: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CutResult {
    pub partition: Partition,
    /// Cut edges of `partition` in the input graph.
    pub value: usize,
    /// Smaller side over `n`.
    pub balance: f64,
    pub sides: [usize; 2],
    /// `balance >= a / 10`.
    pub balanced: bool,
    /// The MMW iteration cap was reached in some round.
    pub exhausted: bool,
    /// Set when the cut is a fallback rather than an oracle certificate.
    pub degraded: Option<String>,
    pub rounds: Vec<RoundRecord>,
    pub alpha: f64,
    pub seed: u64,
}

impl CutResult {
    /// Removed long edges plus tripartition cuts plus the final flow cut:
    /// an upper bound on `value` for certified runs.
    pub fn ledger_bound(&self) -> usize {
        self.rounds
            .iter()
            .map(|r| r.long_edges + r.tripartition_cut + if r.outcome == RoundOutcome::Removed { 0 } else { r.flow_cut.unwrap_or(0) })
            .sum()
    }
}

/// Surviving graph and removal history of the driver.
#[derive(Clone, Debug)]
pub struct DriverState {
    pub round: usize,
    pub alive: Vec<usize>,
    pub removed_edge: Vec<bool>,
    /// Removed `(P1, P2)` pairs, in global ids, one per round.
    pub removed_sets: Vec<(Vec<usize>, Vec<usize>)>,
    pub deltas: Vec<f64>,
    /// Long edges plus tripartition cut edges removed so far.
    pub budget_spent: usize,
}

impl DriverState {
    fn new(g: &Graph) -> Self {
        Self {
            round: 0,
            alive: (0..g.n()).collect(),
            removed_edge: vec![false; g.m()],
            removed_sets: Vec::new(),
            deltas: Vec::new(),
            budget_spent: 0,
        }
    }

    fn round_graph(&self, g: &Graph) -> Graph {
        g.induced_filtered(&self.alive, |e| !self.removed_edge[e]).0
    }
}

struct Accepted {
    flow: FlowOrCut,
    heavy: Option<HeavyReport>,
}

/// Balanced certificates beat unbalanced ones; balanced ones are ranked by
/// cut size, unbalanced ones by their smaller side.
fn better(new: &FlowCertificate, old: &FlowCertificate, min_side: f64) -> bool {
    let key = |c: &FlowCertificate| {
        let side = c.partition.min_side_fraction();
        if side >= min_side {
            (1, -(c.cut_edges as f64))
        } else {
            (0, side)
        }
    };
    let (a, b) = (key(new), key(old));
    a.0 > b.0 || (a.0 == b.0 && a.1 > b.1)
}

/// Median split of the projection of `w` on a random direction; ids in
/// order when there is no iterate.
fn median_split(w: Option<&Embedding>, n: usize, seed: u64) -> Vec<bool> {
    let mut order: Vec<usize> = (0..n).collect();
    if let Some(w) = w {
        let mut rng = stream_rng(seed, stream::DRIVER);
        let u: Vec<f64> = (0..w.d()).map(|_| StandardNormal.sample(&mut rng)).collect();
        let proj: Vec<f64> = (0..n).map(|i| w.vector(i).iter().zip(&u).map(|(a, b)| a * b).sum()).collect();
        order.sort_by(|&i, &j| proj[i].total_cmp(&proj[j]).then(i.cmp(&j)));
    }
    let mut side = vec![false; n];
    for &v in &order[n / 2..] {
        side[v] = true;
    }
    side
}

/// Balanced cut via the rounded vector program.
///
/// Each round solves the program on the surviving graph with the stacked
/// oracle (flatness/balance, then flow-or-cut, then heavy-vertex removal).
/// The round ends the run when its flow bipartition cuts at most
/// [`DriverConfig::exit_threshold`] edges; otherwise the long edges and the
/// heavy sets `P1`, `P2` are removed and the next round runs at a 100 times
/// smaller scale. Removed sets are finally added, largest first, to the
/// lighter side.
pub fn solve_balanced_cut(g: &Graph, cfg: &DriverConfig) -> Result<CutResult> {
    cfg.validate()?;
    let n = g.n();
    let mut state = DriverState::new(g);
    let mut records = Vec::new();
    let mut exhausted = false;
    let mut degraded = None;
    // Final side of every surviving vertex, in global ids.
    let mut side: Vec<Option<bool>> = vec![None; n];
    let total_rounds = cfg.rounds();

    for round in 1..=total_rounds {
        state.round = round;
        let delta = cfg.delta(round);
        state.deltas.push(delta);
        let sub = state.round_graph(g);
        let n_round = sub.n();
        let threshold = cfg.exit_threshold(delta, n);
        let mut record = RoundRecord {
            round,
            delta,
            n_vertices: n_round,
            m_edges: sub.m(),
            mmw_iterations: 0,
            feedback: FeedbackCounts::default(),
            max_taylor_degree: 0,
            outcome: RoundOutcome::Empty,
            flow_cut: None,
            exit_threshold: threshold,
            long_edges: 0,
            tripartition_cut: 0,
            p1_size: 0,
            p2_size: 0,
            detail: None,
            elapsed_ms: 0.0,
        };
        if n_round < 2 {
            for &v in &state.alive {
                side[v] = Some(false);
            }
            records.push(record);
            break;
        }

        let round_seed = derive_seed(cfg.seed, round as u64);
        let base = cfg.oracle_params(n_round, n, delta, round_seed);
        let mmw = cfg.mmw_config(n_round, base.sdp_alpha(), round_seed);
        let min_side = cfg.a / 10.0;
        let mut best: Option<FlowCertificate> = None;
        let mut last_iterate: Option<Embedding> = None;
        let mut counts = FeedbackCounts::default();
        let started = Instant::now();
        let solved = mmw_solve(n_round, &mmw, |w, t| {
            let mut params = base.clone();
            params.seed = derive_seed(round_seed, t as u64);
            last_iterate = Some(w.clone());
            if let OracleVerdict::No(m) = flatness_balance_oracle(w, &params)? {
                if matches!(m.terms.get(1).map(|t| &t.term), Some(LapTerm::Diagonal(_))) {
                    counts.flatness += 1;
                } else {
                    counts.balance += 1;
                }
                return Ok(OracleVerdict::No(m));
            }
            let mut observe = |c: &FlowCertificate| {
                if best.as_ref().map_or(true, |b| better(c, b, min_side)) {
                    best = Some(c.clone());
                }
            };
            let flow = match flow_or_cut_observed(&sub, w, &params, &mut observe)? {
                OracleVerdict::No(m) => {
                    counts.flow += 1;
                    return Ok(OracleVerdict::No(m));
                }
                OracleVerdict::Yes(flow) => flow,
            };
            if matches!(flow, FlowOrCut::Cut(_)) {
                return Ok(OracleVerdict::Yes(Accepted { flow, heavy: None }));
            }
            match heavy_oracle(&sub, w, &params)? {
                OracleVerdict::No(m) => {
                    counts.heavy += 1;
                    Ok(OracleVerdict::No(m))
                }
                OracleVerdict::Yes(report) => Ok(OracleVerdict::Yes(Accepted {
                    flow,
                    heavy: Some(report),
                })),
            }
        });

        let accepted = match solved {
            Ok(MmwOutcome::Yes { payload, iteration, log, .. }) => {
                record.mmw_iterations = iteration;
                record.max_taylor_degree = log.iter().map(|r| r.taylor_degree).max().unwrap_or(0);
                Some(payload)
            }
            Ok(MmwOutcome::Exhausted { log, .. }) => {
                record.mmw_iterations = log.len();
                record.max_taylor_degree = log.iter().map(|r| r.taylor_degree).max().unwrap_or(0);
                record.outcome = RoundOutcome::Exhausted;
                exhausted = true;
                None
            }
            Err(Error::Oracle { iteration, source }) if matches!(*source, Error::OracleDiagnostic(_)) => {
                record.mmw_iterations = iteration;
                record.outcome = RoundOutcome::Diagnostic;
                record.detail = Some(source.to_string());
                degraded = Some(source.to_string());
                None
            }
            Err(e) => return Err(e),
        };

        record.feedback = counts;
        record.elapsed_ms = started.elapsed().as_secs_f64() * 1e3;
        let certificate = accepted
            .as_ref()
            .and_then(|acc| acc.flow.certificate().cloned())
            .or_else(|| best.clone().filter(|c| c.partition.min_side_fraction() >= min_side));
        record.flow_cut = certificate.as_ref().map(|c| c.cut_edges);
        let heavy = accepted.and_then(|acc| acc.heavy);

        let exit_now = certificate.as_ref().is_some_and(|c| c.cut_edges as f64 <= threshold);
        let remove = !exit_now && round < total_rounds && heavy.is_some() && record.outcome == RoundOutcome::Empty;
        if remove {
            let report = heavy.expect("checked above");
            let outcome = &report.outcome;
            let global = &state.alive;
            let edge_ids: Vec<usize> = sub
                .edges()
                .iter()
                .map(|&(i, j)| g.edge_index(global[i], global[j]).expect("round graph edge exists in the input"))
                .collect();
            for &e in &outcome.long_edges {
                state.removed_edge[edge_ids[e]] = true;
            }
            let (p1, p2) = outcome.removed();
            let p1: Vec<usize> = p1.into_iter().map(|v| global[v]).collect();
            let p2: Vec<usize> = p2.into_iter().map(|v| global[v]).collect();
            record.outcome = RoundOutcome::Removed;
            record.long_edges = outcome.long_edges.len();
            record.tripartition_cut = outcome.cut_outside_long;
            record.p1_size = p1.len();
            record.p2_size = p2.len();
            state.budget_spent += record.long_edges + record.tripartition_cut;
            let keep: Vec<usize> = (0..n_round)
                .filter(|&v| outcome.tripartition.label(v) == REST)
                .map(|v| global[v])
                .collect();
            state.alive = keep;
            state.removed_sets.push((p1, p2));
            records.push(record);
            if state.alive.is_empty() {
                break;
            }
            continue;
        }

        let local_side: Vec<bool> = match &certificate {
            Some(c) => c.partition.labels().iter().map(|&l| l != 0).collect(),
            None => {
                degraded.get_or_insert_with(|| "no flow certificate; median split of the last iterate".into());
                median_split(last_iterate.as_ref(), n_round, round_seed)
            }
        };
        if record.outcome == RoundOutcome::Empty {
            record.outcome = if exit_now { RoundOutcome::Exit } else { RoundOutcome::LastRound };
        }
        for (k, &v) in state.alive.iter().enumerate() {
            side[v] = Some(local_side[k]);
        }
        records.push(record);
        break;
    }

    // Removed sets, largest first, each to the lighter side.
    let mut units: Vec<Vec<usize>> = state
        .removed_sets
        .iter()
        .flat_map(|(p1, p2)| [p1.clone(), p2.clone()])
        .filter(|u| !u.is_empty())
        .collect();
    units.sort_by_key(|u| std::cmp::Reverse(u.len()));
    let mut sizes = [0usize; 2];
    for s in side.iter().flatten() {
        sizes[*s as usize] += 1;
    }
    for unit in units {
        let target = sizes[1] < sizes[0];
        for &v in &unit {
            side[v] = Some(target);
        }
        sizes[target as usize] += unit.len();
    }
    let side: Vec<bool> = side.into_iter().map(|s| s.unwrap_or(false)).collect();
    let partition = Partition::bipartition(&side);
    let value = cut_value(g, &partition)?;
    let counts = partition.counts();
    let sides = [counts[0], counts[1]];
    let balance = if n == 0 { 0.0 } else { sides[0].min(sides[1]) as f64 / n as f64 };
    Ok(CutResult {
        partition,
        value,
        balance,
        sides,
        balanced: balance >= cfg.a / 10.0,
        exhausted,
        degraded,
        rounds: records,
        alpha: cfg.alpha,
        seed: cfg.seed,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlphaEstimate {
    pub alpha: f64,
    /// Every value tried, in order, with the cut it produced.
    pub trials: Vec<(f64, usize)>,
    pub result: CutResult,
}

/// Geometric search over `alpha ∈ {m, m/2, m/4, ...}`, down to the first
/// value whose threshold is below one edge. Returns the smallest value whose
/// run gives a balanced cut within `cut_threshold alpha (1 + delta kappa
/// sqrt(ln n))`, with the smallest cut among the successful runs. The grid
/// is bisected, assuming success is monotone in `alpha`. Falls back to
/// `alpha = m`; the empty graph gets `alpha = 0`.
pub fn estimate_alpha(g: &Graph, cfg: &DriverConfig) -> Result<AlphaEstimate> {
    let m = g.m();
    let run = |alpha: f64| -> Result<(bool, CutResult)> {
        let mut c = cfg.clone();
        c.alpha = alpha;
        let result = solve_balanced_cut(g, &c)?;
        let delta = result.rounds.last().map_or(c.delta0, |r| r.delta);
        let ok = result.balanced && result.value as f64 <= c.exit_threshold(delta, g.n());
        Ok((ok, result))
    };
    if m == 0 {
        let (_, result) = run(1.0)?;
        return Ok(AlphaEstimate {
            alpha: 0.0,
            trials: vec![(0.0, result.value)],
            result,
        });
    }
    let grid = |k: usize| m as f64 / 2f64.powi(k as i32);
    // Stop at the first alpha whose threshold admits only the empty cut.
    let threshold = |k: usize| {
        let mut c = cfg.clone();
        c.alpha = grid(k);
        c.exit_threshold(c.delta0, g.n())
    };
    let last = (0..).find(|&k| threshold(k) < 1.0 || k >= 64).unwrap_or(0);
    let mut trials = Vec::new();
    let (ok, top) = run(grid(0))?;
    trials.push((grid(0), top.value));
    if !ok {
        return Ok(AlphaEstimate {
            alpha: m as f64,
            trials,
            result: top,
        });
    }
    // grid(lo) succeeds; grid(hi) fails or lies past the end.
    let (mut lo, mut hi, mut best) = (0, last + 1, top);
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        let (ok, result) = run(grid(mid))?;
        trials.push((grid(mid), result.value));
        if ok {
            lo = mid;
            if result.value <= best.value {
                best = result;
            }
        } else {
            hi = mid;
        }
    }
    Ok(AlphaEstimate {
        alpha: grid(lo),
        trials,
        result: best,
    })
}
