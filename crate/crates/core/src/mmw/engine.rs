use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::accumulated::FeedbackSum;
use super::feedback::{normalize_feedback, FeedbackMatrix};
use super::taylor::{taylor_block, TaylorDegree};
use crate::embedding::{Embedding, GaussianSketch};
use crate::error::{invalid, Error, Result};
use crate::rng::stream;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MmwConfig {
    pub epsilon: f64,
    pub max_iters: usize,
    pub taylor: TaylorDegree,
    /// Trace of every iterate.
    pub r: f64,
    /// Sketch dimension.
    pub d: usize,
    pub gamma: f64,
    /// Target value of the program; enters the step-size condition.
    pub alpha: f64,
    /// Declared width of the oracle; enters the step-size condition.
    pub zeta: f64,
    pub seed: u64,
    /// Reject configurations that violate the step-size, iteration and
    /// degree conditions of the convergence analysis.
    pub enforce_theory: bool,
    pub threads: usize,
}

impl MmwConfig {
    /// Default sketch dimension `⌈40 ln n⌉`.
    pub fn default_dimension(n: usize) -> usize {
        ((40.0 * (n.max(2) as f64).ln()).ceil() as usize).max(1)
    }

    /// Parameters satisfying the convergence analysis exactly:
    /// `epsilon = gamma alpha / (2 zeta r)`, `T = ⌈2 ln n / epsilon²⌉`,
    /// `p = ⌈10 ln n / epsilon⌉`.
    pub fn theoretical(n: usize, alpha: f64, gamma: f64, zeta: f64, r: f64, seed: u64) -> Self {
        let ln_n = (n.max(2) as f64).ln();
        let epsilon = gamma * alpha / (2.0 * zeta * r);
        Self {
            epsilon,
            max_iters: (2.0 * ln_n / (epsilon * epsilon)).ceil() as usize,
            taylor: TaylorDegree::Fixed((10.0 * ln_n / epsilon).ceil() as usize),
            r,
            d: Self::default_dimension(n),
            gamma,
            alpha,
            zeta,
            seed,
            enforce_theory: true,
            threads: 1,
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(invalid(format!("step size {} must be positive", self.epsilon)));
        }
        if self.max_iters == 0 || self.d == 0 || self.threads == 0 {
            return Err(invalid("iteration cap, sketch dimension and thread count must be positive"));
        }
        if !(self.r > 0.0) {
            return Err(invalid(format!("trace bound {} must be positive", self.r)));
        }
        if self.taylor == TaylorDegree::Fixed(0) {
            return Err(invalid("Taylor degree must be at least 1"));
        }
        if !self.enforce_theory {
            return Ok(());
        }
        let ln_n = (n.max(2) as f64).ln();
        let eps_max = self.gamma * self.alpha / (2.0 * self.zeta * self.r);
        if self.epsilon > eps_max * (1.0 + 1e-12) {
            return Err(invalid(format!("step size {} exceeds gamma alpha / (2 zeta r) = {eps_max}", self.epsilon)));
        }
        let t_min = 2.0 * ln_n / (self.epsilon * self.epsilon);
        if (self.max_iters as f64) < t_min - 1e-9 {
            return Err(invalid(format!("iteration cap {} is below 2 ln n / epsilon² = {t_min}", self.max_iters)));
        }
        let p_min = 10.0 * ln_n / self.epsilon;
        if let TaylorDegree::Fixed(p) = self.taylor {
            if (p as f64) < p_min - 1e-9 {
                return Err(invalid(format!("Taylor degree {p} is below 10 ln n / epsilon = {p_min}")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum OracleVerdict<P> {
    Yes(P),
    No(FeedbackMatrix),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictTag {
    Yes,
    No,
}

/// One line of the run log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub t: usize,
    pub verdict: VerdictTag,
    pub dual_value: Option<f64>,
    /// `<M, X>` for the iterate that triggered a No.
    pub candidate_value: Option<f64>,
    pub feedback_term_count: usize,
    pub width_bound: Option<f64>,
    pub taylor_degree: usize,
    pub wallclock_ms: f64,
}

pub enum MmwOutcome<P> {
    Yes {
        payload: P,
        iterate: Embedding,
        iteration: usize,
        log: Vec<IterationRecord>,
    },
    Exhausted {
        last_iterate: Embedding,
        log: Vec<IterationRecord>,
    },
}

impl<P> MmwOutcome<P> {
    pub fn log(&self) -> &[IterationRecord] {
        match self {
            MmwOutcome::Yes { log, .. } | MmwOutcome::Exhausted { log, .. } => log,
        }
    }
}

/// Sketched iterate `W` with rows `v_i`, where `W^T W` approximates
/// `r exp(epsilon sum_t Y_t) / Tr(...)` and the trace is exactly `r`.
///
/// The identity part of the sum only rescales the exponential, so it is
/// dropped, and the rest is centered on its Gershgorin interval before the
/// truncated series is applied. Returns the iterate and the degree used.
pub fn next_iterate(sum: &FeedbackSum, cfg: &MmwConfig, sketch_stream: u64) -> Result<(Embedding, usize)> {
    let n = sum.n();
    let d = cfg.d;
    let phi_t = GaussianSketch::new(d, cfg.seed, stream::SKETCH + sketch_stream).transposed(n);
    let (lo, hi) = sum.spectral_interval();
    let scale = cfg.epsilon / 2.0;
    let shift = 0.5 * (lo + hi);
    let half_width = scale * 0.5 * (hi - lo);
    let (mut block, degree) = if sum.count() == 0 || hi <= lo {
        (phi_t, 0)
    } else {
        let p = cfg.taylor.degree_for(half_width);
        (apply_columns(sum, &phi_t, n, d, p, scale, shift, cfg.threads), p)
    };
    let fro: f64 = block.iter().map(|x| x * x).sum();
    if !(fro > 0.0) || !fro.is_finite() {
        return Err(Error::Numerical(format!("iterate normalization failed (squared norm {fro})")));
    }
    let factor = (cfg.r / fro).sqrt();
    for x in &mut block {
        *x *= factor;
    }
    Ok((Embedding::from_rows(d, block, cfg.r)?, degree))
}

/// Runs the series on column groups, one per worker; each column is
/// independent, so the result does not depend on the thread count.
#[allow(clippy::too_many_arguments)]
fn apply_columns(
    sum: &FeedbackSum,
    v: &[f64],
    n: usize,
    d: usize,
    p: usize,
    scale: f64,
    shift: f64,
    threads: usize,
) -> Vec<f64> {
    let threads = threads.clamp(1, d);
    let run = |cols: usize, block: &[f64]| {
        let apply = |x: &[f64], out: &mut [f64]| sum.apply_without_identity(x, cols, out);
        taylor_block(&apply, block, p, scale, shift)
    };
    if threads == 1 {
        return run(d, v);
    }
    let bounds: Vec<(usize, usize)> = (0..threads).map(|k| (k * d / threads, (k + 1) * d / threads)).collect();
    let parts: Vec<Vec<f64>> = std::thread::scope(|scope| {
        let handles: Vec<_> = bounds
            .iter()
            .map(|&(c0, c1)| {
                let run = &run;
                scope.spawn(move || {
                    let w = c1 - c0;
                    let mut sub = Vec::with_capacity(n * w);
                    for i in 0..n {
                        sub.extend_from_slice(&v[i * d + c0..i * d + c1]);
                    }
                    run(w, &sub)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
    });
    let mut out = vec![0.0; n * d];
    for (&(c0, c1), part) in bounds.iter().zip(&parts) {
        let w = c1 - c0;
        for i in 0..n {
            out[i * d + c0..i * d + c1].copy_from_slice(&part[i * w..(i + 1) * w]);
        }
    }
    out
}

/// Matrix multiplicative weights driven by `oracle`, which sees each
/// iterate and its index and either accepts it or returns feedback.
pub fn mmw_solve<P>(
    n: usize,
    cfg: &MmwConfig,
    mut oracle: impl FnMut(&Embedding, usize) -> Result<OracleVerdict<P>>,
) -> Result<MmwOutcome<P>> {
    cfg.validate(n)?;
    let mut sum = FeedbackSum::new(n);
    let mut log = Vec::new();
    let mut last = None;
    for t in 1..=cfg.max_iters {
        let start = Instant::now();
        sum.prepared();
        let (w, degree) = next_iterate(&sum, cfg, t as u64)?;
        let verdict = oracle(&w, t).map_err(|e| Error::Oracle {
            iteration: t,
            source: Box::new(e),
        })?;
        match verdict {
            OracleVerdict::Yes(payload) => {
                log.push(IterationRecord {
                    t,
                    verdict: VerdictTag::Yes,
                    dual_value: None,
                    candidate_value: None,
                    feedback_term_count: 0,
                    width_bound: None,
                    taylor_degree: degree,
                    wallclock_ms: start.elapsed().as_secs_f64() * 1e3,
                });
                return Ok(MmwOutcome::Yes {
                    payload,
                    iterate: w,
                    iteration: t,
                    log,
                });
            }
            OracleVerdict::No(fb) => {
                log.push(IterationRecord {
                    t,
                    verdict: VerdictTag::No,
                    dual_value: Some(fb.dual_value),
                    candidate_value: Some(fb.inner_product(&w)),
                    feedback_term_count: fb.term_count(),
                    width_bound: Some(fb.width_bound),
                    taylor_degree: degree,
                    wallclock_ms: start.elapsed().as_secs_f64() * 1e3,
                });
                sum.add(&normalize_feedback(fb)?);
                last = Some(w);
            }
        }
    }
    Ok(MmwOutcome::Exhausted {
        last_iterate: last.expect("at least one iteration ran"),
        log,
    })
}
