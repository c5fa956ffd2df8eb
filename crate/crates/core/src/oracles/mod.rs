//! Separation oracles for the balanced-cut vector program.
//!
//! Three oracles are applied in order to each candidate embedding:
//! [`flatness_balance_oracle`], [`flow_or_cut`] and [`heavy_oracle`]. Each
//! either accepts the candidate with an oracle-specific payload or returns
//! a [`FeedbackMatrix`](crate::mmw::FeedbackMatrix) `M` with
//! `<M, X'> >= 0` for every feasible `X'` of value at most `(1 + gamma)`
//! times the target, and `<M, X> < -gamma` times the target for the
//! candidate itself.
//!
//! Cut sizes are counted in edges. The vector program charges `4` per cut
//! edge for the `±u` embedding, so every feedback uses
//! [`OracleParams::sdp_alpha`] `= 4 alpha`.

mod basic;
mod flow;
mod heavy;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

pub use basic::{flatness_balance_oracle, BasicReport};
pub use flow::{demand_feedback, flow_or_cut, flow_or_cut_observed, FlowCertificate, FlowOrCut};
pub use heavy::{
    carve_with_radius, detect_heavy, heavy_oracle, heavy_removal, triangle_feedback, BalanceRule, CarvedSet,
    HeavyMap, HeavyReport, RemovalOutcome,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleParams {
    /// Balance parameter: both sides of the target cut have at least `a n` vertices.
    pub a: f64,
    /// Target cut size in edges.
    pub alpha: f64,
    /// Separation margin: No verdicts certify `<M, X> < -gamma * sdp_alpha`.
    pub gamma: f64,
    /// Current length scale, in `(0, 1/200]`.
    pub delta: f64,
    pub kappa: f64,
    /// Fraction of the original vertices still present.
    pub ell: f64,
    /// Vertex count of the original graph; heavy-vertex thresholds scale with it.
    pub n_ref: usize,
    /// Pairwise separation constant for carving centers.
    pub c_pair: f64,
    /// Flow and triangle-feedback constant of the heavy-vertex oracle.
    pub c_star: f64,
    /// Flow size above which the long-edge audit looks for feedback.
    pub c_hat: f64,
    /// Constant of the removal cut bound `c_removal (alpha/delta)(1 + ell/delta)`.
    pub c_removal: f64,
    /// Repetitions of every randomized trial.
    pub repetitions: usize,
    /// Projection gap between the two flow terminal sets; `a/10` when unset.
    pub sigma: Option<f64>,
    /// Terminal capacity of the flow-or-cut flows; derived when unset.
    pub d_cap: Option<f64>,
    /// Cuts of at most `cut_threshold * alpha` edges are accepted.
    pub cut_threshold: f64,
    /// Squared norm above which a vector counts as non-flat.
    pub norm_threshold: f64,
    /// At most `n / flatness_divisor` non-flat vectors are tolerated; `ln² n` when unset.
    pub flatness_divisor: Option<f64>,
    /// Minimum ordered-pair spread of the flat vectors; `2 a n²` when unset.
    pub balance_threshold: Option<f64>,
    /// Harvested triples must violate the triangle inequality by this factor.
    pub triangle_factor: f64,
    pub seed: u64,
}

impl OracleParams {
    pub fn new(n: usize, a: f64, alpha: f64, seed: u64) -> Self {
        let ln = (n.max(3) as f64).ln();
        Self {
            a,
            alpha,
            gamma: 0.1,
            delta: 1.0 / 200.0,
            kappa: 1.0,
            ell: 1.0,
            n_ref: n,
            c_pair: 200.0,
            c_star: 16.0,
            c_hat: 8.0,
            c_removal: 8.0,
            repetitions: ((ln * ln).ceil() as usize).max(1),
            sigma: None,
            d_cap: None,
            cut_threshold: 4.0,
            norm_threshold: 2.0,
            flatness_divisor: None,
            balance_threshold: None,
            triangle_factor: 10.0,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a > 0.0 && self.a < 0.5) {
            return Err(invalid(format!("balance parameter a = {} must lie in (0, 1/2)", self.a)));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(invalid(format!("alpha = {} must be positive", self.alpha)));
        }
        if !(self.delta > 0.0 && self.delta <= 1.0 / 200.0 + 1e-15) {
            return Err(invalid(format!("delta = {} must lie in (0, 1/200]", self.delta)));
        }
        if !(self.ell > 0.0 && self.ell <= 1.0 + 1e-12) {
            return Err(invalid(format!("ell = {} must lie in (0, 1]", self.ell)));
        }
        if self.repetitions == 0 {
            return Err(invalid("at least one repetition is required"));
        }
        if !(self.gamma > 0.0) || !(self.cut_threshold > 0.0) || !(self.c_pair > 0.0) {
            return Err(invalid("gamma, cut_threshold and c_pair must be positive"));
        }
        Ok(())
    }

    /// Target value of the vector program: `4 alpha`.
    pub fn sdp_alpha(&self) -> f64 {
        4.0 * self.alpha
    }

    pub fn sigma(&self) -> f64 {
        self.sigma.unwrap_or(self.a / 10.0)
    }

    /// Largest tolerated number of non-flat vectors among `n`.
    pub fn flatness_limit(&self, n: usize) -> f64 {
        let ln = (n.max(3) as f64).ln();
        n as f64 / self.flatness_divisor.unwrap_or(ln * ln)
    }

    /// Ordered-pair spread the flat vectors must reach.
    pub fn balance_threshold(&self, n: usize) -> f64 {
        self.balance_threshold.unwrap_or(2.0 * self.a * (n as f64).powi(2))
    }

    /// Minimum size of each flow terminal set.
    pub fn k_min(&self, n: usize) -> usize {
        ((self.a * n as f64 / 2.0).ceil() as usize).max(1)
    }

    /// Largest size of each terminal set when the projection has no wide gap.
    pub fn k_max(&self, n: usize) -> usize {
        ((self.a * n as f64).ceil() as usize).max(self.k_min(n))
    }

    /// Terminal capacity. The default `2 cut_threshold alpha / k_min` makes
    /// any cut of at most `cut_threshold alpha` keep half of each terminal
    /// set on its side, so accepted cuts are `a/8`-balanced.
    pub fn d_cap(&self, n: usize) -> f64 {
        self.d_cap
            .unwrap_or(2.0 * self.cut_threshold * self.alpha / self.k_min(n) as f64)
    }

    /// Largest cut accepted by flow-or-cut.
    pub fn cut_budget(&self) -> f64 {
        self.cut_threshold * self.alpha
    }

    /// `(alpha / delta)(1 + ell / delta)`, the scale of every removal bound.
    pub fn removal_scale(&self) -> f64 {
        self.alpha / self.delta * (1.0 + self.ell / self.delta)
    }
}

/// Stream offsets for the randomized trials, relative to `stream::ORACLE`.
pub(crate) mod offset {
    pub const FLOW: u64 = 0;
    pub const AUDIT: u64 = 1 << 16;
    pub const REMOVAL: u64 = 2 << 16;
}
