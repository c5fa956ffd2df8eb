use serde::{Deserialize, Serialize};

use crate::embedding::Embedding;
use crate::error::{invalid, Result};
use crate::graph::{quadform, LapTerm, WeightedTerm};

/// Symmetric operator `M = sum_k w_k T_k` returned by an oracle, together
/// with its dual value and a declared bound `width_bound >= |M|`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeedbackMatrix {
    pub terms: Vec<WeightedTerm>,
    pub dual_value: f64,
    pub width_bound: f64,
}

impl FeedbackMatrix {
    /// Feedback whose width bound is the Gershgorin bound over `n` rows.
    pub fn new(n: usize, terms: Vec<WeightedTerm>, dual_value: f64) -> Self {
        let width_bound = gershgorin_bound(n, &terms);
        Self {
            terms,
            dual_value,
            width_bound,
        }
    }

    pub fn with_width(terms: Vec<WeightedTerm>, dual_value: f64, width_bound: f64) -> Self {
        Self {
            terms,
            dual_value,
            width_bound,
        }
    }

    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    /// `out += scale * M x` on a row-major block with `cols` columns.
    pub fn apply_block_add(&self, scale: f64, x: &[f64], cols: usize, out: &mut [f64]) {
        for t in &self.terms {
            t.term.apply_block_add(scale * t.weight, x, cols, out);
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; x.len()];
        self.apply_block_add(1.0, x, 1, &mut out);
        out
    }

    /// `<M, W^T W>`.
    pub fn inner_product(&self, w: &Embedding) -> f64 {
        self.terms.iter().map(|t| t.weight * quadform(&t.term, w)).sum()
    }

    /// Dense row-major `n x n` matrix. Test and diagnostics only.
    pub fn densify(&self, n: usize) -> Vec<f64> {
        let mut dense = vec![0.0; n * n];
        for t in &self.terms {
            t.term.densify_add(t.weight, n, &mut dense);
        }
        dense
    }
}

/// Largest absolute row sum of `sum_k w_k T_k`, bounded term by term.
pub fn gershgorin_bound(n: usize, terms: &[WeightedTerm]) -> f64 {
    let mut rows = vec![0.0; n];
    let mut global = 0.0;
    for t in terms {
        global += t.term.add_row_abs_sums(t.weight, &mut rows);
    }
    rows.iter().fold(0.0f64, |m, &r| m.max(r)) + global
}

/// `Y = (M + zeta Id) / (2 zeta)`; satisfies `0 <= Y <= Id` whenever `|M| <= zeta`.
#[derive(Clone, Debug)]
pub struct NormalizedFeedback {
    pub feedback: FeedbackMatrix,
    pub zeta: f64,
}

impl NormalizedFeedback {
    /// `out += scale * Y x`.
    pub fn apply_block_add(&self, scale: f64, x: &[f64], cols: usize, out: &mut [f64]) {
        let s = scale / (2.0 * self.zeta);
        self.feedback.apply_block_add(s, x, cols, out);
        for (o, xv) in out.iter_mut().zip(x) {
            *o += scale * 0.5 * xv;
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; x.len()];
        self.apply_block_add(1.0, x, 1, &mut out);
        out
    }

    pub fn densify(&self, n: usize) -> Vec<f64> {
        let mut dense = self.feedback.densify(n);
        for x in &mut dense {
            *x /= 2.0 * self.zeta;
        }
        for i in 0..n {
            dense[i * n + i] += 0.5;
        }
        dense
    }
}

pub fn normalize_feedback(fb: FeedbackMatrix) -> Result<NormalizedFeedback> {
    let zeta = fb.width_bound;
    if !(zeta > 0.0) || !zeta.is_finite() {
        return Err(invalid(format!("feedback width bound {zeta} must be positive and finite")));
    }
    Ok(NormalizedFeedback { feedback: fb, zeta })
}

/// Feedback `c * Id` with the given width, mostly useful in tests.
pub fn scaled_identity(c: f64, width_bound: f64) -> FeedbackMatrix {
    FeedbackMatrix::with_width(vec![WeightedTerm::new(LapTerm::Identity, c)], 0.0, width_bound)
}
