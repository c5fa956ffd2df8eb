use serde::{Deserialize, Serialize};

use super::OracleParams;
use crate::embedding::{flat_set, spread, Embedding};
use crate::error::Result;
use crate::graph::{LapTerm, WeightedTerm};
use crate::mmw::{FeedbackMatrix, OracleVerdict};

/// What the flatness/balance oracle measured on an accepted candidate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BasicReport {
    /// Vertices with squared norm above the threshold.
    pub flat_violators: Vec<usize>,
    /// The remaining vertices, on which the balance is measured.
    pub support: Vec<usize>,
    /// Ordered-pair spread of the support.
    pub spread: f64,
    /// Set when the balance test failed but no separating feedback exists.
    pub caveat: Option<String>,
}

/// Checks that few vectors are long and that the short ones are spread out.
///
/// Flatness feedback is `w (|W|/n Id - sum_{i in W} e_i e_i^T)`, which is
/// zero on every unit-diagonal solution. Balance feedback is
/// `z (K_S - (beta/n) Id)` with `beta = 2 a n² - 4 |W| n`, a lower bound on
/// `<K_S, X'>` for every feasible `X'`.
pub fn flatness_balance_oracle(w: &Embedding, params: &OracleParams) -> Result<OracleVerdict<BasicReport>> {
    params.validate()?;
    let n = w.n();
    let nf = n as f64;
    let target = (1.0 + params.gamma) * params.sdp_alpha();
    let flat = flat_set(w, params.norm_threshold);
    if !flat.is_empty() && flat.len() as f64 >= params.flatness_limit(n) {
        let k = flat.len() as f64;
        let weight = target / k;
        let terms = vec![
            WeightedTerm::new(LapTerm::Identity, weight * k / nf),
            WeightedTerm::new(LapTerm::Diagonal(flat.iter().map(|&i| (i, 1.0)).collect()), -weight),
        ];
        let width = weight * (k / nf).max(1.0 - k / nf);
        return Ok(OracleVerdict::No(FeedbackMatrix::with_width(terms, 0.0, width)));
    }

    let mut is_flat = vec![false; n];
    for &i in &flat {
        is_flat[i] = true;
    }
    let support: Vec<usize> = (0..n).filter(|&i| !is_flat[i]).collect();
    let s = spread(w, &support);
    let mut report = BasicReport {
        flat_violators: flat,
        support,
        spread: s,
        caveat: None,
    };
    if s >= params.balance_threshold(n) {
        return Ok(OracleVerdict::Yes(report));
    }
    let beta = 2.0 * params.a * nf * nf - 4.0 * report.flat_violators.len() as f64 * nf;
    let q = s / 2.0;
    if beta <= q {
        report.caveat = Some(format!(
            "spread {s} below threshold but above the feasible lower bound {beta}; no separating feedback"
        ));
        return Ok(OracleVerdict::Yes(report));
    }
    let z = target / (beta - q);
    let size = report.support.len() as f64;
    let terms = vec![
        WeightedTerm::new(LapTerm::Complete(report.support), z),
        WeightedTerm::new(LapTerm::Identity, -z * beta / nf),
    ];
    let width = z * (beta / nf).max((size - beta / nf).abs());
    Ok(OracleVerdict::No(FeedbackMatrix::with_width(terms, 0.0, width)))
}
