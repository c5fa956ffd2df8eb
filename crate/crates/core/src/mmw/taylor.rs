use serde::{Deserialize, Serialize};

use super::feedback::NormalizedFeedback;
use crate::error::{invalid, Result};

/// Degree policy for the truncated exponential.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaylorDegree {
    Fixed(usize),
    /// Smallest degree whose remainder bound `s^(p+1)/(p+1)!` is at most
    /// `tol`, where `s` bounds the norm of the (centered) exponent.
    Adaptive { tol: f64, max: usize },
}

impl TaylorDegree {
    pub fn degree_for(&self, s: f64) -> usize {
        match *self {
            TaylorDegree::Fixed(p) => p,
            TaylorDegree::Adaptive { tol, max } => adaptive_degree(s, tol, max),
        }
    }
}

pub fn adaptive_degree(s: f64, tol: f64, max: usize) -> usize {
    let mut term = s; // s^(p+1)/(p+1)! at p = 0
    let mut p = 0;
    while term > tol && p < max {
        p += 1;
        term *= s / (p + 1) as f64;
    }
    p.max(1)
}

/// Truncated Taylor series `P_p(scale * (B - shift Id)) v` for a row-major
/// block `v` with `cols` columns, evaluated by Horner's rule. `apply_b`
/// overwrites its second argument with `B x`.
pub fn taylor_block(
    apply_b: &dyn Fn(&[f64], &mut [f64]),
    v: &[f64],
    p: usize,
    scale: f64,
    shift: f64,
) -> Vec<f64> {
    let mut r = v.to_vec();
    let mut tmp = vec![0.0; v.len()];
    for k in (1..=p).rev() {
        apply_b(&r, &mut tmp);
        let c = scale / k as f64;
        for ((t, &ri), &vi) in tmp.iter_mut().zip(&r).zip(v) {
            *t = vi + c * (*t - shift * ri);
        }
        std::mem::swap(&mut r, &mut tmp);
    }
    r
}

/// `P_p((epsilon / 2) * sum_t Y_t) v`.
pub fn taylor_exp_apply(yops: &[NormalizedFeedback], epsilon: f64, p: usize, v: &[f64]) -> Result<Vec<f64>> {
    if p == 0 {
        return Err(invalid("Taylor degree must be at least 1"));
    }
    let apply = |x: &[f64], out: &mut [f64]| {
        out.fill(0.0);
        for y in yops {
            y.apply_block_add(1.0, x, 1, out);
        }
    };
    Ok(taylor_block(&apply, v, p, epsilon / 2.0, 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{LapTerm, WeightedTerm};
    use crate::mmw::feedback::{normalize_feedback, FeedbackMatrix};
    use approx::assert_abs_diff_eq;

    #[test]
    fn empty_sum_is_identity() {
        let v = [1.0, -2.0, 3.0];
        assert_eq!(taylor_exp_apply(&[], 0.5, 4, &v).unwrap(), v.to_vec());
        assert!(taylor_exp_apply(&[], 0.5, 0, &v).is_err());
    }

    #[test]
    fn diagonal_exponential() {
        // (epsilon/2) * Y = diag(ln 2, 0) with Y = (M + zeta)/(2 zeta), epsilon = 2, zeta = 1:
        // M = diag(2 ln 2 - 1, -1).
        let m = FeedbackMatrix::with_width(
            vec![WeightedTerm::new(
                LapTerm::Diagonal(vec![(0, 2.0 * 2f64.ln() - 1.0), (1, -1.0)]),
                1.0,
            )],
            0.0,
            1.0,
        );
        let y = normalize_feedback(m).unwrap();
        let out = taylor_exp_apply(&[y], 2.0, 30, &[1.0, 1.0]).unwrap();
        assert_abs_diff_eq!(out[0], 2.0, epsilon = 1e-9);
        assert_abs_diff_eq!(out[1], 1.0, epsilon = 1e-9);
    }

    #[test]
    fn adaptive_degree_meets_tolerance() {
        for s in [0.1, 1.0, 5.0, 20.0] {
            let p = adaptive_degree(s, 1e-8, 500);
            let mut bound = 1.0;
            for k in 1..=p + 1 {
                bound *= s / k as f64;
            }
            assert!(bound <= 1e-8, "s = {s}, p = {p}");
        }
    }
}
