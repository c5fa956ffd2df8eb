use std::collections::BTreeMap;

use super::feedback::NormalizedFeedback;
use crate::graph::LapTerm;

/// Running sum `sum_t Y_t` in merged sparse form: a diagonal, a weighted
/// Laplacian over vertex pairs, complete-graph Laplacians on vertex sets,
/// and a multiple of the identity.
#[derive(Clone, Debug)]
pub struct FeedbackSum {
    n: usize,
    diag: Vec<f64>,
    pairs: BTreeMap<(usize, usize), f64>,
    completes: Vec<(Vec<usize>, f64)>,
    identity: f64,
    count: usize,
    csr: Option<PairCsr>,
}

#[derive(Clone, Debug)]
struct PairCsr {
    offsets: Vec<usize>,
    neighbor: Vec<usize>,
    weight: Vec<f64>,
}

impl FeedbackSum {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            diag: vec![0.0; n],
            pairs: BTreeMap::new(),
            completes: Vec::new(),
            identity: 0.0,
            count: 0,
            csr: None,
        }
    }

    pub fn from_ops(n: usize, ops: &[NormalizedFeedback]) -> Self {
        let mut sum = Self::new(n);
        for y in ops {
            sum.add(y);
        }
        sum
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of operators added so far.
    pub fn count(&self) -> usize {
        self.count
    }

    pub fn identity_coefficient(&self) -> f64 {
        self.identity
    }

    /// Stored nonzero pair weights plus complete-set sizes plus diagonal entries.
    pub fn support_size(&self) -> usize {
        self.pairs.len()
            + self.completes.iter().map(|(s, _)| s.len()).sum::<usize>()
            + self.diag.iter().filter(|&&x| x != 0.0).count()
    }

    fn add_pair(&mut self, i: usize, j: usize, w: f64) {
        *self.pairs.entry((i.min(j), i.max(j))).or_insert(0.0) += w;
    }

    pub fn add(&mut self, y: &NormalizedFeedback) {
        let scale = 1.0 / (2.0 * y.zeta);
        self.identity += 0.5;
        for t in &y.feedback.terms {
            let w = t.weight * scale;
            match &t.term {
                LapTerm::Edge(i, j) => self.add_pair(*i, *j, w),
                LapTerm::PathTriple(i, j, k) => {
                    self.add_pair(*i, *j, w);
                    self.add_pair(*j, *k, w);
                    self.add_pair(*i, *k, -w);
                }
                LapTerm::Complete(s) => match self.completes.iter_mut().find(|(set, _)| set == s) {
                    Some((_, acc)) => *acc += w,
                    None => self.completes.push((s.clone(), w)),
                },
                LapTerm::Diagonal(entries) => {
                    for &(v, x) in entries {
                        self.diag[v] += w * x;
                    }
                }
                LapTerm::Identity => self.identity += w,
            }
        }
        self.count += 1;
        self.csr = None;
    }

    /// Prepares the pair Laplacian for fast application. Called automatically
    /// by [`FeedbackSum::prepared`].
    fn compile(&mut self) {
        let mut count = vec![0usize; self.n + 1];
        for (&(i, j), &w) in &self.pairs {
            if w != 0.0 {
                count[i + 1] += 1;
                count[j + 1] += 1;
            }
        }
        for i in 0..self.n {
            count[i + 1] += count[i];
        }
        let mut fill = count.clone();
        let mut neighbor = vec![0; count[self.n]];
        let mut weight = vec![0.0; count[self.n]];
        for (&(i, j), &w) in &self.pairs {
            if w != 0.0 {
                neighbor[fill[i]] = j;
                weight[fill[i]] = w;
                fill[i] += 1;
                neighbor[fill[j]] = i;
                weight[fill[j]] = w;
                fill[j] += 1;
            }
        }
        self.csr = Some(PairCsr {
            offsets: count,
            neighbor,
            weight,
        });
    }

    pub fn prepared(&mut self) -> &Self {
        if self.csr.is_none() {
            self.compile();
        }
        self
    }

    /// `out = B x`, where `B` is the sum without its identity part. Requires
    /// [`FeedbackSum::prepared`] after the last `add`.
    pub fn apply_without_identity(&self, x: &[f64], cols: usize, out: &mut [f64]) {
        let csr = self.csr.as_ref().expect("feedback sum must be prepared before use");
        for i in 0..self.n {
            let (row, xi) = (&mut out[i * cols..(i + 1) * cols], &x[i * cols..(i + 1) * cols]);
            let d = self.diag[i];
            for (o, &xv) in row.iter_mut().zip(xi) {
                *o = d * xv;
            }
            for k in csr.offsets[i]..csr.offsets[i + 1] {
                let (j, w) = (csr.neighbor[k], csr.weight[k]);
                let xj = &x[j * cols..(j + 1) * cols];
                for c in 0..cols {
                    row[c] += w * (xi[c] - xj[c]);
                }
            }
        }
        let mut sum = vec![0.0; cols];
        for (s, w) in &self.completes {
            sum.fill(0.0);
            for &v in s {
                for (acc, xv) in sum.iter_mut().zip(&x[v * cols..(v + 1) * cols]) {
                    *acc += xv;
                }
            }
            let size = s.len() as f64;
            for &v in s {
                for c in 0..cols {
                    out[v * cols + c] += w * (size * x[v * cols + c] - sum[c]);
                }
            }
        }
    }

    /// Interval `[lo, hi]` containing the spectrum of the non-identity part,
    /// from Gershgorin discs.
    pub fn spectral_interval(&self) -> (f64, f64) {
        if self.n == 0 {
            return (0.0, 0.0);
        }
        let mut center = self.diag.clone();
        let mut radius = vec![0.0; self.n];
        for (&(i, j), &w) in &self.pairs {
            center[i] += w;
            center[j] += w;
            radius[i] += w.abs();
            radius[j] += w.abs();
        }
        for (s, w) in &self.completes {
            let k = s.len().saturating_sub(1) as f64;
            for &v in s {
                center[v] += w * k;
                radius[v] += w.abs() * k;
            }
        }
        let lo = (0..self.n).map(|i| center[i] - radius[i]).fold(f64::INFINITY, f64::min);
        let hi = (0..self.n).map(|i| center[i] + radius[i]).fold(f64::NEG_INFINITY, f64::max);
        (lo, hi)
    }

    /// Dense row-major matrix of the full sum, identity included.
    pub fn densify(&self) -> Vec<f64> {
        let n = self.n;
        let mut dense = vec![0.0; n * n];
        for i in 0..n {
            dense[i * n + i] += self.diag[i] + self.identity;
        }
        for (&(i, j), &w) in &self.pairs {
            LapTerm::Edge(i, j).densify_add(w, n, &mut dense);
        }
        for (s, w) in &self.completes {
            LapTerm::Complete(s.clone()).densify_add(*w, n, &mut dense);
        }
        dense
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::WeightedTerm;
    use crate::mmw::feedback::{normalize_feedback, FeedbackMatrix};
    use approx::assert_abs_diff_eq;

    #[test]
    fn merged_sum_matches_term_by_term() {
        let n = 5;
        let fbs = [
            FeedbackMatrix::new(
                n,
                vec![
                    WeightedTerm::new(LapTerm::Edge(0, 3), -1.5),
                    WeightedTerm::new(LapTerm::Identity, 0.7),
                    WeightedTerm::new(LapTerm::PathTriple(1, 2, 4), 0.4),
                ],
                0.0,
            ),
            FeedbackMatrix::new(
                n,
                vec![
                    WeightedTerm::new(LapTerm::Complete(vec![0, 1, 2, 4]), 0.3),
                    WeightedTerm::new(LapTerm::Diagonal(vec![(2, -2.0)]), 1.0),
                    WeightedTerm::new(LapTerm::Edge(3, 0), 0.5),
                ],
                0.0,
            ),
        ];
        let ops: Vec<_> = fbs.iter().cloned().map(|f| normalize_feedback(f).unwrap()).collect();
        let mut sum = FeedbackSum::from_ops(n, &ops);
        let x: Vec<f64> = (0..2 * n).map(|i| (i as f64 * 0.37).sin()).collect();
        let mut expect = vec![0.0; 2 * n];
        for y in &ops {
            y.apply_block_add(1.0, &x, 2, &mut expect);
        }
        let mut got = vec![0.0; 2 * n];
        sum.prepared().apply_without_identity(&x, 2, &mut got);
        let c = sum.identity_coefficient();
        for i in 0..2 * n {
            assert_abs_diff_eq!(got[i] + c * x[i], expect[i], epsilon = 1e-12);
        }
        let dense = sum.densify();
        let mut direct = vec![0.0; n * n];
        for y in &ops {
            for (d, v) in direct.iter_mut().zip(y.densify(n)) {
                *d += v;
            }
        }
        for (a, b) in dense.iter().zip(&direct) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }
}
