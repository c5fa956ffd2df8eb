//! Low-dimensional vector representations of candidate solutions.
//!
//! An [`Embedding`] stores one vector `v_i` per vertex; the represented
//! solution is the Gram matrix `X_ij = <v_i, v_j>`, which is never formed.

use rand_distr::{Distribution, Normal};

use crate::error::{invalid, Error, Result};
use crate::graph::{Graph, Partition};
use crate::rng::stream_rng;

#[derive(Clone, Debug, PartialEq)]
pub struct Embedding {
    d: usize,
    n: usize,
    /// Row-major `n x d`: row `i` is `v_i`.
    data: Vec<f64>,
    trace_scale: f64,
}

impl Embedding {
    pub fn from_rows(d: usize, data: Vec<f64>, trace_scale: f64) -> Result<Self> {
        if d == 0 {
            return Err(invalid("embedding dimension must be positive"));
        }
        if data.len() % d != 0 {
            return Err(invalid(format!("{} entries do not form rows of length {d}", data.len())));
        }
        if let Some(pos) = data.iter().position(|x| !x.is_finite()) {
            return Err(Error::Numerical(format!("non-finite embedding entry at {pos}")));
        }
        Ok(Self {
            d,
            n: data.len() / d,
            data,
            trace_scale,
        })
    }

    pub fn zeros(d: usize, n: usize, trace_scale: f64) -> Self {
        Self {
            d,
            n,
            data: vec![0.0; d * n],
            trace_scale,
        }
    }

    /// The `±u` embedding of a bipartition: side 0 sits at `e_1`, side 1 at
    /// `-e_1`. Its Gram matrix has unit diagonal, so its trace is `n`.
    pub fn planted(p: &Partition, d: usize) -> Self {
        let mut w = Self::zeros(d.max(1), p.len(), p.len() as f64);
        for i in 0..p.len() {
            w.data[i * w.d] = if p.label(i) == 0 { 1.0 } else { -1.0 };
        }
        w
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn trace_scale(&self) -> f64 {
        self.trace_scale
    }

    pub fn set_trace_scale(&mut self, r: f64) {
        self.trace_scale = r;
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn vector(&self, i: usize) -> &[f64] {
        &self.data[i * self.d..(i + 1) * self.d]
    }

    pub fn vector_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.d..(i + 1) * self.d]
    }

    pub fn norm_sq(&self, i: usize) -> f64 {
        self.vector(i).iter().map(|x| x * x).sum()
    }

    /// `Tr(X) = sum_i |v_i|^2`.
    pub fn frobenius_sq(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum()
    }

    pub fn scale(&mut self, factor: f64) {
        for x in &mut self.data {
            *x *= factor;
        }
    }

    /// Restriction to the listed vertices, in the given order.
    pub fn select(&self, vertices: &[usize]) -> Embedding {
        let mut data = Vec::with_capacity(vertices.len() * self.d);
        for &v in vertices {
            data.extend_from_slice(self.vector(v));
        }
        Embedding {
            d: self.d,
            n: vertices.len(),
            data,
            trace_scale: self.trace_scale,
        }
    }

    /// Dense Gram matrix, row-major `n x n`. Test and diagnostics only.
    pub fn gram(&self) -> Vec<f64> {
        let n = self.n;
        let mut x = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let v: f64 = self.vector(i).iter().zip(self.vector(j)).map(|(a, b)| a * b).sum();
                x[i * n + j] = v;
                x[j * n + i] = v;
            }
        }
        x
    }
}

/// `|v_i - v_j|^2`.
pub fn sqdist(w: &Embedding, i: usize, j: usize) -> f64 {
    w.vector(i)
        .iter()
        .zip(w.vector(j))
        .map(|(a, b)| (a - b) * (a - b))
        .sum()
}

/// `sum over edges of |v_i - v_j|^2`.
pub fn objective(g: &Graph, w: &Embedding) -> Result<f64> {
    if g.n() != w.n() {
        return Err(Error::SizeMismatch {
            expected: g.n(),
            got: w.n(),
        });
    }
    Ok(g.edges().iter().map(|&(i, j)| sqdist(w, i, j)).sum())
}

/// Sum of `|v_i - v_j|^2` over ordered pairs of `s`, in `O(d |s|)`.
pub fn spread(w: &Embedding, s: &[usize]) -> f64 {
    let mut sum = vec![0.0; w.d()];
    let mut norms = 0.0;
    for &i in s {
        for (acc, x) in sum.iter_mut().zip(w.vector(i)) {
            *acc += x;
        }
        norms += w.norm_sq(i);
    }
    let centroid_sq: f64 = sum.iter().map(|x| x * x).sum();
    (2.0 * s.len() as f64 * norms - 2.0 * centroid_sq).max(0.0)
}

/// Vertices whose vector has squared norm above `threshold`.
pub fn flat_set(w: &Embedding, threshold: f64) -> Vec<usize> {
    (0..w.n()).filter(|&i| w.norm_sq(i) > threshold).collect()
}

/// `|v_i - v_j|^2 + |v_j - v_k|^2 - |v_i - v_k|^2`; negative when the
/// squared distances violate the triangle inequality at `j`.
pub fn triangle_violation(w: &Embedding, i: usize, j: usize, k: usize) -> f64 {
    sqdist(w, i, j) + sqdist(w, j, k) - sqdist(w, i, k)
}

/// Dense Gaussian projection `Phi` with i.i.d. `N(0, 1/d)` entries, drawn
/// column by column from a dedicated stream.
#[derive(Clone, Debug)]
pub struct GaussianSketch {
    pub d: usize,
    pub seed: u64,
    pub stream: u64,
}

impl GaussianSketch {
    pub fn new(d: usize, seed: u64, stream: u64) -> Self {
        Self { d, seed, stream }
    }

    /// `Phi^T` as a row-major `input_dim x d` block: row `j` is column `j` of `Phi`.
    pub fn transposed(&self, input_dim: usize) -> Vec<f64> {
        let mut rng = stream_rng(self.seed, self.stream);
        let normal = Normal::new(0.0, 1.0 / (self.d as f64).sqrt()).expect("positive deviation");
        (0..input_dim * self.d).map(|_| normal.sample(&mut rng)).collect()
    }
}

/// Applies `Phi` to every vector of `input`, producing an embedding of dimension `sketch.d`.
pub fn sketch_apply(sketch: &GaussianSketch, input: &Embedding) -> Embedding {
    let (din, dout) = (input.d(), sketch.d);
    let phi_t = sketch.transposed(din);
    let mut out = Embedding::zeros(dout, input.n(), input.trace_scale());
    for i in 0..input.n() {
        let x = input.vector(i);
        let o = out.vector_mut(i);
        for (j, &xj) in x.iter().enumerate() {
            if xj != 0.0 {
                for (oc, phi) in o.iter_mut().zip(&phi_t[j * dout..(j + 1) * dout]) {
                    *oc += phi * xj;
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{quadform, LapTerm};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn from_points(d: usize, pts: &[f64]) -> Embedding {
        Embedding::from_rows(d, pts.to_vec(), 1.0).unwrap()
    }

    #[test]
    fn distance_examples() {
        let w = from_points(2, &[1.0, 0.0, -1.0, 0.0]);
        assert_abs_diff_eq!(sqdist(&w, 0, 0), 0.0);
        assert_abs_diff_eq!(sqdist(&w, 0, 1), 4.0);
        assert_abs_diff_eq!(spread(&w, &[0, 1]), 8.0);
        let line = from_points(1, &[0.0, 1.0, 2.0]);
        assert_abs_diff_eq!(triangle_violation(&line, 0, 1, 2), -2.0);
    }

    #[test]
    fn flat_set_examples() {
        let unit = from_points(1, &[1.0, -1.0, 1.0]);
        assert!(flat_set(&unit, 2.0).is_empty());
        let one = from_points(1, &[1.0, 5f64.sqrt(), 0.5]);
        assert_eq!(flat_set(&one, 2.0), vec![1]);
    }

    #[test]
    fn planted_objective_counts_cut_four_times() {
        let g = Graph::complete_bipartite(2, 3);
        let p = Partition::bipartition(&[false, false, true, true, true]);
        let w = Embedding::planted(&p, 3);
        assert_abs_diff_eq!(objective(&g, &w).unwrap(), 24.0);
        assert_abs_diff_eq!(spread(&w, &(0..5).collect::<Vec<_>>()), 8.0 * 6.0);
        assert_abs_diff_eq!(w.frobenius_sq(), 5.0);
    }

    #[test]
    fn sketch_is_linear_and_deterministic() {
        let sk = GaussianSketch::new(16, 3, 0);
        let x = from_points(4, &[1.0, 2.0, 0.0, -1.0]);
        let y = from_points(4, &[0.5, 0.0, 3.0, 1.0]);
        let xy = from_points(4, &[1.5, 2.0, 3.0, 0.0]);
        let (sx, sy, sxy) = (sketch_apply(&sk, &x), sketch_apply(&sk, &y), sketch_apply(&sk, &xy));
        for c in 0..16 {
            assert_abs_diff_eq!(sx.data()[c] + sy.data()[c], sxy.data()[c], epsilon = 1e-9);
        }
        assert_eq!(sx, sketch_apply(&sk, &x));
        let zero = sketch_apply(&sk, &from_points(4, &[0.0; 4]));
        assert!(zero.data().iter().all(|&v| v == 0.0));
    }

    proptest! {
        #[test]
        fn spread_matches_double_loop(pts in prop::collection::vec(-3.0f64..3.0, 3..150)) {
            let w = from_points(3, &pts[..pts.len() / 3 * 3]);
            let s: Vec<usize> = (0..w.n()).collect();
            let mut naive = 0.0;
            for &i in &s {
                for &j in &s {
                    naive += sqdist(&w, i, j);
                }
            }
            prop_assert!((spread(&w, &s) - naive).abs() <= 1e-6 * naive.max(1.0));
        }

        #[test]
        fn sqdist_is_edge_quadform(pts in prop::collection::vec(-3.0f64..3.0, 8)) {
            let w = from_points(2, &pts);
            for (i, j) in [(0, 1), (1, 3), (2, 0)] {
                prop_assert!((sqdist(&w, i, j) - quadform(&LapTerm::Edge(i, j), &w)).abs() < 1e-9);
            }
            let t = triangle_violation(&w, 0, 1, 2);
            prop_assert!((t - quadform(&LapTerm::PathTriple(0, 1, 2), &w)).abs() < 1e-9);
        }
    }
}
