use serde::{Deserialize, Serialize};

use crate::embedding::Embedding;
use crate::error::{invalid, Error, Result};

/// A symmetric operator from the Laplacian family, stored by its support only.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum LapTerm {
    /// `(e_i - e_j)(e_i - e_j)^T`.
    Edge(usize, usize),
    /// Laplacian of the complete graph on the listed vertices.
    Complete(Vec<usize>),
    /// `L_{ij} + L_{jk} - L_{ik}`; its quadratic form is the triangle
    /// inequality slack at the middle vertex `j`.
    PathTriple(usize, usize, usize),
    /// Sparse diagonal matrix.
    Diagonal(Vec<(usize, f64)>),
    Identity,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightedTerm {
    pub term: LapTerm,
    pub weight: f64,
}

impl WeightedTerm {
    pub fn new(term: LapTerm, weight: f64) -> Self {
        Self { term, weight }
    }
}

impl LapTerm {
    pub fn path_triple(i: usize, j: usize, k: usize) -> Result<Self> {
        if i == j || j == k || i == k {
            return Err(invalid(format!("path triple ({i}, {j}, {k}) needs distinct vertices")));
        }
        Ok(LapTerm::PathTriple(i, j, k))
    }

    /// Largest vertex index referenced by the term, if any.
    pub fn max_vertex(&self) -> Option<usize> {
        match self {
            LapTerm::Edge(i, j) => Some(*i.max(j)),
            LapTerm::Complete(s) => s.iter().copied().max(),
            LapTerm::PathTriple(i, j, k) => Some(*i.max(j).max(k)),
            LapTerm::Diagonal(entries) => entries.iter().map(|e| e.0).max(),
            LapTerm::Identity => None,
        }
    }

    /// Number of stored support entries; the matvec cost is proportional to it.
    pub fn support_size(&self) -> usize {
        match self {
            LapTerm::Edge(..) => 2,
            LapTerm::Complete(s) => s.len(),
            LapTerm::PathTriple(..) => 3,
            LapTerm::Diagonal(e) => e.len(),
            LapTerm::Identity => 0,
        }
    }

    /// `out += weight * T x` for a row-major block `x` of `n` rows and `cols` columns.
    pub fn apply_block_add(&self, weight: f64, x: &[f64], cols: usize, out: &mut [f64]) {
        let row = |v: usize| v * cols..(v + 1) * cols;
        match self {
            LapTerm::Edge(i, j) => {
                for c in 0..cols {
                    let diff = weight * (x[i * cols + c] - x[j * cols + c]);
                    out[i * cols + c] += diff;
                    out[j * cols + c] -= diff;
                }
            }
            LapTerm::Complete(s) => {
                let mut sum = vec![0.0; cols];
                for &v in s {
                    for (acc, xv) in sum.iter_mut().zip(&x[row(v)]) {
                        *acc += xv;
                    }
                }
                let size = s.len() as f64;
                for &v in s {
                    let r = row(v);
                    for c in 0..cols {
                        out[r.start + c] += weight * (size * x[r.start + c] - sum[c]);
                    }
                }
            }
            LapTerm::PathTriple(i, j, k) => {
                for c in 0..cols {
                    let (xi, xj, xk) = (x[i * cols + c], x[j * cols + c], x[k * cols + c]);
                    out[i * cols + c] += weight * (xk - xj);
                    out[j * cols + c] += weight * (2.0 * xj - xi - xk);
                    out[k * cols + c] += weight * (xi - xj);
                }
            }
            LapTerm::Diagonal(entries) => {
                for &(v, value) in entries {
                    let r = row(v);
                    for c in r {
                        out[c] += weight * value * x[c];
                    }
                }
            }
            LapTerm::Identity => {
                for (o, xv) in out.iter_mut().zip(x) {
                    *o += weight * xv;
                }
            }
        }
    }

    /// Adds the absolute row sums of `weight * T` to `rows` (a Gershgorin bound
    /// contribution). Identity terms are returned separately since they touch
    /// every row.
    pub fn add_row_abs_sums(&self, weight: f64, rows: &mut [f64]) -> f64 {
        let w = weight.abs();
        match self {
            LapTerm::Edge(i, j) => {
                rows[*i] += 2.0 * w;
                rows[*j] += 2.0 * w;
            }
            LapTerm::Complete(s) => {
                let per_row = 2.0 * w * (s.len().saturating_sub(1)) as f64;
                for &v in s {
                    rows[v] += per_row;
                }
            }
            LapTerm::PathTriple(i, j, k) => {
                rows[*i] += 2.0 * w;
                rows[*j] += 4.0 * w;
                rows[*k] += 2.0 * w;
            }
            LapTerm::Diagonal(entries) => {
                for &(v, value) in entries {
                    rows[v] += w * value.abs();
                }
            }
            LapTerm::Identity => return w,
        }
        0.0
    }

    /// Adds `weight * T` into a dense row-major `n x n` matrix.
    pub fn densify_add(&self, weight: f64, n: usize, dense: &mut [f64]) {
        let mut add = |a: usize, b: usize, v: f64| dense[a * n + b] += weight * v;
        let edge = |a: usize, b: usize, sign: f64, add: &mut dyn FnMut(usize, usize, f64)| {
            add(a, a, sign);
            add(b, b, sign);
            add(a, b, -sign);
            add(b, a, -sign);
        };
        match self {
            LapTerm::Edge(i, j) => edge(*i, *j, 1.0, &mut add),
            LapTerm::Complete(s) => {
                for (x, &a) in s.iter().enumerate() {
                    for &b in &s[x + 1..] {
                        edge(a, b, 1.0, &mut add);
                    }
                }
            }
            LapTerm::PathTriple(i, j, k) => {
                edge(*i, *j, 1.0, &mut add);
                edge(*j, *k, 1.0, &mut add);
                edge(*i, *k, -1.0, &mut add);
            }
            LapTerm::Diagonal(entries) => {
                for &(v, value) in entries {
                    add(v, v, value);
                }
            }
            LapTerm::Identity => {
                for v in 0..n {
                    add(v, v, 1.0);
                }
            }
        }
    }

    fn check_range(&self, n: usize) -> Result<()> {
        match self.max_vertex() {
            Some(v) if v >= n => Err(Error::VertexOutOfRange { vertex: v, n }),
            _ => Ok(()),
        }
    }
}

/// `T x` for a single vector.
pub fn lapterm_matvec(t: &LapTerm, x: &[f64]) -> Result<Vec<f64>> {
    t.check_range(x.len())?;
    let mut out = vec![0.0; x.len()];
    t.apply_block_add(1.0, x, 1, &mut out);
    Ok(out)
}

/// `<T, W^T W>`, computed as `sum_i <v_i, (T V)_i>` over the support of `T`
/// without materializing the Gram matrix.
pub fn quadform(t: &LapTerm, w: &Embedding) -> f64 {
    let d = w.d();
    let v = |i: usize| w.vector(i);
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    match t {
        LapTerm::Edge(i, j) => {
            // (T V)_i = v_i - v_j and (T V)_j = v_j - v_i.
            v(*i).iter().zip(v(*j)).map(|(a, b)| (a - b) * (a - b)).sum()
        }
        LapTerm::Complete(s) => {
            let mut sum = vec![0.0; d];
            for &i in s {
                for (acc, x) in sum.iter_mut().zip(v(i)) {
                    *acc += x;
                }
            }
            let size = s.len() as f64;
            s.iter()
                .map(|&i| {
                    let vi = v(i);
                    size * dot(vi, vi) - dot(vi, &sum)
                })
                .sum()
        }
        LapTerm::PathTriple(i, j, k) => {
            let (vi, vj, vk) = (v(*i), v(*j), v(*k));
            (0..d)
                .map(|c| {
                    let (xi, xj, xk) = (vi[c], vj[c], vk[c]);
                    xi * (xk - xj) + xj * (2.0 * xj - xi - xk) + xk * (xi - xj)
                })
                .sum()
        }
        LapTerm::Diagonal(entries) => entries.iter().map(|&(i, x)| x * dot(v(i), v(i))).sum(),
        LapTerm::Identity => w.frobenius_sq(),
    }
}
