use nalgebra::{DMatrix, SymmetricEigen};

/// Exact iterates `X_t = exp(epsilon sum_{s<t} Y_s) / Tr(...)` for dense
/// symmetric `Y_t`, one per round.
pub fn dense_iterates(ys: &[DMatrix<f64>], epsilon: f64) -> Vec<DMatrix<f64>> {
    let Some(first) = ys.first() else {
        return Vec::new();
    };
    let n = first.nrows();
    let mut acc = DMatrix::<f64>::zeros(n, n);
    let mut out = Vec::with_capacity(ys.len());
    for y in ys {
        let eig = SymmetricEigen::new(&acc * epsilon);
        let top = eig.eigenvalues.max();
        let weights = eig.eigenvalues.map(|l| (l - top).exp());
        let x = &eig.eigenvectors * DMatrix::from_diagonal(&weights) * eig.eigenvectors.transpose();
        let trace = x.trace();
        out.push(x / trace);
        acc += y;
    }
    out
}

/// Whether `lambda_max(sum_t Y_t) < (1 + epsilon) sum_t <Y_t, X_t> + ln n / epsilon`
/// holds, up to `1e-9` of numerical slack.
pub fn eigenvalue_regret_check(ys: &[DMatrix<f64>], xs: &[DMatrix<f64>], epsilon: f64) -> bool {
    let Some(first) = ys.first() else {
        return true;
    };
    let n = first.nrows();
    let mut total = DMatrix::<f64>::zeros(n, n);
    let mut gain = 0.0;
    for (y, x) in ys.iter().zip(xs) {
        total += y;
        gain += y.dot(x);
    }
    let lambda_max = SymmetricEigen::new(total).eigenvalues.max();
    lambda_max < (1.0 + epsilon) * gain + (n as f64).ln() / epsilon + 1e-9
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_half_identity() {
        let n = 6;
        let y = DMatrix::<f64>::identity(n, n) * 0.5;
        let xs = dense_iterates(std::slice::from_ref(&y), 0.3);
        assert!((xs[0].clone() - DMatrix::identity(n, n) / n as f64).norm() < 1e-12);
        assert!(eigenvalue_regret_check(&[y], &xs, 0.3));
    }

    #[test]
    fn constant_identity_rounds() {
        let n = 4;
        let ys = vec![DMatrix::<f64>::identity(n, n); 20];
        let xs = dense_iterates(&ys, 0.1);
        assert!(eigenvalue_regret_check(&ys, &xs, 0.1));
    }

    #[test]
    fn detects_a_wrong_iterate_sequence() {
        // Always betting on e_1 while the reward sits on e_2 loses linearly.
        let y = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, 1.0]);
        let x = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        let ys = vec![y; 100];
        let xs = vec![x; 100];
        assert!(!eigenvalue_regret_check(&ys, &xs, 0.5));
    }
}
