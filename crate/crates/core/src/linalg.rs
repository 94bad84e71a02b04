//! Minimal dense symmetric linear algebra: just enough to solve normal
//! equations and estimate spectrum endpoints of small Gram matrices.

/// Solves `A x = b` for symmetric positive definite `A` (row-major, n x n)
/// by Cholesky factorization. Returns `None` if the factorization breaks
/// down (not positive definite).
pub fn cholesky_solve(a: &[f64], n: usize, b: &[f64]) -> Option<Vec<f64>> {
    assert_eq!(a.len(), n * n);
    assert_eq!(b.len(), n);
    // Lower-triangular factor stored row-major.
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a[i * n + j];
            for k in 0..j {
                sum -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if sum <= 0.0 {
                    return None;
                }
                l[i * n + i] = sum.sqrt();
            } else {
                l[i * n + j] = sum / l[j * n + j];
            }
        }
    }
    // Forward substitution L y = b.
    let mut y = vec![0.0; n];
    for i in 0..n {
        let mut sum = b[i];
        for k in 0..i {
            sum -= l[i * n + k] * y[k];
        }
        y[i] = sum / l[i * n + i];
    }
    // Back substitution L^T x = y.
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut sum = y[i];
        for k in i + 1..n {
            sum -= l[k * n + i] * x[k];
        }
        x[i] = sum / l[i * n + i];
    }
    Some(x)
}

fn matvec(a: &[f64], n: usize, v: &[f64], out: &mut [f64]) {
    for i in 0..n {
        out[i] = a[i * n..i * n + n].iter().zip(v).map(|(x, y)| x * y).sum();
    }
}

fn power_iteration(a: &[f64], n: usize, iters: usize) -> f64 {
    // Deterministic start with incommensurate components so it is not
    // orthogonal to the leading eigenvector for generic matrices.
    let mut v: Vec<f64> = (0..n).map(|i| 1.0 + ((i + 1) as f64).sqrt().fract()).collect();
    let mut av = vec![0.0; n];
    for _ in 0..iters {
        matvec(a, n, &v, &mut av);
        let norm = av.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        for (vi, &ai) in v.iter_mut().zip(&av) {
            *vi = ai / norm;
        }
    }
    // Rayleigh quotient of the converged direction.
    matvec(a, n, &v, &mut av);
    v.iter().zip(&av).map(|(x, y)| x * y).sum()
}

/// Smallest and largest eigenvalues of a symmetric positive semidefinite
/// matrix (row-major, n x n), by power iteration on `A` and on
/// `lambda_max I - A`.
pub fn symmetric_eigen_extremes(a: &[f64], n: usize, iters: usize) -> (f64, f64) {
    assert_eq!(a.len(), n * n);
    let lambda_max = power_iteration(a, n, iters);
    let mut shifted = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            shifted[i * n + j] = if i == j { lambda_max - a[i * n + j] } else { -a[i * n + j] };
        }
    }
    let gap = power_iteration(&shifted, n, iters);
    (lambda_max - gap, lambda_max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cholesky_solves_small_system() {
        // A = [[4,2],[2,3]], b = [2,1] -> x = A^{-1} b = [0.5, 0.0]
        let a = [4.0, 2.0, 2.0, 3.0];
        let x = cholesky_solve(&a, 2, &[2.0, 1.0]).unwrap();
        assert!((x[0] - 0.5).abs() < 1e-12);
        assert!(x[1].abs() < 1e-12);
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let a = [1.0, 2.0, 2.0, 1.0];
        assert!(cholesky_solve(&a, 2, &[1.0, 1.0]).is_none());
    }

    #[test]
    fn eigen_extremes_of_known_matrix() {
        // [[2,1],[1,2]] has eigenvalues 1 and 3.
        let a = [2.0, 1.0, 1.0, 2.0];
        let (lo, hi) = symmetric_eigen_extremes(&a, 2, 200);
        assert!((hi - 3.0).abs() < 1e-9, "{hi}");
        assert!((lo - 1.0).abs() < 1e-9, "{lo}");
    }
}
