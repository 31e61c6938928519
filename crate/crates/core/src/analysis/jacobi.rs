//! Eigenvalues of small symmetric matrices by cyclic Jacobi rotations.
//!
//! Brute-force RIP checks need spectral norms of many small Gram matrices;
//! the cyclic Jacobi sweep is compact and robust for that size range.

use ndarray::Array2;

/// Off-diagonal Frobenius mass below which a sweep is considered converged.
const OFF_DIAGONAL_TOLERANCE: f64 = 1e-14;
const MAX_SWEEPS: usize = 60;

/// All eigenvalues of a symmetric matrix, unsorted. The input is consumed as
/// scratch space.
pub fn symmetric_eigenvalues(mut a: Array2<f64>) -> Vec<f64> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "matrix must be square");
    if n == 1 {
        return vec![a[[0, 0]]];
    }
    for _ in 0..MAX_SWEEPS {
        let off: f64 = {
            let mut sum = 0.0;
            for p in 0..n {
                for q in (p + 1)..n {
                    sum += a[[p, q]] * a[[p, q]];
                }
            }
            (2.0 * sum).sqrt()
        };
        if off < OFF_DIAGONAL_TOLERANCE {
            break;
        }
        for p in 0..(n - 1) {
            for q in (p + 1)..n {
                let apq = a[[p, q]];
                if apq == 0.0 {
                    continue;
                }
                // Rotation angle that annihilates a_pq; the smaller-root
                // choice of tan keeps the rotation well conditioned.
                let tau = (a[[q, q]] - a[[p, p]]) / (2.0 * apq);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for i in 0..n {
                    if i == p || i == q {
                        continue;
                    }
                    let aip = a[[i, p]];
                    let aiq = a[[i, q]];
                    a[[i, p]] = c * aip - s * aiq;
                    a[[p, i]] = a[[i, p]];
                    a[[i, q]] = s * aip + c * aiq;
                    a[[q, i]] = a[[i, q]];
                }
                a[[p, p]] -= t * apq;
                a[[q, q]] += t * apq;
                a[[p, q]] = 0.0;
                a[[q, p]] = 0.0;
            }
        }
    }
    (0..n).map(|i| a[[i, i]]).collect()
}

/// Spectral norm (largest |eigenvalue|) of a symmetric matrix.
pub fn spectral_norm_symmetric(a: Array2<f64>) -> f64 {
    symmetric_eigenvalues(a)
        .into_iter()
        .fold(0.0, |acc, l| acc.max(l.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sorted(mut v: Vec<f64>) -> Vec<f64> {
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v
    }

    #[test]
    fn diagonal_matrix_is_fixed_point() {
        let eig = sorted(symmetric_eigenvalues(Array2::from_diag(&array![3.0, -1.0, 0.5])));
        assert_eq!(eig, vec![-1.0, 0.5, 3.0]);
    }

    #[test]
    fn two_by_two_off_diagonal() {
        let eig = sorted(symmetric_eigenvalues(array![[0.0, 1.0 / 3.0], [1.0 / 3.0, 0.0]]));
        assert!((eig[0] + 1.0 / 3.0).abs() < 1e-14);
        assert!((eig[1] - 1.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn tridiagonal_with_known_spectrum() {
        // Eigenvalues of [[2,1,0],[1,2,1],[0,1,2]] are 2 and 2 +- sqrt(2).
        let eig = sorted(symmetric_eigenvalues(array![
            [2.0, 1.0, 0.0],
            [1.0, 2.0, 1.0],
            [0.0, 1.0, 2.0]
        ]));
        let expected = [2.0 - std::f64::consts::SQRT_2, 2.0, 2.0 + std::f64::consts::SQRT_2];
        for (a, b) in eig.iter().zip(expected.iter()) {
            assert!((a - b).abs() < 1e-12, "{eig:?}");
        }
    }

    #[test]
    fn trace_and_frobenius_preserved_on_random_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in [2usize, 3, 5, 8, 13] {
            let mut a = Array2::zeros((n, n));
            for i in 0..n {
                for j in i..n {
                    let v = rng.random_range(-1.0..1.0);
                    a[[i, j]] = v;
                    a[[j, i]] = v;
                }
            }
            let trace: f64 = (0..n).map(|i| a[[i, i]]).sum();
            let frob2: f64 = a.iter().map(|v| v * v).sum();
            let eig = symmetric_eigenvalues(a);
            let eig_sum: f64 = eig.iter().sum();
            let eig_sq: f64 = eig.iter().map(|l| l * l).sum();
            assert!((eig_sum - trace).abs() < 1e-10, "n={n}");
            assert!((eig_sq - frob2).abs() < 1e-9, "n={n}");
        }
    }

    #[test]
    fn spectral_norm_of_rank_one() {
        // vv^T has spectral norm ||v||^2.
        let v = array![1.0, -2.0, 0.5];
        let mut a = Array2::zeros((3, 3));
        for i in 0..3 {
            for j in 0..3 {
                a[[i, j]] = v[i] * v[j];
            }
        }
        assert!((spectral_norm_symmetric(a) - v.dot(&v)).abs() < 1e-12);
    }
}
