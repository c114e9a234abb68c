//! Cyclic Jacobi eigensolver for small symmetric matrices.

use crate::error::{Error, Result};

/// Eigendecomposition of a symmetric d x d matrix, eigenvalues sorted
/// descending with matching eigenvector columns.
pub(crate) struct EigenDecomposition {
    pub values: Vec<f64>,
    /// Row-major d x d; column j is the eigenvector of values[j].
    pub vectors: Vec<f64>,
}

const MAX_SWEEPS: usize = 50;

/// Cyclic-by-row Jacobi. Rotations zero each off-diagonal entry in turn;
/// a sweep visits all d(d-1)/2 pairs. Quadratic convergence makes the
/// 50-sweep budget generous for any d this crate meets.
pub(crate) fn eigh(matrix: &[f64], dim: usize) -> Result<EigenDecomposition> {
    assert_eq!(matrix.len(), dim * dim);
    let mut a = matrix.to_vec();
    let mut v = vec![0.0f64; dim * dim];
    for i in 0..dim {
        v[i * dim + i] = 1.0;
    }
    if dim == 1 {
        return Ok(sorted(a, v, dim));
    }
    let frobenius: f64 = matrix.iter().map(|x| x * x).sum::<f64>().sqrt();
    let tol = 1e-14 * frobenius.max(f64::MIN_POSITIVE);
    for _ in 0..MAX_SWEEPS {
        let off: f64 = off_diagonal_norm(&a, dim);
        if off <= tol {
            return Ok(sorted(a, v, dim));
        }
        for p in 0..dim - 1 {
            for q in p + 1..dim {
                rotate(&mut a, &mut v, dim, p, q);
            }
        }
    }
    if off_diagonal_norm(&a, dim) <= tol {
        return Ok(sorted(a, v, dim));
    }
    Err(Error::validation(format!(
        "eigensolver did not converge within {MAX_SWEEPS} sweeps (dim {dim})"
    )))
}

fn off_diagonal_norm(a: &[f64], dim: usize) -> f64 {
    let mut s = 0.0;
    for p in 0..dim {
        for q in p + 1..dim {
            s += a[p * dim + q] * a[p * dim + q];
        }
    }
    (2.0 * s).sqrt()
}

fn rotate(a: &mut [f64], v: &mut [f64], dim: usize, p: usize, q: usize) {
    let apq = a[p * dim + q];
    if apq == 0.0 {
        return;
    }
    let app = a[p * dim + p];
    let aqq = a[q * dim + q];
    let tau = (aqq - app) / (2.0 * apq);
    let t = if tau >= 0.0 {
        1.0 / (tau + (1.0 + tau * tau).sqrt())
    } else {
        -1.0 / (-tau + (1.0 + tau * tau).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;
    for k in 0..dim {
        let akp = a[k * dim + p];
        let akq = a[k * dim + q];
        a[k * dim + p] = c * akp - s * akq;
        a[k * dim + q] = s * akp + c * akq;
    }
    for k in 0..dim {
        let apk = a[p * dim + k];
        let aqk = a[q * dim + k];
        a[p * dim + k] = c * apk - s * aqk;
        a[q * dim + k] = s * apk + c * aqk;
    }
    // Restore exact symmetry of the rotated 2x2 block.
    a[p * dim + q] = 0.0;
    a[q * dim + p] = 0.0;
    for k in 0..dim {
        let vkp = v[k * dim + p];
        let vkq = v[k * dim + q];
        v[k * dim + p] = c * vkp - s * vkq;
        v[k * dim + q] = s * vkp + c * vkq;
    }
}

fn sorted(a: Vec<f64>, v: Vec<f64>, dim: usize) -> EigenDecomposition {
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&i, &j| {
        a[j * dim + j]
            .partial_cmp(&a[i * dim + i])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let values: Vec<f64> = order.iter().map(|&i| a[i * dim + i]).collect();
    let mut vectors = vec![0.0f64; dim * dim];
    for (new_col, &old_col) in order.iter().enumerate() {
        for row in 0..dim {
            vectors[row * dim + new_col] = v[row * dim + old_col];
        }
    }
    EigenDecomposition { values, vectors }
}
