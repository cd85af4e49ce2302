//! Small dense helpers for the low-dimensional (p x p) factorizations used
//! by the model conditionals. The big symmetric eigenproblems go through
//! LAPACK in [`crate::numerics`]; these stay hand-rolled so the models have
//! no per-call allocation or FFI overhead at p ~ 6.

/// Lower Cholesky factor of a symmetric positive definite matrix stored
/// row-major in `a` (length `p * p`). Returns `None` when a pivot is not
/// strictly positive.
pub(crate) fn cholesky_lower(a: &[f64], p: usize) -> Option<Vec<f64>> {
    debug_assert_eq!(a.len(), p * p);
    let mut l = vec![0.0; p * p];
    for i in 0..p {
        for j in 0..=i {
            let mut s = a[i * p + j];
            for k in 0..j {
                s -= l[i * p + k] * l[j * p + k];
            }
            if i == j {
                if s <= 0.0 || !s.is_finite() {
                    return None;
                }
                l[i * p + i] = s.sqrt();
            } else {
                l[i * p + j] = s / l[j * p + j];
            }
        }
    }
    Some(l)
}

/// Solves `L x = b` for lower triangular `L` (row-major).
pub(crate) fn solve_lower(l: &[f64], b: &[f64], p: usize) -> Vec<f64> {
    let mut x = b.to_vec();
    for i in 0..p {
        for k in 0..i {
            x[i] -= l[i * p + k] * x[k];
        }
        x[i] /= l[i * p + i];
    }
    x
}

/// Solves `L^T x = b` for lower triangular `L` (row-major).
pub(crate) fn solve_lower_transpose(l: &[f64], b: &[f64], p: usize) -> Vec<f64> {
    let mut x = b.to_vec();
    for i in (0..p).rev() {
        for k in i + 1..p {
            x[i] -= l[k * p + i] * x[k];
        }
        x[i] /= l[i * p + i];
    }
    x
}
