//! Dense symmetric eigendecomposition, the `delta_2` spectral metric, and
//! the Frobenius norm. Everything here is pure and reentrant.

use ndarray::{Array2, ArrayView2};
use ndarray_linalg::{EigValshInto, UPLO};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum NumericsError {
    #[error("matrix is not square: {0} x {1}")]
    NotSquare(usize, usize),

    #[error("matrix is asymmetric: |a[{i},{j}] - a[{j},{i}]| = {dev:e} exceeds tolerance {tol:e}")]
    Asymmetric { i: usize, j: usize, dev: f64, tol: f64 },

    #[error("non-finite entry at [{0}, {1}]")]
    NonFinite(usize, usize),

    #[error("non-finite value in spectrum input")]
    NonFiniteSpectrum,

    #[error("dimension mismatch: {0} x {1} vs {2} x {3}")]
    DimensionMismatch(usize, usize, usize, usize),

    #[error("eigendecomposition failed: {0}")]
    EigenFailed(String),
}

/// Relative tolerance for the symmetry check in [`symmetric_eigenvalues`].
pub const SYMMETRY_RTOL: f64 = 1e-10;

/// A finite list of real eigenvalues, sorted descending.
///
/// Construction sorts its input with a stable descending sort, so exact ties
/// keep their original order. Conceptually a spectrum is a point of `l2`
/// obtained by appending an infinite tail of zeros; [`delta2`] implements
/// that identification.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    values: Vec<f64>,
}

impl Spectrum {
    pub fn new(mut values: Vec<f64>) -> Result<Self, NumericsError> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(NumericsError::NonFiniteSpectrum);
        }
        values.sort_by(|a, b| b.partial_cmp(a).expect("finite values compare"));
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// All eigenvalues of a symmetric real matrix, sorted descending.
///
/// The input must be square, finite, and symmetric within
/// `SYMMETRY_RTOL * max|entry|` in every position; it is then replaced by
/// `(A + A^T) / 2` before the decomposition so that roundoff-level asymmetry
/// cannot leak into the solver while construction bugs still surface as
/// errors.
pub fn symmetric_eigenvalues(matrix: ArrayView2<'_, f64>) -> Result<Spectrum, NumericsError> {
    let (n, m) = matrix.dim();
    if n != m {
        return Err(NumericsError::NotSquare(n, m));
    }
    let mut max_abs = 0.0f64;
    for ((i, j), &v) in matrix.indexed_iter() {
        if !v.is_finite() {
            return Err(NumericsError::NonFinite(i, j));
        }
        max_abs = max_abs.max(v.abs());
    }
    let tol = SYMMETRY_RTOL * max_abs;
    for i in 0..n {
        for j in i + 1..n {
            let dev = (matrix[[i, j]] - matrix[[j, i]]).abs();
            if dev > tol {
                return Err(NumericsError::Asymmetric { i, j, dev, tol });
            }
        }
    }
    let mut sym = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            sym[[i, j]] = 0.5 * (matrix[[i, j]] + matrix[[j, i]]);
        }
    }
    let vals = sym
        .eigvalsh_into(UPLO::Lower)
        .map_err(|e| NumericsError::EigenFailed(e.to_string()))?;
    Spectrum::new(vals.to_vec())
}

/// The `delta_2` distance between two spectra: both lists are zero-padded to
/// a common length, sorted descending, and compared in `l2`. Over the
/// nonnegative half of `l2` this equals the infimum of the `l2` distance
/// over all pairings of the entries.
pub fn delta2(a: &Spectrum, b: &Spectrum) -> f64 {
    delta2_slices(a.values(), b.values())
}

/// [`delta2`] on raw slices; the inputs need not be sorted.
pub fn delta2_slices(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().max(b.len());
    let pad_sort = |s: &[f64]| {
        let mut v = Vec::with_capacity(n);
        v.extend_from_slice(s);
        v.resize(n, 0.0);
        v.sort_by(|x, y| y.partial_cmp(x).expect("finite values compare"));
        v
    };
    let av = pad_sort(a);
    let bv = pad_sort(b);
    av.iter()
        .zip(&bv)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Frobenius distance `||a - b||_F` between two matrices of equal shape.
pub fn frobenius_distance(
    a: ArrayView2<'_, f64>,
    b: ArrayView2<'_, f64>,
) -> Result<f64, NumericsError> {
    if a.dim() != b.dim() {
        let (ar, ac) = a.dim();
        let (br, bc) = b.dim();
        return Err(NumericsError::DimensionMismatch(ar, ac, br, bc));
    }
    let mut s = 0.0;
    for (x, y) in a.iter().zip(b.iter()) {
        let d = x - y;
        s += d * d;
    }
    Ok(s.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn spectrum(values: &[f64]) -> Spectrum {
        Spectrum::new(values.to_vec()).unwrap()
    }

    #[test]
    fn identity_eigenvalues() {
        let eye = array![[1.0, 0.0], [0.0, 1.0]];
        let s = symmetric_eigenvalues(eye.view()).unwrap();
        assert_eq!(s.values(), &[1.0, 1.0]);
    }

    #[test]
    fn swap_matrix_eigenvalues() {
        let a = array![[0.0, 1.0], [1.0, 0.0]];
        let s = symmetric_eigenvalues(a.view()).unwrap();
        assert!((s.values()[0] - 1.0).abs() < 1e-12);
        assert!((s.values()[1] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn tridiagonal_eigenvalues_match_characteristic_roots() {
        // Characteristic polynomial of the 3x3 tridiagonal [2,1] matrix is
        // (2 - x)((2 - x)^2 - 2), with roots 2 and 2 +- sqrt(2).
        let a = array![[2.0, 1.0, 0.0], [1.0, 2.0, 1.0], [0.0, 1.0, 2.0]];
        let s = symmetric_eigenvalues(a.view()).unwrap();
        let expected = [2.0 + std::f64::consts::SQRT_2, 2.0, 2.0 - std::f64::consts::SQRT_2];
        for (got, want) in s.values().iter().zip(expected) {
            assert!((got - want).abs() < 1e-10, "got {got}, want {want}");
        }
    }

    #[test]
    fn eigenvalue_sum_matches_trace() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 17;
        let mut a = Array2::<f64>::zeros((n, n));
        for i in 0..n {
            for j in 0..=i {
                let v = rng.gen_range(-1.0..1.0);
                a[[i, j]] = v;
                a[[j, i]] = v;
            }
        }
        let trace: f64 = (0..n).map(|i| a[[i, i]]).sum();
        let s = symmetric_eigenvalues(a.view()).unwrap();
        let sum: f64 = s.values().iter().sum();
        let max_abs = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!((sum - trace).abs() <= 1e-8 * n as f64 * max_abs);
    }

    #[test]
    fn rejects_non_square() {
        let a = Array2::<f64>::zeros((2, 3));
        assert!(matches!(
            symmetric_eigenvalues(a.view()),
            Err(NumericsError::NotSquare(2, 3))
        ));
    }

    #[test]
    fn rejects_asymmetric() {
        let a = array![[1.0, 2.0], [0.0, 1.0]];
        assert!(matches!(
            symmetric_eigenvalues(a.view()),
            Err(NumericsError::Asymmetric { .. })
        ));
    }

    #[test]
    fn rejects_non_finite() {
        let a = array![[1.0, f64::NAN], [f64::NAN, 1.0]];
        assert!(matches!(
            symmetric_eigenvalues(a.view()),
            Err(NumericsError::NonFinite(..))
        ));
    }

    #[test]
    fn delta2_identity_and_permutation() {
        assert_eq!(delta2(&spectrum(&[1.0, 0.5]), &spectrum(&[1.0, 0.5])), 0.0);
        // construction sorts, so argument order inside a spectrum is irrelevant
        assert_eq!(delta2(&spectrum(&[0.5, 1.0]), &spectrum(&[1.0, 0.5])), 0.0);
    }

    #[test]
    fn delta2_zero_padding() {
        assert!((delta2(&spectrum(&[1.0]), &spectrum(&[1.0, 0.2])) - 0.2).abs() < 1e-15);
    }

    #[test]
    fn delta2_sorted_elementwise() {
        assert!((delta2(&spectrum(&[1.0, 0.5]), &spectrum(&[1.0, 0.25])) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn delta2_rejects_nothing_but_spectrum_construction_does() {
        assert!(Spectrum::new(vec![1.0, f64::INFINITY]).is_err());
        assert!(Spectrum::new(vec![f64::NAN]).is_err());
    }

    #[test]
    fn frobenius_examples() {
        let z = Array2::<f64>::zeros((2, 2));
        let swap = array![[0.0, 1.0], [1.0, 0.0]];
        let eye = array![[1.0, 0.0], [0.0, 1.0]];
        assert_eq!(frobenius_distance(swap.view(), swap.view()).unwrap(), 0.0);
        assert!((frobenius_distance(z.view(), swap.view()).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        assert!((frobenius_distance(eye.view(), z.view()).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        assert!(frobenius_distance(z.view(), Array2::<f64>::zeros((3, 3)).view()).is_err());
    }

    fn random_symmetric(n: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
        let mut a = Array2::<f64>::zeros((n, n));
        for i in 0..n {
            for j in 0..=i {
                let v = rng.gen_range(-1.0..1.0);
                a[[i, j]] = v;
                a[[j, i]] = v;
            }
        }
        a
    }

    #[test]
    fn hoffman_wielandt_inequality() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..100 {
            let a = random_symmetric(20, &mut rng);
            let b = random_symmetric(20, &mut rng);
            let sa = symmetric_eigenvalues(a.view()).unwrap();
            let sb = symmetric_eigenvalues(b.view()).unwrap();
            let lhs = delta2(&sa, &sb);
            let rhs = frobenius_distance(a.view(), b.view()).unwrap();
            assert!(lhs <= rhs + 1e-10, "delta2 {lhs} > frobenius {rhs}");
        }
    }

    #[test]
    fn delta2_metric_axioms_on_nonnegative_sequences() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let len = rng.gen_range(1..8);
            let draw = |rng: &mut ChaCha8Rng, len: usize| {
                (0..len).map(|_| rng.gen_range(0.0..2.0)).collect::<Vec<f64>>()
            };
            let x = spectrum(&draw(&mut rng, len));
            let len_y = rng.gen_range(1..8);
            let y = spectrum(&draw(&mut rng, len_y));
            let len_z = rng.gen_range(1..8);
            let z = spectrum(&draw(&mut rng, len_z));
            assert_eq!(delta2(&x, &y), delta2(&y, &x));
            assert!(delta2(&x, &z) <= delta2(&x, &y) + delta2(&y, &z) + 1e-12);
            assert_eq!(delta2(&x, &x), 0.0);
        }
    }

    #[test]
    fn eigenvalues_invariant_under_orthogonal_conjugation() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 12;
        let a = random_symmetric(n, &mut rng);
        // random orthogonal Q from Gram-Schmidt on a Gaussian matrix
        let mut q = Array2::<f64>::zeros((n, n));
        for j in 0..n {
            let mut col: Vec<f64> = (0..n)
                .map(|_| {
                    let u: f64 = rng.gen_range(-1.0..1.0f64);
                    u
                })
                .collect();
            for k in 0..j {
                let dot: f64 = (0..n).map(|i| col[i] * q[[i, k]]).sum();
                for i in 0..n {
                    col[i] -= dot * q[[i, k]];
                }
            }
            let norm = col.iter().map(|v| v * v).sum::<f64>().sqrt();
            for i in 0..n {
                q[[i, j]] = col[i] / norm;
            }
        }
        let conj = q.t().dot(&a).dot(&q);
        let sa = symmetric_eigenvalues(a.view()).unwrap();
        let sc = symmetric_eigenvalues(conj.view()).unwrap();
        for (x, y) in sa.values().iter().zip(sc.values()) {
            assert!((x - y).abs() < 1e-8);
        }
    }
}
