use nalgebra::{Cholesky, DMatrix, SymmetricEigen};

use crate::scalar::{lit, Real};

pub fn frobenius<T: Real>(m: &DMatrix<T>) -> T {
    m.norm()
}

/// `(M + M^T) / 2`.
pub fn symmetric_part<T: Real>(m: &DMatrix<T>) -> DMatrix<T> {
    (m + m.transpose()) * lit::<T>(0.5)
}

/// Singular values; empty for an empty matrix.
pub fn singular_values<T: Real>(m: &DMatrix<T>) -> Vec<T> {
    if m.is_empty() {
        return Vec::new();
    }
    m.clone().singular_values().iter().copied().collect()
}

/// `(lambda_min, lambda_max)` of the symmetric part of `m`.
/// Returns `None` for an empty matrix.
pub fn symmetric_eigen_extremes<T: Real>(m: &DMatrix<T>) -> Option<(T, T)> {
    if m.is_empty() {
        return None;
    }
    let eig = SymmetricEigen::new(symmetric_part(m));
    let mut lo = eig.eigenvalues[0];
    let mut hi = lo;
    for &v in eig.eigenvalues.iter() {
        if v < lo {
            lo = v;
        }
        if v > hi {
            hi = v;
        }
    }
    Some((lo, hi))
}

pub fn cholesky_factor<T: Real>(m: &DMatrix<T>) -> Option<DMatrix<T>> {
    Cholesky::new(symmetric_part(m)).map(|c| c.unpack())
}

/// Symmetric with a Cholesky factorization and a positive smallest eigenvalue.
pub fn is_positive_definite<T: Real>(m: &DMatrix<T>, sym_tol: T) -> bool {
    if m.is_empty() {
        return true;
    }
    let asym = (m - m.transpose()).amax();
    let scale = m.amax().max(T::one());
    asym <= sym_tol * scale
        && cholesky_factor(m).is_some()
        && symmetric_eigen_extremes(m).is_some_and(|(lo, _)| lo > T::zero())
}

/// Largest eigenvalue of `W S` for `W` positive definite and `S` symmetric.
/// With `W = C C^T`, `W S` is similar to the symmetric `C^T S C`.
pub fn symmetrized_product_max<T: Real>(w: &DMatrix<T>, s: &DMatrix<T>) -> Option<T> {
    let c = cholesky_factor(w)?;
    let inner = c.transpose() * symmetric_part(s) * &c;
    symmetric_eigen_extremes(&inner).map(|(_, hi)| hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    #[test]
    fn extremes_of_off_diagonal_pair() {
        let (lo, hi) = symmetric_eigen_extremes(&dmatrix![0.0f64, 3.0; 3.0, 0.0]).unwrap();
        assert!((lo + 3.0).abs() < 1e-14 && (hi - 3.0).abs() < 1e-14);
        assert!(symmetric_eigen_extremes::<f64>(&DMatrix::zeros(0, 0)).is_none());
    }

    #[test]
    fn product_eigen_matches_nonsymmetric_solve() {
        let w = dmatrix![2.0f64, 0.5; 0.5, 1.0];
        let s = dmatrix![1.0f64, -2.0; -2.0, 0.5];
        let direct = (&w * &s)
            .complex_eigenvalues()
            .iter()
            .map(|z| z.re)
            .fold(f64::NEG_INFINITY, f64::max);
        let via = symmetrized_product_max(&w, &s).unwrap();
        assert!((direct - via).abs() < 1e-12);
    }

    #[test]
    fn positive_definiteness() {
        assert!(is_positive_definite(
            &dmatrix![2.0f64, 1.0; 1.0, 2.0],
            1e-12
        ));
        assert!(!is_positive_definite(
            &dmatrix![1.0f64, 2.0; 2.0, 1.0],
            1e-12
        ));
        assert!(!is_positive_definite(
            &dmatrix![1.0f64, 0.5; 0.0, 1.0],
            1e-12
        ));
    }
}
