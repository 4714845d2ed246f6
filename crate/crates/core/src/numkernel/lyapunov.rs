use nalgebra::{DMatrix, DVector};

use super::linalg::{is_positive_definite, symmetric_part};
use super::spectrum::spectrum;
use crate::error::{Error, Result};
use crate::scalar::{rounding_tol, Real};

/// Solves `A^T X + X A = C` through the vectorized system
/// `(I (x) A^T + A^T (x) I) vec(X) = vec(C)`.
pub fn solve_lyapunov<T: Real>(a: &DMatrix<T>, c: &DMatrix<T>) -> Result<DMatrix<T>> {
    let n = a.nrows();
    if !a.is_square() || c.shape() != (n, n) {
        return Err(Error::dims(
            "Lyapunov equation",
            format!("{n}x{n} operands"),
            format!("A {:?}, C {:?}", a.shape(), c.shape()),
        ));
    }
    if n == 0 {
        return Ok(DMatrix::zeros(0, 0));
    }
    let eye = DMatrix::<T>::identity(n, n);
    let at = a.transpose();
    let operator = eye.kronecker(&at) + at.kronecker(&eye);
    let rhs = DVector::from_column_slice(c.as_slice());
    let x = operator
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Singular("Lyapunov operator".into()))?;
    Ok(DMatrix::from_column_slice(n, n, x.as_slice()))
}

/// Positive-definite `W` with `W L^ + L^^T W = Q`.
///
/// Requires every eigenvalue of `L^` to have a positive real part and `Q`
/// to be symmetric positive definite.
pub fn solve_lyapunov_for_w<T: Real>(lhat: &DMatrix<T>, q: &DMatrix<T>) -> Result<DMatrix<T>> {
    let spec = spectrum(lhat)?;
    if let Some(bad) = spec.eigenvalues.iter().find(|z| z.re <= T::zero()) {
        return Err(Error::LyapunovSpectrum {
            re: bad.re.as_f64(),
            im: bad.im.as_f64(),
        });
    }
    if !is_positive_definite(q, rounding_tol(1e-12)) {
        return Err(Error::NotPositiveDefinite("right-hand side Q".into()));
    }
    let w = symmetric_part(&solve_lyapunov(lhat, q)?);
    if !is_positive_definite(&w, rounding_tol(1e-12)) {
        return Err(Error::NotPositiveDefinite(
            "Lyapunov solution W (ill-conditioned L^)".into(),
        ));
    }
    Ok(w)
}

/// Checks a user-supplied `W`: positive definite with `W L^ + L^^T W > 0`.
pub fn validate_w<T: Real>(w: &DMatrix<T>, lhat: &DMatrix<T>) -> Result<()> {
    if w.shape() != lhat.shape() {
        return Err(Error::dims(
            "weighting matrix W",
            format!("{:?}", lhat.shape()),
            format!("{:?}", w.shape()),
        ));
    }
    let tol = rounding_tol(1e-12);
    if !is_positive_definite(w, tol) {
        return Err(Error::NotPositiveDefinite("W".into()));
    }
    let sym = w * lhat + lhat.transpose() * w;
    if !is_positive_definite(&sym, tol) {
        return Err(Error::NotPositiveDefinite("W L^ + L^^T W".into()));
    }
    Ok(())
}
