use nalgebra::linalg::Schur;
use nalgebra::DMatrix;
use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::{infinity, lit, Real};

/// Default strictness threshold for the Hurwitz test.
pub const HURWITZ_EPS: f64 = 1e-9;

const SCHUR_MAX_ITER: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum<T> {
    /// Sorted by real part, then imaginary part.
    pub eigenvalues: Vec<Complex<T>>,
    /// `-inf` for an empty matrix.
    pub max_real: T,
    /// `+inf` for an empty matrix.
    pub min_real: T,
}

/// Fixed dense orthogonal matrix (Q factor of a deterministic full matrix).
fn scrambler<T: Real>(n: usize) -> DMatrix<T> {
    let seed = DMatrix::from_fn(n, n, |i, j| lit::<T>(((i * n + j + 1) as f64).sin()));
    seed.qr().q()
}

/// The shifted QR iteration occasionally stalls on matrices with repeated or
/// tightly clustered eigenvalues (Kronecker sums hit this). Retry after an
/// orthogonal change of basis, then with a looser deflation threshold.
fn schur_eigenvalues<T: Real>(m: &DMatrix<T>) -> Option<Vec<Complex<T>>> {
    let eps = T::default_epsilon();
    let attempt = |a: DMatrix<T>, tol: T| {
        Schur::try_new(a, tol, SCHUR_MAX_ITER)
            .map(|s| s.complex_eigenvalues().iter().copied().collect())
    };
    attempt(m.clone(), eps)
        .or_else(|| {
            let q = scrambler::<T>(m.nrows());
            attempt(q.transpose() * m * &q, eps)
        })
        .or_else(|| attempt(m.clone(), eps * lit(1e3)))
}

pub fn spectrum<T: Real>(m: &DMatrix<T>) -> Result<Spectrum<T>> {
    if !m.is_square() {
        return Err(Error::dims(
            "spectrum",
            "square matrix",
            format!("{}x{}", m.nrows(), m.ncols()),
        ));
    }
    if m.nrows() == 0 {
        return Ok(Spectrum {
            eigenvalues: Vec::new(),
            max_real: -infinity::<T>(),
            min_real: infinity(),
        });
    }
    let mut eigenvalues = schur_eigenvalues(m).ok_or(Error::EigenFailure(m.nrows()))?;
    eigenvalues.sort_by(|a, b| {
        a.re.partial_cmp(&b.re)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.im.partial_cmp(&b.im).unwrap_or(std::cmp::Ordering::Equal))
    });
    let max_real = eigenvalues
        .last()
        .map(|z| z.re)
        .unwrap_or_else(|| -infinity::<T>());
    let min_real = eigenvalues.first().map(|z| z.re).unwrap_or_else(infinity);
    Ok(Spectrum {
        eigenvalues,
        max_real,
        min_real,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HurwitzVerdict<T> {
    pub is_hurwitz: bool,
    /// `-max Re(lambda)`; `+inf` for an empty matrix.
    pub margin: T,
}

/// Hurwitz test with strictness threshold `eps` on the margin.
pub fn hurwitz_margin<T: Real>(m: &DMatrix<T>, eps: f64) -> Result<HurwitzVerdict<T>> {
    let margin = -spectrum(m)?.max_real;
    Ok(HurwitzVerdict {
        is_hurwitz: margin > lit(eps),
        margin,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    #[test]
    fn stalled_schur_input_still_resolves() {
        // I (x) A - c L (x) I for identical 2x2 agents; the plain iteration stalls.
        let m = DMatrix::from_column_slice(
            4,
            4,
            &[
                -10.077318892862065,
                0.9842772971368219,
                -7.972077257119236,
                0.0,
                -0.7162498459567468,
                -10.567427787965032,
                0.0,
                -7.972077257119236,
                -2.657359085706412,
                0.0,
                -7.419959807155651,
                0.9842772971368219,
                0.0,
                -2.657359085706412,
                -0.7162498459567468,
                -7.91006870225862,
            ],
        );
        let s = spectrum(&m).unwrap();
        let trace: f64 = s.eigenvalues.iter().map(|z| z.re).sum();
        assert!((trace - m.trace()).abs() < 1e-9);
        let det = s
            .eigenvalues
            .iter()
            .fold(Complex::new(1.0, 0.0), |acc, z| acc * z);
        assert!((det.re - m.determinant()).abs() < 1e-6 * m.determinant().abs());
    }

    #[test]
    fn triangular_and_oscillator_spectra() {
        let s = spectrum(&dmatrix![0.0f64, 1.0; 0.0, -1.0 / 42.21]).unwrap();
        assert!((s.min_real + 0.023691).abs() < 1e-6);
        assert!(s.max_real.abs() < 1e-15);

        let s = spectrum(&dmatrix![0.0f64, 1.0; -4.0, 0.0]).unwrap();
        assert!(s.max_real.abs() < 1e-12);
        assert!((s.eigenvalues[0].im.abs() - 2.0).abs() < 1e-12);
        assert!((s.eigenvalues[0].im + s.eigenvalues[1].im).abs() < 1e-12);
    }

    #[test]
    fn ship_symmetric_part() {
        let tau = 107.3;
        let a = dmatrix![0.0f64, 1.0; 0.0, -1.0 / tau];
        let s = spectrum(&(&a + a.transpose())).unwrap();
        assert!((s.max_real - 0.9907).abs() < 1e-4);
    }

    #[test]
    fn non_square_is_rejected() {
        assert!(spectrum(&DMatrix::<f64>::zeros(2, 3)).is_err());
    }

    #[test]
    fn hurwitz_examples() {
        let v = hurwitz_margin(&dmatrix![-1.0f64, 0.0; 0.0, -2.0], HURWITZ_EPS).unwrap();
        assert!(v.is_hurwitz);
        assert!((v.margin - 1.0).abs() < 1e-14);
        let v = hurwitz_margin(&dmatrix![0.0f64, 0.0; 0.0, -1.0], HURWITZ_EPS).unwrap();
        assert!(!v.is_hurwitz);
        assert!(v.margin.abs() < 1e-15);
        let v = hurwitz_margin(&DMatrix::<f64>::zeros(0, 0), HURWITZ_EPS).unwrap();
        assert!(v.is_hurwitz && v.margin.is_infinite());
    }

    #[test]
    fn works_in_single_precision() {
        let s = spectrum(&dmatrix![-1.0f32, 2.0; 0.0, -3.0]).unwrap();
        assert!((s.max_real + 1.0).abs() < 1e-5);
    }
}
