//! Continuous algebraic Riccati equation `P A + A^T P - P B B^T P + I = 0`.
//!
//! The stabilizing solution is read off the stable invariant subspace of the
//! Hamiltonian `H = [[A, -B B^T], [-I, -A^T]]`. The subspace is obtained from
//! the matrix sign function of `H` (scaled Newton iteration): with
//! `Z = sign(H)`, the stable subspace is the kernel of `Z + I`, so
//! `[Z12; Z22 + I] P = -[Z11 + I; Z21]`. Newton-Kleinman steps then polish
//! the result until the residual stops improving.

use nalgebra::{DMatrix, SVD};
use num_complex::Complex;

use super::linalg::{is_positive_definite, symmetric_part};
use super::lyapunov::solve_lyapunov;
use super::spectrum::{hurwitz_margin, spectrum};
use crate::error::{Error, Result};
use crate::scalar::{lit, rounding_tol, Real};

const SIGN_MAX_ITER: usize = 100;
const REFINE_MAX_ITER: usize = 12;

#[derive(Debug, Clone, PartialEq)]
pub struct RiccatiSolution<T: Real> {
    pub p: DMatrix<T>,
    /// `K = -B^T P`.
    pub k: DMatrix<T>,
    /// `||P A + A^T P - P B B^T P + I||_F`.
    pub residual: T,
}

impl<T: Real> RiccatiSolution<T> {
    /// Residual bound `1e-8 * max(1, ||P||_F)` (scaled for coarser types).
    pub fn residual_bound(&self) -> T {
        rounding_tol::<T>(1e-8) * self.p.norm().max(T::one())
    }
}

fn care_residual<T: Real>(a: &DMatrix<T>, g: &DMatrix<T>, p: &DMatrix<T>) -> T {
    let n = a.nrows();
    (p * a + a.transpose() * p - p * g * p + DMatrix::identity(n, n)).norm()
}

/// An eigenvalue `lambda` of `A` with `Re(lambda) >= 0` for which
/// `[A - lambda I, B]` loses rank, if any.
pub fn uncontrollable_mode<T: Real>(a: &DMatrix<T>, b: &DMatrix<T>) -> Result<Option<Complex<T>>> {
    let n = a.nrows();
    if !a.is_square() || b.nrows() != n {
        return Err(Error::dims(
            "stabilizability test",
            format!("A {n}x{n}, B {n}xm"),
            format!("A {:?}, B {:?}", a.shape(), b.shape()),
        ));
    }
    let scale = a.amax().max(b.amax()).max(T::one());
    let tol = rounding_tol::<T>(1e-7) * scale;
    for lambda in spectrum(a)?.eigenvalues {
        if lambda.re < T::zero() {
            continue;
        }
        let pencil = DMatrix::<Complex<T>>::from_fn(n, n + b.ncols(), |r, c| {
            if c < n {
                let d = if r == c {
                    lambda
                } else {
                    Complex::new(T::zero(), T::zero())
                };
                Complex::new(a[(r, c)], T::zero()) - d
            } else {
                Complex::new(b[(r, c - n)], T::zero())
            }
        });
        let smallest = pencil
            .singular_values()
            .iter()
            .copied()
            .fold(scale * lit(1e300), |acc: T, s| acc.min(s));
        if smallest <= tol {
            return Ok(Some(lambda));
        }
    }
    Ok(None)
}

fn matrix_sign<T: Real>(h: &DMatrix<T>) -> Result<DMatrix<T>> {
    let dim = h.nrows();
    let mut z = h.clone();
    let mut scaling = true;
    let tol: T = rounding_tol(1e-13);
    for _ in 0..SIGN_MAX_ITER {
        let lu = z.clone().lu();
        let inv = lu
            .try_inverse()
            .ok_or_else(|| Error::Singular("Hamiltonian sign iteration".into()))?;
        let gamma = if scaling {
            let det = z.clone().lu().determinant().abs();
            let g = det.powf(T::one() / lit(dim as f64));
            if g.is_finite() && g > T::zero() {
                g
            } else {
                T::one()
            }
        } else {
            T::one()
        };
        let next = (&z / gamma + inv * gamma) * lit::<T>(0.5);
        let change = (&next - &z).norm();
        let size = next.norm();
        z = next;
        if change <= lit::<T>(1e-2) * size {
            scaling = false;
        }
        if change <= tol * size {
            return Ok(z);
        }
    }
    Err(Error::RiccatiFailure {
        reason: "sign iteration did not converge".into(),
        condition: f64::INFINITY,
    })
}

/// Stabilizing solution of `P A + A^T P - P B B^T P + I = 0`.
pub fn solve_care<T: Real>(a: &DMatrix<T>, b: &DMatrix<T>) -> Result<RiccatiSolution<T>> {
    let n = a.nrows();
    if let Some(mode) = uncontrollable_mode(a, b)? {
        return Err(Error::NotStabilizable {
            re: mode.re.as_f64(),
            im: mode.im.as_f64(),
        });
    }
    if n == 0 {
        return Ok(RiccatiSolution {
            p: DMatrix::zeros(0, 0),
            k: DMatrix::zeros(b.ncols(), 0),
            residual: T::zero(),
        });
    }
    let eye = DMatrix::<T>::identity(n, n);
    let g = b * b.transpose();

    let mut h = DMatrix::<T>::zeros(2 * n, 2 * n);
    h.view_mut((0, 0), (n, n)).copy_from(a);
    h.view_mut((0, n), (n, n)).copy_from(&(-&g));
    h.view_mut((n, 0), (n, n)).copy_from(&(-&eye));
    h.view_mut((n, n), (n, n)).copy_from(&(-a.transpose()));

    let h_spec = spectrum(&h)?;
    let gap = h_spec
        .eigenvalues
        .iter()
        .map(|z| z.re.abs())
        .fold(lit::<T>(f64::MAX), |acc, v| acc.min(v));
    let condition = (h.norm() / gap).as_f64();
    if gap <= rounding_tol::<T>(1e-10) * h.norm().max(T::one()) {
        return Err(Error::RiccatiFailure {
            reason: "Hamiltonian has eigenvalues on the imaginary axis".into(),
            condition,
        });
    }

    let sign = matrix_sign(&h)?;
    let mut lhs = DMatrix::<T>::zeros(2 * n, n);
    lhs.view_mut((0, 0), (n, n))
        .copy_from(&sign.view((0, n), (n, n)));
    lhs.view_mut((n, 0), (n, n))
        .copy_from(&(sign.view((n, n), (n, n)) + &eye));
    let mut rhs = DMatrix::<T>::zeros(2 * n, n);
    rhs.view_mut((0, 0), (n, n))
        .copy_from(&(-(sign.view((0, 0), (n, n)) + &eye)));
    rhs.view_mut((n, 0), (n, n))
        .copy_from(&(-sign.view((n, 0), (n, n))));
    let p0 = SVD::new(lhs, true, true)
        .solve(&rhs, T::default_epsilon())
        .map_err(|reason| Error::RiccatiFailure {
            reason: reason.into(),
            condition,
        })?;

    let mut p = symmetric_part(&p0);
    let mut residual = care_residual(a, &g, &p);
    for _ in 0..REFINE_MAX_ITER {
        let closed = a - &g * &p;
        let rhs = -(&eye + &p * &g * &p);
        let Ok(candidate) = solve_lyapunov(&closed, &rhs) else {
            break;
        };
        let candidate = symmetric_part(&candidate);
        let r = care_residual(a, &g, &candidate);
        if !(r < residual) {
            break;
        }
        p = candidate;
        residual = r;
    }

    let sol = RiccatiSolution {
        k: -(b.transpose() * &p),
        p,
        residual,
    };
    if !is_positive_definite(&sol.p, rounding_tol(1e-10)) {
        return Err(Error::RiccatiFailure {
            reason: "solution is not positive definite".into(),
            condition,
        });
    }
    if !hurwitz_margin(&(a + b * &sol.k), 0.0)?.is_hurwitz {
        return Err(Error::RiccatiFailure {
            reason: "closed loop A + B K is not Hurwitz".into(),
            condition,
        });
    }
    if !(sol.residual <= sol.residual_bound()) {
        return Err(Error::RiccatiFailure {
            reason: format!("residual {:e} above bound", sol.residual.as_f64()),
            condition,
        });
    }
    Ok(sol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    fn ship(tau: f64, kappa: f64) -> (DMatrix<f64>, DMatrix<f64>) {
        (
            dmatrix![0.0f64, 1.0; 0.0, -1.0 / tau],
            dmatrix![0.0f64; kappa / tau],
        )
    }

    #[test]
    fn scalar_integrator() {
        let sol = solve_care(&dmatrix![0.0f64], &dmatrix![1.0f64]).unwrap();
        assert!((sol.p[(0, 0)] - 1.0).abs() < 1e-12);
        assert!((sol.k[(0, 0)] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn ship_type_one() {
        let (a, b) = ship(42.21, 0.181);
        let sol = solve_care(&a, &b).unwrap();
        assert!((sol.p[(0, 0)] / 22.3 - 1.0).abs() < 0.02);
        assert!((sol.p[(0, 1)] / 233.2 - 1.0).abs() < 0.02);
        assert!((sol.p[(1, 1)] / 3915.4 - 1.0).abs() < 0.02);
        assert!((sol.k[(0, 0)] + 1.0).abs() < 0.01);
        assert!((sol.k[(0, 1)] / -16.79 - 1.0).abs() < 0.01);
        assert!(sol.residual <= 1e-8);
    }

    #[test]
    fn oscillator_type_one() {
        let sol = solve_care(&dmatrix![0.0f64, 1.0; -4.0, 0.0], &dmatrix![0.0f64; 1.0]).unwrap();
        assert!((sol.k[(0, 0)] / -0.1231 - 1.0).abs() < 0.01);
        assert!((sol.k[(0, 1)] / -1.1163 - 1.0).abs() < 0.01);
    }

    #[test]
    fn unreachable_unstable_mode() {
        let err =
            solve_care(&dmatrix![1.0f64, 0.0; 0.0, -1.0], &dmatrix![0.0f64; 1.0]).unwrap_err();
        assert!(matches!(err, Error::NotStabilizable { re, .. } if (re - 1.0).abs() < 1e-12));
        // stable uncontrollable modes are fine
        solve_care(&dmatrix![-1.0f64, 0.0; 0.0, 1.0], &dmatrix![0.0f64; 1.0]).unwrap();
    }

    #[test]
    fn single_precision_ship() {
        let a = dmatrix![0.0f32, 1.0; 0.0, -1.0 / 42.21];
        let b = dmatrix![0.0f32; 0.181 / 42.21];
        let sol = solve_care(&a, &b).unwrap();
        assert!((sol.k[(0, 1)] / -16.79 - 1.0).abs() < 0.01);
    }
}
