//! Dense numerical kernels.

mod kron;
mod linalg;
mod lyapunov;
mod ode;
mod riccati;
mod spectrum;

pub use kron::{block_diag, kron_assemble, kron_identity};
pub use linalg::{
    cholesky_factor, frobenius, is_positive_definite, singular_values, symmetric_eigen_extremes,
    symmetric_part, symmetrized_product_max,
};
pub use lyapunov::{solve_lyapunov, solve_lyapunov_for_w, validate_w};
pub use ode::{integrate_rk4, Trajectory};
pub use riccati::{solve_care, uncontrollable_mode, RiccatiSolution};
pub use spectrum::{hurwitz_margin, spectrum, HurwitzVerdict, Spectrum, HURWITZ_EPS};
