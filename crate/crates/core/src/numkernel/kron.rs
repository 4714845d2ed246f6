use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::scalar::Real;

pub fn block_diag<T: Real>(blocks: &[DMatrix<T>]) -> DMatrix<T> {
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = DMatrix::zeros(rows, cols);
    let (mut r, mut c) = (0, 0);
    for b in blocks {
        out.view_mut((r, c), b.shape()).copy_from(b);
        r += b.nrows();
        c += b.ncols();
    }
    out
}

/// `M (x) I_n`.
pub fn kron_identity<T: Real>(m: &DMatrix<T>, n: usize) -> DMatrix<T> {
    m.kronecker(&DMatrix::identity(n, n))
}

/// `blockdiag{I_{k_i} (x) A_i} - c (L^ (x) I_n)` where `blocks[i] = (k_i, A_i)`.
pub fn kron_assemble<T: Real>(
    blocks: &[(usize, &DMatrix<T>)],
    reduced: &DMatrix<T>,
    c: T,
    n: usize,
) -> Result<DMatrix<T>> {
    let count: usize = blocks.iter().map(|(k, _)| k).sum();
    if reduced.nrows() != count || reduced.ncols() != count {
        return Err(Error::dims(
            "Kronecker assembly",
            format!("{count}x{count} reduced matrix"),
            format!("{}x{}", reduced.nrows(), reduced.ncols()),
        ));
    }
    if let Some((_, a)) = blocks.iter().find(|(_, a)| a.shape() != (n, n)) {
        return Err(Error::dims(
            "Kronecker assembly",
            format!("{n}x{n} system matrix"),
            format!("{}x{}", a.nrows(), a.ncols()),
        ));
    }
    let mut a_hat = Vec::with_capacity(count);
    for (k, a) in blocks {
        a_hat.extend(std::iter::repeat_n((*a).clone(), *k));
    }
    Ok(block_diag(&a_hat) - kron_identity(reduced, n) * c)
}
