//! Weighted Laplacian, reduced Laplacian and the zero-eigenvalue census.
//!
//! With reference node `r_i` (first node of cluster `i`), the reduced block
//! between clusters `i` and `j` is `L~_ij - 1 gamma_ij^T`, where `gamma_ij`
//! is row `r_i` of `L_ij` without its first column and `L~_ij` is `L_ij`
//! without its first row and column. The local factor `c_i` scales only the
//! diagonal blocks.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::graph::{check_zero_row_sums, PartitionedLaplacian, ROW_SUM_TOL};
use crate::numkernel::singular_values;
use crate::scalar::{lit, Field, Real};

/// Relative singular-value threshold for nonsingularity.
pub const NONSINGULAR_REL_TOL: f64 = 1e-9;
/// Absolute floor for the singular-value threshold.
pub const NONSINGULAR_ABS_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct WeightingFactors<T> {
    global: T,
    local: Vec<T>,
}

impl<T: Field> WeightingFactors<T> {
    pub fn new(global: T, local: Vec<T>) -> Result<Self> {
        if global <= T::zero() {
            return Err(Error::InvalidFactors(format!(
                "global factor must be positive, got {}",
                global.as_f64()
            )));
        }
        if let Some(i) = local.iter().position(|c| *c < T::zero()) {
            return Err(Error::InvalidFactors(format!(
                "local factor {i} is negative ({})",
                local[i].as_f64()
            )));
        }
        Ok(Self { global, local })
    }

    /// `c = 1`, `c_i = 1`.
    pub fn unit(clusters: usize) -> Self {
        Self {
            global: T::one(),
            local: vec![T::one(); clusters],
        }
    }

    pub fn global(&self) -> T {
        self.global
    }

    pub fn local(&self) -> &[T] {
        &self.local
    }

    /// `c * c_i`.
    pub fn effective(&self, i: usize) -> T {
        self.global * self.local[i]
    }

    fn check_count(&self, clusters: usize) -> Result<()> {
        if self.local.len() != clusters {
            return Err(Error::dims(
                "local weighting factors",
                clusters,
                self.local.len(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReducedLaplacian<T: Field> {
    /// Weighted Laplacian (diagonal blocks scaled by `c_i`).
    pub weighted: DMatrix<T>,
    /// The reduced matrix, `(L - N) x (L - N)`.
    pub reduced: DMatrix<T>,
    /// Unscaled reduced blocks `L^_ij`.
    pub hat_blocks: Vec<Vec<DMatrix<T>>>,
    pub gamma: Vec<Vec<DVector<T>>>,
    pub tilde: Vec<Vec<DMatrix<T>>>,
    /// `blockdiag{c_i L^_ii}`.
    pub diagonal_part: DMatrix<T>,
    /// `reduced - diagonal_part`.
    pub off_diagonal_part: DMatrix<T>,
    /// `l_i - 1` per cluster.
    pub reduced_sizes: Vec<usize>,
    pub reduced_offsets: Vec<usize>,
}

impl<T: Field> ReducedLaplacian<T> {
    pub fn dim(&self) -> usize {
        self.reduced.nrows()
    }

    /// Diagonal block `L^_ii` (unscaled).
    pub fn diagonal_block(&self, i: usize) -> &DMatrix<T> {
        &self.hat_blocks[i][i]
    }
}

/// Diagonal blocks scaled by `c_i`; off-diagonal blocks unchanged.
pub fn weight_laplacian<T: Field>(
    pl: &PartitionedLaplacian<T>,
    w: &WeightingFactors<T>,
) -> Result<DMatrix<T>> {
    w.check_count(pl.cluster_count())?;
    let mut out = pl.full().clone();
    for i in 0..pl.cluster_count() {
        let (o, s) = (pl.offsets()[i], pl.cluster_sizes()[i]);
        let mut view = out.view_mut((o, o), (s, s));
        view *= w.local()[i];
    }
    Ok(out)
}

fn require_zero_row_sums<T: Field>(pl: &PartitionedLaplacian<T>) -> Result<()> {
    let check = check_zero_row_sums(pl, ROW_SUM_TOL);
    match check.worst {
        None => Ok(()),
        Some((row_block, col_block, node, sum)) => Err(Error::RowSumViolation {
            row_block,
            col_block,
            node,
            sum,
        }),
    }
}

pub fn reduce<T: Field>(
    pl: &PartitionedLaplacian<T>,
    w: &WeightingFactors<T>,
) -> Result<ReducedLaplacian<T>> {
    require_zero_row_sums(pl)?;
    let weighted = weight_laplacian(pl, w)?;
    let n = pl.cluster_count();
    let sizes = pl.cluster_sizes();
    let offsets = pl.offsets();
    let full = pl.full();

    let reduced_sizes: Vec<usize> = sizes.iter().map(|s| s - 1).collect();
    let mut reduced_offsets = Vec::with_capacity(n);
    let mut acc = 0;
    for s in &reduced_sizes {
        reduced_offsets.push(acc);
        acc += s;
    }
    let dim = acc;

    let mut gamma = Vec::with_capacity(n);
    let mut tilde = Vec::with_capacity(n);
    let mut hat_blocks = Vec::with_capacity(n);
    for i in 0..n {
        let (ri, li) = (offsets[i], reduced_sizes[i]);
        let mut g_row = Vec::with_capacity(n);
        let mut t_row = Vec::with_capacity(n);
        let mut h_row = Vec::with_capacity(n);
        for j in 0..n {
            let (rj, lj) = (offsets[j], reduced_sizes[j]);
            let g = DVector::from_fn(lj, |c, _| full[(ri, rj + 1 + c)]);
            let t = DMatrix::from_fn(li, lj, |r, c| full[(ri + 1 + r, rj + 1 + c)]);
            let h = DMatrix::from_fn(li, lj, |r, c| t[(r, c)] - g[c]);
            g_row.push(g);
            t_row.push(t);
            h_row.push(h);
        }
        gamma.push(g_row);
        tilde.push(t_row);
        hat_blocks.push(h_row);
    }

    let mut reduced = DMatrix::zeros(dim, dim);
    let mut diagonal_part = DMatrix::zeros(dim, dim);
    for i in 0..n {
        for j in 0..n {
            let block = if i == j {
                &hat_blocks[i][j] * w.local()[i]
            } else {
                hat_blocks[i][j].clone()
            };
            let shape = (reduced_sizes[i], reduced_sizes[j]);
            let at = (reduced_offsets[i], reduced_offsets[j]);
            reduced.view_mut(at, shape).copy_from(&block);
            if i == j {
                diagonal_part.view_mut(at, shape).copy_from(&block);
            }
        }
    }
    let off_diagonal_part = &reduced - &diagonal_part;

    Ok(ReducedLaplacian {
        weighted,
        reduced,
        hat_blocks,
        gamma,
        tilde,
        diagonal_part,
        off_diagonal_part,
        reduced_sizes,
        reduced_offsets,
    })
}

/// Reduced matrix obtained through the similarity `S^-1 L_c S` with
/// `S = blockdiag{[[1, 0], [1, I]]}`, followed by moving every reference row
/// and column to the front. Returns the trailing `(L - N)` block.
pub fn similarity_reduction_oracle<T: Field>(
    pl: &PartitionedLaplacian<T>,
    w: &WeightingFactors<T>,
) -> Result<DMatrix<T>> {
    require_zero_row_sums(pl)?;
    let lc = weight_laplacian(pl, w)?;
    let (s, s_inv) = reference_similarity(pl);
    let transformed = &s_inv * &lc * &s;
    let order = reference_first_order(pl);
    let n = pl.cluster_count();
    let dim = pl.node_count() - n;
    Ok(DMatrix::from_fn(dim, dim, |r, c| {
        transformed[(order[n + r], order[n + c])]
    }))
}

/// `(S, S^-1)` for the reference-node similarity.
pub fn reference_similarity<T: Field>(pl: &PartitionedLaplacian<T>) -> (DMatrix<T>, DMatrix<T>) {
    let n = pl.node_count();
    let mut s = DMatrix::identity(n, n);
    let mut s_inv = DMatrix::identity(n, n);
    for (i, &o) in pl.offsets().iter().enumerate() {
        for r in 1..pl.cluster_sizes()[i] {
            s[(o + r, o)] = T::one();
            s_inv[(o + r, o)] = -T::one();
        }
    }
    (s, s_inv)
}

/// Reference nodes first (cluster order), then the remaining nodes.
fn reference_first_order<T: Field>(pl: &PartitionedLaplacian<T>) -> Vec<usize> {
    let refs = pl.offsets().iter().copied();
    let rest = (0..pl.cluster_count()).flat_map(|i| {
        let o = pl.offsets()[i];
        (o + 1)..(o + pl.cluster_sizes()[i])
    });
    refs.chain(rest).collect()
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct BlockCensus {
    /// `c_i L_ii` has exactly one zero eigenvalue (`L^_ii` nonsingular).
    pub simple_zero: bool,
    pub sigma_min: f64,
    pub sigma_max: f64,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ZeroCensus {
    pub blocks: Vec<BlockCensus>,
    /// Nonsingularity of the reduced matrix.
    pub reduced_nonsingular: bool,
    /// The weighted Laplacian has exactly `N` zero eigenvalues.
    pub exactly_n_zero: bool,
    /// Numerical nullity (geometric multiplicity of 0) of the reduced matrix.
    pub reduced_nullity: usize,
    /// Numerical nullity of the weighted Laplacian.
    pub weighted_nullity: usize,
    pub cluster_count: usize,
    pub rel_tol: f64,
    pub abs_floor: f64,
}

/// Number of singular values at or below `max(rel * sigma_max, floor)`.
fn numerical_nullity<T: Real>(m: &DMatrix<T>, rel: f64, floor: f64) -> (usize, f64, f64) {
    if m.nrows() == 0 {
        return (0, f64::INFINITY, 0.0);
    }
    let sv = singular_values(m);
    let smax = sv.iter().map(|s| s.as_f64()).fold(0.0, f64::max);
    let smin = sv.iter().map(|s| s.as_f64()).fold(f64::INFINITY, f64::min);
    let threshold = (rel * smax).max(floor);
    let nullity = sv.iter().filter(|s| s.as_f64() <= threshold).count();
    (nullity, smin, smax)
}

pub fn zero_eigenvalue_census<T: Real>(
    pl: &PartitionedLaplacian<T>,
    w: &WeightingFactors<T>,
    rel_tol: f64,
) -> Result<ZeroCensus> {
    let red = reduce(pl, w)?;
    let floor = NONSINGULAR_ABS_FLOOR;
    let blocks = (0..pl.cluster_count())
        .map(|i| {
            let (nullity, sigma_min, sigma_max) =
                numerical_nullity(red.diagonal_block(i), rel_tol, floor);
            BlockCensus {
                simple_zero: nullity == 0,
                sigma_min,
                sigma_max,
            }
        })
        .collect();
    let (reduced_nullity, _, _) = numerical_nullity(&red.reduced, rel_tol, floor);
    let (weighted_nullity, _, _) = numerical_nullity(&red.weighted, rel_tol, floor);
    Ok(ZeroCensus {
        blocks,
        reduced_nonsingular: reduced_nullity == 0,
        exactly_n_zero: reduced_nullity == 0,
        reduced_nullity,
        weighted_nullity,
        cluster_count: pl.cluster_count(),
        rel_tol,
        abs_floor: floor,
    })
}

/// Converts a matrix of exact entries to floating point.
pub fn reduced_to_real<T: Field, R: Real>(m: &DMatrix<T>) -> DMatrix<R> {
    m.map(|v| lit(v.as_f64()))
}
