//! Verdicts for the standing assumptions, the algebraic synchronization
//! condition and its specializations, and the weighting-factor bounds.
//!
//! Every verdict carries the numbers it was computed from. Strict
//! inequalities are certified with slack [`STRICT_SLACK`]; lower bounds on
//! local factors (`c_i >= c_i_min`) accept exact attainment.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{
    acyclic_partition, build_laplacian, check_zero_row_sums, has_directed_spanning_tree,
    subgraph_is_cooperative, ClusterGraph, PartitionedLaplacian, ROW_SUM_TOL,
};
use crate::numkernel::{
    block_diag, hurwitz_margin, kron_assemble, kron_identity, solve_care, solve_lyapunov_for_w,
    spectrum, symmetric_eigen_extremes, symmetrized_product_max, uncontrollable_mode, validate_w,
    RiccatiSolution, HURWITZ_EPS,
};
use crate::reduction::{
    reduce, zero_eigenvalue_census, ReducedLaplacian, WeightingFactors, ZeroCensus,
    NONSINGULAR_REL_TOL,
};
use crate::scalar::{infinity, lit, Real};

/// Slack required by strict inequalities.
pub const STRICT_SLACK: f64 = 1e-9;

/// Entrywise tolerance for deciding that all clusters share `(A, B)`.
pub const IDENTICAL_TOL: f64 = 1e-12;

/// The per-cluster pairs `(A_i, B_i)` with common state dimension `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentFamily<T: Real> {
    dim: usize,
    systems: Vec<(DMatrix<T>, DMatrix<T>)>,
}

impl<T: Real> AgentFamily<T> {
    pub fn new(systems: Vec<(DMatrix<T>, DMatrix<T>)>) -> Result<Self> {
        let Some((a0, _)) = systems.first() else {
            return Err(Error::dims("agent family", "at least one cluster", 0));
        };
        let dim = a0.nrows();
        if dim == 0 {
            return Err(Error::dims("state dimension", "n >= 1", 0));
        }
        for (i, (a, b)) in systems.iter().enumerate() {
            if a.shape() != (dim, dim) {
                return Err(Error::dims(
                    format!("A of cluster {i}"),
                    format!("{dim}x{dim}"),
                    format!("{}x{}", a.nrows(), a.ncols()),
                ));
            }
            if b.nrows() != dim || b.ncols() == 0 {
                return Err(Error::dims(
                    format!("B of cluster {i}"),
                    format!("{dim}xm with m >= 1"),
                    format!("{}x{}", b.nrows(), b.ncols()),
                ));
            }
        }
        Ok(Self { dim, systems })
    }

    /// Same `(A, B)` for every cluster.
    pub fn identical(a: DMatrix<T>, b: DMatrix<T>, clusters: usize) -> Result<Self> {
        Self::new(vec![(a, b); clusters])
    }

    pub fn state_dim(&self) -> usize {
        self.dim
    }

    pub fn cluster_count(&self) -> usize {
        self.systems.len()
    }

    pub fn a(&self, i: usize) -> &DMatrix<T> {
        &self.systems[i].0
    }

    pub fn b(&self, i: usize) -> &DMatrix<T> {
        &self.systems[i].1
    }

    pub fn input_dim(&self, i: usize) -> usize {
        self.systems[i].1.ncols()
    }

    /// All clusters share `(A, B)` up to `tol` entrywise.
    pub fn is_identical(&self, tol: f64) -> bool {
        let (a0, b0) = &self.systems[0];
        let close =
            |x: &DMatrix<T>, y: &DMatrix<T>| x.shape() == y.shape() && (x - y).amax() <= lit(tol);
        self.systems
            .iter()
            .all(|(a, b)| close(a, a0) && close(b, b0))
    }

    fn check_clusters(&self, clusters: usize) -> Result<()> {
        if self.cluster_count() != clusters {
            return Err(Error::dims(
                "agent family",
                format!("{clusters} clusters"),
                self.cluster_count(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GainSource {
    Riccati,
    User,
}

/// Per-cluster feedback gains `K_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlDesign<T: Real> {
    gains: Vec<DMatrix<T>>,
    riccati: Vec<Option<RiccatiSolution<T>>>,
    margins: Vec<T>,
    source: GainSource,
}

impl<T: Real> ControlDesign<T> {
    /// `K_i = -B_i^T P_i` from the stabilizing Riccati solutions.
    pub fn from_riccati(fam: &AgentFamily<T>) -> Result<Self> {
        let solutions = (0..fam.cluster_count())
            .map(|i| solve_care(fam.a(i), fam.b(i)))
            .collect::<Result<Vec<_>>>()?;
        let gains = solutions.iter().map(|s| s.k.clone()).collect();
        let mut design = Self::finish(fam, gains, GainSource::Riccati)?;
        design.riccati = solutions.into_iter().map(Some).collect();
        Ok(design)
    }

    /// User gains; each `A_i + B_i K_i` must be Hurwitz.
    pub fn from_gains(fam: &AgentFamily<T>, gains: Vec<DMatrix<T>>) -> Result<Self> {
        fam.check_clusters(gains.len())?;
        for (i, k) in gains.iter().enumerate() {
            if k.shape() != (fam.input_dim(i), fam.state_dim()) {
                return Err(Error::dims(
                    format!("gain K of cluster {i}"),
                    format!("{}x{}", fam.input_dim(i), fam.state_dim()),
                    format!("{}x{}", k.nrows(), k.ncols()),
                ));
            }
        }
        Self::finish(fam, gains, GainSource::User)
    }

    /// Gains without the stability check (test scaffolding).
    #[cfg(test)]
    pub(crate) fn unchecked(gains: Vec<DMatrix<T>>) -> Self {
        Self {
            riccati: vec![None; gains.len()],
            margins: vec![T::zero(); gains.len()],
            gains,
            source: GainSource::User,
        }
    }

    fn finish(fam: &AgentFamily<T>, gains: Vec<DMatrix<T>>, source: GainSource) -> Result<Self> {
        let mut margins = Vec::with_capacity(gains.len());
        for (i, k) in gains.iter().enumerate() {
            let v = hurwitz_margin(&(fam.a(i) + fam.b(i) * k), HURWITZ_EPS)?;
            if !v.is_hurwitz {
                return Err(Error::UnstableGain {
                    cluster: i,
                    margin: v.margin.as_f64(),
                });
            }
            margins.push(v.margin);
        }
        Ok(Self {
            riccati: vec![None; gains.len()],
            gains,
            margins,
            source,
        })
    }

    pub fn gain(&self, i: usize) -> &DMatrix<T> {
        &self.gains[i]
    }

    pub fn gains(&self) -> &[DMatrix<T>] {
        &self.gains
    }

    pub fn riccati(&self, i: usize) -> Option<&RiccatiSolution<T>> {
        self.riccati[i].as_ref()
    }

    pub fn source(&self) -> GainSource {
        self.source
    }

    /// `-max Re lambda(A_i + B_i K_i)` per cluster.
    pub fn closed_loop_margins(&self) -> &[T] {
        &self.margins
    }

    pub fn min_closed_loop_margin(&self) -> T {
        self.margins
            .iter()
            .copied()
            .fold(infinity(), |a: T, b| a.min(b))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilizabilityVerdict {
    pub cluster: usize,
    pub holds: bool,
    /// `[re, im]` of an uncontrollable mode in the closed right half plane.
    pub uncontrollable_mode: Option<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InstabilityVerdict {
    pub cluster: usize,
    /// `A_i` has an eigenvalue with nonnegative real part.
    pub holds: bool,
    pub max_real: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RowSumWitness {
    pub row_block: usize,
    pub col_block: usize,
    /// Canonical node index of the offending row.
    pub node: usize,
    pub sum: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RowSumVerdict {
    pub holds: bool,
    pub tol: f64,
    pub worst: Option<RowSumWitness>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Assumptions {
    pub stabilizable: Vec<StabilizabilityVerdict>,
    pub unstable_modes: Vec<InstabilityVerdict>,
    pub zero_row_sums: RowSumVerdict,
}

impl Assumptions {
    pub fn all_stabilizable(&self) -> bool {
        self.stabilizable.iter().all(|v| v.holds)
    }

    pub fn all_unstable(&self) -> bool {
        self.unstable_modes.iter().all(|v| v.holds)
    }

    pub fn all_hold(&self) -> bool {
        self.all_stabilizable() && self.all_unstable() && self.zero_row_sums.holds
    }
}

/// Stabilizability (rank test on closed-right-half-plane modes), presence of
/// a non-decaying mode in every `A_i`, and zero block row sums.
pub fn check_assumptions<T: Real>(
    fam: &AgentFamily<T>,
    pl: &PartitionedLaplacian<T>,
    row_sum_tol: f64,
) -> Result<Assumptions> {
    fam.check_clusters(pl.cluster_count())?;
    let mut stabilizable = Vec::new();
    let mut unstable_modes = Vec::new();
    for i in 0..fam.cluster_count() {
        let mode = uncontrollable_mode(fam.a(i), fam.b(i))?;
        stabilizable.push(StabilizabilityVerdict {
            cluster: i,
            holds: mode.is_none(),
            uncontrollable_mode: mode.map(|z| [z.re.as_f64(), z.im.as_f64()]),
        });
        let max_real = spectrum(fam.a(i))?.max_real;
        unstable_modes.push(InstabilityVerdict {
            cluster: i,
            holds: max_real >= T::zero(),
            max_real: max_real.as_f64(),
        });
    }
    let rows = check_zero_row_sums(pl, row_sum_tol);
    Ok(Assumptions {
        stabilizable,
        unstable_modes,
        zero_row_sums: RowSumVerdict {
            holds: rows.all_hold(),
            tol: row_sum_tol,
            worst: rows
                .worst
                .map(|(row_block, col_block, node, sum)| RowSumWitness {
                    row_block,
                    col_block,
                    node,
                    sum,
                }),
        },
    })
}

/// `blockdiag{I_{l_i - 1} (x) A_i} - c (L^_c (x) I_n)`.
pub fn synchronization_matrix<T: Real>(
    fam: &AgentFamily<T>,
    red: &ReducedLaplacian<T>,
    c: T,
) -> Result<DMatrix<T>> {
    let blocks: Vec<(usize, &DMatrix<T>)> = red
        .reduced_sizes
        .iter()
        .enumerate()
        .map(|(i, &k)| (k, fam.a(i)))
        .collect();
    kron_assemble(&blocks, &red.reduced, c, fam.state_dim())
}

/// `blockdiag{I_{l_i - 1} (x) A_i}`.
pub fn stacked_system_matrix<T: Real>(
    fam: &AgentFamily<T>,
    red: &ReducedLaplacian<T>,
) -> DMatrix<T> {
    let mut blocks = Vec::new();
    for (i, &k) in red.reduced_sizes.iter().enumerate() {
        blocks.extend(std::iter::repeat_n(fam.a(i).clone(), k));
    }
    block_diag(&blocks)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Theorem1Verdict<T> {
    /// The synchronization matrix is Hurwitz.
    pub holds: bool,
    /// `-max Re lambda`; `None` when the matrix is empty (all singletons).
    pub margin: Option<T>,
    pub eps: f64,
    pub dimension: usize,
}

impl<T: Real> Theorem1Verdict<T> {
    /// Margin with `+inf` for the empty case.
    pub fn margin_or_inf(&self) -> T {
        self.margin.unwrap_or_else(infinity)
    }
}

/// Hurwitz test of the synchronization matrix.
pub fn certify_theorem1<T: Real>(
    fam: &AgentFamily<T>,
    pl: &PartitionedLaplacian<T>,
    w: &WeightingFactors<T>,
    eps: f64,
) -> Result<Theorem1Verdict<T>> {
    fam.check_clusters(pl.cluster_count())?;
    let red = reduce(pl, w)?;
    let m = synchronization_matrix(fam, &red, w.global())?;
    let v = hurwitz_margin(&m, eps)?;
    Ok(Theorem1Verdict {
        holds: v.is_hurwitz,
        margin: (!m.is_empty()).then_some(v.margin),
        eps,
        dimension: m.nrows(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Corollary1Verdict<T> {
    pub applicable: bool,
    pub reason: Option<String>,
    pub holds: Option<bool>,
    /// `min Re lambda(c L^_c)`; `None` for an empty reduced matrix.
    pub coupling_min_real: Option<T>,
    /// `max Re lambda(A)`.
    pub system_max_real: Option<T>,
    /// `coupling_min_real - system_max_real`.
    pub gap: Option<T>,
}

/// Identical-parameter condition `min Re lambda(c L^_c) > max Re lambda(A)`.
pub fn certify_corollary1<T: Real>(
    fam: &AgentFamily<T>,
    pl: &PartitionedLaplacian<T>,
    w: &WeightingFactors<T>,
) -> Result<Corollary1Verdict<T>> {
    fam.check_clusters(pl.cluster_count())?;
    if !fam.is_identical(IDENTICAL_TOL) {
        return Ok(Corollary1Verdict {
            applicable: false,
            reason: Some("system matrices differ between clusters".into()),
            holds: None,
            coupling_min_real: None,
            system_max_real: None,
            gap: None,
        });
    }
    let red = reduce(pl, w)?;
    let system_max_real = spectrum(fam.a(0))?.max_real;
    if red.dim() == 0 {
        return Ok(Corollary1Verdict {
            applicable: true,
            reason: Some("every cluster is a singleton".into()),
            holds: Some(true),
            coupling_min_real: None,
            system_max_real: Some(system_max_real),
            gap: None,
        });
    }
    let coupling_min_real = spectrum(&(&red.reduced * w.global()))?.min_real;
    let gap = coupling_min_real - system_max_real;
    Ok(Corollary1Verdict {
        applicable: true,
        reason: None,
        holds: Some(gap > lit(STRICT_SLACK)),
        coupling_min_real: Some(coupling_min_real),
        system_max_real: Some(system_max_real),
        gap: Some(gap),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightSource {
    /// `W_i L^_ii + L^_ii^T W_i = I`.
    Lyapunov,
    User,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubgraphCheck {
    pub cluster: usize,
    pub spanning_tree: bool,
    pub cooperative: bool,
}

fn subgraph_checks<T: Real>(pl: &PartitionedLaplacian<T>) -> Vec<SubgraphCheck> {
    (0..pl.cluster_count())
        .map(|i| SubgraphCheck {
            cluster: i,
            spanning_tree: has_directed_spanning_tree(pl, i),
            cooperative: subgraph_is_cooperative(pl, i),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Theorem2Bounds<T> {
    /// `max_i lambda_max(A_i + A_i^T)`; `c` must exceed it.
    pub c_min: T,
    /// Lower bounds for the local factors; `0` for singleton clusters.
    pub c_local_min: Vec<T>,
    /// Tighter global bound evaluated at `c_local_min`.
    pub c_min_tight: Option<T>,
    /// `lambda_max(W^)`.
    pub w_max: Option<T>,
    /// `lambda_min(W^ L^_o + L^_o^T W^)`.
    pub off_diagonal_min: Option<T>,
    /// `lambda_min(W_i L^_ii + L^_ii^T W_i)` per cluster.
    pub local_denominators: Vec<Option<T>>,
    /// `lambda_max(A^ + A^^T)` over non-singleton clusters.
    pub stacked_sym_max: Option<T>,
    pub w_source: WeightSource,
    /// The matrices `W_i` used.
    #[serde(skip)]
    pub weights: Vec<DMatrix<T>>,
}

impl<T: Real> Theorem2Bounds<T> {
    /// `(c - lambda_max(A^ + A^^T)) / 2`; `None` without non-singleton clusters.
    pub fn guaranteed_rate(&self, c: T) -> Option<T> {
        self.stacked_sym_max.map(|m| (c - m) * lit(0.5))
    }

    /// `c > c_min` (with slack) and `c_i >= c_i_min` for all `i`.
    pub fn satisfied_by(&self, w: &WeightingFactors<T>) -> bool {
        w.global() - self.c_min > lit(STRICT_SLACK)
            && w.local()
                .iter()
                .zip(&self.c_local_min)
                .all(|(c, m)| *c >= *m)
    }
}

/// Explicit factor bounds. Requires every intra-cluster subgraph to be
/// cooperative with a directed spanning tree. `user_w` overrides the default
/// Lyapunov weights (one `(l_i - 1)`-square matrix per cluster).
pub fn theorem2_bounds<T: Real>(
    fam: &AgentFamily<T>,
    pl: &PartitionedLaplacian<T>,
    user_w: Option<&[DMatrix<T>]>,
) -> Result<Theorem2Bounds<T>> {
    let n_clusters = pl.cluster_count();
    fam.check_clusters(n_clusters)?;
    for check in subgraph_checks(pl) {
        if !check.cooperative {
            return Err(Error::Topology {
                cluster: check.cluster,
                reason: "subgraph has a negative (non-cooperative) edge weight".into(),
            });
        }
        if !check.spanning_tree {
            return Err(Error::Topology {
                cluster: check.cluster,
                reason: "subgraph has no directed spanning tree".into(),
            });
        }
    }
    // The reduced blocks do not depend on the factors; unit factors expose them.
    let red = reduce(pl, &WeightingFactors::unit(n_clusters))?;

    let (weights, w_source) = match user_w {
        Some(ws) => {
            if ws.len() != n_clusters {
                return Err(Error::dims("user weights W_i", n_clusters, ws.len()));
            }
            for (i, w) in ws.iter().enumerate() {
                if red.reduced_sizes[i] > 0 {
                    validate_w(w, red.diagonal_block(i))?;
                } else if !w.is_empty() {
                    return Err(Error::dims(
                        format!("W of singleton cluster {i}"),
                        "0x0",
                        format!("{:?}", w.shape()),
                    ));
                }
            }
            (ws.to_vec(), WeightSource::User)
        }
        None => {
            let ws = (0..n_clusters)
                .map(|i| {
                    let k = red.reduced_sizes[i];
                    if k == 0 {
                        Ok(DMatrix::zeros(0, 0))
                    } else {
                        solve_lyapunov_for_w(red.diagonal_block(i), &DMatrix::identity(k, k))
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            (ws, WeightSource::Lyapunov)
        }
    };

    let mut c_min = -infinity::<T>();
    for i in 0..n_clusters {
        let a = fam.a(i);
        let (_, hi) = symmetric_eigen_extremes(&(a + a.transpose())).expect("n >= 1");
        c_min = c_min.max(hi);
    }

    let w_hat = block_diag(&weights);
    let w_max = symmetric_eigen_extremes(&w_hat).map(|(_, hi)| hi);
    let lo = &red.off_diagonal_part;
    let off_diagonal_min =
        symmetric_eigen_extremes(&(&w_hat * lo + lo.transpose() * &w_hat)).map(|(l, _)| l);

    let mut local_denominators = Vec::with_capacity(n_clusters);
    let mut c_local_min = Vec::with_capacity(n_clusters);
    for (i, wi) in weights.iter().enumerate() {
        if red.reduced_sizes[i] == 0 {
            local_denominators.push(None);
            c_local_min.push(T::zero());
            continue;
        }
        let lii = red.diagonal_block(i);
        let (den, _) =
            symmetric_eigen_extremes(&(wi * lii + lii.transpose() * wi)).expect("non-empty block");
        local_denominators.push(Some(den));
        let num = w_max.expect("non-empty") - off_diagonal_min.expect("non-empty");
        c_local_min.push((num / den).max(T::zero()));
    }

    let a_hat = stacked_system_matrix(fam, &red);
    let a_sym = &a_hat + a_hat.transpose();
    let stacked_sym_max = symmetric_eigen_extremes(&a_sym).map(|(_, hi)| hi);

    let c_min_tight = if red.dim() == 0 {
        None
    } else {
        let at_bounds = WeightingFactors::new(T::one(), c_local_min.clone())?;
        let lc = reduce(pl, &at_bounds)?.reduced;
        let den = symmetric_eigen_extremes(&(&w_hat * &lc + lc.transpose() * &w_hat))
            .map(|(l, _)| l)
            .filter(|l| *l > T::zero());
        let num = symmetrized_product_max(&kron_identity(&w_hat, fam.state_dim()), &a_sym);
        match (num, den) {
            (Some(num), Some(den)) => Some(num / den),
            _ => None,
        }
    };

    Ok(Theorem2Bounds {
        c_min,
        c_local_min,
        c_min_tight,
        w_max,
        off_diagonal_min,
        local_denominators,
        stacked_sym_max,
        w_source,
        weights,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Corollary2Cluster<T> {
    pub cluster: usize,
    pub spanning_tree: bool,
    /// `max Re lambda(A_i)`.
    pub system_max_real: T,
    /// `min Re lambda(L^_ii)`; `None` for singletons.
    pub reduced_min_real: Option<T>,
    /// `c * c_i`.
    pub effective_factor: T,
    /// `max Re lambda(A_i) / min Re lambda(L^_ii)` when the denominator is positive.
    pub required: Option<T>,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Corollary2Verdict<T> {
    pub applicable: bool,
    pub reason: Option<String>,
    /// Cluster order giving the block lower-triangular form.
    pub order: Option<Vec<usize>>,
    pub clusters: Vec<Corollary2Cluster<T>>,
    pub holds: Option<bool>,
}

/// Per-cluster condition on acyclic partitions with cooperative subgraphs.
///
/// The ratio condition is evaluated without division as
/// `c c_i min Re lambda(L^_ii) - max Re lambda(A_i) > STRICT_SLACK`.
pub fn certify_corollary2<T: Real>(
    fam: &AgentFamily<T>,
    g: &ClusterGraph<T>,
    pl: &PartitionedLaplacian<T>,
    w: &WeightingFactors<T>,
) -> Result<Corollary2Verdict<T>> {
    fam.check_clusters(pl.cluster_count())?;
    let acyclic = acyclic_partition(g);
    let not_applicable = |reason: String| Corollary2Verdict {
        applicable: false,
        reason: Some(reason),
        order: acyclic.order.clone(),
        clusters: Vec::new(),
        holds: None,
    };
    if !acyclic.acyclic {
        return Ok(not_applicable("partition is cyclic".into()));
    }
    if let Some(i) = (0..pl.cluster_count()).find(|&i| !subgraph_is_cooperative(pl, i)) {
        return Ok(not_applicable(format!(
            "subgraph of cluster {i} has a negative edge weight"
        )));
    }
    let red = reduce(pl, w)?;
    let mut clusters = Vec::with_capacity(pl.cluster_count());
    for i in 0..pl.cluster_count() {
        let spanning_tree = has_directed_spanning_tree(pl, i);
        let system_max_real = spectrum(fam.a(i))?.max_real;
        let effective_factor = w.effective(i);
        let (reduced_min_real, required, holds) = if red.reduced_sizes[i] == 0 {
            (None, None, true)
        } else {
            let mu = spectrum(red.diagonal_block(i))?.min_real;
            let required = (mu > T::zero()).then(|| system_max_real / mu);
            let slack = effective_factor * mu - system_max_real;
            (
                Some(mu),
                required,
                spanning_tree && slack > lit(STRICT_SLACK),
            )
        };
        clusters.push(Corollary2Cluster {
            cluster: i,
            spanning_tree,
            system_max_real,
            reduced_min_real,
            effective_factor,
            required,
            holds,
        });
    }
    let holds = clusters.iter().all(|c| c.holds);
    Ok(Corollary2Verdict {
        applicable: true,
        reason: None,
        order: acyclic.order,
        clusters,
        holds: Some(holds),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Theorem2Report<T> {
    pub subgraphs: Vec<SubgraphCheck>,
    pub bounds: Option<Theorem2Bounds<T>>,
    /// Why the bounds are unavailable.
    pub error: Option<String>,
    /// The supplied factors meet the bounds.
    pub satisfied: Option<bool>,
    /// Lyapunov decay-rate guarantee at the supplied `c`.
    pub guaranteed_rate: Option<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Tolerances {
    pub row_sum: f64,
    pub nonsingular_rel: f64,
    pub hurwitz_eps: f64,
    pub strict_slack: f64,
    pub identical: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FactorSummary<T> {
    pub c: T,
    pub c_local: Vec<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertificationReport<T> {
    /// Partition in 1-based original node labels, canonical cluster order.
    pub partition: Vec<Vec<usize>>,
    pub factors: FactorSummary<T>,
    pub assumptions: Assumptions,
    pub lemma1: Option<ZeroCensus>,
    pub theorem1: Option<Theorem1Verdict<T>>,
    pub corollary1: Option<Corollary1Verdict<T>>,
    pub theorem2: Theorem2Report<T>,
    pub corollary2: Option<Corollary2Verdict<T>>,
    /// Cluster synchronization is certified.
    pub synchronized: bool,
    /// Which specializations were inapplicable and why, and other caveats.
    pub notes: Vec<String>,
    pub tolerances: Tolerances,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CertifyOptions<T: Real> {
    pub nonsingular_rel_tol: f64,
    pub hurwitz_eps: f64,
    pub user_w: Option<Vec<DMatrix<T>>>,
}

impl<T: Real> Default for CertifyOptions<T> {
    fn default() -> Self {
        Self {
            nonsingular_rel_tol: NONSINGULAR_REL_TOL,
            hurwitz_eps: HURWITZ_EPS,
            user_w: None,
        }
    }
}

/// Full certification. The overall verdict is the Hurwitz test, conditioned
/// on stabilizability and zero block row sums.
pub fn certify<T: Real>(
    fam: &AgentFamily<T>,
    g: &ClusterGraph<T>,
    w: &WeightingFactors<T>,
    opts: &CertifyOptions<T>,
) -> Result<CertificationReport<T>> {
    let pl = build_laplacian(g);
    fam.check_clusters(pl.cluster_count())?;
    if w.local().len() != pl.cluster_count() {
        return Err(Error::dims(
            "local weighting factors",
            pl.cluster_count(),
            w.local().len(),
        ));
    }
    let assumptions = check_assumptions(fam, &pl, ROW_SUM_TOL)?;
    let mut notes = Vec::new();
    let partition = g
        .original_partition()
        .into_iter()
        .map(|c| c.into_iter().map(|l| l + 1).collect())
        .collect();
    let tolerances = Tolerances {
        row_sum: ROW_SUM_TOL,
        nonsingular_rel: opts.nonsingular_rel_tol,
        hurwitz_eps: opts.hurwitz_eps,
        strict_slack: STRICT_SLACK,
        identical: IDENTICAL_TOL,
    };
    let factors = FactorSummary {
        c: w.global(),
        c_local: w.local().to_vec(),
    };
    let subgraphs = subgraph_checks(&pl);

    if !assumptions.zero_row_sums.holds {
        notes.push(
            "zero block row sums fail; the reduced dynamics are undefined and nothing further is evaluated"
                .into(),
        );
        return Ok(CertificationReport {
            partition,
            factors,
            assumptions,
            lemma1: None,
            theorem1: None,
            corollary1: None,
            theorem2: Theorem2Report {
                subgraphs,
                bounds: None,
                error: Some("zero block row sums fail".into()),
                satisfied: None,
                guaranteed_rate: None,
            },
            corollary2: None,
            synchronized: false,
            notes,
            tolerances,
        });
    }

    let lemma1 = zero_eigenvalue_census(&pl, w, opts.nonsingular_rel_tol)?;
    let theorem1 = certify_theorem1(fam, &pl, w, opts.hurwitz_eps)?;
    let corollary1 = certify_corollary1(fam, &pl, w)?;
    if let Some(reason) = corollary1
        .reason
        .as_ref()
        .filter(|_| !corollary1.applicable)
    {
        notes.push(format!(
            "identical-parameter condition not applicable: {reason}"
        ));
    }

    let theorem2 = match theorem2_bounds(fam, &pl, opts.user_w.as_deref()) {
        Ok(bounds) => Theorem2Report {
            subgraphs,
            satisfied: Some(bounds.satisfied_by(w)),
            guaranteed_rate: bounds.guaranteed_rate(w.global()),
            bounds: Some(bounds),
            error: None,
        },
        Err(e) => {
            notes.push(format!("explicit factor bounds unavailable: {e}"));
            Theorem2Report {
                subgraphs,
                bounds: None,
                error: Some(e.to_string()),
                satisfied: None,
                guaranteed_rate: None,
            }
        }
    };

    let corollary2 = certify_corollary2(fam, g, &pl, w)?;
    if let Some(reason) = corollary2
        .reason
        .as_ref()
        .filter(|_| !corollary2.applicable)
    {
        notes.push(format!(
            "acyclic-partition condition not applicable ({reason}); verdict rests on the Hurwitz test"
        ));
    }

    if !assumptions.all_stabilizable() {
        notes.push("some (A_i, B_i) is not stabilizable; no stabilizing gain exists".into());
    }
    if !assumptions.all_unstable() {
        notes.push(
            "some A_i is Hurwitz; its cluster trajectories vanish and cannot stay separated".into(),
        );
    }
    if !lemma1.exactly_n_zero {
        notes.push(format!(
            "weighted Laplacian has more than N zero eigenvalues (reduced nullity {})",
            lemma1.reduced_nullity
        ));
    }

    let synchronized =
        theorem1.holds && assumptions.all_stabilizable() && assumptions.zero_row_sums.holds;
    Ok(CertificationReport {
        partition,
        factors,
        assumptions,
        lemma1: Some(lemma1),
        theorem1: Some(theorem1),
        corollary1: Some(corollary1),
        theorem2,
        corollary2: Some(corollary2),
        synchronized,
        notes,
        tolerances,
    })
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::graph::tests::ship_graph;
    use nalgebra::dmatrix;

    pub(crate) fn ship_family() -> AgentFamily<f64> {
        let sys = |tau: f64, kappa: f64| {
            (
                dmatrix![0.0, 1.0; 0.0, -1.0 / tau],
                dmatrix![0.0; kappa / tau],
            )
        };
        AgentFamily::new(vec![sys(42.21, 0.181), sys(107.3, 0.185)]).unwrap()
    }

    pub(crate) fn oscillator_family(w2: f64) -> AgentFamily<f64> {
        let sys = |w: f64| (dmatrix![0.0, 1.0; -w * w, 0.0], dmatrix![0.0; 1.0]);
        AgentFamily::new(vec![sys(2.0), sys(w2)]).unwrap()
    }

    fn ship_pl() -> PartitionedLaplacian<f64> {
        build_laplacian(&ship_graph())
    }

    fn factors(c: f64, local: &[f64]) -> WeightingFactors<f64> {
        WeightingFactors::new(c, local.to_vec()).unwrap()
    }

    #[test]
    fn family_validation() {
        assert!(AgentFamily::<f64>::new(vec![]).is_err());
        let a = DMatrix::<f64>::zeros(2, 2);
        assert!(AgentFamily::new(vec![(a.clone(), DMatrix::zeros(3, 1))]).is_err());
        assert!(AgentFamily::new(vec![(a.clone(), DMatrix::zeros(2, 0))]).is_err());
        assert!(AgentFamily::new(vec![
            (a, DMatrix::zeros(2, 1)),
            (DMatrix::zeros(3, 3), DMatrix::zeros(3, 1))
        ])
        .is_err());
        assert!(!ship_family().is_identical(IDENTICAL_TOL));
        assert!(AgentFamily::identical(dmatrix![0.0], dmatrix![1.0], 3)
            .unwrap()
            .is_identical(IDENTICAL_TOL));
    }

    #[test]
    fn ship_assumptions_hold() {
        let a = check_assumptions(&ship_family(), &ship_pl(), ROW_SUM_TOL).unwrap();
        assert!(a.all_hold());
        assert!(a.unstable_modes.iter().all(|v| v.max_real.abs() < 1e-12));
    }

    #[test]
    fn assumption_failures_have_witnesses() {
        let pl = build_laplacian(&ClusterGraph::<f64>::from_edges(1, &[], &[vec![0]]).unwrap());
        let stable = AgentFamily::new(vec![(dmatrix![-1.0], dmatrix![1.0])]).unwrap();
        let a = check_assumptions(&stable, &pl, ROW_SUM_TOL).unwrap();
        assert!(!a.unstable_modes[0].holds);
        assert_eq!(a.unstable_modes[0].max_real, -1.0);

        let unreachable = AgentFamily::new(vec![(dmatrix![1.0], dmatrix![0.0])]).unwrap();
        let a = check_assumptions(&unreachable, &pl, ROW_SUM_TOL).unwrap();
        assert!(!a.stabilizable[0].holds);
        assert_eq!(a.stabilizable[0].uncontrollable_mode, Some([1.0, 0.0]));
    }

    #[test]
    fn design_gains() {
        let fam = ship_family();
        let d = ControlDesign::from_riccati(&fam).unwrap();
        assert!((d.gain(0)[(0, 1)] + 16.79).abs() < 0.17);
        assert!(d.riccati(1).is_some());
        assert!(d.min_closed_loop_margin() > 0.02);
        let bad = ControlDesign::from_gains(&fam, vec![dmatrix![1.0, 0.0], dmatrix![-1.0, -30.0]]);
        assert!(matches!(bad, Err(Error::UnstableGain { cluster: 0, .. })));
        let user =
            ControlDesign::from_gains(&fam, vec![dmatrix![-1.0, -16.79], dmatrix![-1.0, -29.09]])
                .unwrap();
        assert_eq!(user.source(), GainSource::User);
        assert!(ControlDesign::from_gains(&fam, vec![dmatrix![-1.0]]).is_err());
    }

    #[test]
    fn ship_theorem1_cases() {
        let (fam, pl) = (ship_family(), ship_pl());
        let v = certify_theorem1(&fam, &pl, &factors(1.0, &[2.0, 2.0]), HURWITZ_EPS).unwrap();
        assert!(v.holds && v.margin.unwrap() > 0.0);
        assert_eq!(v.dimension, 4);
        let v = certify_theorem1(&fam, &pl, &factors(1.0, &[0.0, 2.0]), HURWITZ_EPS).unwrap();
        assert!(v.holds);
    }

    #[test]
    fn corollary1_cases() {
        let g = ClusterGraph::<f64>::from_edges(2, &[(0, 1, 1.0)], &[vec![0, 1]]).unwrap();
        let pl = build_laplacian(&g);
        let int = AgentFamily::identical(dmatrix![0.0], dmatrix![1.0], 1).unwrap();
        let v = certify_corollary1(&int, &pl, &factors(1.0, &[1.0])).unwrap();
        assert_eq!(v.holds, Some(true));
        assert!((v.gap.unwrap() - 1.0f64).abs() < 1e-12);

        let unstable = AgentFamily::identical(dmatrix![1.0], dmatrix![1.0], 1).unwrap();
        let v = certify_corollary1(&unstable, &pl, &factors(0.5, &[1.0])).unwrap();
        assert_eq!(v.holds, Some(false));
        assert!((v.gap.unwrap() + 0.5f64).abs() < 1e-12);

        let v = certify_corollary1(&ship_family(), &ship_pl(), &factors(1.0, &[2.0, 2.0])).unwrap();
        assert!(!v.applicable && v.holds.is_none());
    }

    #[test]
    fn corollary1_matches_theorem1_for_double_integrators() {
        let fam =
            AgentFamily::identical(dmatrix![0.0, 1.0; 0.0, 0.0], dmatrix![0.0; 1.0], 2).unwrap();
        let pl = ship_pl();
        for local in [[2.0, 2.0], [0.0, 2.0], [0.1, 0.1]] {
            let w = factors(1.0, &local);
            let c1 = certify_corollary1(&fam, &pl, &w).unwrap();
            let t1 = certify_theorem1(&fam, &pl, &w, HURWITZ_EPS).unwrap();
            assert_eq!(c1.holds, Some(t1.holds), "factors {local:?}");
        }
    }

    #[test]
    fn ship_bounds_with_unit_weights() {
        let ones = vec![dmatrix![1.0], dmatrix![1.0]];
        let b = theorem2_bounds(&ship_family(), &ship_pl(), Some(&ones)).unwrap();
        assert_eq!(b.w_max, Some(1.0));
        assert!((b.off_diagonal_min.unwrap() + 3.0f64).abs() < 1e-14);
        assert_eq!(b.local_denominators, vec![Some(2.0), Some(2.0)]);
        assert_eq!(b.c_local_min, vec![2.0, 2.0]);
        assert!((b.c_min - 0.99072).abs() < 1e-4);
        assert!(b.satisfied_by(&factors(1.0, &[2.0, 2.0])));
        assert!(!b.satisfied_by(&factors(1.0, &[1.9, 2.0])));
        assert!(b.c_min_tight.unwrap() <= b.c_min * (1.0 + 1e-9));
        assert_eq!(b.w_source, WeightSource::User);
    }

    #[test]
    fn oscillator_bounds() {
        let g = crate::graph::tests::oscillator_graph();
        let pl = build_laplacian(&g);
        let b = theorem2_bounds(&oscillator_family(2.5), &pl, None).unwrap();
        assert!((b.c_min - 5.25).abs() < 1e-9);
        assert!((b.guaranteed_rate(6.0).unwrap() - 0.375).abs() < 1e-9);
        assert_eq!(b.w_source, WeightSource::Lyapunov);
        assert!(b.c_min_tight.unwrap() <= b.c_min);
    }

    #[test]
    fn bounds_reject_bad_topology() {
        let g = ClusterGraph::<f64>::from_edges(2, &[], &[vec![0, 1]]).unwrap();
        let fam = AgentFamily::identical(dmatrix![0.0], dmatrix![1.0], 1).unwrap();
        let e = theorem2_bounds(&fam, &build_laplacian(&g), None).unwrap_err();
        assert!(matches!(e, Error::Topology { cluster: 0, .. }));
        let g = ClusterGraph::<f64>::from_edges(2, &[(0, 1, -1.0)], &[vec![0, 1]]).unwrap();
        let e = theorem2_bounds(&fam, &build_laplacian(&g), None).unwrap_err();
        assert!(matches!(e, Error::Topology { cluster: 0, .. }));
    }

    #[test]
    fn rate_is_monotone_in_c() {
        let b = theorem2_bounds(&ship_family(), &ship_pl(), None).unwrap();
        let r1 = b.guaranteed_rate(1.0).unwrap();
        let r2 = b.guaranteed_rate(1.5).unwrap();
        assert!(r2 > r1);
    }

    fn acyclic_ship(intra_c1: bool) -> ClusterGraph<f64> {
        let mut edges = vec![
            (2, 0, -5.0),
            (3, 0, 5.0),
            (2, 1, -1.0),
            (3, 1, 1.0),
            (2, 3, 1.0),
        ];
        if intra_c1 {
            edges.push((0, 1, 1.0));
        }
        ClusterGraph::from_edges(4, &edges, &[vec![0, 1], vec![2, 3]]).unwrap()
    }

    #[test]
    fn corollary2_connected_clusters() {
        let g = acyclic_ship(true);
        let pl = build_laplacian(&g);
        let v = certify_corollary2(&ship_family(), &g, &pl, &factors(0.1, &[0.1, 0.1])).unwrap();
        assert!(v.applicable);
        assert_eq!(v.holds, Some(true));
        for c in &v.clusters {
            assert!((c.reduced_min_real.unwrap() - 1.0f64).abs() < 1e-12);
            assert!(c.required.unwrap().abs() < 1e-12);
        }
        assert_eq!(v.order, Some(vec![1, 0]));
    }

    #[test]
    fn corollary2_disconnected_cluster_fails() {
        let g = acyclic_ship(false);
        let pl = build_laplacian(&g);
        let fam = ship_family();
        for local in [[2.0, 2.0], [100.0, 100.0]] {
            let w = factors(1.0, &local);
            let v = certify_corollary2(&fam, &g, &pl, &w).unwrap();
            assert_eq!(v.holds, Some(false));
            assert!(!v.clusters[0].spanning_tree);
            assert!(!certify_theorem1(&fam, &pl, &w, HURWITZ_EPS).unwrap().holds);
        }
    }

    #[test]
    fn corollary2_ratio() {
        // Identical unstable scalar agents, cluster L^ = 0.5.
        let g = ClusterGraph::<f64>::from_edges(2, &[(0, 1, 0.5)], &[vec![0, 1]]).unwrap();
        let pl = build_laplacian(&g);
        let fam = AgentFamily::identical(dmatrix![1.0], dmatrix![1.0], 1).unwrap();
        let v = certify_corollary2(&fam, &g, &pl, &factors(1.0, &[2.5])).unwrap();
        assert!((v.clusters[0].required.unwrap() - 2.0f64).abs() < 1e-12);
        assert_eq!(v.holds, Some(true));
        let v = certify_corollary2(&fam, &g, &pl, &factors(1.0, &[1.5])).unwrap();
        assert_eq!(v.holds, Some(false));
    }

    #[test]
    fn corollary2_not_applicable_on_cycles() {
        let g = ship_graph();
        let v = certify_corollary2(
            &ship_family(),
            &g,
            &build_laplacian(&g),
            &factors(1.0, &[2.0, 2.0]),
        )
        .unwrap();
        assert!(!v.applicable);
        assert!(v.holds.is_none());
    }

    #[test]
    fn full_report_for_ship() {
        let g = ship_graph();
        let r = certify(
            &ship_family(),
            &g,
            &factors(1.0, &[2.0, 2.0]),
            &CertifyOptions::default(),
        )
        .unwrap();
        assert!(r.synchronized);
        assert_eq!(r.partition, vec![vec![1, 2], vec![3, 4]]);
        assert_eq!(r.theorem2.satisfied, Some(true));
        assert!(r.notes.iter().any(|n| n.contains("acyclic")));
        let json = serde_json::to_string(&r).unwrap();
        assert_eq!(json, serde_json::to_string(&r).unwrap());
    }

    #[test]
    fn full_report_without_row_sums() {
        let g = ClusterGraph::<f64>::from_edges(3, &[(2, 0, 1.0)], &[vec![0, 1], vec![2]]).unwrap();
        let fam = AgentFamily::identical(dmatrix![0.0], dmatrix![1.0], 2).unwrap();
        let r = certify(
            &fam,
            &g,
            &factors(1.0, &[1.0, 1.0]),
            &CertifyOptions::default(),
        )
        .unwrap();
        assert!(!r.synchronized);
        assert!(r.theorem1.is_none());
        assert_eq!(r.assumptions.zero_row_sums.worst.as_ref().unwrap().node, 0);
    }

    #[test]
    fn factor_count_mismatch_is_an_error() {
        let r = certify(
            &ship_family(),
            &ship_graph(),
            &factors(1.0, &[1.0, 1.0, 1.0]),
            &CertifyOptions::default(),
        );
        assert!(matches!(r, Err(Error::DimensionMismatch { .. })));
    }
}
