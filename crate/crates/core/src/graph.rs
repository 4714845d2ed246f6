//! Partitioned interaction graphs and their Laplacian blocks.
//!
//! An entry `a[(l, k)] != 0` of the adjacency matrix is a directed edge from
//! node `k` to node `l` (agent `l` listens to agent `k`). Nodes are stored in
//! canonical order: the clusters occupy contiguous index ranges in the order
//! they were given, and inside a cluster nodes keep the order in which they
//! were listed. The first listed node of every cluster is its reference node.

use nalgebra::DMatrix;
use petgraph::algo::{tarjan_scc, toposort};
use petgraph::graph::DiGraph;

use crate::error::{Error, Result};
use crate::scalar::Field;

/// Absolute threshold below which a Laplacian entry is not an edge.
pub const EDGE_THRESHOLD: f64 = 1e-12;

/// Default tolerance for the zero block row-sum check.
pub const ROW_SUM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterGraph<T: Field> {
    adjacency: DMatrix<T>,
    sizes: Vec<usize>,
    offsets: Vec<usize>,
    /// `labels[canonical] = original` node index.
    labels: Vec<usize>,
}

impl<T: Field> ClusterGraph<T> {
    /// Builds a graph from an adjacency matrix indexed by original labels and a
    /// partition given as lists of original (zero-based) node indices.
    pub fn new(adjacency: DMatrix<T>, partition: &[Vec<usize>]) -> Result<Self> {
        let nodes = adjacency.nrows();
        if adjacency.ncols() != nodes {
            return Err(Error::dims(
                "adjacency matrix",
                format!("{nodes}x{nodes}"),
                format!("{}x{}", nodes, adjacency.ncols()),
            ));
        }
        if nodes == 0 {
            return Err(Error::InvalidGraph("graph has no nodes".into()));
        }
        for l in 0..nodes {
            if !adjacency[(l, l)].is_zero() {
                return Err(Error::InvalidGraph(format!("self-link at node {l}")));
            }
        }
        if partition.is_empty() {
            return Err(Error::InvalidGraph("partition has no clusters".into()));
        }

        let mut seen = vec![false; nodes];
        let mut labels = Vec::with_capacity(nodes);
        let mut sizes = Vec::with_capacity(partition.len());
        for (i, cluster) in partition.iter().enumerate() {
            if cluster.is_empty() {
                return Err(Error::InvalidGraph(format!("cluster {i} is empty")));
            }
            for &node in cluster {
                if node >= nodes {
                    return Err(Error::InvalidGraph(format!(
                        "cluster {i} references node {node} outside 0..{nodes}"
                    )));
                }
                if std::mem::replace(&mut seen[node], true) {
                    return Err(Error::InvalidGraph(format!(
                        "node {node} appears in more than one cluster position"
                    )));
                }
                labels.push(node);
            }
            sizes.push(cluster.len());
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidGraph(format!(
                "partition does not cover node {missing}"
            )));
        }

        let canonical = DMatrix::from_fn(nodes, nodes, |l, k| adjacency[(labels[l], labels[k])]);
        Ok(Self {
            adjacency: canonical,
            offsets: offsets_of(&sizes),
            sizes,
            labels,
        })
    }

    /// Builds a graph from `(from, to, weight)` triples over original labels.
    /// Repeated edges accumulate.
    pub fn from_edges(
        nodes: usize,
        edges: &[(usize, usize, T)],
        partition: &[Vec<usize>],
    ) -> Result<Self> {
        let mut adjacency = DMatrix::zeros(nodes, nodes);
        for &(from, to, weight) in edges {
            if from >= nodes || to >= nodes {
                return Err(Error::InvalidGraph(format!(
                    "edge {from}->{to} outside 0..{nodes}"
                )));
            }
            adjacency[(to, from)] += weight;
        }
        Self::new(adjacency, partition)
    }

    /// Adjacency in canonical node order.
    pub fn adjacency(&self) -> &DMatrix<T> {
        &self.adjacency
    }

    pub fn node_count(&self) -> usize {
        self.adjacency.nrows()
    }

    pub fn cluster_count(&self) -> usize {
        self.sizes.len()
    }

    pub fn cluster_sizes(&self) -> &[usize] {
        &self.sizes
    }

    /// Canonical index of the first node of every cluster.
    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn cluster_range(&self, i: usize) -> std::ops::Range<usize> {
        self.offsets[i]..self.offsets[i] + self.sizes[i]
    }

    pub fn cluster_of(&self, node: usize) -> usize {
        cluster_of(&self.offsets, &self.sizes, node)
    }

    /// Original label of a canonical node.
    pub fn original_label(&self, node: usize) -> usize {
        self.labels[node]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// Partition in canonical indices.
    pub fn canonical_partition(&self) -> Vec<Vec<usize>> {
        (0..self.cluster_count())
            .map(|i| self.cluster_range(i).collect())
            .collect()
    }

    /// Partition in original labels, in canonical order.
    pub fn original_partition(&self) -> Vec<Vec<usize>> {
        (0..self.cluster_count())
            .map(|i| self.cluster_range(i).map(|l| self.labels[l]).collect())
            .collect()
    }

    /// Relabels so that cluster `order[0]` comes first, `order[1]` second, etc.
    /// Original labels are carried along.
    pub fn reorder_clusters(&self, order: &[usize]) -> Result<Self> {
        let n = self.cluster_count();
        let mut check = order.to_vec();
        check.sort_unstable();
        if check != (0..n).collect::<Vec<_>>() {
            return Err(Error::InvalidGraph(format!(
                "cluster order {order:?} is not a permutation of 0..{n}"
            )));
        }
        let perm: Vec<usize> = order.iter().flat_map(|&i| self.cluster_range(i)).collect();
        let adjacency = DMatrix::from_fn(self.node_count(), self.node_count(), |l, k| {
            self.adjacency[(perm[l], perm[k])]
        });
        let sizes: Vec<usize> = order.iter().map(|&i| self.sizes[i]).collect();
        Ok(Self {
            adjacency,
            offsets: offsets_of(&sizes),
            sizes,
            labels: perm.iter().map(|&l| self.labels[l]).collect(),
        })
    }

    /// Maps every weight through `f`, keeping the partition.
    pub fn map_weights<U: Field>(&self, f: impl Fn(T) -> U) -> ClusterGraph<U> {
        ClusterGraph {
            adjacency: self.adjacency.map(f),
            sizes: self.sizes.clone(),
            offsets: self.offsets.clone(),
            labels: self.labels.clone(),
        }
    }
}

fn offsets_of(sizes: &[usize]) -> Vec<usize> {
    sizes
        .iter()
        .scan(0, |acc, &s| {
            let o = *acc;
            *acc += s;
            Some(o)
        })
        .collect()
}

fn cluster_of(offsets: &[usize], sizes: &[usize], node: usize) -> usize {
    offsets
        .iter()
        .zip(sizes)
        .position(|(&o, &s)| node >= o && node < o + s)
        .expect("node index out of range")
}

/// The Laplacian together with its cluster block structure.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionedLaplacian<T: Field> {
    full: DMatrix<T>,
    blocks: Vec<Vec<DMatrix<T>>>,
    sizes: Vec<usize>,
    offsets: Vec<usize>,
}

impl<T: Field> PartitionedLaplacian<T> {
    /// Wraps an arbitrary square matrix with a block structure. Used for
    /// matrices that are not built from a graph (tests, user input).
    pub fn from_matrix(full: DMatrix<T>, sizes: &[usize]) -> Result<Self> {
        let total: usize = sizes.iter().sum();
        if full.nrows() != total || full.ncols() != total || sizes.contains(&0) {
            return Err(Error::dims(
                "partitioned Laplacian",
                format!("{total}x{total} with nonempty blocks"),
                format!("{}x{}", full.nrows(), full.ncols()),
            ));
        }
        let offsets = offsets_of(sizes);
        let blocks = (0..sizes.len())
            .map(|i| {
                (0..sizes.len())
                    .map(|j| {
                        full.view((offsets[i], offsets[j]), (sizes[i], sizes[j]))
                            .into_owned()
                    })
                    .collect()
            })
            .collect();
        Ok(Self {
            full,
            blocks,
            sizes: sizes.to_vec(),
            offsets,
        })
    }

    pub fn full(&self) -> &DMatrix<T> {
        &self.full
    }

    pub fn block(&self, i: usize, j: usize) -> &DMatrix<T> {
        &self.blocks[i][j]
    }

    pub fn blocks(&self) -> &[Vec<DMatrix<T>>] {
        &self.blocks
    }

    pub fn cluster_count(&self) -> usize {
        self.sizes.len()
    }

    pub fn cluster_sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn node_count(&self) -> usize {
        self.full.nrows()
    }

    pub fn cluster_of(&self, node: usize) -> usize {
        cluster_of(&self.offsets, &self.sizes, node)
    }

    /// Reassembles the full matrix from the stored blocks.
    pub fn reassemble(&self) -> DMatrix<T> {
        let n = self.node_count();
        let mut out = DMatrix::zeros(n, n);
        for (i, row) in self.blocks.iter().enumerate() {
            for (j, b) in row.iter().enumerate() {
                out.view_mut(
                    (self.offsets[i], self.offsets[j]),
                    (self.sizes[i], self.sizes[j]),
                )
                .copy_from(b);
            }
        }
        out
    }
}

/// `b_ll = sum_k a_lk`, `b_lk = -a_lk`, cut along cluster boundaries.
pub fn build_laplacian<T: Field>(g: &ClusterGraph<T>) -> PartitionedLaplacian<T> {
    let a = g.adjacency();
    let n = g.node_count();
    let mut full = -a.clone();
    for l in 0..n {
        let mut degree = T::zero();
        for k in 0..n {
            degree += a[(l, k)];
        }
        full[(l, l)] = degree;
    }
    PartitionedLaplacian::from_matrix(full, g.cluster_sizes())
        .expect("graph invariants guarantee consistent block sizes")
}

/// Result of the zero block row-sum check.
#[derive(Debug, Clone, PartialEq)]
pub struct RowSumCheck {
    /// `holds[i][j]` iff `||L_ij 1||_inf <= tol`.
    pub holds: Vec<Vec<bool>>,
    /// `||L_ij 1||_inf` per block.
    pub violation: Vec<Vec<f64>>,
    /// Worst offending `(row block, column block, canonical node, row sum)`.
    pub worst: Option<(usize, usize, usize, f64)>,
    pub tol: f64,
}

impl RowSumCheck {
    pub fn all_hold(&self) -> bool {
        self.holds.iter().flatten().all(|&h| h)
    }
}

pub fn check_zero_row_sums<T: Field>(pl: &PartitionedLaplacian<T>, tol: f64) -> RowSumCheck {
    let n = pl.cluster_count();
    let mut holds = vec![vec![true; n]; n];
    let mut violation = vec![vec![0.0; n]; n];
    let mut worst: Option<(usize, usize, usize, f64)> = None;
    for i in 0..n {
        for j in 0..n {
            let b = pl.block(i, j);
            for r in 0..b.nrows() {
                let mut sum = T::zero();
                for c in 0..b.ncols() {
                    sum += b[(r, c)];
                }
                let s = sum.as_f64();
                let mag = s.abs();
                if mag > violation[i][j] {
                    violation[i][j] = mag;
                }
                if !sum.is_negligible(tol) {
                    holds[i][j] = false;
                    if worst.is_none_or(|w| mag > w.3.abs()) {
                        worst = Some((i, j, pl.offsets()[i] + r, s));
                    }
                }
            }
        }
    }
    RowSumCheck {
        holds,
        violation,
        worst,
        tol,
    }
}

/// Adjacency lists (`from -> to`) of the subgraph of cluster `i`, in local
/// indices, read from the off-diagonal entries of `L_ii`.
fn cluster_edges<T: Field>(pl: &PartitionedLaplacian<T>, i: usize) -> Vec<(usize, usize)> {
    let b = pl.block(i, i);
    let mut edges = Vec::new();
    for l in 0..b.nrows() {
        for k in 0..b.ncols() {
            if l != k && !b[(l, k)].is_negligible(EDGE_THRESHOLD) {
                edges.push((k, l));
            }
        }
    }
    edges
}

/// True iff some node of cluster `i` reaches every other node of the cluster
/// along intra-cluster edges (signs ignored).
///
/// A spanning tree exists iff the condensation of the subgraph has exactly one
/// source component.
pub fn has_directed_spanning_tree<T: Field>(pl: &PartitionedLaplacian<T>, i: usize) -> bool {
    let size = pl.cluster_sizes()[i];
    if size <= 1 {
        return true;
    }
    let mut g = DiGraph::<(), ()>::new();
    let nodes: Vec<_> = (0..size).map(|_| g.add_node(())).collect();
    let edges = cluster_edges(pl, i);
    for &(from, to) in &edges {
        g.add_edge(nodes[from], nodes[to], ());
    }
    let sccs = tarjan_scc(&g);
    let mut component = vec![0usize; size];
    for (c, members) in sccs.iter().enumerate() {
        for v in members {
            component[v.index()] = c;
        }
    }
    let mut has_incoming = vec![false; sccs.len()];
    for &(from, to) in &edges {
        if component[from] != component[to] {
            has_incoming[component[to]] = true;
        }
    }
    has_incoming.iter().filter(|&&h| !h).count() == 1
}

/// True iff every intra-cluster weight of cluster `i` is nonnegative.
pub fn subgraph_is_cooperative<T: Field>(pl: &PartitionedLaplacian<T>, i: usize) -> bool {
    let b = pl.block(i, i);
    (0..b.nrows()).all(|l| (0..b.ncols()).all(|k| l == k || b[(l, k)] <= T::zero()))
}

/// Outcome of the acyclic-partition test.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AcyclicPartition {
    pub acyclic: bool,
    /// When acyclic: a cluster order in which every cluster only receives
    /// from clusters placed before it.
    pub order: Option<Vec<usize>>,
}

/// Collapses every cluster to a node (edge `j -> i` iff some node of `C_i`
/// listens to some node of `C_j`) and tests the result for cycles.
pub fn acyclic_partition<T: Field>(g: &ClusterGraph<T>) -> AcyclicPartition {
    let n = g.cluster_count();
    let a = g.adjacency();
    let mut condensed = DiGraph::<usize, ()>::new();
    let nodes: Vec<_> = (0..n).map(|i| condensed.add_node(i)).collect();
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let linked = g.cluster_range(i).any(|l| {
                g.cluster_range(j)
                    .any(|k| !a[(l, k)].is_negligible(EDGE_THRESHOLD))
            });
            if linked {
                condensed.add_edge(nodes[j], nodes[i], ());
            }
        }
    }
    match toposort(&condensed, None) {
        Ok(sorted) => AcyclicPartition {
            acyclic: true,
            order: Some(sorted.into_iter().map(|v| condensed[v]).collect()),
        },
        Err(_) => AcyclicPartition {
            acyclic: false,
            order: None,
        },
    }
}
