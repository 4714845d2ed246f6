//! Seeded instance generators and independent oracles shared by the
//! integration suites.
#![allow(dead_code)]

use std::collections::VecDeque;

use clustersync::certification::AgentFamily;
use clustersync::graph::{build_laplacian, has_directed_spanning_tree, ClusterGraph};
use clustersync::numkernel::{spectrum, uncontrollable_mode};
use clustersync::reduction::WeightingFactors;
use clustersync::scenario::builtin;
use clustersync::scenario::Scenario;
use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn scenario(name: &str) -> Scenario {
    builtin(name).unwrap().build().unwrap()
}

/// How edge weights are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Weights {
    /// Small nonzero integers of both signs.
    SignedInteger,
    /// Positive values in `[0.2, 2]`.
    Cooperative,
}

#[derive(Debug, Clone, Copy)]
pub struct GraphSpec {
    pub max_nodes: usize,
    pub max_clusters: usize,
    pub intra: Weights,
    /// Probability of each ordered intra-cluster pair being linked.
    pub intra_prob: f64,
    /// Probability of a node receiving a balanced pair from another cluster.
    pub inter_prob: f64,
    /// Inter-cluster links only go from earlier to later clusters of a
    /// random priority order.
    pub acyclic: bool,
    /// Shuffle node labels so clusters are not contiguous.
    pub shuffle_labels: bool,
}

impl Default for GraphSpec {
    fn default() -> Self {
        Self {
            max_nodes: 8,
            max_clusters: 3,
            intra: Weights::SignedInteger,
            intra_prob: 0.5,
            inter_prob: 0.6,
            acyclic: false,
            shuffle_labels: true,
        }
    }
}

pub fn cluster_sizes(rng: &mut ChaCha8Rng, max_nodes: usize, max_clusters: usize) -> Vec<usize> {
    let clusters = rng.gen_range(1..=max_clusters);
    let nodes = rng.gen_range(clusters.max(2)..=max_nodes.max(clusters));
    let mut sizes = vec![1; clusters];
    for _ in clusters..nodes {
        let i = rng.gen_range(0..clusters);
        sizes[i] += 1;
    }
    sizes
}

fn draw_weight(rng: &mut ChaCha8Rng, kind: Weights) -> f64 {
    match kind {
        Weights::SignedInteger => *[-2.0, -1.0, 1.0, 2.0, 3.0].choose(rng).unwrap(),
        Weights::Cooperative => rng.gen_range(0.2..2.0),
    }
}

/// Random partitioned graph with zero block row sums. Inter-cluster links
/// come in `+w / -w` pairs towards two distinct nodes of the sending cluster.
pub fn random_graph(rng: &mut ChaCha8Rng, spec: &GraphSpec) -> ClusterGraph<f64> {
    let sizes = cluster_sizes(rng, spec.max_nodes, spec.max_clusters);
    random_graph_with_sizes(rng, spec, &sizes)
}

pub fn random_graph_with_sizes(
    rng: &mut ChaCha8Rng,
    spec: &GraphSpec,
    sizes: &[usize],
) -> ClusterGraph<f64> {
    let nodes: usize = sizes.iter().sum();
    let mut labels: Vec<usize> = (0..nodes).collect();
    if spec.shuffle_labels {
        labels.shuffle(rng);
    }
    let mut partition = Vec::new();
    let mut next = 0;
    for &s in sizes {
        partition.push(labels[next..next + s].to_vec());
        next += s;
    }
    let mut priority: Vec<usize> = (0..sizes.len()).collect();
    priority.shuffle(rng);

    let mut a = DMatrix::<f64>::zeros(nodes, nodes);
    for (i, ci) in partition.iter().enumerate() {
        for &l in ci {
            for &k in ci {
                if l != k && rng.gen_bool(spec.intra_prob) {
                    a[(l, k)] = draw_weight(rng, spec.intra);
                }
            }
        }
        for (j, cj) in partition.iter().enumerate() {
            if i == j || cj.len() < 2 || (spec.acyclic && priority[j] >= priority[i]) {
                continue;
            }
            for &l in ci {
                if rng.gen_bool(spec.inter_prob) {
                    let picked: Vec<usize> = cj.choose_multiple(rng, 2).copied().collect();
                    let w = draw_weight(rng, Weights::SignedInteger).abs();
                    a[(l, picked[0])] += w;
                    a[(l, picked[1])] -= w;
                }
            }
        }
    }
    ClusterGraph::new(a, &partition).unwrap()
}

/// Random graph whose intra-cluster subgraphs are cooperative and contain a
/// directed spanning tree.
pub fn spanning_cooperative_graph(r: &mut ChaCha8Rng, acyclic: bool) -> ClusterGraph<f64> {
    let spec = GraphSpec {
        intra: Weights::Cooperative,
        intra_prob: 0.6,
        acyclic,
        ..GraphSpec::default()
    };
    loop {
        let g = random_graph(r, &spec);
        let pl = build_laplacian(&g);
        if (0..pl.cluster_count()).all(|i| has_directed_spanning_tree(&pl, i)) {
            return g;
        }
    }
}

/// Random `(A, B)` with `max Re lambda(A)` in `[0, 0.5]` and `(A, B)`
/// stabilizable.
pub fn random_unstable_pair(
    rng: &mut ChaCha8Rng,
    n: usize,
    m: usize,
) -> (DMatrix<f64>, DMatrix<f64>) {
    loop {
        let mut a = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        let shift = rng.gen_range(0.0..0.5) - spectrum(&a).unwrap().max_real;
        for d in 0..n {
            a[(d, d)] += shift;
        }
        let b = DMatrix::from_fn(n, m, |_, _| rng.gen_range(-1.0..1.0));
        if uncontrollable_mode(&a, &b).unwrap().is_none() {
            return (a, b);
        }
    }
}

pub fn random_family(rng: &mut ChaCha8Rng, clusters: usize, n: usize) -> AgentFamily<f64> {
    let systems = (0..clusters)
        .map(|_| {
            let m = rng.gen_range(1..=n);
            random_unstable_pair(rng, n, m)
        })
        .collect();
    AgentFamily::new(systems).unwrap()
}

pub fn random_factors(rng: &mut ChaCha8Rng, clusters: usize, hi: f64) -> WeightingFactors<f64> {
    let c = rng.gen_range(0.05..hi);
    let local = (0..clusters).map(|_| rng.gen_range(0.05..hi)).collect();
    WeightingFactors::new(c, local).unwrap()
}

/// Directed spanning tree by breadth-first search from every candidate root
/// over the links `k -> l` with `a[(l, k)] != 0`.
pub fn bfs_spanning_tree(a: &DMatrix<f64>) -> bool {
    let n = a.nrows();
    (0..n).any(|root| {
        let mut seen = vec![false; n];
        seen[root] = true;
        let mut queue = VecDeque::from([root]);
        while let Some(k) = queue.pop_front() {
            for l in 0..n {
                if !seen[l] && a[(l, k)] != 0.0 {
                    seen[l] = true;
                    queue.push_back(l);
                }
            }
        }
        seen.iter().all(|&s| s)
    })
}

/// Number of eigenvalues within `tol` of the origin.
pub fn zero_eigenvalue_count(m: &DMatrix<f64>, tol: f64) -> usize {
    spectrum(m)
        .unwrap()
        .eigenvalues
        .iter()
        .filter(|z| z.norm() <= tol)
        .count()
}

pub fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}
