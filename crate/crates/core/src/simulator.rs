//! Closed-loop assembly, integration and synchronization metrics.
//!
//! Agent `l` in cluster `i` carries `z_l = [x_l; eta_l]` and evolves as
//! `z_l' = A_ci z_l - sum_k w_lk E z_k` with
//! `A_ci = [[A_i, B_i K_i], [0, A_i + B_i K_i]]`, `E = [[0, 0], [-I, I]]`,
//! `w_lk = c c_i b_lk` inside the cluster and `w_lk = c b_lk` across
//! clusters. Under zero block row sums this is exactly the dynamic coupling
//! law written with adjacency weights. The whole network is linear, so it is
//! stored as one matrix.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::{num_complex::Complex, FftPlanner};
use serde::Serialize;

use crate::certification::{AgentFamily, ControlDesign};
use crate::error::{Error, Result};
use crate::graph::PartitionedLaplacian;
use crate::numkernel::{block_diag, integrate_rk4, Trajectory};
use crate::reduction::WeightingFactors;
use crate::scalar::{lit, Real};

/// Fraction of the horizon used for limit metrics.
pub const TAIL_FRACTION: f64 = 0.2;
/// Values of `d_i` at or below this are ignored by the decay fit.
pub const DECAY_FLOOR: f64 = 1e-13;
/// Cross-cluster offsets closer than this are resampled.
pub const OFFSET_COLLISION_TOL: f64 = 1e-6;
pub const MAX_RESAMPLES: usize = 10;
pub const DEFAULT_STEP: f64 = 0.01;

/// `max(50, 40 / margin)`; `50` when the margin is not positive and finite.
pub fn default_horizon(margin: f64) -> f64 {
    if margin.is_finite() && margin > 0.0 {
        (40.0 / margin).max(50.0)
    } else {
        50.0
    }
}

/// `[[0, 0], [-I_n, I_n]]`.
pub fn coupling_selector<T: Real>(n: usize) -> DMatrix<T> {
    let mut e = DMatrix::zeros(2 * n, 2 * n);
    for r in 0..n {
        e[(n + r, r)] = -T::one();
        e[(n + r, n + r)] = T::one();
    }
    e
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClosedLoopSystem<T: Real> {
    n: usize,
    sizes: Vec<usize>,
    offsets: Vec<usize>,
    cluster_of: Vec<usize>,
    blocks: Vec<DMatrix<T>>,
    weights: DMatrix<T>,
    matrix: DMatrix<T>,
}

/// Builds the network matrix.
pub fn assemble<T: Real>(
    fam: &AgentFamily<T>,
    design: &ControlDesign<T>,
    pl: &PartitionedLaplacian<T>,
    w: &WeightingFactors<T>,
) -> Result<ClosedLoopSystem<T>> {
    let clusters = pl.cluster_count();
    if fam.cluster_count() != clusters || design.gains().len() != clusters {
        return Err(Error::dims(
            "closed-loop assembly",
            format!("{clusters} clusters"),
            format!(
                "{} systems, {} gains",
                fam.cluster_count(),
                design.gains().len()
            ),
        ));
    }
    if w.local().len() != clusters {
        return Err(Error::dims(
            "local weighting factors",
            clusters,
            w.local().len(),
        ));
    }
    let n = fam.state_dim();
    let blocks: Vec<DMatrix<T>> = (0..clusters)
        .map(|i| {
            let bk = fam.b(i) * design.gain(i);
            if bk.shape() != (n, n) {
                return Err(Error::dims(
                    format!("B K of cluster {i}"),
                    format!("{n}x{n}"),
                    format!("{:?}", bk.shape()),
                ));
            }
            let mut m = DMatrix::zeros(2 * n, 2 * n);
            m.view_mut((0, 0), (n, n)).copy_from(fam.a(i));
            m.view_mut((0, n), (n, n)).copy_from(&bk);
            m.view_mut((n, n), (n, n)).copy_from(&(fam.a(i) + &bk));
            Ok(m)
        })
        .collect::<Result<_>>()?;

    let nodes = pl.node_count();
    let cluster_of: Vec<usize> = (0..nodes).map(|l| pl.cluster_of(l)).collect();
    let full = pl.full();
    let weights = DMatrix::from_fn(nodes, nodes, |l, k| {
        let i = cluster_of[l];
        if cluster_of[k] == i {
            w.effective(i) * full[(l, k)]
        } else {
            w.global() * full[(l, k)]
        }
    });
    let per_agent: Vec<DMatrix<T>> = cluster_of.iter().map(|&i| blocks[i].clone()).collect();
    let matrix = block_diag(&per_agent) - weights.kronecker(&coupling_selector::<T>(n));
    Ok(ClosedLoopSystem {
        n,
        sizes: pl.cluster_sizes().to_vec(),
        offsets: pl.offsets().to_vec(),
        cluster_of,
        blocks,
        weights,
        matrix,
    })
}

impl<T: Real> ClosedLoopSystem<T> {
    pub fn state_dim(&self) -> usize {
        self.n
    }

    pub fn agent_count(&self) -> usize {
        self.cluster_of.len()
    }

    pub fn cluster_count(&self) -> usize {
        self.sizes.len()
    }

    pub fn cluster_of(&self, agent: usize) -> usize {
        self.cluster_of[agent]
    }

    pub fn cluster_range(&self, i: usize) -> std::ops::Range<usize> {
        self.offsets[i]..self.offsets[i] + self.sizes[i]
    }

    /// `A_ci`.
    pub fn closed_loop_block(&self, i: usize) -> &DMatrix<T> {
        &self.blocks[i]
    }

    /// Coupling weights `w_lk` (factors folded in).
    pub fn coupling_weights(&self) -> &DMatrix<T> {
        &self.weights
    }

    /// The `2 n L`-square network matrix.
    pub fn matrix(&self) -> &DMatrix<T> {
        &self.matrix
    }

    pub fn vector_field(&self, z: &DVector<T>) -> DVector<T> {
        &self.matrix * z
    }

    /// Stacks per-agent `x_l` and `eta_l` (canonical order) into `z`.
    pub fn stack(&self, x: &[DVector<T>], eta: &[DVector<T>]) -> Result<DVector<T>> {
        let agents = self.agent_count();
        for (name, v) in [("x", x), ("eta", eta)] {
            if v.len() != agents {
                return Err(Error::dims(format!("initial {name}"), agents, v.len()));
            }
            if let Some(bad) = v.iter().find(|s| s.len() != self.n) {
                return Err(Error::dims(
                    format!("initial {name} entry"),
                    self.n,
                    bad.len(),
                ));
            }
        }
        let mut z = DVector::zeros(2 * self.n * agents);
        for l in 0..agents {
            z.rows_mut(2 * self.n * l, self.n).copy_from(&x[l]);
            z.rows_mut(2 * self.n * l + self.n, self.n)
                .copy_from(&eta[l]);
        }
        Ok(z)
    }

    pub fn x_of(&self, z: &DVector<T>, l: usize) -> DVector<T> {
        z.rows(2 * self.n * l, self.n).into_owned()
    }

    pub fn eta_of(&self, z: &DVector<T>, l: usize) -> DVector<T> {
        z.rows(2 * self.n * l + self.n, self.n).into_owned()
    }

    /// `zeta_l = eta_l - eta_r - x_l + x_r` for every non-reference agent,
    /// cluster by cluster.
    pub fn reduced_coordinates(&self, z: &DVector<T>) -> DVector<T> {
        let n = self.n;
        let mut out = Vec::with_capacity(n * (self.agent_count() - self.cluster_count()));
        for i in 0..self.cluster_count() {
            let r = self.offsets[i];
            let ur = self.eta_of(z, r) - self.x_of(z, r);
            for l in self.cluster_range(i).skip(1) {
                let ul = self.eta_of(z, l) - self.x_of(z, l);
                out.extend((ul - &ur).iter().copied());
            }
        }
        DVector::from_vec(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairSeries<T> {
    pub i: usize,
    pub j: usize,
    pub values: Vec<T>,
}

/// Per-sample synchronization metrics on the `x` states (Euclidean norm).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryMetrics<T> {
    pub times: Vec<T>,
    /// `d_i(t)`: largest intra-cluster distance.
    pub diameters: Vec<Vec<T>>,
    /// `h(t) = max_l ||eta_l(t)||`.
    pub aux_norm: Vec<T>,
    /// `s_ij(t)` for `i < j`: smallest cross-cluster distance.
    pub separations: Vec<PairSeries<T>>,
    /// First sample index of the tail window.
    pub tail_start: usize,
    pub tail_fraction: f64,
}

impl<T: Real> TrajectoryMetrics<T> {
    pub fn compute(sys: &ClosedLoopSystem<T>, traj: &Trajectory<T>) -> Self {
        let clusters = sys.cluster_count();
        let mut diameters = vec![Vec::with_capacity(traj.times.len()); clusters];
        let mut separations: Vec<PairSeries<T>> = (0..clusters)
            .flat_map(|i| ((i + 1)..clusters).map(move |j| (i, j)))
            .map(|(i, j)| PairSeries {
                i,
                j,
                values: Vec::with_capacity(traj.times.len()),
            })
            .collect();
        let mut aux_norm = Vec::with_capacity(traj.times.len());
        for z in &traj.states {
            let xs: Vec<DVector<T>> = (0..sys.agent_count()).map(|l| sys.x_of(z, l)).collect();
            for (i, d) in diameters.iter_mut().enumerate() {
                let mut best = T::zero();
                for l in sys.cluster_range(i) {
                    for k in (l + 1)..sys.cluster_range(i).end {
                        best = best.max((&xs[l] - &xs[k]).norm());
                    }
                }
                d.push(best);
            }
            for s in separations.iter_mut() {
                let mut best: Option<T> = None;
                for l in sys.cluster_range(s.i) {
                    for k in sys.cluster_range(s.j) {
                        let v = (&xs[l] - &xs[k]).norm();
                        best = Some(best.map_or(v, |b| b.min(v)));
                    }
                }
                s.values.push(best.unwrap_or_else(T::zero));
            }
            aux_norm.push(
                (0..sys.agent_count())
                    .map(|l| sys.eta_of(z, l).norm())
                    .fold(T::zero(), |a, b| a.max(b)),
            );
        }
        let tail_start = tail_start(&traj.times, TAIL_FRACTION);
        Self {
            times: traj.times.clone(),
            diameters,
            aux_norm,
            separations,
            tail_start,
            tail_fraction: TAIL_FRACTION,
        }
    }

    pub fn separation(&self, i: usize, j: usize) -> Option<&[T]> {
        let (i, j) = (i.min(j), i.max(j));
        self.separations
            .iter()
            .find(|s| s.i == i && s.j == j)
            .map(|s| s.values.as_slice())
    }

    fn tail<'a>(&self, v: &'a [T]) -> &'a [T] {
        &v[self.tail_start.min(v.len())..]
    }

    /// Largest `s_ij` inside the tail window.
    pub fn tail_max_separation(&self, i: usize, j: usize) -> Option<T> {
        self.separation(i, j).map(|v| {
            self.tail(v)
                .iter()
                .copied()
                .fold(T::zero(), |a, b| a.max(b))
        })
    }

    /// Smallest `s_ij` inside the tail window.
    pub fn tail_min_separation(&self, i: usize, j: usize) -> Option<T> {
        self.separation(i, j)
            .and_then(|v| self.tail(v).iter().copied().reduce(|a, b| a.min(b)))
    }

    pub fn final_diameters(&self) -> Vec<T> {
        self.diameters
            .iter()
            .map(|d| *d.last().expect("at least one sample"))
            .collect()
    }
}

/// First index with `t >= (1 - fraction) * t_end`.
fn tail_start<T: Real>(times: &[T], fraction: f64) -> usize {
    let Some(&end) = times.last() else {
        return 0;
    };
    let from = end * lit(1.0 - fraction);
    times.iter().position(|&t| t >= from).unwrap_or(0)
}

#[derive(Debug, Clone)]
pub struct SimulationRun<T: Real> {
    pub trajectory: Trajectory<T>,
    pub metrics: TrajectoryMetrics<T>,
}

/// RK4 integration from per-agent initial states.
pub fn simulate<T: Real>(
    sys: &ClosedLoopSystem<T>,
    x0: &[DVector<T>],
    eta0: &[DVector<T>],
    step: T,
    horizon: T,
    downsample: usize,
) -> Result<SimulationRun<T>> {
    if step <= T::zero() || !step.is_finite() {
        return Err(Error::InvalidFactors(format!(
            "integration step must be positive, got {}",
            step.as_f64()
        )));
    }
    if horizon < T::zero() || !horizon.is_finite() {
        return Err(Error::InvalidFactors(format!(
            "horizon must be nonnegative, got {}",
            horizon.as_f64()
        )));
    }
    let z0 = sys.stack(x0, eta0)?;
    let trajectory = integrate_rk4(|_, z| sys.vector_field(z), z0, step, horizon, downsample);
    let metrics = TrajectoryMetrics::compute(sys, &trajectory);
    Ok(SimulationRun {
        trajectory,
        metrics,
    })
}

fn uniform_states<T: Real>(rng: &mut ChaCha8Rng, count: usize, n: usize) -> Vec<DVector<T>> {
    (0..count)
        .map(|_| DVector::from_fn(n, |_, _| lit(rng.gen_range(-1.0..=1.0))))
        .collect()
}

/// Independent uniform `[-1, 1]` draws for every `x_l(0)` and `eta_l(0)`.
pub fn random_initial_conditions<T: Real>(
    sys: &ClosedLoopSystem<T>,
    seed: u64,
) -> (Vec<DVector<T>>, Vec<DVector<T>>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = uniform_states(&mut rng, sys.agent_count(), sys.n);
    let eta = uniform_states(&mut rng, sys.agent_count(), sys.n);
    (x, eta)
}

/// Uniform `[-1, 1]` draws for every `x_l(0)`.
pub fn random_states<T: Real>(sys: &ClosedLoopSystem<T>, seed: u64) -> Vec<DVector<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    uniform_states(&mut rng, sys.agent_count(), sys.n)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeparationInit<T: Real> {
    pub eta0: Vec<DVector<T>>,
    /// `x_l(0) - eta_l(0)`, shared inside each cluster.
    pub offsets: Vec<DVector<T>>,
    pub resamples: usize,
}

/// Auxiliary initial values with `x_l(0) - eta_l(0)` equal to a per-cluster
/// offset. Offsets are uniform on `[-1, 1]^n`, drawn from a stream of the
/// seeded generator separate from the one used for states, and redrawn when
/// one is (nearly) zero or two clusters (nearly) share one.
pub fn separation_init<T: Real>(
    sys: &ClosedLoopSystem<T>,
    x0: &[DVector<T>],
    seed: u64,
) -> Result<SeparationInit<T>> {
    if x0.len() != sys.agent_count() {
        return Err(Error::dims("initial x", sys.agent_count(), x0.len()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    let tol: T = lit(OFFSET_COLLISION_TOL);
    let mut resamples = 0;
    let offsets = loop {
        let offsets = uniform_states::<T>(&mut rng, sys.cluster_count(), sys.n);
        let degenerate = offsets
            .iter()
            .enumerate()
            .any(|(i, o)| o.norm() <= tol || offsets[..i].iter().any(|p| (o - p).norm() <= tol));
        if !degenerate || resamples == MAX_RESAMPLES {
            break offsets;
        }
        resamples += 1;
    };
    let eta0 = (0..sys.agent_count())
        .map(|l| {
            if x0[l].len() != sys.n {
                return Err(Error::dims("initial x entry", sys.n, x0[l].len()));
            }
            Ok(&x0[l] - &offsets[sys.cluster_of(l)])
        })
        .collect::<Result<_>>()?;
    Ok(SeparationInit {
        eta0,
        offsets,
        resamples,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", content = "rate", rename_all = "snake_case")]
pub enum DecayEstimate {
    /// Positive exponential decay rate of `d_i` over the window.
    Rate(f64),
    /// Flat or growing signal.
    NoDecay,
    /// Fewer than two samples above the numeric floor.
    BelowFloor,
}

/// Least-squares slope of `ln d_i(t)` over the final `window` fraction of
/// samples, for every cluster.
pub fn estimate_decay_rate<T: Real>(
    metrics: &TrajectoryMetrics<T>,
    window: f64,
) -> Vec<DecayEstimate> {
    let start = tail_start(&metrics.times, window.clamp(0.0, 1.0));
    metrics
        .diameters
        .iter()
        .map(|d| {
            let points: Vec<(f64, f64)> = metrics.times[start..]
                .iter()
                .zip(&d[start..])
                .filter(|(_, v)| v.as_f64() > DECAY_FLOOR)
                .map(|(t, v)| (t.as_f64(), v.as_f64().ln()))
                .collect();
            fit_decay(&points)
        })
        .collect()
}

fn fit_decay(points: &[(f64, f64)]) -> DecayEstimate {
    if points.len() < 2 {
        return DecayEstimate::BelowFloor;
    }
    let k = points.len() as f64;
    let mt = points.iter().map(|p| p.0).sum::<f64>() / k;
    let my = points.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = points.iter().map(|(t, y)| (t - mt) * (y - my)).sum();
    let sxx: f64 = points.iter().map(|(t, _)| (t - mt).powi(2)).sum();
    if sxx <= 0.0 {
        return DecayEstimate::BelowFloor;
    }
    let rate = -sxy / sxx;
    if rate > 1e-9 {
        DecayEstimate::Rate(rate)
    } else {
        DecayEstimate::NoDecay
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectralPeak {
    /// Angular frequency of the largest non-DC bin (rad per time unit).
    pub omega: f64,
    /// Angular width of one bin.
    pub bin_width: f64,
}

/// Dominant angular frequency of a uniformly sampled signal (mean removed).
pub fn dominant_angular_frequency(dt: f64, signal: &[f64]) -> Option<SpectralPeak> {
    let len = signal.len();
    if len < 4 || !(dt > 0.0) {
        return None;
    }
    let mean = signal.iter().sum::<f64>() / len as f64;
    let mut buf: Vec<Complex<f64>> = signal.iter().map(|v| Complex::new(v - mean, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(len).process(&mut buf);
    let (k, _) = buf[1..=len / 2]
        .iter()
        .enumerate()
        .map(|(i, c)| (i + 1, c.norm_sqr()))
        .fold(
            (0, -1.0),
            |best, cur| if cur.1 > best.1 { cur } else { best },
        );
    let bin_width = 2.0 * std::f64::consts::PI / (len as f64 * dt);
    Some(SpectralPeak {
        omega: k as f64 * bin_width,
        bin_width,
    })
}
