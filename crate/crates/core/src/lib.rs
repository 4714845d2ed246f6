//! Certification and simulation of cluster synchronization for networks of
//! nonidentical linear agents coupled through a dynamic (auxiliary-state)
//! coupling law.
//!
//! The crate is organised bottom-up:
//!
//! - [`graph`]: partitioned interaction graphs, their Laplacian blocks and
//!   topological queries (spanning trees, cooperativity, acyclic partitions).
//! - [`reduction`]: the weighted Laplacian and the reduced matrix obtained by
//!   eliminating one reference node per cluster, plus the zero-eigenvalue census.
//! - [`numkernel`]: dense kernels (spectra, Riccati and Lyapunov solvers,
//!   Kronecker assembly, fixed-step RK4).
//! - [`certification`]: verdicts for every standing assumption, the algebraic
//!   and topological synchronization conditions and the weighting-factor bounds.
//! - [`simulator`]: closed-loop assembly, trajectory metrics and the
//!   inter-cluster separation construction.
//! - [`scenario`]: JSON configuration, built-in scenarios and run artifacts used
//!   by the `clustersync` binary.
//!
//! Graph and reduction code is generic over [`Field`] so it can run in exact
//! rational arithmetic; everything that needs eigenvalues is generic over
//! [`Real`] (`f32`/`f64`).

pub mod certification;
pub mod error;
pub mod graph;
pub mod numkernel;
pub mod reduction;
pub mod scalar;
pub mod scenario;
pub mod simulator;

pub use error::{Error, Result};
pub use scalar::{Field, Real};

use num_rational::Rational64;

/// Partitioned graph over `f64` weights.
pub type ClusterGraph64 = graph::ClusterGraph<f64>;
/// Partitioned graph over exact rational weights.
pub type ExactClusterGraph = graph::ClusterGraph<Rational64>;
pub type PartitionedLaplacian64 = graph::PartitionedLaplacian<f64>;
pub type ExactPartitionedLaplacian = graph::PartitionedLaplacian<Rational64>;
pub type WeightingFactors64 = reduction::WeightingFactors<f64>;
pub type ExactWeightingFactors = reduction::WeightingFactors<Rational64>;
pub type ReducedLaplacian64 = reduction::ReducedLaplacian<f64>;
pub type ExactReducedLaplacian = reduction::ReducedLaplacian<Rational64>;
pub type AgentFamily64 = certification::AgentFamily<f64>;
pub type ControlDesign64 = certification::ControlDesign<f64>;
pub type CertificationReport64 = certification::CertificationReport<f64>;
pub type RiccatiSolution64 = numkernel::RiccatiSolution<f64>;
pub type Spectrum64 = numkernel::Spectrum<f64>;
pub type ClosedLoopSystem64 = simulator::ClosedLoopSystem<f64>;
pub type TrajectoryMetrics64 = simulator::TrajectoryMetrics<f64>;
