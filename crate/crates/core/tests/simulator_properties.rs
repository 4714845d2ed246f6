mod common;

use clustersync::certification::{
    stacked_system_matrix, synchronization_matrix, AgentFamily, ControlDesign,
};
use clustersync::graph::{build_laplacian, ClusterGraph};
use clustersync::numkernel::{integrate_rk4, spectrum};
use clustersync::reduction::{reduce, WeightingFactors};
use clustersync::scenario::{builtin, run, InitialCondition, Mode, RunOptions};
use clustersync::simulator::{assemble, random_initial_conditions, separation_init, simulate};
use common::{random_factors, random_family, random_graph, rng, GraphSpec};
use nalgebra::{dmatrix, DVector};
use rand::Rng;

#[test]
fn clustering_manifold_is_invariant() {
    let mut r = rng(31);
    for _ in 0..30 {
        let g = random_graph(&mut r, &GraphSpec::default());
        let fam = random_family(&mut r, g.cluster_count(), 2);
        let design = ControlDesign::from_riccati(&fam).unwrap();
        let pl = build_laplacian(&g);
        let w = random_factors(&mut r, g.cluster_count(), 2.0);
        let sys = assemble(&fam, &design, &pl, &w).unwrap();
        let per_cluster: Vec<(DVector<f64>, DVector<f64>)> = (0..g.cluster_count())
            .map(|_| {
                let x = DVector::from_fn(2, |_, _| r.gen_range(-1.0..1.0));
                let eta = DVector::from_fn(2, |_, _| r.gen_range(-1.0..1.0));
                (x, eta)
            })
            .collect();
        let x0: Vec<_> = (0..sys.agent_count())
            .map(|l| per_cluster[sys.cluster_of(l)].0.clone())
            .collect();
        let eta0: Vec<_> = (0..sys.agent_count())
            .map(|l| per_cluster[sys.cluster_of(l)].1.clone())
            .collect();
        // Rounding noise off the manifold evolves with the transverse
        // dynamics; cap its growth at e^10 so only a real leak shows up.
        let red = reduce(&pl, &w).unwrap();
        let growth = spectrum(&synchronization_matrix(&fam, &red, w.global()).unwrap())
            .unwrap()
            .max_real;
        let horizon = if growth > 1.0 { 10.0 / growth } else { 10.0 };
        let out = simulate(&sys, &x0, &eta0, 0.01, horizon, 10).unwrap();
        let worst = out
            .metrics
            .diameters
            .iter()
            .flatten()
            .fold(0.0f64, |m, &d| m.max(d));
        assert!(worst <= 1e-8, "diameter left the manifold: {worst}");
    }
}

#[test]
fn reduced_coordinates_follow_reduced_dynamics() {
    let mut r = rng(32);
    for _ in 0..20 {
        let g = random_graph(&mut r, &GraphSpec::default());
        if g.node_count() == g.cluster_count() {
            continue;
        }
        let fam = random_family(&mut r, g.cluster_count(), 2);
        let design = ControlDesign::from_riccati(&fam).unwrap();
        let pl = build_laplacian(&g);
        let w = random_factors(&mut r, g.cluster_count(), 2.0);
        let sys = assemble(&fam, &design, &pl, &w).unwrap();
        let red = reduce(&pl, &w).unwrap();
        let m = synchronization_matrix(&fam, &red, w.global()).unwrap();
        let (x0, eta0) = random_initial_conditions(&sys, r.gen());
        let full = simulate(&sys, &x0, &eta0, 0.01, 5.0, 1).unwrap();
        let zeta0 = sys.reduced_coordinates(&sys.stack(&x0, &eta0).unwrap());
        let direct = integrate_rk4(|_, z| &m * z, zeta0, 0.01, 5.0, 1);
        for (z, zeta) in full.trajectory.states.iter().zip(&direct.states) {
            let got = sys.reduced_coordinates(z);
            assert!((&got - zeta).norm() <= 1e-6 * zeta.norm().max(1.0));
        }
    }
}

#[test]
fn stacked_matrix_has_one_block_per_non_reference_agent() {
    let mut r = rng(33);
    let g = random_graph(&mut r, &GraphSpec::default());
    let fam = random_family(&mut r, g.cluster_count(), 3);
    let red = reduce(
        &build_laplacian(&g),
        &WeightingFactors::unit(g.cluster_count()),
    )
    .unwrap();
    let a_hat = stacked_system_matrix(&fam, &red);
    assert_eq!(a_hat.nrows(), 3 * (g.node_count() - g.cluster_count()));
}

fn with_random_start(name: &str) -> clustersync::scenario::ScenarioConfig {
    let mut cfg = builtin(name).unwrap();
    cfg.simulation.initial = InitialCondition::Random;
    cfg.simulation.horizon = None;
    cfg
}

#[test]
fn certified_scenarios_synchronize_within_default_horizon() {
    for name in ["ship-cyclic", "ship-nocluster1", "oscillators"] {
        let out = run(&with_random_start(name), Mode::Full, &RunOptions::default()).unwrap();
        assert!(out.report.synchronized, "{name}");
        let s = out.simulation.unwrap().summary;
        assert_eq!(s.horizon, clustersync::simulator::default_horizon(s.margin));
        for (d0, d1) in s.initial_diameters.iter().zip(&s.final_diameters) {
            assert!(*d1 <= 1e-6 * d0, "{name}: {d1} vs {d0}");
        }
        assert!(
            s.final_aux_norm <= 1e-6 * s.initial_aux_norm.max(1.0),
            "{name}"
        );
    }
}

#[test]
fn unstable_synchronization_matrix_means_growing_diameters() {
    // scalar agents, two clusters of two, coupling too weak for a = 0.5
    let fam = AgentFamily::identical(dmatrix![0.5], dmatrix![1.0], 2).unwrap();
    let g = ClusterGraph::from_edges(4, &[(0, 1, 1.0), (2, 3, 1.0)], &[vec![0, 1], vec![2, 3]])
        .unwrap();
    let pl = build_laplacian(&g);
    let w = WeightingFactors::new(0.1, vec![1.0, 1.0]).unwrap();
    let red = reduce(&pl, &w).unwrap();
    let m = synchronization_matrix(&fam, &red, 0.1).unwrap();
    let grow = spectrum(&m).unwrap().max_real;
    assert!(grow > 0.0);
    let sys = assemble(&fam, &ControlDesign::from_riccati(&fam).unwrap(), &pl, &w).unwrap();
    for seed in 0..10 {
        let (x0, eta0) = random_initial_conditions(&sys, seed);
        let out = simulate(&sys, &x0, &eta0, 0.01, 20.0 / grow, 100).unwrap();
        let grows = out
            .metrics
            .diameters
            .iter()
            .any(|d| d.last().unwrap() >= &d[0]);
        assert!(grows, "seed {seed}");
    }
}

#[test]
fn clusters_stay_apart_under_separating_start() {
    for name in ["ship-cyclic", "oscillators"] {
        let s = common::scenario(name);
        let pl = build_laplacian(&s.graph);
        let design = ControlDesign::from_riccati(&s.family).unwrap();
        let sys = assemble(&s.family, &design, &pl, &s.factors).unwrap();
        let x0 = clustersync::simulator::random_states(&sys, 3);
        let init = separation_init(&sys, &x0, 3).unwrap();
        let out = simulate(&sys, &x0, &init.eta0, 0.01, 200.0, 10).unwrap();
        assert!(
            out.metrics.tail_min_separation(0, 1).unwrap() > 0.0,
            "{name}"
        );
    }
}
