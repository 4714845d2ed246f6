//! Built-in scenarios: four Nomoto-model ships and two clusters of harmonic
//! oscillators.

use crate::error::{Error, Result};

use super::config::{
    AgentsConfig, ClusterSystem, Edge, FactorsConfig, GraphConfig, InitialCondition, Overrides,
    ScenarioConfig, SimulationConfig, SCHEMA_VERSION,
};

pub struct Builtin {
    pub name: &'static str,
    pub summary: &'static str,
    pub config: ScenarioConfig,
}

const SHIP_TAU: [f64; 2] = [42.21, 107.3];
const SHIP_KAPPA: [f64; 2] = [0.181, 0.185];
const OSCILLATOR_W: [f64; 2] = [2.0, 2.5];

fn edge(from: usize, to: usize, weight: f64) -> Edge {
    Edge { from, to, weight }
}

fn ship_agents() -> AgentsConfig {
    AgentsConfig {
        n: 2,
        clusters: SHIP_TAU
            .iter()
            .zip(SHIP_KAPPA)
            .map(|(&tau, kappa)| ClusterSystem {
                a: vec![vec![0.0, 1.0], vec![0.0, -1.0 / tau]],
                b: vec![vec![0.0], vec![kappa / tau]],
            })
            .collect(),
    }
}

/// Ships 1, 2 (type 1) and 3, 4 (type 2) with links in both directions
/// between the clusters.
fn ship_cyclic_edges() -> Vec<Edge> {
    vec![
        edge(3, 1, -5.0),
        edge(4, 1, 5.0),
        edge(1, 2, 1.0),
        edge(3, 2, -1.0),
        edge(4, 2, 1.0),
        edge(1, 3, 1.0),
        edge(2, 3, -1.0),
        edge(3, 4, 1.0),
    ]
}

fn ship(
    name: &str,
    description: &str,
    edges: Vec<Edge>,
    c_local: [f64; 2],
    horizon: Option<f64>,
    initial: InitialCondition,
) -> ScenarioConfig {
    ScenarioConfig {
        schema: SCHEMA_VERSION,
        name: Some(name.into()),
        description: Some(description.into()),
        agents: ship_agents(),
        graph: GraphConfig {
            nodes: 4,
            partition: vec![vec![1, 2], vec![3, 4]],
            edges,
        },
        factors: FactorsConfig {
            c: 1.0,
            c_local: c_local.to_vec(),
        },
        simulation: SimulationConfig {
            horizon,
            seed: 7,
            downsample: 10,
            initial,
            ..SimulationConfig::default()
        },
        overrides: Overrides::default(),
    }
}

fn oscillators() -> ScenarioConfig {
    // Labels: s1 = 1, r1 = 2, r2 = 3, s2 = 4, r3 = 5, r4 = 6.
    // FIXTURE-DERIVED: the receiver cross-link weights are a fixture choice.
    // Every receiver gets a +1/-1 pair from the other cluster so the
    // inter-cluster row sums vanish.
    let edges = vec![
        edge(1, 2, 1.0),
        edge(1, 3, 1.0),
        edge(4, 5, 1.0),
        edge(4, 6, 1.0),
        edge(5, 2, 1.0),
        edge(6, 2, -1.0),
        edge(6, 3, 1.0),
        edge(5, 3, -1.0),
        edge(2, 5, 1.0),
        edge(3, 5, -1.0),
        edge(3, 6, 1.0),
        edge(2, 6, -1.0),
    ];
    ScenarioConfig {
        schema: SCHEMA_VERSION,
        name: Some("oscillators".into()),
        description: Some(
            "two clusters (sender + two receivers) of harmonic oscillators at 2 and 2.5 rad/s"
                .into(),
        ),
        agents: AgentsConfig {
            n: 2,
            clusters: OSCILLATOR_W
                .iter()
                .map(|w| ClusterSystem {
                    a: vec![vec![0.0, 1.0], vec![-w * w, 0.0]],
                    b: vec![vec![0.0], vec![1.0]],
                })
                .collect(),
        },
        graph: GraphConfig {
            nodes: 6,
            partition: vec![vec![1, 2, 3], vec![4, 5, 6]],
            edges,
        },
        factors: FactorsConfig {
            c: 6.0,
            c_local: vec![13.0, 13.0],
        },
        simulation: SimulationConfig {
            horizon: Some(200.0),
            seed: 7,
            downsample: 5,
            initial: InitialCondition::Separation,
            ..SimulationConfig::default()
        },
        overrides: Overrides::default(),
    }
}

pub fn builtin_scenarios() -> Vec<Builtin> {
    // FIXTURE-DERIVED: the acyclic ship graph keeps only the cluster-2 -> cluster-1
    // links of the cyclic graph (balanced +/- pairs) and drops the intra-cluster
    // link of cluster 1.
    let acyclic_edges = vec![
        edge(3, 1, -5.0),
        edge(4, 1, 5.0),
        edge(3, 2, -1.0),
        edge(4, 2, 1.0),
        edge(3, 4, 1.0),
    ];
    vec![
        Builtin {
            name: "ship-cyclic",
            summary: "four ships, cyclic partition, c = 1, c_i = 2",
            config: ship(
                "ship-cyclic",
                "heading alignment of two ship types, links between clusters in both directions",
                ship_cyclic_edges(),
                [2.0, 2.0],
                None,
                InitialCondition::Separation,
            ),
        },
        Builtin {
            name: "ship-nocluster1",
            summary: "cyclic ship graph with c_1 = 0 (no direct links inside cluster 1)",
            config: ship(
                "ship-nocluster1",
                "cyclic ship graph with the intra-cluster coupling of cluster 1 switched off",
                ship_cyclic_edges(),
                [0.0, 2.0],
                None,
                InitialCondition::Separation,
            ),
        },
        Builtin {
            name: "ship-acyclic",
            summary: "acyclic ship graph, cluster 1 has no internal links (not synchronizable)",
            config: ship(
                "ship-acyclic",
                "cluster 2 drives cluster 1, whose ships are not linked to each other",
                acyclic_edges,
                [2.0, 2.0],
                Some(200.0),
                // The separating construction keeps every cluster on its
                // synchronization manifold; generic states expose the failure.
                InitialCondition::Random,
            ),
        },
        Builtin {
            name: "oscillators",
            summary: "harmonic oscillators at 2 and 2.5 rad/s, c = 6, c_i = 13",
            config: oscillators(),
        },
    ]
}

pub fn builtin(name: &str) -> Result<ScenarioConfig> {
    builtin_scenarios()
        .into_iter()
        .find(|b| b.name == name)
        .map(|b| b.config)
        .ok_or_else(|| Error::UnknownScenario(name.into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_laplacian;
    use crate::reduction::weight_laplacian;
    use nalgebra::dmatrix;

    #[test]
    fn all_builtins_validate() {
        for b in builtin_scenarios() {
            let s = b.config.build().unwrap();
            assert_eq!(s.name, b.name);
        }
        assert!(matches!(builtin("nope"), Err(Error::UnknownScenario(_))));
    }

    #[test]
    fn ship_cyclic_laplacian() {
        let s = builtin("ship-cyclic").unwrap().build().unwrap();
        let pl = build_laplacian(&s.graph);
        let lc = weight_laplacian(&pl, &s.factors).unwrap();
        let (c1, c2) = (2.0, 2.0);
        let expected = dmatrix![
            0.0, 0.0, 5.0, -5.0;
            -c1, c1, 1.0, -1.0;
            -1.0, 1.0, 0.0, 0.0;
            0.0, 0.0, -c2, c2
        ];
        assert_eq!(lc, expected);
    }

    #[test]
    fn variant_parameters() {
        let s = builtin("ship-nocluster1").unwrap();
        assert_eq!(s.factors.c_local, vec![0.0, 2.0]);
        let o = builtin("oscillators").unwrap();
        assert_eq!(
            (o.factors.c, o.factors.c_local.clone()),
            (6.0, vec![13.0, 13.0])
        );
        assert_eq!(o.agents.clusters[1].a[1][0], -6.25);
        let sep = builtin("ship-acyclic").unwrap().build().unwrap();
        assert!(crate::graph::acyclic_partition(&sep.graph).acyclic);
    }
}
