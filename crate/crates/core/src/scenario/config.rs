//! Versioned JSON scenario files.
//!
//! Node labels and cluster references are 1-based; matrices are row-major
//! arrays of arrays. Unknown keys are rejected everywhere.

use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::certification::AgentFamily;
use crate::error::{Error, Result};
use crate::graph::ClusterGraph;
use crate::reduction::WeightingFactors;
use crate::simulator::DEFAULT_STEP;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub schema: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub agents: AgentsConfig,
    pub graph: GraphConfig,
    pub factors: FactorsConfig,
    #[serde(default)]
    pub simulation: SimulationConfig,
    #[serde(default, skip_serializing_if = "Overrides::is_empty")]
    pub overrides: Overrides,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentsConfig {
    /// State dimension shared by all agents.
    pub n: usize,
    /// One `(A_i, B_i)` pair per cluster, in partition order.
    pub clusters: Vec<ClusterSystem>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClusterSystem {
    pub a: Vec<Vec<f64>>,
    pub b: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphConfig {
    pub nodes: usize,
    /// Clusters as lists of 1-based node labels; the first label is the
    /// cluster's reference node.
    pub partition: Vec<Vec<usize>>,
    #[serde(default)]
    pub edges: Vec<Edge>,
}

/// Directed link: `to` listens to `from` with weight `a_{to,from}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FactorsConfig {
    pub c: f64,
    pub c_local: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialCondition {
    /// Random `x(0)`; `eta(0)` built so clusters separate.
    #[default]
    Separation,
    /// Random `x(0)` and `eta(0)`.
    Random,
    /// Random `x(0)`, `eta(0) = 0`.
    ZeroAux,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    #[serde(default = "default_step")]
    pub step: f64,
    /// Defaults to `max(50, 40 / margin)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_downsample")]
    pub downsample: usize,
    #[serde(default)]
    pub initial: InitialCondition,
}

fn default_step() -> f64 {
    DEFAULT_STEP
}

fn default_downsample() -> usize {
    1
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            step: DEFAULT_STEP,
            horizon: None,
            seed: 0,
            downsample: 1,
            initial: InitialCondition::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    /// Per-cluster weights `W_i` for the factor bounds.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w: Option<Vec<Vec<Vec<f64>>>>,
    /// Per-cluster gains `K_i` replacing the Riccati design.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gains: Option<Vec<Vec<Vec<f64>>>>,
}

impl Overrides {
    pub fn is_empty(&self) -> bool {
        self.w.is_none() && self.gains.is_none()
    }
}

/// Validated, typed scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub family: AgentFamily<f64>,
    pub graph: ClusterGraph<f64>,
    pub factors: WeightingFactors<f64>,
    pub simulation: SimulationConfig,
    /// Weights in canonical cluster order.
    pub user_w: Option<Vec<DMatrix<f64>>>,
    pub user_gains: Option<Vec<DMatrix<f64>>>,
}

/// Parses and validates a scenario from JSON text.
pub fn parse_config(text: &str) -> Result<ScenarioConfig> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let config: ScenarioConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        Error::config(path, e.into_inner().to_string())
    })?;
    config.build()?;
    Ok(config)
}

pub fn load_config(path: impl AsRef<Path>) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path.as_ref())?;
    parse_config(&text)
}

pub fn write_config(config: &ScenarioConfig, path: impl AsRef<Path>) -> Result<()> {
    let mut text = serde_json::to_string_pretty(config)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

fn matrix(rows: &[Vec<f64>], path: &str, shape: Option<(usize, usize)>) -> Result<DMatrix<f64>> {
    let r = rows.len();
    let c = rows.first().map_or(0, |row| row.len());
    if let Some(bad) = rows.iter().position(|row| row.len() != c) {
        return Err(Error::config(
            format!("{path}[{bad}]"),
            format!("row has {} entries, expected {c}", rows[bad].len()),
        ));
    }
    if let Some((er, ec)) = shape {
        if (r, c) != (er, ec) {
            return Err(Error::config(
                path,
                format!("expected a {er}x{ec} matrix, found {r}x{c}"),
            ));
        }
    }
    if rows.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::config(path, "entries must be finite"));
    }
    Ok(DMatrix::from_fn(r, c, |i, j| rows[i][j]))
}

impl ScenarioConfig {
    /// Dimension and consistency checks, producing the typed scenario.
    pub fn build(&self) -> Result<Scenario> {
        if self.schema != SCHEMA_VERSION {
            return Err(Error::config(
                "schema",
                format!(
                    "unsupported schema {}, expected {SCHEMA_VERSION}",
                    self.schema
                ),
            ));
        }
        let n = self.agents.n;
        if n == 0 {
            return Err(Error::config(
                "agents.n",
                "state dimension must be at least 1",
            ));
        }
        let clusters = self.graph.partition.len();
        if clusters == 0 {
            return Err(Error::config(
                "graph.partition",
                "partition has no clusters",
            ));
        }
        if self.agents.clusters.len() != clusters {
            return Err(Error::config(
                "agents.clusters",
                format!(
                    "{} systems given for {clusters} clusters",
                    self.agents.clusters.len()
                ),
            ));
        }
        let mut systems = Vec::with_capacity(clusters);
        for (i, sys) in self.agents.clusters.iter().enumerate() {
            let a = matrix(&sys.a, &format!("agents.clusters[{i}].a"), Some((n, n)))?;
            let m = sys.b.first().map_or(0, |r| r.len());
            if m == 0 {
                return Err(Error::config(
                    format!("agents.clusters[{i}].b"),
                    "input matrix needs at least one column",
                ));
            }
            let b = matrix(&sys.b, &format!("agents.clusters[{i}].b"), Some((n, m)))?;
            systems.push((a, b));
        }
        let family = AgentFamily::new(systems)?;

        let nodes = self.graph.nodes;
        if nodes == 0 {
            return Err(Error::config(
                "graph.nodes",
                "graph needs at least one node",
            ));
        }
        let mut partition = Vec::with_capacity(clusters);
        for (i, cluster) in self.graph.partition.iter().enumerate() {
            if cluster.is_empty() {
                return Err(Error::config(
                    format!("graph.partition[{i}]"),
                    "cluster is empty",
                ));
            }
            let mut members = Vec::with_capacity(cluster.len());
            for (k, &label) in cluster.iter().enumerate() {
                if label == 0 || label > nodes {
                    return Err(Error::config(
                        format!("graph.partition[{i}][{k}]"),
                        format!("label {label} outside 1..={nodes}"),
                    ));
                }
                members.push(label - 1);
            }
            partition.push(members);
        }
        let mut edges = Vec::with_capacity(self.graph.edges.len());
        for (e, edge) in self.graph.edges.iter().enumerate() {
            let path = format!("graph.edges[{e}]");
            for (field, label) in [("from", edge.from), ("to", edge.to)] {
                if label == 0 || label > nodes {
                    return Err(Error::config(
                        format!("{path}.{field}"),
                        format!("label {label} outside 1..={nodes}"),
                    ));
                }
            }
            if edge.from == edge.to {
                return Err(Error::config(path, "self-links are not allowed"));
            }
            if !edge.weight.is_finite() {
                return Err(Error::config(
                    format!("{path}.weight"),
                    "weight must be finite",
                ));
            }
            edges.push((edge.from - 1, edge.to - 1, edge.weight));
        }
        let graph = ClusterGraph::from_edges(nodes, &edges, &partition)
            .map_err(|e| Error::config("graph", e.to_string()))?;

        if self.factors.c_local.len() != clusters {
            return Err(Error::config(
                "factors.c_local",
                format!(
                    "{} local factors given for {clusters} clusters",
                    self.factors.c_local.len()
                ),
            ));
        }
        let factors = WeightingFactors::new(self.factors.c, self.factors.c_local.clone())
            .map_err(|e| Error::config("factors", e.to_string()))?;

        let sim = &self.simulation;
        if !(sim.step > 0.0 && sim.step.is_finite()) {
            return Err(Error::config("simulation.step", "step must be positive"));
        }
        if sim.horizon.is_some_and(|h| !(h >= 0.0 && h.is_finite())) {
            return Err(Error::config(
                "simulation.horizon",
                "horizon must be nonnegative",
            ));
        }
        if sim.downsample == 0 {
            return Err(Error::config("simulation.downsample", "must be at least 1"));
        }

        let user_w = match &self.overrides.w {
            None => None,
            Some(ws) => {
                if ws.len() != clusters {
                    return Err(Error::config(
                        "overrides.w",
                        format!("{} matrices given for {clusters} clusters", ws.len()),
                    ));
                }
                let sizes = graph.cluster_sizes();
                Some(
                    ws.iter()
                        .enumerate()
                        .map(|(i, w)| {
                            let k = sizes[i] - 1;
                            if k == 0 && w.is_empty() {
                                return Ok(DMatrix::zeros(0, 0));
                            }
                            matrix(w, &format!("overrides.w[{i}]"), Some((k, k)))
                        })
                        .collect::<Result<_>>()?,
                )
            }
        };
        let user_gains = match &self.overrides.gains {
            None => None,
            Some(ks) => {
                if ks.len() != clusters {
                    return Err(Error::config(
                        "overrides.gains",
                        format!("{} gains given for {clusters} clusters", ks.len()),
                    ));
                }
                Some(
                    ks.iter()
                        .enumerate()
                        .map(|(i, k)| {
                            let shape = (family.input_dim(i), n);
                            matrix(k, &format!("overrides.gains[{i}]"), Some(shape))
                        })
                        .collect::<Result<_>>()?,
                )
            }
        };

        Ok(Scenario {
            name: self.name.clone().unwrap_or_else(|| "scenario".into()),
            family,
            graph,
            factors,
            simulation: self.simulation.clone(),
            user_w,
            user_gains,
        })
    }
}
