//! Certification and simulation runs and their on-disk artifacts.

use std::path::{Path, PathBuf};

use nalgebra::DVector;
use rayon::prelude::*;
use serde::Serialize;

use crate::certification::{
    certify, AgentFamily, CertificationReport, CertifyOptions, ControlDesign,
};
use crate::error::{Error, Result};
use crate::graph::build_laplacian;
use crate::reduction::{WeightingFactors, NONSINGULAR_REL_TOL};
use crate::simulator::{
    assemble, default_horizon, dominant_angular_frequency, estimate_decay_rate,
    random_initial_conditions, random_states, separation_init, simulate, DecayEstimate,
    SimulationRun, SpectralPeak, TAIL_FRACTION,
};

use super::config::{InitialCondition, Scenario, ScenarioConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Certify,
    Simulate,
    Full,
}

/// Command-line overrides of the scenario's simulation settings.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub step: Option<f64>,
    pub horizon: Option<f64>,
    pub downsample: Option<usize>,
    /// Relative singular-value tolerance for the zero-eigenvalue census.
    pub tol: Option<f64>,
}

/// Process exit status: 0 certified, 2 not certified, 1 error.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitStatus {
    Certified,
    NotCertified,
    Error,
}

impl ExitStatus {
    pub fn code(self) -> i32 {
        match self {
            ExitStatus::Certified => 0,
            ExitStatus::Error => 1,
            ExitStatus::NotCertified => 2,
        }
    }

    pub fn from_verdict(ok: bool) -> Self {
        if ok {
            ExitStatus::Certified
        } else {
            ExitStatus::NotCertified
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairValue {
    /// 1-based cluster indices.
    pub i: usize,
    pub j: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationSummary {
    pub step: f64,
    pub horizon: f64,
    pub seed: u64,
    pub downsample: usize,
    pub initial: InitialCondition,
    /// Decay margin used for the default horizon: the smaller of the
    /// synchronization-matrix margin and the closed-loop margins of `A_i + B_i K_i`.
    pub margin: f64,
    pub samples: usize,
    pub diverged: bool,
    pub initial_diameters: Vec<f64>,
    pub final_diameters: Vec<f64>,
    pub initial_aux_norm: f64,
    pub final_aux_norm: f64,
    /// Largest initial distance between agents of different clusters.
    pub initial_cross_spread: f64,
    pub tail_start_time: f64,
    pub tail_max_separation: Vec<PairValue>,
    pub tail_min_separation: Vec<PairValue>,
    pub decay: Vec<DecayEstimate>,
    /// Dominant angular frequency of the reference agent's first state
    /// component over the tail window, per cluster.
    pub dominant_frequency: Vec<Option<SpectralPeak>>,
}

pub struct SimulationArtifacts {
    pub summary: SimulationSummary,
    pub run: SimulationRun<f64>,
    /// Original label of every canonical agent (0-based).
    pub labels: Vec<usize>,
    pub state_dim: usize,
}

pub struct RunArtifacts {
    pub name: String,
    pub mode: Mode,
    pub report: CertificationReport<f64>,
    pub simulation: Option<SimulationArtifacts>,
    pub status: ExitStatus,
}

impl RunArtifacts {
    /// One-line verdict.
    pub fn summary_line(&self) -> String {
        let verdict = if self.report.synchronized {
            "CERTIFIED"
        } else {
            "NOT CERTIFIED"
        };
        let margin = self
            .report
            .theorem1
            .as_ref()
            .and_then(|t| t.margin)
            .map_or("n/a".to_string(), |m| format!("{m:.6e}"));
        let mut line = format!("{}: {verdict} (margin {margin})", self.name);
        if let Some(sim) = &self.simulation {
            let s = &sim.summary;
            let ratios: Vec<String> = s
                .initial_diameters
                .iter()
                .zip(&s.final_diameters)
                .map(|(d0, d)| {
                    if *d0 > 0.0 {
                        format!("{:.3e}", d / d0)
                    } else {
                        "n/a".into()
                    }
                })
                .collect();
            line.push_str(&format!(
                "; T = {} s, d(T)/d(0) = [{}], h(T) = {:.3e}",
                s.horizon,
                ratios.join(", "),
                s.final_aux_norm
            ));
        }
        line
    }
}

fn certify_options(scenario: &Scenario, opts: &RunOptions) -> CertifyOptions<f64> {
    CertifyOptions {
        nonsingular_rel_tol: opts.tol.unwrap_or(NONSINGULAR_REL_TOL),
        user_w: scenario.user_w.clone(),
        ..CertifyOptions::default()
    }
}

pub fn run(config: &ScenarioConfig, mode: Mode, opts: &RunOptions) -> Result<RunArtifacts> {
    let scenario = config.build()?;
    let report = certify(
        &scenario.family,
        &scenario.graph,
        &scenario.factors,
        &certify_options(&scenario, opts),
    )?;
    let simulation = match mode {
        Mode::Certify => None,
        Mode::Simulate | Mode::Full => Some(run_simulation(&scenario, &report, opts)?),
    };
    let status = ExitStatus::from_verdict(report.synchronized);
    Ok(RunArtifacts {
        name: scenario.name.clone(),
        mode,
        report,
        simulation,
        status,
    })
}

fn run_simulation(
    scenario: &Scenario,
    report: &CertificationReport<f64>,
    opts: &RunOptions,
) -> Result<SimulationArtifacts> {
    let fam = &scenario.family;
    let design = match &scenario.user_gains {
        Some(k) => ControlDesign::from_gains(fam, k.clone())?,
        None => ControlDesign::from_riccati(fam)?,
    };
    let pl = build_laplacian(&scenario.graph);
    let sys = assemble(fam, &design, &pl, &scenario.factors)?;

    let cfg = &scenario.simulation;
    let seed = opts.seed.unwrap_or(cfg.seed);
    let step = opts.step.unwrap_or(cfg.step);
    let downsample = opts.downsample.unwrap_or(cfg.downsample);
    let sync_margin = report
        .theorem1
        .as_ref()
        .map_or(f64::NEG_INFINITY, |t| t.margin_or_inf());
    let margin = sync_margin.min(design.min_closed_loop_margin());
    let horizon = opts
        .horizon
        .or(cfg.horizon)
        .unwrap_or_else(|| default_horizon(margin));
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::config("--step", "step must be positive"));
    }
    if !(horizon >= 0.0 && horizon.is_finite()) {
        return Err(Error::config("--horizon", "horizon must be nonnegative"));
    }
    if downsample == 0 {
        return Err(Error::config("--downsample", "must be at least 1"));
    }

    let (x0, eta0) = match cfg.initial {
        InitialCondition::Separation => {
            let x0 = random_states(&sys, seed);
            let eta0 = separation_init(&sys, &x0, seed)?.eta0;
            (x0, eta0)
        }
        InitialCondition::Random => random_initial_conditions(&sys, seed),
        InitialCondition::ZeroAux => {
            let x0 = random_states(&sys, seed);
            let eta0 = vec![DVector::zeros(sys.state_dim()); sys.agent_count()];
            (x0, eta0)
        }
    };
    let run = simulate(&sys, &x0, &eta0, step, horizon, downsample)?;
    let m = &run.metrics;

    let mut initial_cross_spread: f64 = 0.0;
    for l in 0..sys.agent_count() {
        for k in 0..sys.agent_count() {
            if sys.cluster_of(l) != sys.cluster_of(k) {
                initial_cross_spread = initial_cross_spread.max((&x0[l] - &x0[k]).norm());
            }
        }
    }
    let pairs = |f: &dyn Fn(usize, usize) -> Option<f64>| -> Vec<PairValue> {
        m.separations
            .iter()
            .map(|s| PairValue {
                i: s.i + 1,
                j: s.j + 1,
                value: f(s.i, s.j).unwrap_or(0.0),
            })
            .collect()
    };
    let tail = m.tail_start;
    let dt = step * downsample as f64;
    let dominant_frequency = (0..sys.cluster_count())
        .map(|i| {
            let r = sys.cluster_range(i).start;
            let signal: Vec<f64> = run.trajectory.states[tail..]
                .iter()
                .map(|z| z[2 * sys.state_dim() * r])
                .collect();
            uniform_tail(&m.times[tail..], dt)
                .then(|| dominant_angular_frequency(dt, &signal))
                .flatten()
        })
        .collect();

    let summary = SimulationSummary {
        step,
        horizon,
        seed,
        downsample,
        initial: cfg.initial,
        margin,
        samples: m.times.len(),
        diverged: run.trajectory.diverged,
        initial_diameters: m.diameters.iter().map(|d| d[0]).collect(),
        final_diameters: m.final_diameters(),
        initial_aux_norm: m.aux_norm[0],
        final_aux_norm: *m.aux_norm.last().expect("initial sample"),
        initial_cross_spread,
        tail_start_time: m.times.get(tail).copied().unwrap_or(0.0),
        tail_max_separation: pairs(&|i, j| m.tail_max_separation(i, j)),
        tail_min_separation: pairs(&|i, j| m.tail_min_separation(i, j)),
        decay: estimate_decay_rate(m, TAIL_FRACTION),
        dominant_frequency,
    };
    Ok(SimulationArtifacts {
        summary,
        labels: scenario.graph.labels().to_vec(),
        state_dim: sys.state_dim(),
        run,
    })
}

/// The final sample may be closer than `dt` to its predecessor; the FFT
/// needs equal spacing, so the check tolerates only that last sample.
fn uniform_tail(times: &[f64], dt: f64) -> bool {
    times
        .windows(2)
        .take(times.len().saturating_sub(2))
        .all(|w| ((w[1] - w[0]) - dt).abs() <= 1e-9 * dt.max(1.0))
}

/// Writes `report.json` and, with a simulation, `trajectory.csv`,
/// `metrics.csv` and `simulation.json`. Returns the written paths.
pub fn write_artifacts(artifacts: &RunArtifacts, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    if artifacts.mode != Mode::Simulate {
        let path = dir.join("report.json");
        write_json(&path, &artifacts.report)?;
        written.push(path);
    }
    if let Some(sim) = &artifacts.simulation {
        let path = dir.join("trajectory.csv");
        write_trajectory(sim, &path)?;
        written.push(path);
        let path = dir.join("metrics.csv");
        write_metrics(sim, &path)?;
        written.push(path);
        let path = dir.join("simulation.json");
        write_json(&path, &sim.summary)?;
        written.push(path);
    }
    Ok(written)
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

/// Header `t,agent,x_1..x_n,eta_1..eta_n`; agents by ascending 1-based label.
pub fn write_trajectory(sim: &SimulationArtifacts, path: &Path) -> Result<()> {
    let n = sim.state_dim;
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["t".to_string(), "agent".to_string()];
    header.extend((1..=n).map(|k| format!("x_{k}")));
    header.extend((1..=n).map(|k| format!("eta_{k}")));
    w.write_record(&header)?;
    let mut order: Vec<usize> = (0..sim.labels.len()).collect();
    order.sort_by_key(|&l| sim.labels[l]);
    for (t, z) in sim
        .run
        .trajectory
        .times
        .iter()
        .zip(&sim.run.trajectory.states)
    {
        for &l in &order {
            let mut row = vec![t.to_string(), (sim.labels[l] + 1).to_string()];
            row.extend(z.rows(2 * n * l, 2 * n).iter().map(|v| v.to_string()));
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Header `t,d_1..d_N,h,s_i_j...` with 1-based cluster indices.
pub fn write_metrics(sim: &SimulationArtifacts, path: &Path) -> Result<()> {
    let m = &sim.run.metrics;
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["t".to_string()];
    header.extend((1..=m.diameters.len()).map(|i| format!("d_{i}")));
    header.push("h".into());
    header.extend(
        m.separations
            .iter()
            .map(|s| format!("s_{}_{}", s.i + 1, s.j + 1)),
    );
    w.write_record(&header)?;
    for (k, t) in m.times.iter().enumerate() {
        let mut row = vec![t.to_string()];
        row.extend(m.diameters.iter().map(|d| d[k].to_string()));
        row.push(m.aux_norm[k].to_string());
        row.extend(m.separations.iter().map(|s| s.values[k].to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// A grid axis: `c` (global) or `c<i>` (1-based local factor).
#[derive(Debug, Clone, PartialEq)]
pub struct SweepAxis {
    /// `None` for the global factor.
    pub local: Option<usize>,
    pub values: Vec<f64>,
}

/// Parses `name=start:stop:count[,name=...]`, e.g. `c=0.5:2:4,c1=0:3:7`.
pub fn parse_sweep(spec: &str) -> Result<Vec<SweepAxis>> {
    let bad = |msg: String| Error::config("--sweep", msg);
    spec.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|axis| {
            let (name, range) = axis
                .split_once('=')
                .ok_or_else(|| bad(format!("`{axis}` is not name=start:stop:count")))?;
            let name = name.trim();
            let local = match name {
                "c" => None,
                _ => Some(
                    name.strip_prefix('c')
                        .and_then(|i| i.parse::<usize>().ok())
                        .filter(|i| *i >= 1)
                        .ok_or_else(|| bad(format!("unknown factor `{name}`")))?,
                ),
            };
            let parts: Vec<&str> = range.split(':').collect();
            let [start, stop, count] = parts[..] else {
                return Err(bad(format!("`{range}` is not start:stop:count")));
            };
            let start: f64 = start
                .trim()
                .parse()
                .map_err(|_| bad(format!("bad start `{start}`")))?;
            let stop: f64 = stop
                .trim()
                .parse()
                .map_err(|_| bad(format!("bad stop `{stop}`")))?;
            let count: usize = count
                .trim()
                .parse()
                .map_err(|_| bad(format!("bad count `{count}`")))?;
            if count == 0 {
                return Err(bad("count must be at least 1".into()));
            }
            let values = if count == 1 {
                vec![start]
            } else {
                (0..count)
                    .map(|k| start + (stop - start) * k as f64 / (count - 1) as f64)
                    .collect()
            };
            Ok(SweepAxis { local, values })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub c: f64,
    pub c_local: Vec<f64>,
    pub synchronized: bool,
    pub margin: Option<f64>,
    pub bounds_satisfied: Option<bool>,
    pub guaranteed_rate: Option<f64>,
}

/// Certifies every grid point in parallel; points come back in grid order.
pub fn sweep(
    config: &ScenarioConfig,
    axes: &[SweepAxis],
    opts: &RunOptions,
) -> Result<Vec<SweepPoint>> {
    let scenario = config.build()?;
    let clusters = scenario.graph.cluster_count();
    if let Some(i) = axes.iter().filter_map(|a| a.local).find(|&i| i > clusters) {
        return Err(Error::config(
            "--sweep",
            format!("factor c{i} but only {clusters} clusters"),
        ));
    }
    let base = (scenario.factors.global(), scenario.factors.local().to_vec());
    let mut grid = vec![base];
    for axis in axes {
        grid = grid
            .into_iter()
            .flat_map(|(c, local)| {
                axis.values.iter().map(move |&v| {
                    let mut local = local.clone();
                    match axis.local {
                        None => (v, local),
                        Some(i) => {
                            local[i - 1] = v;
                            (c, local)
                        }
                    }
                })
            })
            .collect();
    }
    let certify_opts = certify_options(&scenario, opts);
    grid.into_par_iter()
        .map(|(c, local)| {
            let w = WeightingFactors::new(c, local.clone())?;
            certify_point(&scenario.family, &scenario, &w, &certify_opts, c, local)
        })
        .collect()
}

fn certify_point(
    fam: &AgentFamily<f64>,
    scenario: &Scenario,
    w: &WeightingFactors<f64>,
    opts: &CertifyOptions<f64>,
    c: f64,
    c_local: Vec<f64>,
) -> Result<SweepPoint> {
    let r = certify(fam, &scenario.graph, w, opts)?;
    Ok(SweepPoint {
        c,
        c_local,
        synchronized: r.synchronized,
        margin: r.theorem1.as_ref().and_then(|t| t.margin),
        bounds_satisfied: r.theorem2.satisfied,
        guaranteed_rate: r.theorem2.guaranteed_rate,
    })
}

/// Header `c,c_1..c_N,synchronized,margin,bounds_satisfied,guaranteed_rate`.
pub fn write_sweep(points: &[SweepPoint], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let clusters = points.first().map_or(0, |p| p.c_local.len());
    let mut header = vec!["c".to_string()];
    header.extend((1..=clusters).map(|i| format!("c_{i}")));
    header.extend(
        [
            "synchronized",
            "margin",
            "bounds_satisfied",
            "guaranteed_rate",
        ]
        .map(String::from),
    );
    w.write_record(&header)?;
    let opt = |v: Option<f64>| v.map_or(String::new(), |v| v.to_string());
    for p in points {
        let mut row = vec![p.c.to_string()];
        row.extend(p.c_local.iter().map(|v| v.to_string()));
        row.push(p.synchronized.to_string());
        row.push(opt(p.margin));
        row.push(p.bounds_satisfied.map_or(String::new(), |b| b.to_string()));
        row.push(opt(p.guaranteed_rate));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
