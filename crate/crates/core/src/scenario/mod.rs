//! Scenario files, built-in scenarios and run artifacts.

pub mod builtin;
pub mod config;
pub mod run;

pub use builtin::{builtin, builtin_scenarios, Builtin};
pub use config::{
    load_config, parse_config, write_config, InitialCondition, Scenario, ScenarioConfig,
};
pub use run::{
    parse_sweep, run, sweep, write_artifacts, write_sweep, ExitStatus, Mode, RunArtifacts,
    RunOptions, SimulationSummary, SweepAxis, SweepPoint,
};
