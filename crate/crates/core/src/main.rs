use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use clustersync::scenario::{
    builtin, builtin_scenarios, load_config, parse_sweep, run, sweep, write_artifacts, write_sweep,
    ExitStatus, Mode, RunOptions, ScenarioConfig,
};

/// Certify and simulate cluster synchronization of heterogeneous linear agents.
///
/// Exit status: 0 when synchronization is certified, 2 when it is not, 1 on
/// any error.
#[derive(Parser, Debug)]
#[command(name = "clustersync", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Seed for random initial conditions.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// RK4 step size in seconds.
    #[arg(long, global = true)]
    step: Option<f64>,

    /// Simulation horizon in seconds (default: max(50, 40 / margin)).
    #[arg(long, global = true)]
    horizon: Option<f64>,

    /// Directory receiving the artifacts (one subdirectory per scenario).
    #[arg(
        long,
        global = true,
        env = "CLUSTERSYNC_OUT_DIR",
        default_value = "clustersync-out"
    )]
    out_dir: PathBuf,

    /// Keep every k-th integration step in the outputs.
    #[arg(long, global = true)]
    downsample: Option<usize>,

    /// Relative singular-value tolerance for nonsingularity decisions.
    #[arg(long, global = true)]
    tol: Option<f64>,

    /// Certify a factor grid in parallel instead of a single run,
    /// e.g. `c=0.5:2:4,c1=0:3:7`.
    #[arg(long, global = true)]
    sweep: Option<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write the certification report.
    Certify { config: PathBuf },
    /// Simulate the closed loop and write trajectories and metrics.
    Simulate { config: PathBuf },
    /// Certification plus simulation.
    Full { config: PathBuf },
    /// List the built-in scenarios.
    ListScenarios,
    /// Run a built-in scenario.
    RunBuiltin {
        name: String,
        #[arg(long, value_enum, default_value_t = ModeArg::Full)]
        mode: ModeArg,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModeArg {
    Certify,
    Simulate,
    Full,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Certify => Mode::Certify,
            ModeArg::Simulate => Mode::Simulate,
            ModeArg::Full => Mode::Full,
        }
    }
}

fn scenario_name(config: &ScenarioConfig, path: Option<&Path>) -> String {
    config.name.clone().unwrap_or_else(|| {
        path.and_then(|p| p.file_stem())
            .map_or("scenario".into(), |s| s.to_string_lossy().into_owned())
    })
}

fn execute(cli: &Cli) -> clustersync::Result<ExitStatus> {
    let (mut config, mode, path) = match &cli.command {
        Command::ListScenarios => {
            for b in builtin_scenarios() {
                println!("{:<16} {}", b.name, b.summary);
            }
            return Ok(ExitStatus::Certified);
        }
        Command::Certify { config } => (load_config(config)?, Mode::Certify, Some(config)),
        Command::Simulate { config } => (load_config(config)?, Mode::Simulate, Some(config)),
        Command::Full { config } => (load_config(config)?, Mode::Full, Some(config)),
        Command::RunBuiltin { name, mode } => (builtin(name)?, (*mode).into(), None),
    };
    let name = scenario_name(&config, path.map(PathBuf::as_path));
    config.name = Some(name.clone());
    let opts = RunOptions {
        seed: cli.seed,
        step: cli.step,
        horizon: cli.horizon,
        downsample: cli.downsample,
        tol: cli.tol,
    };
    let dir = cli.out_dir.join(&name);

    if let Some(spec) = &cli.sweep {
        let points = sweep(&config, &parse_sweep(spec)?, &opts)?;
        std::fs::create_dir_all(&dir)?;
        let file = dir.join("sweep.csv");
        write_sweep(&points, &file)?;
        let certified = points.iter().filter(|p| p.synchronized).count();
        println!(
            "{name}: {certified}/{} grid points certified; wrote {}",
            points.len(),
            file.display()
        );
        return Ok(ExitStatus::from_verdict(certified == points.len()));
    }

    let artifacts = run(&config, mode, &opts)?;
    let files = write_artifacts(&artifacts, &dir)?;
    println!("{}", artifacts.summary_line());
    for f in files {
        println!("  wrote {}", f.display());
    }
    Ok(artifacts.status)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let status = execute(&cli).unwrap_or_else(|e| {
        eprintln!("error: {e}");
        ExitStatus::Error
    });
    ExitCode::from(status.code() as u8)
}
