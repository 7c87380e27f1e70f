use bite_transfer::costs::CostMode;
use bite_transfer::ftrt::{samples_from_csv, samples_to_csv, solve_calibration, synthesize_cycle, default_pose_cycle, SensorMount};
use bite_transfer::run::{self, exit, exit_code};
use bite_transfer::scenario::ScenarioConfig;
use bite_transfer::sweep::SweepSpec;
use bite_transfer::{Error, Result};
use clap::{Args, Parser, Subcommand};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

/// Bite-transfer trajectory planning and sensor calibration.
///
/// Exit codes: 0 success, 1 other error, 2 config error, 3 no feasible
/// goal, 4 start pose in collision, 5 no trajectory.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, env = "BITE_WORKERS", global = true)]
    workers: Option<usize>,
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Plan one bite and print the JSON report.
    Plan {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Leave out the timings object.
        #[arg(long)]
        no_timings: bool,
        /// Write the selected trajectory's waypoints as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Sweep cost weights over random scenarios and print a CSV table.
    Sweep {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Sweep spec file (TOML or JSON).
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long, value_delimiter = ',')]
        grid_beta_e: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',')]
        grid_beta_c: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',')]
        grid_gamma_c: Option<Vec<f64>>,
        #[arg(long)]
        scenarios: Option<usize>,
        #[arg(long)]
        base_seed: Option<u64>,
        /// Use the base scenario for every run instead of random foods and poses.
        #[arg(long)]
        no_randomize: bool,
    },
    /// Plan bites until the food is consumed; prints the session as JSON.
    Multibite {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long)]
        stop_fraction: Option<f64>,
        #[arg(long)]
        no_timings: bool,
    },
    /// Force/torque calibration: synthetic demo, or solve a logged CSV.
    Calib {
        #[arg(long, default_value_t = 0.01)]
        sigma: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Solve from a sample log (t, qw, qx, qy, qz, fx, fy, fz, tx, ty, tz).
        #[arg(long)]
        samples: Option<PathBuf>,
        /// Also write the synthetic sample log.
        #[arg(long)]
        write_samples: Option<PathBuf>,
    },
    /// Check a config and print the effective config as TOML.
    ValidateConfig {
        config: PathBuf,
    },
}

#[derive(Args)]
struct ScenarioArgs {
    /// Scenario config (TOML or JSON); defaults when omitted.
    #[arg(long, short)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    mode: Option<CostMode>,
    #[arg(long)]
    beta_e: Option<f64>,
    #[arg(long)]
    beta_c: Option<f64>,
    #[arg(long)]
    gamma_c: Option<f64>,
    #[arg(long)]
    w_rot: Option<f64>,
    #[arg(long)]
    clusters: Option<usize>,
    /// Goal samples to collect.
    #[arg(long)]
    target_n: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    /// Goal sampling timeout in seconds.
    #[arg(long)]
    sample_timeout: Option<f64>,
    /// Goal orientation cone half-angle in degrees.
    #[arg(long)]
    cone_half_angle_deg: Option<f64>,
    /// Goal offset box lower corner, `x,y,z` in metres.
    #[arg(long, value_delimiter = ',', num_args = 3)]
    offset_min: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', num_args = 3)]
    offset_max: Option<Vec<f64>>,
    /// Spin range about the approach axis in degrees.
    #[arg(long)]
    spin_range_deg: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    step_eps: Option<f64>,
    #[arg(long)]
    smoothing_iters: Option<usize>,
}

impl ScenarioArgs {
    fn load(&self) -> Result<ScenarioConfig> {
        let mut c = match &self.config {
            Some(p) => ScenarioConfig::load(p)?,
            None => ScenarioConfig::default(),
        };
        set(&mut c.seed, self.seed);
        set(&mut c.weights.mode, self.mode);
        set(&mut c.weights.beta_e, self.beta_e);
        set(&mut c.weights.beta_c, self.beta_c);
        set(&mut c.weights.gamma_c, self.gamma_c);
        set(&mut c.weights.w_rot, self.w_rot);
        set(&mut c.clusters, self.clusters);
        set(&mut c.sampling.target_n, self.target_n);
        set(&mut c.sampling.batch_size, self.batch_size);
        set(&mut c.sampling.timeout, self.sample_timeout);
        set(&mut c.goals.cone_half_angle, self.cone_half_angle_deg.map(f64::to_radians));
        set(&mut c.goals.offset_min, self.offset_min.as_deref().map(xyz));
        set(&mut c.goals.offset_max, self.offset_max.as_deref().map(xyz));
        set(&mut c.goals.spin_range, self.spin_range_deg.map(f64::to_radians));
        set(&mut c.planner.max_iters, self.max_iters);
        set(&mut c.planner.step_eps, self.step_eps);
        set(&mut c.planner.smoothing_iters, self.smoothing_iters);
        c.validate()?;
        Ok(c)
    }
}

fn set<T>(field: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *field = v;
    }
}

fn xyz(v: &[f64]) -> [f64; 3] {
    [v[0], v[1], v[2]]
}

fn load_spec(path: &Path) -> Result<SweepSpec> {
    let src = std::fs::read_to_string(path)?;
    let spec = if path.extension().is_some_and(|e| e == "json") {
        serde_json::from_str(&src).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
    } else {
        toml::from_str(&src).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
    };
    Ok(spec)
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text)?,
        None => println!("{}", text.trim_end()),
    }
    Ok(())
}

fn report<T: serde::Serialize>(value: &T, no_timings: bool) -> Result<String> {
    if no_timings {
        run::data_json(value)
    } else {
        run::to_json(value)
    }
}

fn execute(cli: Cli) -> Result<()> {
    if let Some(n) = cli.workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
    }
    let out = cli.out.as_deref();
    match cli.cmd {
        Cmd::Plan { scenario, no_timings, csv } => {
            let cfg = scenario.load()?;
            let r = run::run_scenario(&cfg)?;
            if let Some(p) = csv {
                std::fs::write(p, bite_transfer::plan::trajectory_csv(&r.selected.trajectory)?)?;
            }
            emit(out, &report(&r, no_timings)?)
        }
        Cmd::Sweep {
            scenario,
            spec,
            grid_beta_e,
            grid_beta_c,
            grid_gamma_c,
            scenarios,
            base_seed,
            no_randomize,
        } => {
            let cfg = scenario.load()?;
            let mut s = match spec {
                Some(p) => load_spec(&p)?,
                None => SweepSpec::default(),
            };
            set(&mut s.beta_e, grid_beta_e);
            set(&mut s.beta_c, grid_beta_c);
            set(&mut s.gamma_c, grid_gamma_c);
            set(&mut s.scenarios, scenarios);
            set(&mut s.base_seed, base_seed);
            if no_randomize {
                s.randomize = false;
            }
            let (_, csv) = run::run_sweep_csv(&cfg, &s)?;
            emit(out, &csv)
        }
        Cmd::Multibite {
            scenario,
            stop_fraction,
            no_timings,
        } => {
            let cfg = scenario.load()?;
            emit(out, &report(&run::run_multibite(&cfg, stop_fraction)?, no_timings)?)
        }
        Cmd::Calib {
            sigma,
            seed,
            samples,
            write_samples,
        } => {
            let mount = SensorMount::default();
            if let Some(p) = samples {
                let log = samples_from_csv(&std::fs::read_to_string(p)?)?;
                let readings: Vec<_> = log.into_iter().map(|(_, s)| s).collect();
                return emit(out, &run::to_json(&solve_calibration(&readings, &mount)?)?);
            }
            let demo = run::run_calibration_demo(sigma, seed)?;
            if let Some(p) = write_samples {
                let cycle = synthesize_cycle(&demo.truth, &mount, &default_pose_cycle(), sigma, seed);
                let timed: Vec<_> = cycle.into_iter().enumerate().map(|(i, s)| (i as f64, s)).collect();
                std::fs::write(p, samples_to_csv(&timed)?)?;
            }
            emit(out, &run::to_json(&demo)?)
        }
        Cmd::ValidateConfig { config } => {
            let cfg = ScenarioConfig::load(&config)?;
            cfg.validate()?;
            emit(out, &cfg.to_toml_string())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::from(exit::OK as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
