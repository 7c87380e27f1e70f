//! Weight sweeps over randomized scenarios.

use crate::error::{Error, Result};
use crate::geom::{FoodSpec, Pose};
use crate::rng::{derive_seed, rng};
use crate::scenario::{plan_to_goals, prepare_goals, PreparedGoals, ScenarioConfig, Timings};
use nalgebra::{UnitQuaternion, Vector3};
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSpec {
    pub beta_e: Vec<f64>,
    pub beta_c: Vec<f64>,
    /// Empty ties `gamma_c` to `beta_c`; otherwise a third grid axis.
    pub gamma_c: Vec<f64>,
    pub scenarios: usize,
    pub base_seed: u64,
    /// Randomize food kind, scale, pose on the fork and start pose per
    /// scenario; otherwise every scenario is the base config with its own seed.
    pub randomize: bool,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            beta_e: vec![0.1, 1.0, 3.0, 10.0],
            beta_c: vec![1.0, 3.0, 10.0, 30.0],
            gamma_c: Vec::new(),
            scenarios: 50,
            base_seed: 0,
            randomize: true,
        }
    }
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.beta_e.is_empty() || self.beta_c.is_empty() || self.scenarios == 0 {
            return Err(Error::Config("sweep grids must be non-empty and scenarios >= 1".into()));
        }
        let all = self.beta_e.iter().chain(&self.beta_c).chain(&self.gamma_c);
        if all.clone().any(|w| !(*w >= 0.0 && w.is_finite())) {
            return Err(Error::Config("sweep weights must be finite and >= 0".into()));
        }
        Ok(())
    }

    /// `(beta_e, beta_c, gamma_c)` per cell, `beta_e` outermost.
    pub fn cells(&self) -> Vec<(f64, f64, f64)> {
        let mut out = Vec::new();
        for &e in &self.beta_e {
            for &c in &self.beta_c {
                if self.gamma_c.is_empty() {
                    out.push((e, c, c));
                } else {
                    out.extend(self.gamma_c.iter().map(|&g| (e, c, g)));
                }
            }
        }
        out
    }
}

/// Scenario `index` of a sweep: derived from the base config and seed only.
pub fn sweep_scenario(base: &ScenarioConfig, spec: &SweepSpec, index: usize) -> ScenarioConfig {
    let seed = derive_seed(spec.base_seed, index as u64);
    let mut cfg = base.clone();
    cfg.seed = seed;
    cfg.name = format!("{}-{index}", base.name);
    if spec.randomize {
        randomize_scenario(&mut cfg, seed);
    }
    cfg
}

/// Random food primitive and scale, pose on the fork and start pose.
pub fn randomize_scenario(cfg: &mut ScenarioConfig, seed: u64) {
    let mut r = rng(derive_seed(seed, 0xF00D));
    let kind = r.random_range(0..4);
    let food = match kind {
        0 => FoodSpec::carrot(),
        1 => FoodSpec::cantaloupe(),
        2 => FoodSpec::celery(),
        _ => FoodSpec::strawberry(),
    };
    cfg.food = food.scaled(r.random_range(0.75..=1.25)).with_segments(cfg.food.segments);

    let about_fork = UnitQuaternion::from_axis_angle(&Vector3::z_axis(), r.random_range(-PI..PI));
    let tilt = UnitQuaternion::from_axis_angle(
        &Vector3::x_axis(),
        -FRAC_PI_2 + r.random_range(-30f64..=30.0).to_radians(),
    );
    let about_food = UnitQuaternion::from_axis_angle(&Vector3::z_axis(), r.random_range(-PI..PI));
    cfg.food_on_fork = Pose::new(
        Vector3::new(0.0, 0.0, -r.random_range(0.005..=0.015)),
        about_fork * tilt * about_food,
    );

    let offset = Vector3::from_fn(|_, _| r.random_range(-0.05..=0.05));
    let wobble = Vector3::from_fn(|_, _| r.random_range(-1.0..=1.0));
    let wobble = UnitQuaternion::from_scaled_axis(wobble.normalize() * r.random_range(0.0..=20f64.to_radians()));
    let base = crate::scenario::default_start_tool();
    cfg.start_tool = Pose::new(base.translation + offset, wobble * base.rotation);
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepOutcome {
    pub feasible: bool,
    /// Path-mean comfort cost of the selected trajectory.
    pub comfort: f64,
    /// Efficiency cost of the selected goal.
    pub efficiency: f64,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub cell: usize,
    pub beta_e: f64,
    pub beta_c: f64,
    pub gamma_c: f64,
    pub n: usize,
    pub n_feasible: usize,
    pub comfort_mean: f64,
    pub comfort_std: f64,
    pub efficiency_mean: f64,
    pub efficiency_std: f64,
    pub flag: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    /// `outcomes[cell][scenario]`.
    pub outcomes: Vec<Vec<SweepOutcome>>,
}

pub const SWEEP_CSV_HEADER: [&str; 11] = [
    "cell",
    "beta_e",
    "beta_c",
    "gamma_c",
    "n",
    "n_feasible",
    "comfort_mean",
    "comfort_std",
    "efficiency_mean",
    "efficiency_std",
    "flag",
];

impl SweepResult {
    pub fn to_csv(&self) -> Result<String> {
        let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(SWEEP_CSV_HEADER).map_err(io)?;
        let f = |v: f64| format!("{v:.16e}");
        for r in &self.rows {
            w.write_record([
                r.cell.to_string(),
                f(r.beta_e),
                f(r.beta_c),
                f(r.gamma_c),
                r.n.to_string(),
                r.n_feasible.to_string(),
                f(r.comfort_mean),
                f(r.comfort_std),
                f(r.efficiency_mean),
                f(r.efficiency_std),
                r.flag.clone(),
            ])
            .map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    if v.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Config for one (cell, scenario) pair.
pub fn cell_config(scenario: &ScenarioConfig, spec: &SweepSpec, cell: usize, weights: (f64, f64, f64), index: usize) -> ScenarioConfig {
    let mut cfg = scenario.clone();
    cfg.weights.beta_e = weights.0;
    cfg.weights.beta_c = weights.1;
    cfg.weights.gamma_c = weights.2;
    cfg.planner.seed = derive_seed(derive_seed(spec.base_seed, cell as u64), index as u64);
    cfg
}

/// Runs every weight cell on the same set of scenarios. Goals are sampled
/// once per scenario since they do not depend on the swept weights.
pub fn run_sweep(base: &ScenarioConfig, spec: &SweepSpec) -> Result<SweepResult> {
    spec.validate()?;
    base.validate()?;
    let cells = spec.cells();
    let scenarios: Vec<ScenarioConfig> = (0..spec.scenarios).map(|i| sweep_scenario(base, spec, i)).collect();
    let prepared: Vec<std::result::Result<(crate::geom::Scene, PreparedGoals), String>> = scenarios
        .par_iter()
        .map(|cfg| {
            let scene = cfg.scene().map_err(|e| e.to_string())?;
            if !scene.is_free(&cfg.start_pose()) {
                return Err(Error::InvalidStart.to_string());
            }
            let goals = prepare_goals(cfg, &scene, &mut Timings::default()).map_err(|e| e.to_string())?;
            Ok((scene, goals))
        })
        .collect();

    let jobs: Vec<(usize, usize)> = (0..cells.len()).flat_map(|c| (0..spec.scenarios).map(move |s| (c, s))).collect();
    let flat: Vec<SweepOutcome> = jobs
        .par_iter()
        .map(|&(c, s)| {
            let fail = |e: String| SweepOutcome {
                feasible: false,
                comfort: f64::NAN,
                efficiency: f64::NAN,
                error: Some(e),
            };
            let (scene, goals) = match &prepared[s] {
                Ok(p) => p,
                Err(e) => return fail(e.clone()),
            };
            let cfg = cell_config(&scenarios[s], spec, c, cells[c], s);
            match plan_to_goals(&cfg, scene, goals.clone(), Timings::default()) {
                Ok(plan) => SweepOutcome {
                    feasible: true,
                    comfort: plan.selected_path_comfort,
                    efficiency: plan.efficiency(),
                    error: None,
                },
                Err(e) => fail(e.to_string()),
            }
        })
        .collect();

    let mut outcomes = Vec::with_capacity(cells.len());
    let mut rows = Vec::with_capacity(cells.len());
    for (c, chunk) in flat.chunks(spec.scenarios).enumerate() {
        let ok: Vec<&SweepOutcome> = chunk.iter().filter(|o| o.feasible).collect();
        let comfort: Vec<f64> = ok.iter().map(|o| o.comfort).collect();
        let eff: Vec<f64> = ok.iter().map(|o| o.efficiency).collect();
        let (cm, cs) = mean_std(&comfort);
        let (em, es) = mean_std(&eff);
        let (be, bc, gc) = cells[c];
        rows.push(SweepRow {
            cell: c,
            beta_e: be,
            beta_c: bc,
            gamma_c: gc,
            n: spec.scenarios,
            n_feasible: ok.len(),
            comfort_mean: cm,
            comfort_std: cs,
            efficiency_mean: em,
            efficiency_std: es,
            flag: if ok.is_empty() { "no_feasible".into() } else { String::new() },
        });
        outcomes.push(chunk.to_vec());
    }
    Ok(SweepResult { rows, outcomes })
}

/// Spearman rank correlation (average ranks for ties).
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
        let mut r = vec![0.0; v.len()];
        let mut i = 0;
        while i < idx.len() {
            let mut j = i;
            while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
                j += 1;
            }
            let avg = (i + j) as f64 / 2.0 + 1.0;
            for k in i..=j {
                r[idx[k]] = avg;
            }
            i = j + 1;
        }
        r
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}
