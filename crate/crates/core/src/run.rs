//! Drivers behind the command-line tool: each one turns a config into a
//! machine-readable report. Wall-clock timings are kept in a separate
//! `timings` object so the rest of a report is reproducible from the seed.

use crate::bite::{multibite_plan, MultiBiteSession};
use crate::costs::{CostMode, GoalTerms};
use crate::error::{Error, Result};
use crate::ftrt::{self, CalibrationDemo, CalibrationParams, SensorMount};
use crate::geom::Pose;
use crate::plan::{path_comfort, PlanStats, Trajectory};
use crate::rng::rng;
use crate::scenario::{plan_bite, ScenarioConfig, Timings};
use crate::sweep::{run_sweep, SweepResult, SweepSpec};
use nalgebra::Vector3;
use rand::Rng as _;
use serde::{Deserialize, Serialize};
use std::time::Instant;

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const OTHER: i32 = 1;
    pub const CONFIG: i32 = 2;
    pub const INFEASIBLE_GOAL: i32 = 3;
    pub const INVALID_START: i32 = 4;
    pub const NO_TRAJECTORY: i32 = 5;
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) | Error::Parse(_) | Error::InvalidSpec(_) | Error::InvalidParameter(_) => exit::CONFIG,
        Error::InfeasibleGoal { .. } => exit::INFEASIBLE_GOAL,
        Error::InvalidStart => exit::INVALID_START,
        Error::NoTrajectory => exit::NO_TRAJECTORY,
        _ => exit::OTHER,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GoalSummary {
    pub sampled: usize,
    pub attempts: usize,
    pub batches: usize,
    pub timed_out: bool,
    pub clusters: usize,
    pub clustering_cost: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MedoidReport {
    pub index: usize,
    pub pose: Pose,
    pub efficiency: f64,
    pub comfort: f64,
}

/// Cost breakdown of the trajectory to one medoid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GoalTrajectoryReport {
    pub goal_index: usize,
    pub reached: bool,
    /// Sum of plain pose distances along the path.
    pub distance: Option<f64>,
    /// Sum of edge costs (distance plus weighted path comfort).
    pub path_cost: Option<f64>,
    /// Mean comfort cost over the waypoints.
    pub path_comfort: Option<f64>,
    pub goal_efficiency: f64,
    pub goal_comfort: f64,
    pub total_cost: Option<f64>,
    pub waypoints: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectedReport {
    pub goal_index: usize,
    pub total_cost: f64,
    pub distance: f64,
    pub path_cost: f64,
    pub path_comfort: f64,
    pub efficiency: f64,
    pub goal_comfort: f64,
    pub trajectory: Trajectory,
    /// Fork poses along the path, for replay on a robot or in a viewer.
    pub tool_poses: Vec<Pose>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub name: String,
    pub seed: u64,
    pub mode: CostMode,
    pub goals: GoalSummary,
    pub medoids: Vec<MedoidReport>,
    pub trajectories: Vec<GoalTrajectoryReport>,
    pub selected: SelectedReport,
    pub stats: PlanStats,
    pub timings: Timings,
}

/// Plans one bite end to end.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<RunReport> {
    cfg.validate()?;
    let scene = cfg.scene()?;
    let plan = plan_bite(cfg, &scene)?;
    let w = &cfg.weights;
    let medoids = plan
        .goals
        .medoids
        .iter()
        .zip(&plan.goals.terms)
        .enumerate()
        .map(|(index, (pose, t))| MedoidReport {
            index,
            pose: *pose,
            efficiency: t.efficiency,
            comfort: t.comfort,
        })
        .collect();
    let trajectories = plan
        .trajectories
        .iter()
        .zip(&plan.goals.terms)
        .enumerate()
        .map(|(i, (t, terms)): (usize, (&Option<Trajectory>, &GoalTerms))| GoalTrajectoryReport {
            goal_index: i,
            reached: t.is_some(),
            distance: t.as_ref().map(|t| t.length(w.w_rot)),
            path_cost: t.as_ref().map(Trajectory::path_cost),
            path_comfort: t.as_ref().map(|t| path_comfort(t, &scene, &cfg.comfort_rays, w)),
            goal_efficiency: terms.efficiency,
            goal_comfort: terms.comfort,
            total_cost: t.as_ref().map(|t| t.total_cost),
            waypoints: t.as_ref().map_or(0, |t| t.waypoints.len()),
        })
        .collect();
    let s = &plan.selected;
    let selected = SelectedReport {
        goal_index: s.goal_index,
        total_cost: s.total_cost,
        distance: s.length(w.w_rot),
        path_cost: s.path_cost(),
        path_comfort: plan.selected_path_comfort,
        efficiency: s.goal_terms.efficiency,
        goal_comfort: s.goal_terms.comfort,
        tool_poses: s.tool_poses(&scene),
        trajectory: s.clone(),
    };
    let samples = &plan.goals.samples;
    Ok(RunReport {
        name: cfg.name.clone(),
        seed: cfg.seed,
        mode: w.mode,
        goals: GoalSummary {
            sampled: samples.poses.len(),
            attempts: samples.attempts,
            batches: samples.batches,
            timed_out: samples.timed_out,
            clusters: plan.goals.medoids.len(),
            clustering_cost: plan.goals.clustering.cost,
        },
        medoids,
        trajectories,
        selected,
        stats: plan.stats,
        timings: plan.timings,
    })
}

pub fn run_sweep_csv(base: &ScenarioConfig, spec: &SweepSpec) -> Result<(SweepResult, String)> {
    let result = run_sweep(base, spec)?;
    let csv = result.to_csv()?;
    Ok((result, csv))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MultiBiteReport {
    pub name: String,
    pub seed: u64,
    pub bites: usize,
    pub consumed_fraction: f64,
    pub remaining_fraction: f64,
    pub session: MultiBiteSession,
    pub timings: MultiBiteTimings,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct MultiBiteTimings {
    pub total_s: f64,
    pub per_bite: Vec<Timings>,
}

/// Multi-bite session; `stop_fraction` overrides the config when given.
pub fn run_multibite(cfg: &ScenarioConfig, stop_fraction: Option<f64>) -> Result<MultiBiteReport> {
    let mut cfg = cfg.clone();
    if let Some(f) = stop_fraction {
        cfg.multibite.stop_fraction = f;
    }
    let t = Instant::now();
    let session = multibite_plan(&cfg)?;
    let timings = MultiBiteTimings {
        total_s: t.elapsed().as_secs_f64(),
        per_bite: session.bites.iter().map(|b| b.timings.clone()).collect(),
    };
    Ok(MultiBiteReport {
        name: cfg.name.clone(),
        seed: cfg.seed,
        bites: session.bites.len(),
        consumed_fraction: session.consumed_fraction(),
        remaining_fraction: session.remaining_fraction(),
        session,
        timings,
    })
}

/// A plausible random payload: 5-100 g of food, force biases up to 0.5 N,
/// torque biases up to 0.05 N m.
pub fn random_calibration_params(seed: u64) -> CalibrationParams {
    let mut r = rng(seed);
    let mut v = |a: f64| Vector3::from_fn(|_, _| r.random_range(-a..=a));
    let force_bias = v(0.5);
    let torque_bias = v(0.05);
    CalibrationParams {
        mass: rng(seed ^ 0x4D41_5353).random_range(0.005..=0.1),
        force_bias,
        torque_bias,
    }
}

/// Calibration on a synthetic pose cycle for a payload drawn from `seed`.
pub fn run_calibration_demo(noise_sigma: f64, seed: u64) -> Result<CalibrationDemo> {
    let truth = random_calibration_params(seed);
    ftrt::run_calibration_demo(&truth, &SensorMount::default(), noise_sigma, seed)
}

/// Pretty JSON for any report.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    serde_json::to_string_pretty(value).map_err(|e| Error::Parse(e.to_string()))
}

/// JSON with the top-level `timings` object removed.
pub fn data_json<T: Serialize>(value: &T) -> Result<String> {
    let mut v = serde_json::to_value(value).map_err(|e| Error::Parse(e.to_string()))?;
    if let Some(obj) = v.as_object_mut() {
        obj.remove("timings");
    }
    serde_json::to_string_pretty(&v).map_err(|e| Error::Parse(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_are_distinct() {
        let codes = [
            exit_code(&Error::Config("x".into())),
            exit_code(&Error::InfeasibleGoal {
                attempts: 1,
                batches: 1,
                timed_out: false,
            }),
            exit_code(&Error::InvalidStart),
            exit_code(&Error::NoTrajectory),
            exit_code(&Error::InvalidMesh("x".into())),
        ];
        assert_eq!(codes, [2, 3, 4, 5, 1]);
    }

    #[test]
    fn calibration_demo_is_seeded() {
        let a = run_calibration_demo(0.01, 5).unwrap();
        let b = run_calibration_demo(0.01, 5).unwrap();
        assert_eq!(to_json(&a).unwrap(), to_json(&b).unwrap());
        assert!(run_calibration_demo(0.0, 5).unwrap().max_abs_error < 1e-9);
        assert!(run_calibration_demo(-1.0, 5).is_err());
    }

    #[test]
    fn data_json_drops_timings() {
        let d = MultiBiteTimings::default();
        #[derive(Serialize)]
        struct R {
            a: u8,
            timings: MultiBiteTimings,
        }
        let s = data_json(&R { a: 1, timings: d }).unwrap();
        assert!(!s.contains("timings") && s.contains("\"a\": 1"));
    }
}
