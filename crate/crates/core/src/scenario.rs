//! Scenario configuration and the single-bite planning pipeline:
//! sample goals, cluster them, score them, plan to every medoid, smooth and
//! pick the cheapest trajectory.

use crate::costs::{ComfortRayConfig, CostWeights, GoalTerms};
use crate::error::{Error, Result};
use crate::geom::{make_food_mesh, FoodSpec, ForkGeometry, MouthModel, Pose, Scene};
use crate::plan::{hbirrt_plan, path_comfort, select_trajectory, smooth_path, PlanContext, PlanStats, PlannerConfig, Trajectory};
use crate::rng::derive_seed;
use crate::sample::{cluster_kmedoids, into_mouth_rotation, sample_collision_free_goals, Clustering, GoalDistribution, GoalSamples, SampleBudget};
use nalgebra::{UnitQuaternion, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::path::Path;
use std::time::Instant;

const SAMPLE_STREAM: u64 = 1;
const CLUSTER_STREAM: u64 = 2;
const PLAN_STREAM: u64 = 3;

/// Food skewered across the tines: long axis vertical when the fork points
/// at the face, centroid 1 cm behind the tine tip.
pub fn default_food_on_fork() -> Pose {
    Pose::new(
        Vector3::new(0.0, 0.0, -0.01),
        UnitQuaternion::from_axis_angle(&Vector3::x_axis(), -std::f64::consts::FRAC_PI_2),
    )
}

/// Fork pointing at the face from 25 cm out and 5 cm below the mouth.
pub fn default_start_tool() -> Pose {
    Pose::new(Vector3::new(0.0, -0.05, 0.25), into_mouth_rotation())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MultiBiteConfig {
    /// Stop once the remaining volume is at most this fraction of the initial.
    pub stop_fraction: f64,
    pub max_bites: usize,
    /// A bite taking less than this fraction of the current volume is
    /// re-planned once with doubled efficiency weight.
    pub min_progress: f64,
}

impl Default for MultiBiteConfig {
    fn default() -> Self {
        Self {
            stop_fraction: 0.05,
            max_bites: 10,
            min_progress: 0.01,
        }
    }
}

/// Everything needed to plan one bite. All sections are optional in config
/// files and default to the values below.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub name: String,
    pub seed: u64,
    pub food: FoodSpec,
    /// Food pose in the fork (tool) frame.
    pub food_on_fork: Pose,
    /// Fork pose at the start of the transfer; the start food pose follows
    /// from `food_on_fork`.
    pub start_tool: Pose,
    pub mouth: MouthModel,
    pub fork: ForkGeometry,
    pub goals: GoalDistribution,
    pub weights: CostWeights,
    pub comfort_rays: ComfortRayConfig,
    pub planner: PlannerConfig,
    pub sampling: SampleBudget,
    /// Number of medoid goals planned to.
    pub clusters: usize,
    pub multibite: MultiBiteConfig,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            name: "default".into(),
            seed: 0,
            food: FoodSpec::carrot(),
            food_on_fork: default_food_on_fork(),
            start_tool: default_start_tool(),
            mouth: MouthModel::default(),
            fork: ForkGeometry::default(),
            goals: GoalDistribution::default(),
            weights: CostWeights::default(),
            comfort_rays: ComfortRayConfig::default(),
            planner: PlannerConfig::default(),
            sampling: SampleBudget::default(),
            clusters: 15,
            multibite: MultiBiteConfig::default(),
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        let ctx = |section: &str, r: Result<()>| r.map_err(|e| Error::Config(format!("[{section}] {e}")));
        ctx("food", self.food.validate())?;
        ctx("mouth", self.mouth.validate())?;
        ctx("fork", self.fork.validate())?;
        ctx("goals", self.goals.validate())?;
        ctx("weights", self.weights.validate())?;
        ctx("comfort_rays", self.comfort_rays.validate())?;
        ctx("planner", self.planner.validate())?;
        ctx("sampling", self.sampling.validate())?;
        if self.clusters == 0 {
            return Err(Error::Config("clusters must be >= 1".into()));
        }
        let mb = &self.multibite;
        if !(mb.stop_fraction > 0.0 && mb.stop_fraction <= 1.0) || mb.max_bites == 0 || !(mb.min_progress >= 0.0) {
            return Err(Error::Config(
                "[multibite] stop_fraction must be in (0, 1], max_bites >= 1, min_progress >= 0".into(),
            ));
        }
        Ok(())
    }

    pub fn from_toml_str(src: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(src).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_json_str(src: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(src).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Loads a `.json` file as JSON and anything else as TOML.
    pub fn load(path: &Path) -> Result<Self> {
        let src = std::fs::read_to_string(path)?;
        let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
        let r = if is_json { Self::from_json_str(&src) } else { Self::from_toml_str(&src) };
        r.map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("scenario config serializes to TOML")
    }

    pub fn scene(&self) -> Result<Scene> {
        let food = make_food_mesh(&self.food)?;
        Ok(Scene::new(food, self.food_on_fork, self.fork, self.mouth))
    }

    /// Start food pose.
    pub fn start_pose(&self) -> Pose {
        self.start_tool * self.food_on_fork
    }

    pub fn sampling_seed(&self) -> u64 {
        derive_seed(self.seed, SAMPLE_STREAM) ^ self.sampling.seed
    }

    pub fn planner_seed(&self) -> u64 {
        derive_seed(self.seed, PLAN_STREAM) ^ self.planner.seed
    }

    pub fn cluster_seed(&self) -> u64 {
        derive_seed(self.seed, CLUSTER_STREAM)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub sampling_s: f64,
    pub clustering_s: f64,
    pub goal_costs_s: f64,
    pub planning_s: f64,
    pub smoothing_s: f64,
}

/// Sampled, clustered and scored goals. These depend only on the scene,
/// distribution and seeds, not on the cost weights.
#[derive(Clone, Debug)]
pub struct PreparedGoals {
    pub samples: GoalSamples,
    pub clustering: Clustering,
    pub medoids: Vec<Pose>,
    pub terms: Vec<GoalTerms>,
}

pub fn prepare_goals(cfg: &ScenarioConfig, scene: &Scene, timings: &mut Timings) -> Result<PreparedGoals> {
    let t = Instant::now();
    let budget = SampleBudget {
        seed: cfg.sampling_seed(),
        ..cfg.sampling
    };
    let samples = sample_collision_free_goals(scene, &cfg.goals, &budget)?;
    timings.sampling_s = t.elapsed().as_secs_f64();

    let t = Instant::now();
    let clustering = cluster_kmedoids(&samples.poses, cfg.clusters, cfg.weights.w_rot, cfg.cluster_seed())?;
    let medoids = clustering.poses(&samples.poses);
    timings.clustering_s = t.elapsed().as_secs_f64();

    let t = Instant::now();
    let terms = medoids
        .par_iter()
        .map(|g| GoalTerms::evaluate(g, scene, &cfg.comfort_rays, &cfg.weights))
        .collect::<Result<Vec<_>>>()?;
    timings.goal_costs_s = t.elapsed().as_secs_f64();
    Ok(PreparedGoals {
        samples,
        clustering,
        medoids,
        terms,
    })
}

/// Result of planning one bite.
#[derive(Clone, Debug)]
pub struct BitePlan {
    pub goals: PreparedGoals,
    /// Smoothed trajectory per medoid goal, `None` if unreached.
    pub trajectories: Vec<Option<Trajectory>>,
    pub selected: Trajectory,
    pub selected_path_comfort: f64,
    pub stats: PlanStats,
    pub timings: Timings,
}

impl BitePlan {
    pub fn efficiency(&self) -> f64 {
        self.selected.goal_terms.efficiency
    }
}

/// Plans and smooths trajectories to prepared goals, then selects one.
pub fn plan_to_goals(cfg: &ScenarioConfig, scene: &Scene, goals: PreparedGoals, mut timings: Timings) -> Result<BitePlan> {
    let planner = PlannerConfig {
        seed: cfg.planner_seed(),
        ..cfg.planner
    };
    let ctx = PlanContext {
        scene,
        weights: &cfg.weights,
        rays: &cfg.comfort_rays,
        cfg: &planner,
    };
    let t = Instant::now();
    let result = hbirrt_plan(&ctx, &cfg.start_pose(), &goals.medoids, &goals.terms)?;
    timings.planning_s = t.elapsed().as_secs_f64();

    let t = Instant::now();
    let trajectories: Vec<Option<Trajectory>> = result
        .trajectories
        .par_iter()
        .map(|t| t.as_ref().map(|t| smooth_path(&ctx, t)))
        .collect();
    timings.smoothing_s = t.elapsed().as_secs_f64();

    let reached: Vec<Trajectory> = trajectories.iter().flatten().cloned().collect();
    let selected = select_trajectory(&reached)?.clone();
    let selected_path_comfort = path_comfort(&selected, scene, &cfg.comfort_rays, &cfg.weights);
    Ok(BitePlan {
        goals,
        trajectories,
        selected,
        selected_path_comfort,
        stats: result.stats,
        timings,
    })
}

/// The whole single-bite pipeline for a scene.
pub fn plan_bite(cfg: &ScenarioConfig, scene: &Scene) -> Result<BitePlan> {
    if !scene.is_free(&cfg.start_pose()) {
        return Err(Error::InvalidStart);
    }
    let mut timings = Timings::default();
    let goals = prepare_goals(cfg, scene, &mut timings)?;
    plan_to_goals(cfg, scene, goals, timings)
}
