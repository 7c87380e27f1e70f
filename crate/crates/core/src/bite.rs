//! Bite simulation and greedy multi-bite planning.

use crate::costs::face_plane;
use crate::error::{Error, Result};
use crate::geom::{make_food_mesh, slice_mesh_by_plane, MouthModel, Pose, TriMesh};
use crate::plan::Trajectory;
use crate::rng::derive_seed;
use crate::scenario::{plan_bite, BitePlan, ScenarioConfig, Timings};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug)]
pub struct BiteResult {
    pub bite_index: usize,
    /// Volume behind the face plane at the goal pose.
    pub consumed_volume: f64,
    /// What is left, in the food frame.
    pub remaining: TriMesh,
}

/// Cuts the food at the face plane with the food at `goal`. The part inside
/// the mouth is eaten; the rest is returned in the food frame.
pub fn simulate_bite(food: &TriMesh, goal: &Pose, mouth: &MouthModel, bite_index: usize) -> Result<BiteResult> {
    let posed = food.transformed(goal);
    let pieces = slice_mesh_by_plane(&posed, &face_plane(mouth))?;
    Ok(BiteResult {
        bite_index,
        consumed_volume: pieces.inside.signed_volume().abs(),
        remaining: pieces.outside.transformed(&goal.inverse()),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    /// Remaining volume at or below the stop fraction.
    Consumed,
    /// Hard cap on the number of bites reached.
    BiteCap,
    /// No feasible goal or trajectory for the remaining piece.
    NoFeasibleBite,
    /// A bite made too little progress even with doubled efficiency weight.
    NoProgress,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BiteRecord {
    pub index: usize,
    pub seed: u64,
    pub beta_e: f64,
    pub retried: bool,
    pub trajectory: Trajectory,
    pub path_comfort: f64,
    pub volume_before: f64,
    pub consumed_volume: f64,
    pub remaining_volume: f64,
    pub remaining_fraction: f64,
    #[serde(skip)]
    pub timings: Timings,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MultiBiteSession {
    pub initial_volume: f64,
    pub stop_fraction: f64,
    pub bites: Vec<BiteRecord>,
    pub stop_reason: StopReason,
    /// Set when the loop stopped before the food was consumed.
    pub partial: bool,
    pub error: Option<String>,
}

impl MultiBiteSession {
    pub fn consumed_fraction(&self) -> f64 {
        self.bites.iter().map(|b| b.consumed_volume).sum::<f64>() / self.initial_volume
    }

    pub fn remaining_fraction(&self) -> f64 {
        self.bites.last().map_or(1.0, |b| b.remaining_fraction)
    }
}

/// Per-bite config: same scenario with a bite-specific seed.
pub fn bite_config(cfg: &ScenarioConfig, index: usize) -> ScenarioConfig {
    let mut c = cfg.clone();
    c.seed = derive_seed(cfg.seed, 0xB17E_0000 + index as u64);
    c
}

/// Plan, bite, re-plan on what is left. Each bite starts from the same fork
/// start pose; the remaining piece is re-centered on the skewer point.
pub fn multibite_plan(cfg: &ScenarioConfig) -> Result<MultiBiteSession> {
    cfg.validate()?;
    let mb = cfg.multibite;
    let mut food = make_food_mesh(&cfg.food)?;
    let initial_volume = food.volume()?;
    let mut session = MultiBiteSession {
        initial_volume,
        stop_fraction: mb.stop_fraction,
        bites: Vec::new(),
        stop_reason: StopReason::Consumed,
        partial: false,
        error: None,
    };
    loop {
        let volume = if food.is_empty() { 0.0 } else { food.volume()? };
        if volume / initial_volume <= mb.stop_fraction {
            session.stop_reason = StopReason::Consumed;
            return Ok(session);
        }
        let index = session.bites.len();
        if index == mb.max_bites {
            session.stop_reason = StopReason::BiteCap;
            session.partial = true;
            return Ok(session);
        }
        let mut bcfg = bite_config(cfg, index);
        let scene = crate::geom::Scene::new(food.clone(), bcfg.food_on_fork, bcfg.fork, bcfg.mouth);
        let mut retried = false;
        let (plan, bite) = loop {
            let plan: BitePlan = match plan_bite(&bcfg, &scene) {
                Ok(p) => p,
                Err(e) if index == 0 => return Err(e),
                Err(e @ (Error::InfeasibleGoal { .. } | Error::NoTrajectory)) => {
                    session.stop_reason = StopReason::NoFeasibleBite;
                    session.partial = true;
                    session.error = Some(e.to_string());
                    return Ok(session);
                }
                Err(e) => return Err(e),
            };
            let bite = simulate_bite(&food, plan.selected.goal(), &bcfg.mouth, index)?;
            if bite.consumed_volume >= mb.min_progress * volume {
                break (plan, bite);
            }
            if retried {
                session.stop_reason = StopReason::NoProgress;
                session.partial = true;
                return Ok(session);
            }
            retried = true;
            bcfg.weights.beta_e *= 2.0;
        };
        let remaining = if bite.remaining.is_empty() { TriMesh::empty() } else { bite.remaining.centered() };
        let remaining_volume = (volume - bite.consumed_volume).max(0.0);
        session.bites.push(BiteRecord {
            index,
            seed: bcfg.seed,
            beta_e: bcfg.weights.beta_e,
            retried,
            path_comfort: plan.selected_path_comfort,
            trajectory: plan.selected,
            volume_before: volume,
            consumed_volume: bite.consumed_volume,
            remaining_volume,
            remaining_fraction: remaining_volume / initial_volume,
            timings: plan.timings,
        });
        food = remaining;
    }
}
