use super::{densify, PlanContext};
use crate::costs::{cost_comfort_pose, pose_distance, ComfortRayConfig, CostWeights, GoalTerms};
use crate::error::{Error, Result};
use crate::geom::{Pose, Scene};
use crate::rng::{derive_seed, rng};
use rand::Rng as _;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    /// Index of the goal this trajectory reaches.
    pub goal_index: usize,
    /// Food poses, start first.
    pub waypoints: Vec<Pose>,
    /// Cost of each edge; one fewer than the waypoints.
    pub edge_costs: Vec<f64>,
    pub goal_terms: GoalTerms,
    /// Edge costs plus the weighted goal terms of the active mode.
    pub total_cost: f64,
}

impl Trajectory {
    pub fn from_waypoints(ctx: &PlanContext, goal_index: usize, waypoints: Vec<Pose>, goal_terms: GoalTerms) -> Self {
        let edge_costs = waypoints.windows(2).map(|w| ctx.edge_cost(&w[0], &w[1])).collect();
        let mut t = Self {
            goal_index,
            waypoints,
            edge_costs,
            goal_terms,
            total_cost: 0.0,
        };
        t.update_total(ctx.weights);
        t
    }

    pub fn path_cost(&self) -> f64 {
        self.edge_costs.iter().sum()
    }

    pub fn update_total(&mut self, w: &CostWeights) {
        self.total_cost = self.path_cost() + self.goal_terms.penalty(w);
    }

    pub fn goal(&self) -> &Pose {
        self.waypoints.last().expect("trajectory has at least one waypoint")
    }

    /// Sum of plain pose distances along the path.
    pub fn length(&self, w_rot: f64) -> f64 {
        self.waypoints.windows(2).map(|w| pose_distance(&w[0], &w[1], w_rot)).sum()
    }

    /// Tool (fork) poses along the path.
    pub fn tool_poses(&self, scene: &Scene) -> Vec<Pose> {
        self.waypoints.iter().map(|p| scene.tool_pose(p)).collect()
    }
}

/// Mean comfort cost over the waypoints.
pub fn path_comfort(traj: &Trajectory, scene: &Scene, rc: &ComfortRayConfig, w: &CostWeights) -> f64 {
    let n = traj.waypoints.len();
    traj.waypoints.iter().map(|p| cost_comfort_pose(p, scene, rc, w)).sum::<f64>() / n as f64
}

/// Random shortcutting: a shortcut between two waypoints replaces the
/// stretch between them when it is collision free and not more expensive.
pub fn smooth_path(ctx: &PlanContext, traj: &Trajectory) -> Trajectory {
    let cfg = ctx.cfg;
    let wr = ctx.weights.w_rot;
    let mut r = rng(derive_seed(cfg.seed ^ 0x5300_7400, traj.goal_index as u64));
    let mut wps = traj.waypoints.clone();
    let mut costs = traj.edge_costs.clone();
    for _ in 0..cfg.smoothing_iters {
        let n = wps.len();
        if n < 3 {
            break;
        }
        let (mut i, mut j) = (r.random_range(0..n), r.random_range(0..n));
        if i > j {
            std::mem::swap(&mut i, &mut j);
        }
        if j - i < 2 {
            continue;
        }
        let old: f64 = costs[i..j].iter().sum();
        let slack = 1e-12 * old.max(1.0);
        if pose_distance(&wps[i], &wps[j], wr) > old + slack || is_straight(&wps[i..=j], wr) {
            continue;
        }
        let line = densify(&wps[i], &wps[j], cfg.step_eps, wr);
        let mut new_costs = Vec::with_capacity(line.len() - 1);
        let mut sum = 0.0;
        let mut ok = true;
        for s in line.windows(2) {
            if !ctx.edge_free(&s[0], &s[1]) {
                ok = false;
                break;
            }
            let c = ctx.edge_cost(&s[0], &s[1]);
            sum += c;
            if sum > old + slack {
                ok = false;
                break;
            }
            new_costs.push(c);
        }
        if !ok {
            continue;
        }
        wps.splice(i..=j, line);
        costs.splice(i..j, new_costs);
    }
    let mut out = Trajectory {
        goal_index: traj.goal_index,
        waypoints: wps,
        edge_costs: costs,
        goal_terms: traj.goal_terms,
        total_cost: 0.0,
    };
    out.update_total(ctx.weights);
    out
}

/// True when the poses already lie on the direct interpolation between the
/// ends, so a shortcut could not change anything.
fn is_straight(seg: &[Pose], w_rot: f64) -> bool {
    let (a, b) = (seg[0], seg[seg.len() - 1]);
    let total = pose_distance(&a, &b, w_rot);
    let mut run = 0.0;
    for w in seg.windows(2) {
        run += pose_distance(&w[0], &w[1], w_rot);
        if total == 0.0 || pose_distance(&w[1], &a.interpolate(&b, run / total), w_rot) > 1e-9 {
            return false;
        }
    }
    (run - total).abs() <= 1e-9
}

/// Lowest total cost; ties go to fewer waypoints, then the lower goal index.
pub fn select_trajectory(trajs: &[Trajectory]) -> Result<&Trajectory> {
    trajs
        .iter()
        .min_by(|a, b| {
            a.total_cost
                .total_cmp(&b.total_cost)
                .then(a.waypoints.len().cmp(&b.waypoints.len()))
                .then(a.goal_index.cmp(&b.goal_index))
        })
        .ok_or(Error::NoTrajectory)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimedPose {
    pub t: f64,
    pub pose: Pose,
}

/// Simulates following the waypoints at a fixed speed: each step moves at
/// most `v_max * dt` (pose distance) toward the current waypoint, which is
/// considered reached within `follow_radius`. The final waypoint is reached
/// exactly.
pub fn interpolate_trajectory(waypoints: &[Pose], v_max: f64, dt: f64, follow_radius: f64, w_rot: f64) -> Vec<TimedPose> {
    let Some(first) = waypoints.first() else {
        return Vec::new();
    };
    let step = v_max * dt;
    let mut cur = *first;
    let mut out = vec![TimedPose { t: 0.0, pose: cur }];
    let last = waypoints.len() - 1;
    let mut k = 1;
    while k <= last {
        if k < last && pose_distance(&cur, &waypoints[k], w_rot) <= follow_radius {
            k += 1;
            continue;
        }
        let d = pose_distance(&cur, &waypoints[k], w_rot);
        if d == 0.0 {
            break;
        }
        cur = if d <= step { waypoints[k] } else { cur.interpolate(&waypoints[k], step / d) };
        out.push(TimedPose {
            t: out.len() as f64 * dt,
            pose: cur,
        });
    }
    out
}

/// Waypoint table: index, translation, quaternion (w, x, y, z) and the cost
/// of the edge arriving at the waypoint.
pub fn trajectory_csv(traj: &Trajectory) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
    w.write_record(["index", "x", "y", "z", "qw", "qx", "qy", "qz", "edge_cost"]).map_err(io)?;
    for (i, p) in traj.waypoints.iter().enumerate() {
        let q = p.rotation.quaternion();
        let edge = if i == 0 { String::new() } else { format!("{:.16e}", traj.edge_costs[i - 1]) };
        let t = p.translation;
        let mut rec = vec![i.to_string()];
        rec.extend([t.x, t.y, t.z, q.w, q.i, q.j, q.k].iter().map(|v| format!("{v:.16e}")));
        rec.push(edge);
        w.write_record(&rec).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}
