//! Goal pose distribution, batched goal sampling and k-medoids.

use crate::costs::pose_distance;
use crate::error::{Error, Result};
use crate::geom::{Pose, Scene};
use crate::rng::{rng, Rng};
use nalgebra::{Unit, UnitQuaternion, Vector3};
use rand::seq::SliceRandom;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::time::{Duration, Instant};

/// Fork orientation that points the tines straight into the mouth (tool +z
/// onto mouth -z).
pub fn into_mouth_rotation() -> UnitQuaternion<f64> {
    UnitQuaternion::from_axis_angle(&Vector3::y_axis(), PI)
}

/// Support of the goal distribution, in the mouth frame.
///
/// Orientations are fork orientations tilted at most `cone_half_angle` away
/// from pointing straight into the mouth, then spun about the fork axis by
/// at most `spin_range` either way. Offsets place the food origin relative
/// to the mouth center.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GoalDistribution {
    pub cone_half_angle: f64,
    pub offset_min: [f64; 3],
    pub offset_max: [f64; 3],
    pub spin_range: f64,
}

impl Default for GoalDistribution {
    fn default() -> Self {
        Self {
            cone_half_angle: 45f64.to_radians(),
            offset_min: [-0.02, -0.02, -0.04],
            offset_max: [0.02, 0.02, 0.01],
            spin_range: PI,
        }
    }
}

impl GoalDistribution {
    pub fn validate(&self) -> Result<()> {
        if !(self.cone_half_angle >= 0.0 && self.cone_half_angle <= PI / 2.0) {
            return Err(Error::InvalidParameter("cone_half_angle must be in [0, pi/2]".into()));
        }
        if (0..3).any(|i| !(self.offset_min[i] <= self.offset_max[i])) {
            return Err(Error::InvalidParameter("offset_min must not exceed offset_max".into()));
        }
        if !(self.spin_range >= 0.0 && self.spin_range <= PI) {
            return Err(Error::InvalidParameter("spin_range must be in [0, pi]".into()));
        }
        Ok(())
    }

    /// Fork orientation (mouth frame) for tilt `theta` toward azimuth `phi`
    /// and spin `psi`.
    pub fn tool_rotation(theta: f64, phi: f64, psi: f64) -> UnitQuaternion<f64> {
        let axis = Unit::new_normalize(Vector3::new(-phi.sin(), phi.cos(), 0.0));
        let tilt = UnitQuaternion::from_axis_angle(&axis, theta);
        let spin = UnitQuaternion::from_axis_angle(&Vector3::z_axis(), psi);
        into_mouth_rotation() * tilt * spin
    }

    /// Tilt and spin of a fork orientation given in the mouth frame.
    pub fn tilt_and_spin(tool_in_mouth: &UnitQuaternion<f64>) -> (f64, f64) {
        let q = into_mouth_rotation().inverse() * tool_in_mouth;
        let z = q * Vector3::z();
        let theta = z.z.clamp(-1.0, 1.0).acos();
        let swing = UnitQuaternion::rotation_between(&Vector3::z(), &z)
            .unwrap_or_else(|| UnitQuaternion::from_axis_angle(&Vector3::x_axis(), PI));
        let twist = swing.inverse() * q;
        let psi = 2.0 * twist.k.atan2(twist.w);
        let psi = (psi + PI).rem_euclid(2.0 * PI) - PI;
        (theta, psi)
    }

    /// Draws a food goal pose in world coordinates.
    pub fn sample(&self, scene: &Scene, rng: &mut Rng) -> Pose {
        let cos_lo = self.cone_half_angle.cos();
        let cos_t: f64 = if cos_lo < 1.0 { rng.random_range(cos_lo..=1.0) } else { 1.0 };
        let theta = cos_t.clamp(-1.0, 1.0).acos();
        let phi = rng.random_range(0.0..2.0 * PI);
        let psi = if self.spin_range > 0.0 {
            rng.random_range(-self.spin_range..=self.spin_range)
        } else {
            0.0
        };
        let offset = Vector3::from_fn(|i, _| {
            let (lo, hi) = (self.offset_min[i], self.offset_max[i]);
            if hi > lo { rng.random_range(lo..=hi) } else { lo }
        });
        let tool = Self::tool_rotation(theta, phi, psi);
        scene.mouth.pose * Pose::new(offset, tool * scene.food_on_fork.rotation)
    }

    /// Membership test for the support (constraint C2).
    pub fn contains(&self, scene: &Scene, food_pose: &Pose, tol: f64) -> bool {
        let local = scene.mouth.pose.inverse() * *food_pose;
        let tool = local.rotation * scene.food_on_fork.rotation.inverse();
        let (theta, psi) = Self::tilt_and_spin(&tool);
        let t = local.translation;
        theta <= self.cone_half_angle + tol
            && psi.abs() <= self.spin_range + tol
            && (0..3).all(|i| t[i] >= self.offset_min[i] - tol && t[i] <= self.offset_max[i] + tol)
    }

    /// Mean tilt angle of a uniform spherical cap of this half angle.
    pub fn analytic_mean_tilt(&self) -> f64 {
        let a = self.cone_half_angle;
        if a <= 0.0 {
            return 0.0;
        }
        (a.sin() - a * a.cos()) / (1.0 - a.cos())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SampleBudget {
    pub target_n: usize,
    pub batch_size: usize,
    /// Seconds.
    pub timeout: f64,
    pub seed: u64,
}

impl Default for SampleBudget {
    fn default() -> Self {
        Self {
            target_n: 150,
            batch_size: 64,
            timeout: 10.0,
            seed: 0,
        }
    }
}

impl SampleBudget {
    pub fn validate(&self) -> Result<()> {
        if self.target_n == 0 || self.batch_size == 0 || !(self.timeout > 0.0) {
            return Err(Error::InvalidParameter(
                "sample budget needs target_n >= 1, batch_size >= 1 and timeout > 0".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GoalSamples {
    pub poses: Vec<Pose>,
    pub attempts: usize,
    pub batches: usize,
    pub timed_out: bool,
}

/// Candidate stream of a seed: the `i`-th candidate never depends on what
/// was accepted before it.
pub fn candidate_stream(dist: &GoalDistribution, scene: &Scene, seed: u64, n: usize) -> Vec<Pose> {
    let mut r = rng(seed);
    (0..n).map(|_| dist.sample(scene, &mut r)).collect()
}

/// Samples batches from the goal distribution and keeps the poses that pass
/// the projection collision check, in candidate order, until `target_n`
/// are found or the timeout expires.
pub fn sample_collision_free_goals(scene: &Scene, dist: &GoalDistribution, budget: &SampleBudget) -> Result<GoalSamples> {
    let start = Instant::now();
    let timeout = Duration::from_secs_f64(budget.timeout);
    let mut r = rng(budget.seed);
    let mut out = GoalSamples {
        poses: Vec::with_capacity(budget.target_n),
        attempts: 0,
        batches: 0,
        timed_out: false,
    };
    while out.poses.len() < budget.target_n {
        if start.elapsed() >= timeout {
            out.timed_out = true;
            break;
        }
        let batch: Vec<Pose> = (0..budget.batch_size).map(|_| dist.sample(scene, &mut r)).collect();
        let free: Vec<bool> = batch.par_iter().map(|p| scene.is_free(p)).collect();
        out.batches += 1;
        for (p, ok) in batch.into_iter().zip(free) {
            if out.poses.len() == budget.target_n {
                break;
            }
            out.attempts += 1;
            if ok {
                out.poses.push(p);
            }
        }
    }
    if out.poses.is_empty() {
        return Err(Error::InfeasibleGoal {
            attempts: out.attempts,
            batches: out.batches,
            timed_out: out.timed_out,
        });
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Clustering {
    /// Indices into the input of the medoids.
    pub medoids: Vec<usize>,
    /// Medoid index (position in `medoids`) for every input pose.
    pub assignment: Vec<usize>,
    /// Sum of distances to the assigned medoid.
    pub cost: f64,
    /// Cost after the greedy initialization, before swapping.
    pub build_cost: f64,
    /// Set when `k` exceeded the number of poses and was reduced.
    pub k_reduced: bool,
    pub swaps: usize,
}

impl Clustering {
    pub fn poses(&self, input: &[Pose]) -> Vec<Pose> {
        self.medoids.iter().map(|&i| input[i]).collect()
    }
}

/// Total distance of each point to its nearest medoid.
pub fn medoid_cost(dist: &[Vec<f64>], medoids: &[usize]) -> f64 {
    (0..dist.len())
        .map(|i| medoids.iter().map(|&m| dist[i][m]).fold(f64::INFINITY, f64::min))
        .sum()
}

/// PAM: greedy BUILD, then best-improvement SWAP (at most 100 rounds).
/// The seed only decides the scan order and therefore how ties break.
pub fn cluster_kmedoids(poses: &[Pose], k: usize, w_rot: f64, seed: u64) -> Result<Clustering> {
    let n = poses.len();
    if n == 0 || k == 0 {
        return Err(Error::InvalidParameter("k-medoids needs k >= 1 and at least one pose".into()));
    }
    let k_reduced = k > n;
    let k = k.min(n);
    let dist: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| (0..n).map(|j| pose_distance(&poses[i], &poses[j], w_rot)).collect())
        .collect();

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng(seed));

    let mut medoids: Vec<usize> = Vec::with_capacity(k);
    let mut nearest = vec![f64::INFINITY; n];
    for _ in 0..k {
        let mut best: Option<(usize, f64)> = None;
        for &c in &order {
            if medoids.contains(&c) {
                continue;
            }
            let total: f64 = (0..n).map(|i| nearest[i].min(dist[i][c])).sum();
            if best.is_none_or(|(_, b)| total < b) {
                best = Some((c, total));
            }
        }
        let (c, _) = best.expect("k <= n leaves a candidate");
        medoids.push(c);
        for i in 0..n {
            nearest[i] = nearest[i].min(dist[i][c]);
        }
    }
    let build_cost = medoid_cost(&dist, &medoids);
    let mut cost = build_cost;
    let mut swaps = 0;
    for _ in 0..100 {
        let mut best: Option<(usize, usize, f64)> = None;
        for slot in 0..k {
            for &o in &order {
                if medoids.contains(&o) {
                    continue;
                }
                let mut trial = medoids.clone();
                trial[slot] = o;
                let c = medoid_cost(&dist, &trial);
                if c < cost - 1e-12 * cost.max(1.0) && best.is_none_or(|(_, _, b)| c < b) {
                    best = Some((slot, o, c));
                }
            }
        }
        match best {
            Some((slot, o, c)) => {
                medoids[slot] = o;
                cost = c;
                swaps += 1;
            }
            None => break,
        }
    }
    let assignment = (0..n)
        .map(|i| {
            (0..k)
                .min_by(|&a, &b| dist[i][medoids[a]].total_cmp(&dist[i][medoids[b]]))
                .unwrap()
        })
        .collect();
    Ok(Clustering {
        medoids,
        assignment,
        cost,
        build_cost,
        k_reduced,
        swaps,
    })
}
