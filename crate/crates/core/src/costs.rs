//! Distance, efficiency and comfort costs.

use crate::error::{Error, Result};
use crate::geom::raycast::{accumulate_hits, collect_hits, RayGrid};
use crate::geom::{slice_mesh_by_plane, MouthModel, Plane, Pose, Scene, TriMesh};
use nalgebra::Point3;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CostMode {
    Distance,
    Efficiency,
    Comfort,
    #[default]
    Combined,
}

impl CostMode {
    pub fn uses_efficiency(self) -> bool {
        matches!(self, CostMode::Efficiency | CostMode::Combined)
    }

    pub fn uses_comfort(self) -> bool {
        matches!(self, CostMode::Comfort | CostMode::Combined)
    }
}

impl std::str::FromStr for CostMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "distance" => Ok(CostMode::Distance),
            "efficiency" => Ok(CostMode::Efficiency),
            "comfort" => Ok(CostMode::Comfort),
            "combined" => Ok(CostMode::Combined),
            other => Err(Error::InvalidParameter(format!("unknown cost mode `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CostWeights {
    pub alpha: f64,
    pub r_up: f64,
    pub r_down: f64,
    pub r_side: f64,
    pub beta_e: f64,
    pub beta_c: f64,
    pub gamma_c: f64,
    /// Metres per radian in the pose metric.
    pub w_rot: f64,
    pub mode: CostMode,
}

impl Default for CostWeights {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            r_up: 1.5,
            r_down: 1.0,
            r_side: 1.0,
            beta_e: 1.0,
            beta_c: 10.0,
            gamma_c: 10.0,
            w_rot: 0.1,
            mode: CostMode::Combined,
        }
    }
}

impl CostWeights {
    pub fn validate(&self) -> Result<()> {
        let nonneg = [self.alpha, self.beta_e, self.beta_c, self.gamma_c];
        if nonneg.iter().any(|w| !(*w >= 0.0 && w.is_finite())) {
            return Err(Error::InvalidParameter("cost weights must be finite and >= 0".into()));
        }
        if [self.r_up, self.r_down, self.r_side, self.w_rot].iter().any(|r| !(*r > 0.0 && r.is_finite())) {
            return Err(Error::InvalidParameter("r_up, r_down, r_side and w_rot must be > 0".into()));
        }
        Ok(())
    }

    pub fn with_mode(mut self, mode: CostMode) -> Self {
        self.mode = mode;
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ComfortRayConfig {
    pub grid_n: usize,
    pub grid_m: usize,
    pub extent: f64,
    pub z_max: f64,
}

impl Default for ComfortRayConfig {
    fn default() -> Self {
        Self {
            grid_n: 16,
            grid_m: 16,
            extent: 0.4,
            z_max: 0.5,
        }
    }
}

impl ComfortRayConfig {
    pub fn validate(&self) -> Result<()> {
        if self.grid_n * self.grid_m < 4 || !(self.extent > 0.0) || !(self.z_max > 0.0) {
            return Err(Error::InvalidParameter(
                "ray grid needs at least 4 rays and positive extent and z_max".into(),
            ));
        }
        Ok(())
    }

    pub fn grid(&self) -> RayGrid {
        RayGrid {
            n: self.grid_n,
            m: self.grid_m,
            extent: self.extent,
            z_max: self.z_max,
        }
    }

    pub fn rays(&self) -> usize {
        self.grid_n * self.grid_m
    }
}

/// Hit points closer to the face than this are treated as lying at it.
pub const COMFORT_Z_FLOOR: f64 = 0.005;

/// `sqrt(|dt|^2 + w_rot^2 theta^2)` with `theta` the geodesic rotation angle.
pub fn pose_distance(p: &Pose, q: &Pose, w_rot: f64) -> f64 {
    let dt = (q.translation - p.translation).norm_squared();
    let th = p.angle_to(q);
    (dt + (w_rot * th).powi(2)).sqrt()
}

/// `1 - (V_f / V_i)^(1/3)` where `V_f` is the part of the posed food behind
/// the face plane.
pub fn cost_efficiency(goal: &Pose, food: &TriMesh, mouth: &MouthModel) -> Result<f64> {
    let v_i = food.volume()?;
    let posed = food.transformed(goal);
    let v_f = inside_volume(&posed, mouth)?;
    Ok(efficiency_from_volumes(v_f, v_i))
}

pub fn efficiency_from_volumes(v_f: f64, v_i: f64) -> f64 {
    if v_i <= 0.0 {
        return 1.0;
    }
    (1.0 - (v_f / v_i).clamp(0.0, 1.0).cbrt()).clamp(0.0, 1.0)
}

/// Volume of a posed (world frame) watertight mesh behind the face plane.
pub fn inside_volume(posed: &TriMesh, mouth: &MouthModel) -> Result<f64> {
    let plane = face_plane(mouth);
    let pieces = slice_mesh_by_plane(posed, &plane)?;
    Ok(pieces.inside.signed_volume().abs())
}

pub fn face_plane(mouth: &MouthModel) -> Plane {
    Plane::new(Point3::from(mouth.pose.translation), mouth.axis()).expect("mouth axis is a unit vector")
}

/// Elliptical-Gaussian style penalty for a hit at face-plane offset `x`
/// (side, vertical) and distance `z` along the mouth axis.
pub fn cost_comfort_spatial(x: [f64; 2], z: f64, w: &CostWeights) -> f64 {
    let r_vert = if x[1] > 0.0 { w.r_up } else { w.r_down };
    let q = w.r_side * x[0] * x[0] + r_vert * x[1] * x[1];
    let z = z.max(COMFORT_Z_FLOOR);
    1.0 - (-w.alpha * q / (z * z)).exp()
}

/// Mean spatial cost over `n_rays` rays, misses counting zero.
pub fn comfort_from_hits(hits: &[Point3<f64>], n_rays: usize, w: &CostWeights) -> f64 {
    if n_rays == 0 {
        return 0.0;
    }
    hits.iter().map(|h| cost_comfort_spatial([h.x, h.y], h.z, w)).sum::<f64>() / n_rays as f64
}

/// Hit points of the comfort rays against the posed food and robot proxy.
pub fn comfort_hits(p: &Pose, scene: &Scene, rc: &ComfortRayConfig) -> Vec<Point3<f64>> {
    let grid = rc.grid();
    let mut nearest = vec![None; grid.n * grid.m];
    for (verts, faces) in scene.model().posed_in_mouth(p, &scene.mouth) {
        accumulate_hits(&grid, &verts, faces, &mut nearest);
    }
    collect_hits(&grid, &nearest)
}

/// Comfort cost of the scene with the food at `p`.
pub fn cost_comfort_pose(p: &Pose, scene: &Scene, rc: &ComfortRayConfig, w: &CostWeights) -> f64 {
    comfort_from_hits(&comfort_hits(p, scene, rc), rc.rays(), w)
}

/// Edge cost between consecutive poses; comfort modes weight the distance
/// by the comfort cost at the edge midpoint.
pub fn edge_cost(p: &Pose, q: &Pose, scene: &Scene, rc: &ComfortRayConfig, w: &CostWeights) -> f64 {
    let d = pose_distance(p, q, w.w_rot);
    if !w.mode.uses_comfort() || d == 0.0 || w.gamma_c == 0.0 {
        return d;
    }
    let mid = p.interpolate(q, 0.5);
    d * (1.0 + w.gamma_c * cost_comfort_pose(&mid, scene, rc, w))
}

/// Goal-only cost terms, evaluated once per goal.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GoalTerms {
    pub efficiency: f64,
    pub comfort: f64,
}

impl GoalTerms {
    pub fn evaluate(goal: &Pose, scene: &Scene, rc: &ComfortRayConfig, w: &CostWeights) -> Result<Self> {
        Ok(Self {
            efficiency: cost_efficiency(goal, &scene.food, &scene.mouth)?,
            comfort: cost_comfort_pose(goal, scene, rc, w),
        })
    }

    /// The weighted goal terms the active mode adds to the distance.
    pub fn penalty(&self, w: &CostWeights) -> f64 {
        let mut c = 0.0;
        if w.mode.uses_efficiency() {
            c += w.beta_e * self.efficiency;
        }
        if w.mode.uses_comfort() {
            c += w.beta_c * self.comfort;
        }
        c
    }
}

/// Cost-to-go estimate from `p` through goal `goal`.
pub fn heuristic_cost(p: &Pose, goal: &Pose, terms: &GoalTerms, w: &CostWeights) -> f64 {
    pose_distance(p, goal, w.w_rot) + terms.penalty(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{make_food_mesh, ForkGeometry, FoodSpec};
    use approx::assert_relative_eq;
    use nalgebra::{UnitQuaternion, Vector3};

    #[test]
    fn distance_examples() {
        let p = Pose::identity();
        assert_eq!(pose_distance(&p, &p, 0.1), 0.0);
        let q = Pose::from_translation(Vector3::new(0.003, 0.004, 0.0));
        assert_relative_eq!(pose_distance(&p, &q, 0.1), 0.005, epsilon = 1e-15);
        let r = Pose::from_rotation(UnitQuaternion::from_axis_angle(&Vector3::x_axis(), 0.5));
        assert_relative_eq!(pose_distance(&p, &r, 0.1), 0.05, epsilon = 1e-12);
    }

    #[test]
    fn spatial_examples() {
        let w = CostWeights {
            r_up: 1.0,
            ..CostWeights::default()
        };
        assert_eq!(cost_comfort_spatial([0.0, 0.0], 0.3, &w), 0.0);
        assert_relative_eq!(cost_comfort_spatial([1.0, 0.0], 1.0, &w), 1.0 - (-1.0f64).exp(), epsilon = 1e-15);
        let t1 = CostWeights::default();
        assert_relative_eq!(cost_comfort_spatial([0.0, 1.0], 1.0, &t1), 1.0 - (-1.5f64).exp(), epsilon = 1e-15);
        assert!(cost_comfort_spatial([0.0, 0.02], 0.1, &t1) > cost_comfort_spatial([0.0, -0.02], 0.1, &t1));
    }

    #[test]
    fn single_hit_average() {
        let w = CostWeights {
            r_up: 1.0,
            ..CostWeights::default()
        };
        let c = comfort_from_hits(&[Point3::new(1.0, 0.0, 1.0)], 256, &w);
        assert_relative_eq!(c, (1.0 - (-1.0f64).exp()) / 256.0, epsilon = 1e-15);
        assert_relative_eq!(c, 0.00247, epsilon = 5e-6);
    }

    #[test]
    fn efficiency_examples() {
        let mouth = MouthModel::default();
        let cube = TriMesh::cuboid(Vector3::new(0.01, 0.01, 0.01));
        let behind = Pose::from_translation(Vector3::new(0.0, 0.0, -0.02));
        assert_relative_eq!(cost_efficiency(&behind, &cube, &mouth).unwrap(), 0.0, epsilon = 1e-12);
        let outside = Pose::from_translation(Vector3::new(0.0, 0.0, 0.02));
        assert_relative_eq!(cost_efficiency(&outside, &cube, &mouth).unwrap(), 1.0, epsilon = 1e-12);
        // 2 cm cube with 1 cm behind the plane: V_f/V_i = 1/2 -> ... use an 8x taller one
        let tall = TriMesh::cuboid(Vector3::new(0.01, 0.01, 0.08));
        let eighth = Pose::from_translation(Vector3::new(0.0, 0.0, 0.03));
        assert_relative_eq!(cost_efficiency(&eighth, &tall, &mouth).unwrap(), 0.5, epsilon = 1e-9);
        let mut open = cube.clone();
        open.faces.pop();
        assert!(cost_efficiency(&behind, &open, &mouth).is_err());
    }

    #[test]
    fn edge_and_heuristic_formulas() {
        let food = make_food_mesh(&FoodSpec::carrot()).unwrap();
        let scene = Scene::new(food, Pose::identity(), ForkGeometry::default(), MouthModel::default());
        let rc = ComfortRayConfig::default();
        let p = Pose::from_translation(Vector3::new(0.0, 0.0, 0.2));
        for mode in [CostMode::Distance, CostMode::Efficiency, CostMode::Comfort, CostMode::Combined] {
            let w = CostWeights::default().with_mode(mode);
            assert_eq!(edge_cost(&p, &p, &scene, &rc, &w), 0.0);
        }
        let q = Pose::from_translation(Vector3::new(0.0, 0.05, 0.15));
        let w0 = CostWeights {
            gamma_c: 0.0,
            mode: CostMode::Comfort,
            ..CostWeights::default()
        };
        assert_eq!(edge_cost(&p, &q, &scene, &rc, &w0), pose_distance(&p, &q, 0.1));
        let w = CostWeights::default();
        assert_relative_eq!(
            edge_cost(&p, &q, &scene, &rc, &w),
            edge_cost(&q, &p, &scene, &rc, &w),
            epsilon = 1e-12
        );

        let terms = GoalTerms {
            efficiency: 0.5,
            comfort: 0.1,
        };
        let g = Pose::from_translation(Vector3::new(0.05, 0.0, 0.0));
        assert_relative_eq!(heuristic_cost(&Pose::identity(), &g, &terms, &w), 1.55, epsilon = 1e-12);
        let wd = w.with_mode(CostMode::Distance);
        assert_relative_eq!(heuristic_cost(&Pose::identity(), &g, &terms, &wd), 0.05, epsilon = 1e-12);
    }
}
