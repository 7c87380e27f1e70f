use super::{Pose, TriMesh};
use crate::error::{Error, Result};
use nalgebra::{Point3, Vector3};
use serde::{Deserialize, Serialize};

/// Elliptical tube mouth model. The face plane is the local `z = 0` plane,
/// `+z` points out of the face, `+y` is up. The opening is the ellipse with
/// semi-axes `radii = (a, b)` along local `x` and `y`; the tube extends
/// `depth_in` behind the face plane.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MouthModel {
    pub pose: Pose,
    pub radii: [f64; 2],
    pub depth_in: f64,
}

impl Default for MouthModel {
    fn default() -> Self {
        Self {
            pose: Pose::identity(),
            radii: [0.025, 0.02],
            depth_in: 0.06,
        }
    }
}

impl MouthModel {
    pub fn validate(&self) -> Result<()> {
        let [a, b] = self.radii;
        if !(a > 0.0 && b > 0.0 && self.depth_in > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "mouth radii and depth must be positive (radii {:?}, depth {})",
                self.radii, self.depth_in
            )));
        }
        Ok(())
    }

    /// Point in the mouth frame.
    pub fn to_local(&self, p: &Point3<f64>) -> Point3<f64> {
        self.pose.inverse_transform_point(p)
    }

    /// `(x/a)^2 + (y/b)^2` of a mouth-frame point; `<= 1` is inside the opening.
    pub fn ellipse_level(&self, p: &Point3<f64>) -> f64 {
        let [a, b] = self.radii;
        (p.x / a).powi(2) + (p.y / b).powi(2)
    }

    /// Exact membership of a mouth-frame point in the forbidden region: behind
    /// the face plane but outside the opening, or deeper than the tube.
    pub fn forbidden(&self, p: &Point3<f64>) -> bool {
        (p.z < 0.0 && self.ellipse_level(p) > 1.0) || p.z < -self.depth_in
    }

    /// Outward mouth axis in world coordinates.
    pub fn axis(&self) -> Vector3<f64> {
        self.pose.transform_vector(&Vector3::z())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BodyRole {
    Tines,
    Handle,
    /// Must never cross the face plane.
    EndEffector,
}

/// Fork and end-effector dimensions. The tool frame has its origin at the
/// tine tip with `+z` pointing forward along the fork.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ForkGeometry {
    /// Tine block `(width, thickness, length)`.
    pub tines: [f64; 3],
    pub handle_radius: f64,
    pub handle_length: f64,
    /// End-effector block `(x, y, z)`.
    pub end_effector: [f64; 3],
    pub handle_segments: usize,
}

impl Default for ForkGeometry {
    fn default() -> Self {
        Self {
            tines: [0.02, 0.003, 0.06],
            handle_radius: 0.004,
            handle_length: 0.12,
            end_effector: [0.08, 0.08, 0.1],
            handle_segments: 12,
        }
    }
}

impl ForkGeometry {
    pub fn validate(&self) -> Result<()> {
        let handle = [self.handle_radius, self.handle_length];
        let mut dims = self.tines.iter().chain(&self.end_effector).chain(&handle);
        if dims.any(|&d| !(d > 0.0)) || self.handle_segments < 3 {
            return Err(Error::InvalidParameter("fork dimensions must be positive".into()));
        }
        Ok(())
    }

    /// Bodies posed in the tool frame.
    pub fn bodies(&self) -> Vec<(BodyRole, TriMesh, Pose)> {
        let [tw, tt, tl] = self.tines;
        let tines = TriMesh::cuboid(Vector3::new(tw, tt, tl));
        let handle = prism_cylinder(self.handle_radius, self.handle_length, self.handle_segments);
        let [ex, ey, ez] = self.end_effector;
        let block = TriMesh::cuboid(Vector3::new(ex, ey, ez));
        let back_of_handle = tl + self.handle_length;
        vec![
            (BodyRole::Tines, tines, Pose::from_translation(Vector3::new(0.0, 0.0, -tl / 2.0))),
            (
                BodyRole::Handle,
                handle,
                Pose::from_translation(Vector3::new(0.0, 0.0, -tl - self.handle_length / 2.0)),
            ),
            (
                BodyRole::EndEffector,
                block,
                Pose::from_translation(Vector3::new(0.0, 0.0, -back_of_handle - ez / 2.0)),
            ),
        ]
    }
}

fn prism_cylinder(r: f64, len: f64, n: usize) -> TriMesh {
    let h = len / 2.0;
    let mut vertices = Vec::with_capacity(2 * n);
    for z in [-h, h] {
        for k in 0..n {
            let a = std::f64::consts::TAU * k as f64 / n as f64;
            vertices.push(Point3::new(r * a.cos(), r * a.sin(), z));
        }
    }
    let n32 = n as u32;
    let mut faces = Vec::new();
    for k in 1..n32 - 1 {
        faces.push([0, k + 1, k]);
        faces.push([n32, n32 + k, n32 + k + 1]);
    }
    for i in 0..n32 {
        let j = (i + 1) % n32;
        faces.push([i, j, j + n32]);
        faces.push([i, j + n32, i + n32]);
    }
    TriMesh { vertices, faces }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProxyBody {
    pub role: BodyRole,
    pub mesh: TriMesh,
    /// Body pose relative to the food frame.
    pub offset: Pose,
}

/// Rigid robot stand-in carried along with the food. Offsets are fixed for a
/// planning query because the food pose on the fork is fixed.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct RobotProxy {
    pub bodies: Vec<ProxyBody>,
}

impl RobotProxy {
    /// Attaches the fork to a food item skewered at `food_on_fork` (the food
    /// pose in the tool frame).
    pub fn attached(fork: &ForkGeometry, food_on_fork: &Pose) -> Self {
        let tool_in_food = food_on_fork.inverse();
        let bodies = fork
            .bodies()
            .into_iter()
            .map(|(role, mesh, in_tool)| ProxyBody {
                role,
                mesh,
                offset: tool_in_food * in_tool,
            })
            .collect();
        Self { bodies }
    }

    /// Same bodies, posed in the world for a given food pose.
    pub fn posed(&self, food_pose: &Pose) -> Vec<(BodyRole, TriMesh)> {
        self.bodies
            .iter()
            .map(|b| (b.role, b.mesh.transformed(&(food_pose * &b.offset))))
            .collect()
    }
}
