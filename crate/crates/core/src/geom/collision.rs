//! Projection-based collision checking against the elliptical mouth tube.
//!
//! A posed body is collision free when every point of it behind the face
//! plane projects inside the mouth ellipse and stays above the tube floor.
//! Because the tube is convex, checking the vertices behind the plane plus
//! the points where edges cross the plane decides this exactly.
//!
//! The same test with the plane raised by `delta`, the ellipse shrunk by
//! `delta` and the floor raised by `delta` certifies that every point of the
//! body keeps `delta` metres of clearance. Edge checks use that to cover the
//! gaps between samples.

use super::{BodyRole, ForkGeometry, MouthModel, Pose, RobotProxy, TriMesh};
use nalgebra::Point3;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Free,
    Collision,
}

impl Verdict {
    pub fn is_free(self) -> bool {
        self == Verdict::Free
    }
}

#[derive(Clone, Debug)]
struct Body {
    /// `None` for the food item itself.
    role: Option<BodyRole>,
    /// Vertices in the food frame.
    vertices: Vec<Point3<f64>>,
    faces: Vec<[u32; 3]>,
    edges: Vec<[u32; 2]>,
    center: Point3<f64>,
    radius: f64,
    /// Largest vertex distance from the food-frame origin.
    lever: f64,
}

impl Body {
    fn new(role: Option<BodyRole>, mesh: &TriMesh) -> Self {
        let (lo, hi) = mesh.aabb().unwrap_or((Point3::origin(), Point3::origin()));
        let center = nalgebra::center(&lo, &hi);
        Self {
            role,
            radius: mesh.radius_about(&center),
            lever: mesh.radius_about(&Point3::origin()),
            vertices: mesh.vertices.clone(),
            faces: mesh.faces.clone(),
            edges: mesh.unique_edges(),
            center,
        }
    }
}

/// Food plus rigidly attached robot bodies, all expressed in the food frame.
#[derive(Clone, Debug)]
pub struct CollisionModel {
    bodies: Vec<Body>,
}

impl CollisionModel {
    pub fn new(food: &TriMesh, proxy: &RobotProxy) -> Self {
        let mut bodies = vec![Body::new(None, food)];
        for b in &proxy.bodies {
            bodies.push(Body::new(Some(b.role), &b.mesh.transformed(&b.offset)));
        }
        Self { bodies }
    }

    /// Exact projection check.
    pub fn check(&self, food_pose: &Pose, mouth: &MouthModel) -> Verdict {
        if self.clear_by(food_pose, mouth, 0.0, 1.0) {
            Verdict::Free
        } else {
            Verdict::Collision
        }
    }

    /// True when every pose within pose distance `radius` of `food_pose` is
    /// collision free (sufficient, not necessary). `w_rot` is the
    /// rotation weight of the pose metric.
    pub fn is_free_within(&self, food_pose: &Pose, mouth: &MouthModel, radius: f64, w_rot: f64) -> bool {
        if radius <= 0.0 {
            return self.check(food_pose, mouth).is_free();
        }
        self.clear_by(food_pose, mouth, radius, w_rot)
    }

    /// `pose_radius == 0` runs the exact test; otherwise each body gets a
    /// metric margin of `pose_radius * sqrt(1 + (lever / w_rot)^2)`, the most
    /// any of its points can move within that pose distance.
    fn clear_by(&self, food_pose: &Pose, mouth: &MouthModel, pose_radius: f64, w_rot: f64) -> bool {
        let to_mouth = mouth.pose.inverse() * *food_pose;
        let [a, b] = mouth.radii;
        for body in &self.bodies {
            let delta = if pose_radius > 0.0 {
                pose_radius * (1.0 + (body.lever / w_rot).powi(2)).sqrt()
            } else {
                0.0
            };
            let c = to_mouth.transform_point(&body.center);
            if c.z - body.radius > delta {
                continue;
            }
            let verts: Vec<Point3<f64>> = body.vertices.iter().map(|v| to_mouth.transform_point(v)).collect();
            if body.role == Some(BodyRole::EndEffector) {
                if verts.iter().any(|v| v.z <= delta) {
                    return false;
                }
                continue;
            }
            let s = 1.0 - delta / a.min(b);
            if s <= 0.0 {
                return false;
            }
            let (sa, sb) = (a * s, b * s);
            let floor = -mouth.depth_in + delta;
            let inside = |x: f64, y: f64| (x / sa).powi(2) + (y / sb).powi(2) <= 1.0;
            for v in &verts {
                if v.z <= delta && (!inside(v.x, v.y) || v.z < floor) {
                    return false;
                }
            }
            for &[i, j] in &body.edges {
                let (p, q) = (verts[i as usize], verts[j as usize]);
                let (dp, dq) = (p.z - delta, q.z - delta);
                if (dp < 0.0) != (dq < 0.0) && dp != 0.0 && dq != 0.0 {
                    let t = dp / (dp - dq);
                    if !inside(p.x + (q.x - p.x) * t, p.y + (q.y - p.y) * t) {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// All bodies posed in the mouth frame, with their faces.
    pub fn posed_in_mouth<'a>(
        &'a self,
        food_pose: &Pose,
        mouth: &MouthModel,
    ) -> impl Iterator<Item = (Vec<Point3<f64>>, &'a [[u32; 3]])> + 'a {
        let to_mouth = mouth.pose.inverse() * *food_pose;
        self.bodies.iter().map(move |b| {
            (
                b.vertices.iter().map(|v| to_mouth.transform_point(v)).collect(),
                b.faces.as_slice(),
            )
        })
    }
}

/// Constraint check for one food pose: the food and every proxy body must
/// stay out of the face except through the mouth opening, no deeper than the
/// tube, and the end-effector block must never cross the face plane.
pub fn projection_collision_check(
    food: &TriMesh,
    food_pose: &Pose,
    proxy: &RobotProxy,
    mouth: &MouthModel,
) -> Verdict {
    CollisionModel::new(food, proxy).check(food_pose, mouth)
}

/// Everything fixed for one planning query: the food mesh, how it sits on
/// the fork, the attached robot proxy and the mouth.
#[derive(Clone, Debug)]
pub struct Scene {
    pub food: TriMesh,
    pub food_on_fork: Pose,
    pub fork: ForkGeometry,
    pub proxy: RobotProxy,
    pub mouth: MouthModel,
    model: CollisionModel,
}

impl Scene {
    pub fn new(food: TriMesh, food_on_fork: Pose, fork: ForkGeometry, mouth: MouthModel) -> Self {
        let proxy = RobotProxy::attached(&fork, &food_on_fork);
        let model = CollisionModel::new(&food, &proxy);
        Self {
            food,
            food_on_fork,
            fork,
            proxy,
            mouth,
            model,
        }
    }

    /// Same robot and mouth, different food mesh (same pose on the fork).
    pub fn with_food(&self, food: TriMesh) -> Scene {
        Scene::new(food, self.food_on_fork, self.fork, self.mouth)
    }

    pub fn model(&self) -> &CollisionModel {
        &self.model
    }

    pub fn check(&self, food_pose: &Pose) -> Verdict {
        self.model.check(food_pose, &self.mouth)
    }

    pub fn is_free(&self, food_pose: &Pose) -> bool {
        self.check(food_pose).is_free()
    }

    /// Tool (fork) pose for a given food pose.
    pub fn tool_pose(&self, food_pose: &Pose) -> Pose {
        food_pose * &self.food_on_fork.inverse()
    }

    /// Continuous edge check along the interpolated path from `a` to `b`.
    ///
    /// Samples at most `resolution` apart (pose distance) are checked
    /// exactly; each gap is then certified by clearance margins at its
    /// endpoints, bisecting where the margins are too thin. Bisection stops
    /// at `resolution / 256`, where the exact endpoint checks are accepted.
    pub fn edge_is_free(&self, a: &Pose, b: &Pose, resolution: f64, w_rot: f64) -> bool {
        let d = crate::costs::pose_distance(a, b, w_rot);
        if !self.is_free(a) || !self.is_free(b) {
            return false;
        }
        if d == 0.0 {
            return true;
        }
        let n = (d / resolution).ceil().max(1.0) as usize;
        let h = d / n as f64;
        let samples: Vec<Pose> = (0..=n).map(|k| a.interpolate(b, k as f64 / n as f64)).collect();
        if !samples[1..n].iter().all(|p| self.is_free(p)) {
            return false;
        }
        samples
            .windows(2)
            .all(|w| self.certify(&w[0], &w[1], h, w_rot, 0))
    }

    fn certify(&self, a: &Pose, b: &Pose, h: f64, w_rot: f64, depth: u32) -> bool {
        let m = &self.model;
        let mouth = &self.mouth;
        if m.is_free_within(a, mouth, h, w_rot)
            || m.is_free_within(b, mouth, h, w_rot)
            || (m.is_free_within(a, mouth, h / 2.0, w_rot) && m.is_free_within(b, mouth, h / 2.0, w_rot))
        {
            return true;
        }
        if depth >= 8 {
            return true;
        }
        let mid = a.interpolate(b, 0.5);
        if !self.is_free(&mid) {
            return false;
        }
        self.certify(a, &mid, h / 2.0, w_rot, depth + 1) && self.certify(&mid, b, h / 2.0, w_rot, depth + 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{make_food_mesh, FoodShape, FoodSpec};
    use nalgebra::{UnitQuaternion, Vector3};
    use std::f64::consts::FRAC_PI_2;

    fn carrot(radius: f64, length: f64) -> TriMesh {
        make_food_mesh(&FoodSpec::new(FoodShape::Carrot { radius, length })).unwrap()
    }

    /// Food pose whose local +z points into the mouth (mouth -z).
    fn into_mouth(depth_of_center: f64) -> Pose {
        Pose::new(
            Vector3::new(0.0, 0.0, -depth_of_center),
            UnitQuaternion::from_axis_angle(&Vector3::y_axis(), std::f64::consts::PI),
        )
    }

    #[test]
    fn thin_coaxial_carrot_inserted_is_free() {
        let mouth = MouthModel::default();
        let r = 0.3 * mouth.radii[0].min(mouth.radii[1]);
        let food = carrot(r, 0.05);
        // tip 1 cm past the face plane
        let pose = into_mouth(0.01 - 0.025);
        let v = projection_collision_check(&food, &pose, &RobotProxy::default(), &mouth);
        assert_eq!(v, Verdict::Free);
    }

    #[test]
    fn perpendicular_long_carrot_collides() {
        let mouth = MouthModel::default();
        let len = 2.0 * mouth.radii[0].max(mouth.radii[1]) * 3.0;
        let food = carrot(0.005, len);
        let pose = Pose::new(
            Vector3::zeros(),
            UnitQuaternion::from_axis_angle(&Vector3::y_axis(), FRAC_PI_2),
        );
        let v = projection_collision_check(&food, &pose, &RobotProxy::default(), &mouth);
        assert_eq!(v, Verdict::Collision);
    }

    #[test]
    fn too_deep_collides() {
        let mouth = MouthModel::default();
        let food = carrot(0.005, 0.05);
        let pose = into_mouth(0.05);
        assert_eq!(
            projection_collision_check(&food, &pose, &RobotProxy::default(), &mouth),
            Verdict::Collision
        );
    }

    #[test]
    fn end_effector_may_not_cross_face() {
        let mouth = MouthModel::default();
        let food = carrot(0.004, 0.02);
        let fork = ForkGeometry::default();
        let scene = Scene::new(food, Pose::identity(), fork, mouth);
        // tool pointing into the mouth, tip 5 cm in: fine
        let ok = into_mouth(0.03);
        assert!(scene.is_free(&ok));
        // pushed until the block crosses the plane (tines + handle = 0.18 m)
        let bad = into_mouth(0.19);
        assert!(!scene.is_free(&bad));
    }

    #[test]
    fn margin_check_is_monotone_and_conservative() {
        let scene = Scene::new(carrot(0.005, 0.04), Pose::identity(), ForkGeometry::default(), MouthModel::default());
        let p = into_mouth(0.02);
        assert!(scene.is_free(&p));
        let m = scene.model();
        let mut last = true;
        for k in 0..40 {
            let r = k as f64 * 0.0005;
            let free = m.is_free_within(&p, &scene.mouth, r, 0.1);
            assert!(last || !free, "margin check must be monotone");
            last = free;
        }
        assert!(!last);
    }

    #[test]
    fn edge_check_rejects_sweep_through_face() {
        let scene = Scene::new(carrot(0.005, 0.04), Pose::identity(), ForkGeometry::default(), MouthModel::default());
        let inside = into_mouth(0.02);
        let outside_left = Pose::new(Vector3::new(0.2, 0.0, 0.1), inside.rotation);
        assert!(scene.edge_is_free(&inside, &into_mouth(-0.1), 0.005, 0.1));
        // lateral move with the food still inside drags it through the face
        let lateral = Pose::new(Vector3::new(0.2, 0.0, -0.02), inside.rotation);
        assert!(!scene.edge_is_free(&inside, &lateral, 0.005, 0.1));
        assert!(scene.is_free(&outside_left));
    }
}
