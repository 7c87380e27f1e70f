//! Shared oracles and generators for the integration tests.
#![allow(dead_code)]

use bite_transfer::geom::{
    make_food_mesh, projection_collision_check, BodyRole, FoodSpec, ForkGeometry, MouthModel, Pose, RobotProxy,
    TriMesh,
};
use bite_transfer::rng::Rng;
use bite_transfer::sample::into_mouth_rotation;
use bite_transfer::scenario::default_food_on_fork;
use nalgebra::{Point3, UnitQuaternion, Vector3};
use rand::Rng as _;
use serde_json::Value;

pub fn random_food(r: &mut Rng) -> FoodSpec {
    let spec = match r.random_range(0..4) {
        0 => FoodSpec::carrot(),
        1 => FoodSpec::cantaloupe(),
        2 => FoodSpec::celery(),
        _ => FoodSpec::strawberry(),
    };
    spec.scaled(r.random_range(0.75..=1.25)).with_segments(r.random_range(8..=24))
}

pub fn random_rotation(r: &mut Rng, max_angle: f64) -> UnitQuaternion<f64> {
    let axis = Vector3::from_fn(|_, _| r.random_range(-1.0..=1.0));
    let axis = if axis.norm() < 1e-6 { Vector3::z() } else { axis.normalize() };
    UnitQuaternion::from_scaled_axis(axis * r.random_range(0.0..=max_angle))
}

pub fn random_pose(r: &mut Rng, half_extent: f64) -> Pose {
    let t = Vector3::from_fn(|_, _| r.random_range(-half_extent..=half_extent));
    Pose::new(t, random_rotation(r, std::f64::consts::PI))
}

/// A food pose near the mouth with the fork roughly pointing into it, so
/// both verdicts are common.
pub fn random_food_pose_near_mouth(r: &mut Rng, food_on_fork: &Pose) -> Pose {
    let tool = Pose::new(
        Vector3::new(
            r.random_range(-0.03..=0.03),
            r.random_range(-0.03..=0.03),
            r.random_range(-0.03..=0.08),
        ),
        into_mouth_rotation() * random_rotation(r, 50f64.to_radians()),
    );
    tool * *food_on_fork
}

pub fn default_fork_proxy(food_on_fork: &Pose) -> RobotProxy {
    RobotProxy::attached(&ForkGeometry::default(), food_on_fork)
}

/// Clips a triangle to the half-space `z <= 0`.
fn clip_behind(tri: [Point3<f64>; 3]) -> Vec<Point3<f64>> {
    let mut out = Vec::with_capacity(4);
    for i in 0..3 {
        let (p, q) = (tri[i], tri[(i + 1) % 3]);
        let (pin, qin) = (p.z <= 0.0, q.z <= 0.0);
        if pin {
            out.push(p);
        }
        if pin != qin {
            let t = p.z / (p.z - q.z);
            let mut x = p + (q - p) * t;
            x.z = 0.0;
            out.push(x);
        }
    }
    out
}

/// Brute-force containment: every surface point of the food, tines and
/// handle that lies behind the face plane must be inside the elliptical
/// tube, and the end-effector must stay strictly in front of the face.
/// Surfaces are clipped at the face plane and sampled on a barycentric grid.
pub fn oracle_free(food: &TriMesh, proxy: &RobotProxy, mouth: &MouthModel, food_pose: &Pose, grid: usize) -> bool {
    let to_mouth = mouth.pose.inverse() * *food_pose;
    let [a, b] = mouth.radii;
    let inside = |p: &Point3<f64>| (p.x / a).powi(2) + (p.y / b).powi(2) <= 1.0 && p.z >= -mouth.depth_in;
    let mut bodies: Vec<(Option<BodyRole>, TriMesh)> = vec![(None, food.transformed(&to_mouth))];
    for (role, mesh) in proxy.posed(&to_mouth) {
        bodies.push((Some(role), mesh));
    }
    for (role, mesh) in &bodies {
        if *role == Some(BodyRole::EndEffector) {
            if mesh.vertices.iter().any(|v| v.z <= 0.0) {
                return false;
            }
            continue;
        }
        for f in 0..mesh.faces.len() {
            let poly = clip_behind(mesh.triangle(f));
            if poly.len() < 3 {
                // a lone vertex or edge touching the plane
                if poly.iter().any(|p| !inside(p)) {
                    return false;
                }
                continue;
            }
            for k in 1..poly.len() - 1 {
                let (p0, p1, p2) = (poly[0], poly[k], poly[k + 1]);
                for i in 0..=grid {
                    for j in 0..=grid - i {
                        let (u, v) = (i as f64 / grid as f64, j as f64 / grid as f64);
                        let p = p0 + (p1 - p0) * u + (p2 - p0) * v;
                        if !inside(&p) {
                            return false;
                        }
                    }
                }
            }
        }
    }
    true
}

/// True when the projection verdict flips between the mouth grown and
/// shrunk by `delta` (radii and face-plane position), i.e. the case lies
/// within `delta` of the constraint boundary.
pub fn near_boundary(food: &TriMesh, proxy: &RobotProxy, mouth: &MouthModel, food_pose: &Pose, delta: f64) -> bool {
    let shifted = |d: f64| MouthModel {
        pose: mouth.pose * Pose::from_translation(Vector3::new(0.0, 0.0, d)),
        radii: [mouth.radii[0] - d, mouth.radii[1] - d],
        depth_in: mouth.depth_in,
    };
    let tight = projection_collision_check(food, food_pose, proxy, &shifted(delta));
    let loose = projection_collision_check(food, food_pose, proxy, &shifted(-delta));
    tight != loose
}

pub fn food_mesh(spec: &FoodSpec) -> TriMesh {
    make_food_mesh(spec).expect("valid food spec")
}

pub fn default_pf() -> Pose {
    default_food_on_fork()
}

/// Checks a JSON value against the subset of JSON Schema used by the
/// bundled schemas: `type`, `required`, `properties`, `items`, `enum`,
/// `minimum`. Returns the first violation.
pub fn check_schema(schema: &Value, value: &Value, path: &str) -> Result<(), String> {
    if let Some(t) = schema.get("type") {
        let types: Vec<&str> = match t {
            Value::String(s) => vec![s.as_str()],
            Value::Array(a) => a.iter().filter_map(Value::as_str).collect(),
            _ => return Err(format!("{path}: bad schema type")),
        };
        let ok = types.iter().any(|t| match *t {
            "object" => value.is_object(),
            "array" => value.is_array(),
            "string" => value.is_string(),
            "number" => value.is_number(),
            "integer" => value.is_u64() || value.is_i64(),
            "boolean" => value.is_boolean(),
            "null" => value.is_null(),
            _ => false,
        });
        if !ok {
            return Err(format!("{path}: expected {types:?}, got {value}"));
        }
    }
    if let Some(Value::Array(allowed)) = schema.get("enum") {
        if !allowed.contains(value) {
            return Err(format!("{path}: {value} not in {allowed:?}"));
        }
    }
    if let (Some(min), Some(v)) = (schema.get("minimum").and_then(Value::as_f64), value.as_f64()) {
        if v < min {
            return Err(format!("{path}: {v} < {min}"));
        }
    }
    if let Some(obj) = value.as_object() {
        if let Some(Value::Array(req)) = schema.get("required") {
            for k in req.iter().filter_map(Value::as_str) {
                if !obj.contains_key(k) {
                    return Err(format!("{path}: missing {k}"));
                }
            }
        }
        if let Some(Value::Object(props)) = schema.get("properties") {
            for (k, s) in props {
                if let Some(v) = obj.get(k) {
                    check_schema(s, v, &format!("{path}.{k}"))?;
                }
            }
        }
    }
    if let (Some(items), Some(arr)) = (schema.get("items"), value.as_array()) {
        for (i, v) in arr.iter().enumerate() {
            check_schema(items, v, &format!("{path}[{i}]"))?;
        }
    }
    Ok(())
}
