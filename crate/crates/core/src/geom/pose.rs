use nalgebra::{Point3, Quaternion, Rotation3, Unit, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};
use std::ops::Mul;

/// Rigid transform: rotation followed by translation.
///
/// Poses compose left to right as frame transforms, so `a * b` maps points
/// expressed in `b`'s child frame into `a`'s parent frame.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PoseRepr", into = "PoseRepr")]
pub struct Pose {
    pub translation: Vector3<f64>,
    pub rotation: UnitQuaternion<f64>,
}

impl Default for Pose {
    fn default() -> Self {
        Self::identity()
    }
}

impl Pose {
    pub fn identity() -> Self {
        Self {
            translation: Vector3::zeros(),
            rotation: UnitQuaternion::identity(),
        }
    }

    pub fn new(translation: Vector3<f64>, rotation: UnitQuaternion<f64>) -> Self {
        Self {
            translation,
            rotation,
        }
    }

    pub fn from_translation(translation: Vector3<f64>) -> Self {
        Self::new(translation, UnitQuaternion::identity())
    }

    pub fn from_rotation(rotation: UnitQuaternion<f64>) -> Self {
        Self::new(Vector3::zeros(), rotation)
    }

    /// Rotation given as an axis-angle vector (radians).
    pub fn from_rotation_vector(translation: Vector3<f64>, rotvec: Vector3<f64>) -> Self {
        Self::new(translation, UnitQuaternion::from_scaled_axis(rotvec))
    }

    /// Roll-pitch-yaw in radians (extrinsic x, then y, then z).
    pub fn from_rpy(translation: Vector3<f64>, roll: f64, pitch: f64, yaw: f64) -> Self {
        Self::new(translation, UnitQuaternion::from_euler_angles(roll, pitch, yaw))
    }

    pub fn rotation_vector(&self) -> Vector3<f64> {
        self.rotation.scaled_axis()
    }

    pub fn rotation_matrix(&self) -> Rotation3<f64> {
        self.rotation.to_rotation_matrix()
    }

    pub fn inverse(&self) -> Self {
        let inv = self.rotation.inverse();
        Self::new(-(inv * self.translation), inv)
    }

    pub fn transform_point(&self, p: &Point3<f64>) -> Point3<f64> {
        Point3::from(self.rotation * p.coords + self.translation)
    }

    pub fn transform_vector(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * v
    }

    pub fn inverse_transform_point(&self, p: &Point3<f64>) -> Point3<f64> {
        Point3::from(self.rotation.inverse() * (p.coords - self.translation))
    }

    /// Geodesic rotation angle between two poses, in `[0, pi]`.
    pub fn angle_to(&self, other: &Pose) -> f64 {
        // atan2 form stays accurate near zero, where acos of the dot product does not.
        let d = self.rotation.inverse() * other.rotation;
        2.0 * d.imag().norm().atan2(d.w.abs())
    }

    /// Translation lerp plus rotation slerp; both move at constant speed in `t`.
    pub fn interpolate(&self, other: &Pose, t: f64) -> Pose {
        let translation = self.translation + (other.translation - self.translation) * t;
        let rotation = slerp(&self.rotation, &other.rotation, t);
        Pose::new(translation, rotation)
    }

    /// Renormalizes the quaternion; composition chains accumulate drift.
    pub fn renormalized(&self) -> Pose {
        Pose::new(
            self.translation,
            UnitQuaternion::new_normalize(self.rotation.into_inner()),
        )
    }
}

impl Mul for Pose {
    type Output = Pose;

    fn mul(self, rhs: Pose) -> Pose {
        Pose::new(
            self.translation + self.rotation * rhs.translation,
            self.rotation * rhs.rotation,
        )
    }
}

impl Mul<&Pose> for &Pose {
    type Output = Pose;

    fn mul(self, rhs: &Pose) -> Pose {
        *self * *rhs
    }
}

/// Shortest-arc slerp that stays well defined for nearly identical and
/// antipodal quaternions.
pub fn slerp(a: &UnitQuaternion<f64>, b: &UnitQuaternion<f64>, t: f64) -> UnitQuaternion<f64> {
    let rel = a.inverse() * b;
    let (axis, angle) = match rel.axis_angle() {
        Some(aa) => aa,
        None => return *a,
    };
    *a * UnitQuaternion::from_axis_angle(&axis, angle * t)
}

/// Rotation taking `+z` onto `dir` along the shortest arc.
pub fn rotation_from_z(dir: &Vector3<f64>) -> UnitQuaternion<f64> {
    let z = Vector3::z();
    let d = dir.normalize();
    let axis = z.cross(&d);
    let s = axis.norm();
    let c = z.dot(&d);
    if s < 1e-15 {
        if c > 0.0 {
            UnitQuaternion::identity()
        } else {
            UnitQuaternion::from_axis_angle(&Vector3::x_axis(), std::f64::consts::PI)
        }
    } else {
        UnitQuaternion::from_axis_angle(&Unit::new_unchecked(axis / s), s.atan2(c))
    }
}

/// Serialized form: translation plus one of a quaternion `[w, x, y, z]`,
/// roll-pitch-yaw in degrees, or a rotation vector in radians.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PoseRepr {
    #[serde(default)]
    translation: [f64; 3],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    quaternion: Option<[f64; 4]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    rpy_deg: Option<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    rotvec: Option<[f64; 3]>,
}

impl TryFrom<PoseRepr> for Pose {
    type Error = String;

    fn try_from(r: PoseRepr) -> Result<Self, Self::Error> {
        let t = Vector3::from(r.translation);
        let given = [r.quaternion.is_some(), r.rpy_deg.is_some(), r.rotvec.is_some()]
            .iter()
            .filter(|b| **b)
            .count();
        if given > 1 {
            return Err("pose: give at most one of quaternion, rpy_deg, rotvec".into());
        }
        let rotation = if let Some([w, x, y, z]) = r.quaternion {
            let q = Quaternion::new(w, x, y, z);
            if !(q.norm() > 1e-12) {
                return Err("pose: quaternion has zero norm".into());
            }
            UnitQuaternion::from_quaternion(q)
        } else if let Some([roll, pitch, yaw]) = r.rpy_deg {
            UnitQuaternion::from_euler_angles(roll.to_radians(), pitch.to_radians(), yaw.to_radians())
        } else if let Some(rv) = r.rotvec {
            UnitQuaternion::from_scaled_axis(Vector3::from(rv))
        } else {
            UnitQuaternion::identity()
        };
        if !t.iter().all(|v| v.is_finite()) {
            return Err("pose: translation must be finite".into());
        }
        Ok(Pose::new(t, rotation))
    }
}

impl From<Pose> for PoseRepr {
    fn from(p: Pose) -> Self {
        let q = p.rotation.quaternion();
        PoseRepr {
            translation: [p.translation.x, p.translation.y, p.translation.z],
            quaternion: Some([q.w, q.i, q.j, q.k]),
            rpy_deg: None,
            rotvec: None,
        }
    }
}
