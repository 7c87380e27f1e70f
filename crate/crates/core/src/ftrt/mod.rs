//! Force/torque sensor calibration and force-reactive control.
//!
//! Readings at several end-effector orientations give a linear system in
//! the food mass and the six sensor biases. With the mass and biases known,
//! raw readings can be turned into the external wrench applied to the fork.

mod control;

pub use control::{deadband_error, AdmittanceController, AdmittanceOutput, PidGains, PidState};

use crate::error::{Error, Result};
use crate::rng::rng;
use nalgebra::{DMatrix, DVector, Matrix3, Rotation3, UnitQuaternion, Vector3};
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

pub const STANDARD_GRAVITY: f64 = 9.81;

/// Above this the calibration system is flagged as ill conditioned.
pub const ILL_CONDITIONED: f64 = 1e8;

/// One raw sensor reading at a known end-effector orientation (world frame).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FTSample {
    pub orientation: UnitQuaternion<f64>,
    pub force: Vector3<f64>,
    pub torque: Vector3<f64>,
}

/// Known geometry of the sensor mount.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SensorMount {
    /// Rotation from the end-effector frame to the sensor frame.
    pub sensor_rotation: Matrix3<f64>,
    /// Distance to the fork tip along end-effector `+y`.
    pub torque_radius: f64,
    pub gravity: f64,
}

impl Default for SensorMount {
    fn default() -> Self {
        Self {
            sensor_rotation: Matrix3::identity(),
            torque_radius: 0.15,
            gravity: STANDARD_GRAVITY,
        }
    }
}

impl SensorMount {
    fn gravity_vec(&self) -> Vector3<f64> {
        Vector3::new(0.0, 0.0, -self.gravity)
    }

    fn lever(&self) -> Vector3<f64> {
        Vector3::new(0.0, self.torque_radius, 0.0)
    }

    /// World to end-effector rotation for an end-effector orientation.
    fn world_to_ee(q: &UnitQuaternion<f64>) -> Matrix3<f64> {
        q.to_rotation_matrix().matrix().transpose()
    }
}

/// Unknowns of the calibration: food mass and sensor biases.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CalibrationParams {
    pub mass: f64,
    pub force_bias: Vector3<f64>,
    pub torque_bias: Vector3<f64>,
}

impl CalibrationParams {
    pub fn to_vector(&self) -> DVector<f64> {
        let f = self.force_bias;
        let t = self.torque_bias;
        DVector::from_vec(vec![self.mass, f.x, f.y, f.z, t.x, t.y, t.z])
    }

    pub fn from_vector(x: &DVector<f64>) -> Self {
        Self {
            mass: x[0],
            force_bias: Vector3::new(x[1], x[2], x[3]),
            torque_bias: Vector3::new(x[4], x[5], x[6]),
        }
    }
}

/// Forward model: the reading produced at `orientation` by the food, the
/// biases and an optional external force and torque given in the world frame
/// (the force acting at the fork tip).
pub fn synthesize_reading(
    truth: &CalibrationParams,
    mount: &SensorMount,
    orientation: &UnitQuaternion<f64>,
    external_force: &Vector3<f64>,
    external_torque: &Vector3<f64>,
) -> FTSample {
    let ts = mount.sensor_rotation;
    let ti = SensorMount::world_to_ee(orientation);
    let load = ti * (truth.mass * mount.gravity_vec() + external_force);
    let force = ts * load - truth.force_bias;
    let torque = ts * (mount.lever().cross(&load) + ti * external_torque) - truth.torque_bias;
    FTSample {
        orientation: *orientation,
        force,
        torque,
    }
}

/// Least-squares system `A x = b` with `x = (m, f_b, t_b)`, six rows per
/// sample: three force rows then three torque rows.
pub fn build_calibration_system(samples: &[FTSample], mount: &SensorMount) -> Result<(DMatrix<f64>, DVector<f64>)> {
    if samples.len() < 3 {
        return Err(Error::InsufficientData(samples.len()));
    }
    let n = samples.len();
    let mut a = DMatrix::zeros(6 * n, 7);
    let mut b = DVector::zeros(6 * n);
    let ts = mount.sensor_rotation;
    for (i, s) in samples.iter().enumerate() {
        let ti = SensorMount::world_to_ee(&s.orientation);
        let fg = ts * ti * mount.gravity_vec();
        let tg = ts * mount.lever().cross(&(ti * mount.gravity_vec()));
        let r = 6 * i;
        for k in 0..3 {
            a[(r + k, 0)] = -fg[k];
            a[(r + k, 1 + k)] = 1.0;
            b[r + k] = -s.force[k];
            a[(r + 3 + k, 0)] = -tg[k];
            a[(r + 3 + k, 4 + k)] = 1.0;
            b[r + 3 + k] = -s.torque[k];
        }
    }
    Ok((a, b))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult {
    pub params: CalibrationParams,
    pub residual_rms: f64,
    pub condition_number: f64,
    pub ill_conditioned: bool,
    /// The raw solution had a negative mass, clamped to zero.
    pub mass_clamped: bool,
}

/// Minimum-norm least-squares estimate via SVD.
pub fn solve_calibration(samples: &[FTSample], mount: &SensorMount) -> Result<CalibrationResult> {
    let (a, b) = build_calibration_system(samples, mount)?;
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let tol = smax * 7.0 * f64::EPSILON * (a.nrows() as f64);
    let x = svd
        .solve(&b, tol)
        .map_err(|e| Error::InvalidParameter(format!("calibration solve failed: {e}")))?;
    let residual = &a * &x - &b;
    let residual_rms = (residual.norm_squared() / residual.len() as f64).sqrt();
    let mut params = CalibrationParams::from_vector(&x);
    let mass_clamped = params.mass < 0.0;
    if mass_clamped {
        params.mass = 0.0;
    }
    let condition_number = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    Ok(CalibrationResult {
        params,
        residual_rms,
        condition_number,
        ill_conditioned: condition_number > ILL_CONDITIONED,
        mass_clamped,
    })
}

/// External force and torque in the world frame: bias and predicted food
/// gravity removed, then rotated out of the sensor frame.
pub fn compensate_wrench(reading: &FTSample, calib: &CalibrationParams, mount: &SensorMount) -> (Vector3<f64>, Vector3<f64>) {
    let r = reading.orientation.to_rotation_matrix();
    let ts_t = mount.sensor_rotation.transpose();
    let ti = SensorMount::world_to_ee(&reading.orientation);
    let g_ee = ti * (calib.mass * mount.gravity_vec());
    let f_ee = ts_t * (reading.force + calib.force_bias) - g_ee;
    let t_ee = ts_t * (reading.torque + calib.torque_bias) - mount.lever().cross(&g_ee);
    (r * f_ee, r * t_ee)
}

/// Standard deviations of the least-squares estimate for i.i.d. reading
/// noise `sigma`: `sqrt(diag(sigma^2 (A^T A)^-1))`.
pub fn parameter_std(samples: &[FTSample], mount: &SensorMount, sigma: f64) -> Result<DVector<f64>> {
    let (a, _) = build_calibration_system(samples, mount)?;
    let ata = a.transpose() * &a;
    let inv = ata
        .try_inverse()
        .ok_or_else(|| Error::InvalidParameter("calibration system is rank deficient".into()))?;
    Ok(inv.diagonal().map(|v| sigma * v.max(0.0).sqrt()))
}

/// Default calibration pose cycle: level, then +-0.5 and +-1.0 rad about
/// the end-effector `x` and `y` axes (five distinct gravity directions).
pub fn default_pose_cycle() -> Vec<UnitQuaternion<f64>> {
    let mut out = vec![UnitQuaternion::identity()];
    for (axis, angle) in [(Vector3::x_axis(), 0.5), (Vector3::x_axis(), -0.5), (Vector3::y_axis(), 0.5), (Vector3::y_axis(), -0.5)] {
        out.push(UnitQuaternion::from_axis_angle(&axis, angle));
    }
    out.push(UnitQuaternion::from_rotation_matrix(&Rotation3::from_euler_angles(1.0, 1.0, 0.0)));
    out
}

/// Readings of the pose cycle with Gaussian noise `sigma` on all six channels.
pub fn synthesize_cycle(
    truth: &CalibrationParams,
    mount: &SensorMount,
    poses: &[UnitQuaternion<f64>],
    sigma: f64,
    seed: u64,
) -> Vec<FTSample> {
    let mut r = rng(seed);
    let normal = Normal::new(0.0, sigma.max(0.0)).expect("finite sigma");
    poses
        .iter()
        .map(|q| {
            let mut s = synthesize_reading(truth, mount, q, &Vector3::zeros(), &Vector3::zeros());
            if sigma > 0.0 {
                s.force += Vector3::from_fn(|_, _| normal.sample(&mut r));
                s.torque += Vector3::from_fn(|_, _| normal.sample(&mut r));
            }
            s
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationDemo {
    pub sigma: f64,
    pub seed: u64,
    pub truth: CalibrationParams,
    pub estimate: CalibrationResult,
    /// `estimate - truth` per unknown `(m, f_b, t_b)`.
    pub errors: Vec<f64>,
    /// Three-sigma bounds per unknown.
    pub bounds: Vec<f64>,
    pub within_bounds: bool,
    pub max_abs_error: f64,
}

/// Synthesizes the default pose cycle for `truth`, solves and compares.
pub fn run_calibration_demo(truth: &CalibrationParams, mount: &SensorMount, sigma: f64, seed: u64) -> Result<CalibrationDemo> {
    if !(sigma >= 0.0) {
        return Err(Error::InvalidParameter("noise sigma must be >= 0".into()));
    }
    let poses = default_pose_cycle();
    let samples = synthesize_cycle(truth, mount, &poses, sigma, seed);
    let estimate = solve_calibration(&samples, mount)?;
    let errors: Vec<f64> = (estimate.params.to_vector() - truth.to_vector()).iter().copied().collect();
    let bounds: Vec<f64> = parameter_std(&samples, mount, sigma)?.iter().map(|s| 3.0 * s).collect();
    let within_bounds = sigma == 0.0 || errors.iter().zip(&bounds).all(|(e, b)| e.abs() <= *b);
    let max_abs_error = errors.iter().fold(0.0f64, |m, e| m.max(e.abs()));
    Ok(CalibrationDemo {
        sigma,
        seed,
        truth: *truth,
        estimate,
        errors,
        bounds,
        within_bounds,
        max_abs_error,
    })
}

#[derive(Debug, Serialize, Deserialize)]
struct SampleRow {
    t: f64,
    qw: f64,
    qx: f64,
    qy: f64,
    qz: f64,
    fx: f64,
    fy: f64,
    fz: f64,
    tx: f64,
    ty: f64,
    tz: f64,
}

/// CSV log with columns `t, qw, qx, qy, qz, fx, fy, fz, tx, ty, tz`.
pub fn samples_to_csv(samples: &[(f64, FTSample)]) -> Result<String> {
    let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
    let mut w = csv::Writer::from_writer(Vec::new());
    for (t, s) in samples {
        let q = s.orientation.quaternion();
        w.serialize(SampleRow {
            t: *t,
            qw: q.w,
            qx: q.i,
            qy: q.j,
            qz: q.k,
            fx: s.force.x,
            fy: s.force.y,
            fz: s.force.z,
            tx: s.torque.x,
            ty: s.torque.y,
            tz: s.torque.z,
        })
        .map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn samples_from_csv(src: &str) -> Result<Vec<(f64, FTSample)>> {
    let mut r = csv::Reader::from_reader(src.as_bytes());
    let mut out = Vec::new();
    for (i, row) in r.deserialize::<SampleRow>().enumerate() {
        let row = row.map_err(|e| Error::Parse(format!("sample row {}: {e}", i + 1)))?;
        let q = nalgebra::Quaternion::new(row.qw, row.qx, row.qy, row.qz);
        if (q.norm() - 1.0).abs() > 1e-9 {
            return Err(Error::Parse(format!("sample row {}: quaternion is not normalized", i + 1)));
        }
        out.push((
            row.t,
            FTSample {
                orientation: UnitQuaternion::new_unchecked(q),
                force: Vector3::new(row.fx, row.fy, row.fz),
                torque: Vector3::new(row.tx, row.ty, row.tz),
            },
        ));
    }
    Ok(out)
}
