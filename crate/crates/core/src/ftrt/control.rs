use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

/// Zero inside `[-f_th, f_th]`, shifted toward zero by `f_th` outside.
pub fn deadband_error(f: f64, f_th: f64) -> f64 {
    (f + f_th).min((f - f_th).max(0.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PidGains {
    pub kp: f64,
    pub ki: f64,
    pub kd: f64,
    /// Bound on the integral term's contribution, per axis (m/s).
    pub i_max: f64,
}

impl Default for PidGains {
    fn default() -> Self {
        Self {
            kp: 0.02,
            ki: 0.001,
            kd: 0.0005,
            i_max: 0.05,
        }
    }
}

/// Per-axis discrete PID: rectangle-rule integral, backward-difference
/// derivative (the error before the first step counts as zero).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PidState {
    pub gains: PidGains,
    pub dt: f64,
    pub integral: Vector3<f64>,
    pub prev_error: Vector3<f64>,
}

impl PidState {
    pub fn new(gains: PidGains, dt: f64) -> Self {
        assert!(dt > 0.0, "control period must be positive");
        Self {
            gains,
            dt,
            integral: Vector3::zeros(),
            prev_error: Vector3::zeros(),
        }
    }

    pub fn step(&mut self, error: &Vector3<f64>) -> Vector3<f64> {
        let g = self.gains;
        self.integral += error * self.dt;
        if g.ki > 0.0 {
            // keep the accumulator where its contribution saturates
            let lim = g.i_max / g.ki;
            self.integral = self.integral.map(|v| v.clamp(-lim, lim));
        }
        let deriv = (error - self.prev_error) / self.dt;
        self.prev_error = *error;
        let integral_term = (self.integral * g.ki).map(|v| v.clamp(-g.i_max, g.i_max));
        error * g.kp + integral_term + deriv * g.kd
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdmittanceOutput {
    pub velocity: Vector3<f64>,
    /// The force loop replaced the trajectory velocity this tick.
    pub overridden: bool,
    pub error: Vector3<f64>,
}

/// Linear-velocity admittance: while any axis of the external force is
/// outside the deadband, the PID command replaces the trajectory velocity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdmittanceController {
    pub f_th: f64,
    pub pid: PidState,
}

impl AdmittanceController {
    pub fn new(f_th: f64, gains: PidGains, dt: f64) -> Self {
        assert!(f_th > 0.0, "force threshold must be positive");
        Self {
            f_th,
            pid: PidState::new(gains, dt),
        }
    }

    pub fn step(&mut self, external_force: &Vector3<f64>, trajectory_velocity: &Vector3<f64>) -> AdmittanceOutput {
        let error = external_force.map(|f| deadband_error(f, self.f_th));
        let command = self.pid.step(&error);
        let overridden = error.iter().any(|e| *e != 0.0);
        AdmittanceOutput {
            velocity: if overridden { command } else { *trajectory_velocity },
            overridden,
            error,
        }
    }
}
