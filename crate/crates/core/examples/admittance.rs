//! Deadband admittance response to a force pulse from the mouth.
use bite_transfer::ftrt::{AdmittanceController, PidGains};
use nalgebra::Vector3;

fn main() {
    let dt = 0.01;
    let mut c = AdmittanceController::new(0.25, PidGains::default(), dt);
    let approach = Vector3::new(0.0, 0.0, -0.02);
    for k in 0..40 {
        let t = k as f64 * dt;
        let fz = if (0.1..0.25).contains(&t) { 1.0 } else { 0.1 };
        let out = c.step(&Vector3::new(0.0, 0.0, fz), &approach);
        println!(
            "t {t:.2} s  force {fz:.2} N  error {:+.3}  v_z {:+.4} m/s{}",
            out.error.z,
            out.velocity.z,
            if out.overridden { "  (override)" } else { "" }
        );
    }
}
