//! Gravity and bias calibration on synthetic readings, then wrench
//! compensation for a reading with an extra push on the food.
use bite_transfer::ftrt::{compensate_wrench, synthesize_reading, SensorMount};
use bite_transfer::run::run_calibration_demo;
use nalgebra::{UnitQuaternion, Vector3};

fn main() -> bite_transfer::Result<()> {
    for sigma in [0.0, 0.01, 0.05] {
        let d = run_calibration_demo(sigma, 11)?;
        println!(
            "sigma {sigma:.2} N: mass {:.5} kg (true {:.5}), max error {:.2e}, cond {:.1}, within 3 sigma: {}",
            d.estimate.params.mass, d.truth.mass, d.max_abs_error, d.estimate.condition_number, d.within_bounds
        );
    }
    let d = run_calibration_demo(0.0, 11)?;
    let mount = SensorMount::default();
    let q = UnitQuaternion::from_euler_angles(0.3, -0.2, 0.1);
    let push = Vector3::new(0.0, 0.0, 0.5);
    let reading = synthesize_reading(&d.truth, &mount, &q, &push, &Vector3::zeros());
    let (f, _) = compensate_wrench(&reading, &d.estimate.params, &mount);
    println!("raw force {:.3?} -> external force {:.3?}", reading.force.as_slice(), f.as_slice());
    Ok(())
}
