//! Projection collision check for the default fork and carrot as the food
//! is pushed straight into the mouth.
use bite_transfer::geom::{projection_collision_check, Pose};
use bite_transfer::scenario::ScenarioConfig;
use nalgebra::Vector3;

fn main() -> bite_transfer::Result<()> {
    let cfg = ScenarioConfig::default();
    let scene = cfg.scene()?;
    let start = cfg.start_pose();
    for i in 0..=12 {
        let z = 0.05 - 0.01 * i as f64;
        let p = Pose::new(Vector3::new(0.0, 0.0, z), start.rotation);
        let exact = projection_collision_check(&scene.food, &p, &scene.proxy, &scene.mouth);
        let clear = scene.model().is_free_within(&p, &scene.mouth, 0.002, cfg.weights.w_rot);
        println!("food centroid z = {z:+.3} m: {exact:?}, free with 2 mm margin: {clear}");
    }
    Ok(())
}
