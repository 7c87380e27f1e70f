//! Samples collision-free goal poses and reduces them to k medoids.
use bite_transfer::costs::GoalTerms;
use bite_transfer::sample::{cluster_kmedoids, sample_collision_free_goals, GoalDistribution, SampleBudget};
use bite_transfer::scenario::ScenarioConfig;

fn main() -> bite_transfer::Result<()> {
    let cfg = ScenarioConfig::default();
    let scene = cfg.scene()?;
    let dist = GoalDistribution::default();
    let samples = sample_collision_free_goals(&scene, &dist, &SampleBudget::default())?;
    println!(
        "{} goals from {} candidates ({:.1}% accepted)",
        samples.poses.len(),
        samples.attempts,
        100.0 * samples.poses.len() as f64 / samples.attempts as f64
    );
    let clusters = cluster_kmedoids(&samples.poses, 15, cfg.weights.w_rot, 0)?;
    println!("k-medoids cost {:.4} after {} swaps", clusters.cost, clusters.swaps);
    for (i, p) in clusters.poses(&samples.poses).iter().enumerate() {
        let t = GoalTerms::evaluate(p, &scene, &cfg.comfort_rays, &cfg.weights)?;
        let (tilt, spin) = GoalDistribution::tilt_and_spin(&scene.tool_pose(p).rotation);
        println!(
            "medoid {i:>2}: z {:+.3}  tilt {:5.1} deg  spin {:6.1} deg  C_E {:.3}  C_C {:.4}",
            p.translation.z,
            tilt.to_degrees(),
            spin.to_degrees(),
            t.efficiency,
            t.comfort
        );
    }
    Ok(())
}
