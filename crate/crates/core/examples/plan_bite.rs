use bite_transfer::costs::CostMode;
use bite_transfer::scenario::{plan_bite, ScenarioConfig};

fn main() -> bite_transfer::Result<()> {
    for mode in [CostMode::Combined, CostMode::Efficiency, CostMode::Comfort] {
        let mut cfg = ScenarioConfig::default();
        cfg.weights.mode = mode;
        let scene = cfg.scene()?;
        let plan = plan_bite(&cfg, &scene)?;
        let reached = plan.trajectories.iter().flatten().count();
        println!(
            "{mode:?}: {reached}/{} goals reached, selected goal {} with {} waypoints, C_E {:.3}, C_C(goal) {:.4}, path comfort {:.4}, total {:.4}",
            plan.trajectories.len(),
            plan.selected.goal_index,
            plan.selected.waypoints.len(),
            plan.efficiency(),
            plan.selected.goal_terms.comfort,
            plan.selected_path_comfort,
            plan.selected.total_cost,
        );
        println!("  {:?}\n  {:?}", plan.timings, plan.stats);
    }
    Ok(())
}
