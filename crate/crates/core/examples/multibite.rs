use bite_transfer::bite::multibite_plan;
use bite_transfer::scenario::ScenarioConfig;
use std::path::Path;

fn main() -> bite_transfer::Result<()> {
    let path = std::env::args().nth(1).unwrap_or_else(|| "configs/long_carrot.toml".into());
    let cfg = ScenarioConfig::load(Path::new(&path))?;
    let t = std::time::Instant::now();
    let session = multibite_plan(&cfg)?;
    for b in &session.bites {
        println!(
            "bite {}: consumed {:.2} cm^3, {:.1}% left, goal C_E {:.3}, path comfort {:.4}{}",
            b.index,
            b.consumed_volume * 1e6,
            b.remaining_fraction * 100.0,
            b.trajectory.goal_terms.efficiency,
            b.path_comfort,
            if b.retried { " (re-planned)" } else { "" }
        );
    }
    println!(
        "{} bites, {:.1}% consumed, stop: {:?} ({:.1} s)",
        session.bites.len(),
        session.consumed_fraction() * 100.0,
        session.stop_reason,
        t.elapsed().as_secs_f64()
    );
    Ok(())
}
