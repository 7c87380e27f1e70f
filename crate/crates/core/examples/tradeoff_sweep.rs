use bite_transfer::scenario::ScenarioConfig;
use bite_transfer::sweep::{run_sweep, spearman, SweepSpec};
use std::time::Instant;

fn main() -> bite_transfer::Result<()> {
    let scenarios = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(10);
    let spec = SweepSpec {
        scenarios,
        ..SweepSpec::default()
    };
    let t = Instant::now();
    let result = run_sweep(&ScenarioConfig::default(), &spec)?;
    for r in &result.rows {
        println!(
            "beta_e {:>4} beta_c=gamma_c {:>4}: comfort {:.5} efficiency {:.4} ({}/{})",
            r.beta_e, r.beta_c, r.comfort_mean, r.efficiency_mean, r.n_feasible, r.n
        );
    }
    let c: Vec<f64> = result.rows.iter().map(|r| r.comfort_mean).collect();
    let e: Vec<f64> = result.rows.iter().map(|r| r.efficiency_mean).collect();
    println!("spearman {:.3}, {:.1} s", spearman(&c, &e), t.elapsed().as_secs_f64());
    Ok(())
}
