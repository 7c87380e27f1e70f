//! Command-line behaviour: exit codes, config handling and report shape.

mod common;

use bite_transfer::run::{data_json, run_multibite, run_scenario, run_sweep_csv};
use bite_transfer::scenario::ScenarioConfig;
use bite_transfer::sweep::{cell_config, sweep_scenario, SweepSpec};
use serde_json::Value;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_bite-transfer"));
    c.env("BITE_WORKERS", "1");
    c
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn write(dir: &tempfile::TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

#[test]
fn plan_report_matches_schema() {
    let cfg = ScenarioConfig::load(&configs().join("vertical_carrot.toml")).unwrap();
    let report: Value = serde_json::to_value(run_scenario(&cfg).unwrap()).unwrap();
    let schema: Value = serde_json::from_str(include_str!("../schemas/run_report.schema.json")).unwrap();
    common::check_schema(&schema, &report, "$").unwrap();
    assert!(report["timings"].is_object());
}

#[test]
fn plan_cli_no_timings() {
    let o = bin()
        .args(["plan", "--no-timings", "--target-n", "40", "--clusters", "5", "-c"])
        .arg(configs().join("vertical_carrot.toml"))
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v.get("timings").is_none());
    assert_eq!(v["goals"]["sampled"], 40);
    assert!(v["goals"]["clusters"].as_u64().unwrap() <= 5);
}

#[test]
fn tiny_mouth_is_infeasible() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(&dir, "tiny.toml", "[mouth]\nradii = [0.001, 0.001]\n[sampling]\ntimeout = 0.5\n");
    let o = bin().args(["plan", "-c"]).arg(&p).output().unwrap();
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn start_behind_face_is_invalid() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(
        &dir,
        "start.toml",
        "[start_tool]\ntranslation = [0.1, 0.0, -0.05]\nquaternion = [1.0, 0.0, 0.0, 0.0]\n",
    );
    let o = bin().args(["plan", "-c"]).arg(&p).output().unwrap();
    assert_eq!(code(&o), 4, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let unknown = write(&dir, "unknown.toml", "[weights]\nbeta_x = 1.0\n");
    let negative = write(&dir, "neg.toml", "[mouth]\nradii = [-0.01, 0.02]\n");
    let garbage = write(&dir, "bad.toml", "this is = = not toml");
    for p in [&unknown, &negative, &garbage] {
        let o = bin().arg("validate-config").arg(p).output().unwrap();
        assert_eq!(code(&o), 2, "{}", p.display());
        let o = bin().args(["plan", "-c"]).arg(p).output().unwrap();
        assert_eq!(code(&o), 2, "{}", p.display());
    }
    let o = bin().args(["plan", "--beta-e", "-1"]).output().unwrap();
    assert_eq!(code(&o), 2);
}

#[test]
fn validate_config_round_trips() {
    for name in ["defaults.toml", "vertical_carrot.toml", "long_carrot.toml", "short_carrot.toml"] {
        let o = bin().arg("validate-config").arg(configs().join(name)).output().unwrap();
        assert_eq!(code(&o), 0, "{name}: {}", String::from_utf8_lossy(&o.stderr));
        let echoed = ScenarioConfig::from_toml_str(std::str::from_utf8(&o.stdout).unwrap()).unwrap();
        assert_eq!(echoed, ScenarioConfig::load(&configs().join(name)).unwrap(), "{name}");
    }
    let d = ScenarioConfig::load(&configs().join("defaults.toml")).unwrap();
    assert_eq!(d, ScenarioConfig::default());
    let json = serde_json::to_string(&d).unwrap();
    assert_eq!(ScenarioConfig::from_json_str(&json).unwrap(), d);
}

#[test]
fn one_cell_sweep_matches_single_run() {
    let mut base = ScenarioConfig::load(&configs().join("vertical_carrot.toml")).unwrap();
    base.sampling.target_n = 60;
    base.clusters = 6;
    let spec = SweepSpec {
        beta_e: vec![2.0],
        beta_c: vec![5.0],
        gamma_c: vec![],
        scenarios: 2,
        base_seed: 11,
        randomize: true,
    };
    let (result, csv) = run_sweep_csv(&base, &spec).unwrap();
    assert_eq!(csv.lines().count(), 2);
    for (i, outcome) in result.outcomes[0].iter().enumerate() {
        let cfg = cell_config(&sweep_scenario(&base, &spec, i), &spec, 0, (2.0, 5.0, 5.0), i);
        match run_scenario(&cfg) {
            Ok(r) => {
                assert!(outcome.feasible);
                assert_eq!(outcome.efficiency, r.selected.efficiency);
                assert_eq!(outcome.comfort, r.selected.path_comfort);
            }
            Err(_) => assert!(!outcome.feasible),
        }
    }
}

#[test]
fn stop_fraction_one_plans_nothing() {
    let cfg = ScenarioConfig::load(&configs().join("short_carrot.toml")).unwrap();
    let r = run_multibite(&cfg, Some(1.0)).unwrap();
    assert_eq!(r.bites, 0);
    assert_eq!(r.remaining_fraction, 1.0);
    assert!(!data_json(&r).unwrap().contains("\"timings\""));
}

#[test]
fn calib_writes_and_reads_samples() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("log.csv");
    let o = bin().args(["calib", "--sigma", "0", "--seed", "4", "--write-samples"]).arg(&log).output().unwrap();
    assert_eq!(code(&o), 0);
    let demo: Value = serde_json::from_slice(&o.stdout).unwrap();
    let o = bin().args(["calib", "--samples"]).arg(&log).output().unwrap();
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let solved: Value = serde_json::from_slice(&o.stdout).unwrap();
    let m0 = demo["truth"]["mass"].as_f64().unwrap();
    let m1 = solved["params"]["mass"].as_f64().unwrap();
    assert!((m0 - m1).abs() < 1e-9, "{m0} vs {m1}");
}

#[test]
fn out_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("calib.json");
    let o = bin().args(["calib", "--out"]).arg(&out).output().unwrap();
    assert_eq!(code(&o), 0);
    assert!(o.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(out).unwrap()).unwrap();
    assert!(v["within_bounds"].is_boolean());
}
