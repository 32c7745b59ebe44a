use std::fs;
use std::process::Command;

use holocover_cli::{run_experiment, RunConfig};

const ACCEPTANCE: &str = include_str!("../../../configs/acceptance.json");

fn single(json: &str) -> RunConfig {
    RunConfig::from_json(&format!(r#"{{"schema":1,"seed":3,"experiments":[{json}]}}"#)).expect("config")
}

#[test]
fn config_round_trip() {
    let cfg = RunConfig::from_json(ACCEPTANCE).unwrap();
    let again = RunConfig::from_json(&cfg.to_json()).unwrap();
    assert_eq!(cfg, again);
}

#[test]
fn reconstruct_example() {
    let cfg = single(
        r#"{"experiment":"reconstruct","id":"r","domain":{"kind":"disk","center":[0,0],"radius":1},
            "nodes":64,"functions":[{"name":"monomial","powers":[3]}],
            "grid":{"kind":"points","points":[[[0.3,0.1]]]},"relative":false,"tol":1e-13}"#,
    );
    let r = run_experiment(&cfg.experiments[0], cfg.seed);
    assert!(r.passed, "{r:?}");
    let csv = r.table.to_csv();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "z_re,z_im,value_re,value_im,oracle_re,oracle_im,abs_err,function"
    );
    assert_eq!(lines.count(), 1);
}

#[test]
fn dilation_constant_weight() {
    let cfg = single(
        r#"{"experiment":"dilation","id":"d","covering":{"kind":"strip-z","r1":0.8,"r2":1.3,"r1~":0.6,"r2~":1.5,"K":4},
            "weights":[{"kind":"constant"}],"shifts":[1],
            "base_grid":{"kind":"annular","r_min":0.8,"r_max":1.3,"rings":2,"rays":4}}"#,
    );
    let r = run_experiment(&cfg.experiments[0], cfg.seed);
    assert!(r.passed);
    assert_eq!(r.outputs["dilation"][0]["c_h"], 1.0);
}

#[test]
fn cocycle_example() {
    let cfg = single(
        r#"{"experiment":"cocycle","id":"c","annulus":[0.8,1.3,0.6,1.5],"c":[0,0,1],"group":{"kind":"integers"}}"#,
    );
    let r = run_experiment(&cfg.experiments[0], cfg.seed);
    assert!(r.passed);
    assert_eq!(r.outputs["monodromy"], 1);
}

#[test]
fn runtime_errors_carry_context() {
    // a Taylor circle that leaves its patch produces poisoned samples
    let cfg = single(
        r#"{"experiment":"norms","id":"n","covering":{"kind":"finite","m":2,"r1":0.8,"r2":1.3,"r1~":0.6,"r2~":1.5,"K":1},
            "weights":[{"kind":"constant"}],"function":{"name":"pullback-poly","coeffs":[[1,0]]},
            "base_grid":{"kind":"annular","r_min":0.8,"r_max":1.3,"rings":1,"rays":4},
            "taylor":{"functions":[{"name":"pullback-poly","coeffs":[[0,0],[1,0]]}],"weight":{"kind":"constant"},
                      "center":[1.0,0.0],"radius":0.9,"recon_offsets":[[0.1,0]]}}"#,
    );
    let r = run_experiment(&cfg.experiments[0], cfg.seed);
    assert!(!r.passed);
    assert!(r.error.as_deref().unwrap_or("").starts_with("experiment n (norms)"), "{:?}", r.error);
}

#[test]
fn validation_errors_name_fields() {
    let err = RunConfig::from_json(
        r#"{"schema":1,"experiments":[{"experiment":"reconstruct","id":"r","domain":{"kind":"disk","center":[0,0],"radius":1},
            "nodes":64,"functions":[{"name":"exp"}],"grid":{"kind":"points","points":[[[1.5,0]]]}}]}"#,
    )
    .unwrap_err();
    assert!(err.to_string().starts_with("experiments[0].grid[0]"), "{err}");
    assert!(RunConfig::from_json(r#"{"schema":2,"experiments":[]}"#).is_err());
}

#[test]
fn binary_run_and_validate() {
    let bin = env!("CARGO_BIN_EXE_holocover");
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.json");
    fs::write(
        &cfg,
        r#"{"schema":1,"experiments":[
            {"experiment":"convergence","id":"trap","problem":{"kind":"periodic-trapezoid","a":2.0},"resolutions":[8,16,32],"ratio_tol":1e-2},
            {"experiment":"convergence","id":"poly","problem":{"kind":"polynomial-gauss","degree":3},"resolutions":[2,4],"final_tol":1e-14}]}"#,
    )
    .unwrap();
    let status = Command::new(bin).args(["validate", "--config"]).arg(&cfg).status().unwrap();
    assert!(status.success());
    let out = dir.path().join("out");
    let status = Command::new(bin).args(["run", "--config"]).arg(&cfg).arg("--out").arg(&out).status().unwrap();
    assert!(status.success());
    let dat = fs::read_to_string(out.join("trap.dat")).unwrap();
    assert!(dat.starts_with("# N error\n8 "));
    assert_eq!(dat.lines().count(), 4);
    let csv = fs::read_to_string(out.join("poly.csv")).unwrap();
    assert!(csv.starts_with("N,error,ratio,floor\n") && !csv.contains('\r'));
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["passed"], true);
    assert_eq!(summary["schema"], 1);

    // an unmet tolerance gives exit code 1
    fs::write(
        &cfg,
        r#"{"schema":1,"experiments":[{"experiment":"convergence","id":"t","problem":{"kind":"periodic-trapezoid","a":2.0},"resolutions":[8],"final_tol":1e-20}]}"#,
    )
    .unwrap();
    let status = Command::new(bin).args(["run", "--config"]).arg(&cfg).arg("--out").arg(&out).status().unwrap();
    assert_eq!(status.code(), Some(1));

    // an experiment that errors at runtime gives exit code 2, with its report still written
    fs::write(
        &cfg,
        r#"{"schema":1,"experiments":[{"experiment":"norms","id":"bad","covering":{"kind":"finite","m":2,"r1":0.8,"r2":1.3,"r1~":0.6,"r2~":1.5,"K":1},
            "weights":[{"kind":"constant"}],"function":{"name":"pullback-poly","coeffs":[[1,0]]},
            "base_grid":{"kind":"annular","r_min":0.8,"r_max":1.3,"rings":1,"rays":4},
            "taylor":{"functions":[{"name":"pullback-poly","coeffs":[[0,0],[1,0]]}],"weight":{"kind":"constant"},
                      "center":[1.0,0.0],"radius":0.9,"recon_offsets":[[0.1,0]]}}]}"#,
    )
    .unwrap();
    let status = Command::new(bin).args(["run", "--config"]).arg(&cfg).arg("--out").arg(&out).status().unwrap();
    assert_eq!(status.code(), Some(2));
    assert!(out.join("bad.json").exists());

    // an invalid config gives exit code 2
    fs::write(&cfg, r#"{"schema":1,"experiments":[{"experiment":"nope","id":"x"}]}"#).unwrap();
    let status = Command::new(bin).args(["validate", "--config"]).arg(&cfg).status().unwrap();
    assert_eq!(status.code(), Some(2));
}
