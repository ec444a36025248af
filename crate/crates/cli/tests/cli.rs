use std::f64::consts::{FRAC_PI_2, SQRT_2};
use std::process::{Command, Output};

use serde_json::Value;

fn fourqubit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fourqubit"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json_ok(args: &[&str]) -> Value {
    let out = fourqubit(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn num(v: &Value, key: &str) -> f64 {
    v["outputs"][key]
        .as_f64()
        .unwrap_or_else(|| panic!("missing {key} in {v}"))
}

#[test]
fn eval_examples() {
    let v = json_ok(&[
        "eval",
        "--expr",
        "bi1",
        "--state",
        "chi",
        "--settings",
        "bi1_chi",
    ]);
    assert_eq!(v["command"], "eval");
    assert_eq!(v["inputs"]["state"], "chi");
    assert!((num(&v, "value") - 4.0).abs() < 1e-9);
    assert_eq!(num(&v, "classical_bound"), 2.0);
    assert_eq!(v["outputs"]["violated"], true);

    let v = json_ok(&[
        "eval",
        "--expr",
        "mabk4",
        "--state",
        "chi",
        "--settings",
        "mabk_chi",
    ]);
    assert!((num(&v, "value") - 4.0 * SQRT_2).abs() < 1e-9);

    let v = json_ok(&[
        "eval",
        "--expr",
        "bi1",
        "--state",
        "ghz4",
        "--settings",
        "bi1_chi",
    ]);
    assert!(num(&v, "value") <= 2.0);
    assert_eq!(v["outputs"]["violated"], false);
}

#[test]
fn optimize_examples() {
    let v = json_ok(&["optimize", "--expr", "bi1", "--state", "w4", "--seed", "7"]);
    assert!((num(&v, "value") - 2.618).abs() < 1e-2);
    assert!(v["outputs"]["settings"]["A"]["1"].is_array());

    let v = json_ok(&["optimize", "--expr", "bi2", "--state", "cluster4"]);
    assert!((num(&v, "value") - 4.0).abs() < 1e-6);

    // At exactly π/2 the state does not violate; 1.5708 is 3.7e-6 past π/2,
    // where the maximum rises with slope 4.
    let half_pi = format!("upsilon:{FRAC_PI_2}:{FRAC_PI_2}");
    let v = json_ok(&["optimize", "--expr", "bi1", "--state", &half_pi]);
    assert!(num(&v, "value") <= 2.0 + 1e-6);
    let v = json_ok(&[
        "optimize",
        "--expr",
        "bi1",
        "--state",
        "upsilon:1.5708:1.5708",
    ]);
    #[allow(clippy::approx_constant)] // the rounded value is the point
    let overshoot = 4.0 * (1.5708 - FRAC_PI_2);
    assert!(num(&v, "value") <= 2.0 + overshoot + 1e-6);
}

#[test]
fn teleport_examples() {
    let v = json_ok(&["teleport", "--q", "0.48", "--epsilon", "0.2618"]);
    assert!((num(&v, "singlet_fraction") - 0.5125).abs() < 1e-12);
    assert_eq!(v["outputs"]["useful"], true);
    assert_eq!(v["outputs"]["bell_local"], true);

    let v = json_ok(&["teleport", "--q", "1", "--epsilon", "0.7854"]);
    assert!((num(&v, "negativity") - 0.5).abs() < 1e-6);
    assert!((num(&v, "chsh_max") - 2.0 * SQRT_2).abs() < 1e-6);

    let v = json_ok(&["teleport", "--q", "0.6", "--epsilon", "0.2618"]);
    assert_eq!(v["outputs"]["entangled"], true);
    assert_eq!(v["outputs"]["violates_chsh"], false);
    let crit = &v["outputs"]["critical"];
    assert!(crit["q_e0"].as_f64().unwrap() < crit["q_bell"].as_f64().unwrap());
}

#[test]
fn teleport_sweep_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sweep.csv");
    let p = path.to_str().unwrap();
    let v = json_ok(&[
        "teleport",
        "--sweep",
        "--q-points",
        "3",
        "--epsilon-points",
        "2",
        "--out",
        p,
    ]);
    assert_eq!(v["outputs"]["rows"], 6);
    let text = std::fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(
        lines[0],
        "q,epsilon,fidelity_proxy,negativity,chsh_max,violates_chsh"
    );
    assert_eq!(lines.len(), 7);
    // q = 1, ε = π/2 is a product input: no entanglement survives
    assert_eq!(lines[6], "1,1.57079632679,1,0,2,false");
}

#[test]
fn unknown_identifiers_fail_with_message() {
    for args in [
        [
            "eval",
            "--expr",
            "bi9",
            "--state",
            "chi",
            "--settings",
            "bi1_chi",
        ],
        [
            "eval",
            "--expr",
            "bi1",
            "--state",
            "nonsense",
            "--settings",
            "bi1_chi",
        ],
        [
            "eval",
            "--expr",
            "bi1",
            "--state",
            "chi",
            "--settings",
            "no_such_key",
        ],
    ] {
        let out = fourqubit(&args);
        assert!(!out.status.success(), "{args:?} succeeded");
        assert!(out.stdout.is_empty());
        assert!(
            String::from_utf8_lossy(&out.stderr).contains("unknown"),
            "{args:?}"
        );
    }
}

#[test]
fn range_violations_fail() {
    assert!(!fourqubit(&["teleport", "--q", "1.5", "--epsilon", "0.2"])
        .status
        .success());
    assert!(!fourqubit(&["teleport", "--q", "0.5", "--epsilon", "2"])
        .status
        .success());
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("x.csv");
    assert!(
        !fourqubit(&["scan", "--grid", "1", "--out", p.to_str().unwrap()])
            .status
            .success()
    );
    let unwritable = dir.path().join("missing").join("x.csv");
    let out = fourqubit(&[
        "scan",
        "--grid",
        "2",
        "--fixed-settings",
        "bi1_chi",
        "--out",
        unwritable.to_str().unwrap(),
    ]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("cannot write"));
}

#[test]
fn settings_file_shadows_builtin_key() {
    let dir = tempfile::tempdir().unwrap();
    let z = "[0.0,0.0,1.0]";
    let settings =
        format!(r#"{{"A":{{"1":{z}}},"B":{{"1":{z}}},"C":{{"1":{z}}},"D":{{"1":{z}}}}}"#);
    std::fs::write(dir.path().join("bi1_chi"), settings).unwrap();
    std::fs::write(
        dir.path().join("zzzz.json"),
        r#"{"name":"zzzz","parties":4,"terms":[{"coef":1.0,"labels":[1,1,1,1]}]}"#,
    )
    .unwrap();
    let run = |cwd: &std::path::Path| {
        let out = Command::new(env!("CARGO_BIN_EXE_fourqubit"))
            .current_dir(cwd)
            .args([
                "eval",
                "--expr",
                "zzzz.json",
                "--state",
                "ghz4",
                "--settings",
                "bi1_chi",
            ])
            .output()
            .unwrap();
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
        let v: Value = serde_json::from_slice(&out.stdout).unwrap();
        (num(&v, "value"), num(&v, "classical_bound"))
    };
    // ⟨ZZZZ⟩ = 1 on GHZ; the built-in A1 = x̂ would give 0
    let (value, bound) = run(dir.path());
    assert!((value - 1.0).abs() < 1e-12);
    assert_eq!(bound, 1.0);

    let other = tempfile::tempdir().unwrap();
    std::fs::copy(dir.path().join("zzzz.json"), other.path().join("zzzz.json")).unwrap();
    let (value, _) = run(other.path());
    assert!(value.abs() < 1e-12);
}

#[test]
fn fixed_settings_scan() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("fixed.csv");
    let v = json_ok(&[
        "scan",
        "--grid",
        "3",
        "--fixed-settings",
        "bi1_chi",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(v["outputs"]["mode"], "fixed");
    assert_eq!(v["outputs"]["points"], 9);
    assert!(v["outputs"]["expression"]["settings"]["D"]["2"].is_array());
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().count(), 10);
    assert!(text.starts_with("theta12,phi12,value,converged\n-1.57079632679,-1.57079632679,"));
}

#[test]
fn output_round_trips_and_numbers_are_rounded() {
    let out = fourqubit(&[
        "--omit-timing",
        "teleport",
        "--q",
        "0.3",
        "--epsilon",
        "0.4",
    ]);
    assert!(out.status.success());
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v.get("elapsed_ms").is_none());
    let reprinted = serde_json::to_string_pretty(&v).unwrap();
    assert_eq!(
        reprinted.trim_end(),
        String::from_utf8_lossy(&out.stdout).trim_end()
    );
    let q2 = v["outputs"]["critical"]["q2"].as_f64().unwrap();
    assert_eq!(format!("{q2:.11e}").parse::<f64>().unwrap(), q2);

    let timed = json_ok(&["teleport", "--q", "0.3", "--epsilon", "0.4"]);
    assert!(timed["elapsed_ms"].as_f64().unwrap() >= 0.0);
}

#[test]
fn report_passes_and_negative_control_fails() {
    let out = fourqubit(&["report"]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    let rows = v["outputs"]["rows"].as_array().unwrap();
    assert!(rows.len() >= 15);
    assert!(rows.iter().all(|r| r["pass"] == true));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert_eq!(
        stderr.lines().filter(|l| l.starts_with("PASS")).count(),
        rows.len()
    );

    // a different upsilon point stands in for chi
    let out = fourqubit(&["report", "--chi", "upsilon:0.6:0.9"]);
    assert!(!out.status.success());
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    let bi1 = v["outputs"]["rows"]
        .as_array()
        .unwrap()
        .iter()
        .find(|r| r["id"] == "bi1_chi_fixed_settings")
        .unwrap();
    assert_eq!(bi1["pass"], false);
}
