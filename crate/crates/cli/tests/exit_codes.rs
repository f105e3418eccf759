use std::process::{Command, Output};

fn fman(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fman")).args(args).output().expect("fman runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).expect("stdout is json")
}

#[test]
fn verify_lobachevsky_passes() {
    let o = fman(&["verify", "lobachevsky"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v = json(&o);
    assert_eq!(v["subject"], "lobachevsky");
    assert_eq!(v["seed"], 42);
    assert!(v["version"].is_string());
    assert!(v["branch_convention"].as_str().unwrap().contains("principal"));
    assert!(v["tolerances"]["atol"].is_number());
}

#[test]
fn levi_civita_of_lobachevsky_is_curved() {
    let o = fman(&["verify", "lobachevsky", "--check", "levi-civita-flat"]);
    assert_eq!(code(&o), 1);
    let v = json(&o);
    let r = &v["reports"][0];
    assert_eq!(r["pass"], false);
    assert!(r["max_residual"].as_f64().unwrap() > 0.5);
}

#[test]
fn single_passing_check() {
    let o = fman(&["verify", "lobachevsky", "--check", "natural-flat", "--check", "killing"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(json(&o)["reports"].as_array().unwrap().len(), 2);
}

#[test]
fn malformed_json_is_a_spec_error() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.json");
    std::fs::write(&p, "{\"name\": \"x\", \"n\": ").unwrap();
    let o = fman(&["verify", p.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("json"));
}

#[test]
fn invalid_spec_is_a_spec_error() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.json");
    let mut spec: serde_json::Value = serde_json::from_slice(&fman(&["catalog", "export", "nonss2d"]).stdout).unwrap();
    spec["g"][0][1] = "c*y^(a".into();
    std::fs::write(&p, spec.to_string()).unwrap();
    assert_eq!(code(&fman(&["verify", p.to_str().unwrap()])), 2);
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(code(&fman(&["verify", "no-such-entry"])), 2);
    assert_eq!(code(&fman(&["verify", "lobachevsky", "--check", "no-such-check"])), 2);
    assert_eq!(code(&fman(&["verify", "nonss2d", "--param", "zzz=1"])), 2);
    assert_eq!(code(&fman(&["verify", "nonss2d", "--atol", "-1"])), 2);
    assert_eq!(code(&fman(&["legendre", "q0-d-minus1", "--field", "nope"])), 2);
}

#[test]
fn exported_spec_verifies_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("nonss2d.json");
    let o = fman(&["catalog", "export", "nonss2d", "--out", p.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let o = fman(&["verify", p.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
}

#[test]
fn full_entry_file_keeps_its_claims() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("lob.json");
    std::fs::write(&p, fman(&["catalog", "export", "lobachevsky", "--full"]).stdout).unwrap();
    let from_file = fman(&["verify", p.to_str().unwrap()]);
    let built_in = fman(&["verify", "lobachevsky"]);
    assert_eq!(code(&from_file), 0);
    assert_eq!(from_file.stdout, built_in.stdout);
}

#[test]
fn parameter_override_is_recorded() {
    let o = fman(&["verify", "nonss2d", "--param", "c=2", "--check", "natural-flat"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(json(&o)["params"]["c"], 2.0);
}

#[test]
fn reports_are_byte_identical() {
    let args = ["verify", "q0-d-minus1", "--seed", "7", "--points", "6"];
    let a = fman(&args);
    let b = fman(&args);
    assert_eq!(code(&a), 0, "{}", stderr(&a));
    assert_eq!(a.stdout, b.stdout);
    let c = fman(&["verify", "q0-d-minus1", "--seed", "8", "--points", "6"]);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn markdown_and_csv_formats() {
    let md = fman(&["verify", "nonss2d", "--format", "markdown"]);
    assert!(String::from_utf8_lossy(&md.stdout).starts_with("# nonss2d"));
    let csv = fman(&["verify", "nonss2d", "--format", "csv"]);
    assert!(String::from_utf8_lossy(&csv.stdout).starts_with("check,verdict,expect"));
}

#[test]
fn ode_pencil_conserves_integrals() {
    let dir = tempfile::tempdir().unwrap();
    let rep = dir.path().join("r.json");
    let o = fman(&["ode", "--init", "pencil63", "--from", "-1", "--to", "-3", "--report", rep.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(header[0], "z");
    assert_eq!(header.len(), 1 + 12 + 16 + 2);
    let d1 = header.iter().position(|h| *h == "drift_I1").unwrap();
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 11);
    assert_eq!(rows[0][0], -1.0);
    assert_eq!(rows.last().unwrap()[0], -3.0);
    for r in &rows {
        assert!(r[d1] <= 1e-7 && r[d1 + 1] <= 1e-7);
    }
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(rep).unwrap()).unwrap();
    assert!(v["reports"][0]["meta"]["drift_I1"].as_f64().unwrap() <= 1e-7);
}

#[test]
fn ode_refuses_to_cross_a_singular_point() {
    let o = fman(&["ode", "--from", "0.5", "--to", "1.5"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("singular"));
}

#[test]
fn ode_q0_matches_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let rep = dir.path().join("r.json");
    let o = fman(&["ode", "--init", "q0", "--a", "1", "--b", "1", "--from", "2", "--to", "5", "--report", rep.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(rep).unwrap()).unwrap();
    let end = v["reports"].as_array().unwrap().iter().find(|r| r["name"] == "endpoint vs closed form").unwrap();
    assert!(end["max_residual"].as_f64().unwrap() <= 1e-7);
    assert_eq!(v["params"]["a"], 1.0);
}

#[test]
fn ode_drift_over_tolerance_exits_one() {
    let o = fman(&["ode", "--init", "q0", "--from", "2", "--to", "5", "--rtol", "1e-3", "--atol", "1e-3", "--drift-tol", "1e-14"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn ode_from_given_state() {
    let s = "0,-0.35355339059327373,0,-0.7071067811865476,0,0.35355339059327373,0,0.7071067811865476,-0.5,0,0.5,0";
    let o = fman(&["ode", "--from", "-1", "--to", "-2", "--state", s]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(code(&fman(&["ode", "--from", "-1", "--to", "-2", "--state", "1,2"])), 2);
}

#[test]
fn legendre_x2_reaches_second_metric() {
    let o = fman(&["legendre", "q0-d-minus1", "--field", "X2", "--target", "q0-d0"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v = json(&o);
    assert_eq!(v["spec"]["name"], "q0-d-minus1-by-X2");
    let m = v["report"]["reports"].as_array().unwrap().iter().find(|r| r["name"].as_str().unwrap().ends_with("matches q0-d0")).unwrap();
    assert_eq!(m["pass"], true);
}

#[test]
fn legendre_x2_is_not_the_first_metric() {
    let o = fman(&["legendre", "q0-d-minus1", "--field", "X2", "--target", "q0-d-minus1"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn legendre_by_unit_is_identity() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("t.json");
    let o = fman(&["legendre", "lobachevsky", "--field", "e", "--spec-out", p.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v = json(&o);
    assert!(v["reports"].as_array().unwrap().iter().any(|r| r["name"] == "transform by e is the identity" && r["pass"] == true));
    let written: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&p).unwrap()).unwrap();
    assert_eq!(written["name"], "lobachevsky-by-e");
    assert_eq!(code(&fman(&["verify", p.to_str().unwrap(), "--check", "metric-invariance"])), 0);
}

#[test]
fn legendre_hypothesis_violation_exits_one() {
    let o = fman(&["legendre", "q0-d-minus1", "--field", "X3-printed"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("hypothesis violated"));
}

#[test]
fn legendre_by_non_invertible_field_exits_one() {
    // ∂/∂v of the flat chart v = y²/2 is flat and nilpotent for the product
    let o = fman(&["legendre", "nonss2d", "--field", "X", "--components", "0; 1/y"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("not invertible"), "{}", stderr(&o));
}

#[test]
fn catalog_lists_all_entries() {
    let o = fman(&["catalog", "list"]);
    assert_eq!(code(&o), 0);
    let v = json(&o);
    assert_eq!(v.as_array().unwrap().len(), 15);
    let checks = fman(&["catalog", "checks"]);
    assert!(String::from_utf8_lossy(&checks.stdout).lines().any(|l| l == "levi-civita-flat"));
}

#[test]
fn overridden_parameters_refit_the_exponent() {
    let o = fman(&["verify", "nonss3d", "--param", "a=3", "--check", "homogeneity"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    // nonzero F breaks homogeneity
    assert_eq!(code(&fman(&["verify", "nonss3d", "--param", "f1=1", "--check", "homogeneity"])), 1);
}
