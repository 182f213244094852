use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::{json, Value};
use tempfile::TempDir;

fn conekit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_conekit"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("{e}: {}", String::from_utf8_lossy(&out.stdout))
    })
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn validate(def: &str, value: &Value) {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../docs/schema.json");
    let mut schema: Value = serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap();
    schema["$ref"] = json!(format!("#/$defs/{def}"));
    let v = jsonschema::validator_for(&schema).unwrap();
    let errors: Vec<String> = v.iter_errors(value).map(|e| format!("{} at {}", e, e.instance_path)).collect();
    assert!(errors.is_empty(), "{def}: {errors:?}\n{value:#}");
}

fn write_spec(dir: &TempDir, name: &str, value: &Value) -> String {
    let p = dir.path().join(name);
    fs::write(&p, serde_json::to_string(value).unwrap()).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn cone_info_garding() {
    let out = conekit(&["cone", "info", "--garding", "2", "3"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let v = stdout_json(&out);
    assert_eq!(v["kappa"], 1);
    assert_eq!(v["varrho"], 1.5);
    assert_eq!(v["type"], "Type1");
    validate("cone_info", &v);
}

#[test]
fn cone_info_from_spec_and_transform() {
    let dir = TempDir::new().unwrap();
    let spec = write_spec(&dir, "c.json", &json!({"garding": {"k": 1, "n": 4}}));
    let v = stdout_json(&conekit(&["cone", "info", "--spec", &spec]));
    assert_eq!(v["kappa"], 3);
    assert_eq!(v["type"], "Type2");

    let out = conekit(&["cone", "transform", "--garding", "2", "3", "--rho", "-0.5"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let v = stdout_json(&out);
    validate("cone_transform", &v);
    assert_eq!(v["transformed"]["dim"], 3);

    // ρ = n makes the map singular
    let out = conekit(&["cone", "transform", "--garding", "2", "3", "--rho", "3"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn eig_verify_has_no_violations() {
    let dir = TempDir::new().unwrap();
    let csv = dir.path().join("rows.csv");
    let out = conekit(&[
        "eig", "verify", "--n", "4", "--trials", "10000", "--eps", "0.5", "--seed", "7", "--out",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let v = stdout_json(&out);
    assert_eq!(v["violations"], 0);
    assert_eq!(v["trials"], 10000);
    validate("eig_verify", &v);
    let rows = fs::read_to_string(csv).unwrap();
    assert!(rows.starts_with("trial,n,threshold,corner,worst_margin,violation\n"));
    assert_eq!(rows.lines().count(), 10001);
}

#[test]
fn missing_spec_exits_one() {
    let out = conekit(&["op", "audit", "--spec", "missing.json"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("missing.json"));
}

#[test]
fn malformed_spec_names_path_and_field() {
    let dir = TempDir::new().unwrap();
    let bad = write_spec(&dir, "bad.json", &json!({"operator": {"sigma_k_root": {"k": 2, "n": "three"}}}));
    let out = conekit(&["op", "audit", "--spec", &bad]);
    assert_eq!(out.status.code(), Some(1));
    let err = stderr(&out);
    assert!(err.contains("bad.json") && err.contains("operator.sigma_k_root.n"), "{err}");

    let extra = write_spec(&dir, "extra.json", &json!({"operator": {"sigma_k_root": {"k": 2, "n": 3}}, "sample": 5}));
    let err = stderr(&conekit(&["op", "audit", "--spec", &extra]));
    assert!(err.contains("extra.json") && err.contains("sample"), "{err}");

    fs::write(dir.path().join("trunc.json"), "{\"operator\": {").unwrap();
    let out = conekit(&["op", "audit", "--spec", dir.path().join("trunc.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(conekit(&["cone", "explode"]).status.code(), Some(1));
    assert_eq!(conekit(&["cone", "info"]).status.code(), Some(1));
    assert_eq!(conekit(&["solve", "torus"]).status.code(), Some(1));
    assert_eq!(conekit(&["--help"]).status.code(), Some(0));
}

#[test]
fn op_audit_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let spec = write_spec(
        &dir,
        "op.json",
        &json!({"operator": {"induced": {"base": {"sigma_k_root": {"k": 2, "n": 3}}, "rho": 1.0}}}),
    );
    let csv = dir.path().join("audit.csv");
    let run = |seed: &str| {
        let out = conekit(&["op", "audit", "--spec", &spec, "--samples", "1500", "--seed", seed, "--out", csv.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
        out.stdout
    };
    let a = run("11");
    let b = run("11");
    let c = run("12");
    assert_eq!(a, b);
    assert_ne!(a, c);
    let v: Value = serde_json::from_slice(&a).unwrap();
    validate("op_audit", &v);
    assert_eq!(v["passed"], true);
    assert_eq!(v["ellipticity"]["regime"], "Uniform");
    let rows = fs::read_to_string(csv).unwrap();
    assert!(rows.lines().all(|l| l.split(',').count() == 3));
    assert!(rows.contains("\nellipticity,0,"));
}

#[test]
fn thread_cap_does_not_change_reports() {
    let args = ["eig", "verify", "--n", "5", "--trials", "500", "--eps", "0.3", "--seed", "3"];
    let base = conekit(&args).stdout;
    let capped = Command::new(env!("CARGO_BIN_EXE_conekit"))
        .args(args)
        .env("CONEKIT_THREADS", "1")
        .output()
        .unwrap();
    assert_eq!(base, capped.stdout);
    let bad = Command::new(env!("CARGO_BIN_EXE_conekit"))
        .args(args)
        .env("CONEKIT_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(1));
    assert!(stderr(&bad).contains("CONEKIT_THREADS"));
}

#[test]
fn op_theta_reports_positive_bound() {
    let v = stdout_json(&conekit(&["op", "theta", "--garding", "2", "4"]));
    validate("op_theta", &v);
    assert_eq!(v["bound"]["kappa"], 2);
    let theta = v["bound"]["theta"].as_f64().unwrap();
    assert!(theta > 0.0 && theta < 0.25);
}

#[test]
fn eig_localize_from_spec() {
    let dir = TempDir::new().unwrap();
    let spec = write_spec(
        &dir,
        "b.json",
        &json!({"d": [1.0, -0.5], "a": [[0.3, 0.1], [0.2, -0.4]], "corner": 20.0, "eps": 0.5}),
    );
    let out = conekit(&["eig", "localize", "--spec", &spec]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    validate("eig_localize", &v);
    assert_eq!(v["result"]["satisfied"], true);
    assert_eq!(v["check"]["violations"], 0);

    // below the growth threshold nothing is claimed
    let low = write_spec(&dir, "low.json", &json!({"d": [1.0, -0.5], "a": [[0.3, 0.1], [0.2, -0.4]], "corner": 1.0}));
    let v = stdout_json(&conekit(&["eig", "localize", "--spec", &low, "--eps", "0.5"]));
    validate("eig_localize", &v);
    assert_eq!(v["result"]["satisfied"], false);
}

#[test]
fn curvature_reduce_regimes() {
    let dir = TempDir::new().unwrap();
    let cases = [(-0.5, "UniformlyElliptic"), (-0.75, "Limiting"), (-1.0, "Inadmissible")];
    for (gamma, regime) in cases {
        let spec = write_spec(
            &dir,
            "r.json",
            &json!({"mixed": {"alpha": 0.0, "beta": 1.0, "gamma": gamma, "cone": {"garding": {"k": 2, "n": 3}}}}),
        );
        let v = stdout_json(&conekit(&["curvature", "reduce", "--spec", &spec]));
        validate("curvature_reduce", &v);
        assert_eq!(v["regime"], regime);
    }
    let spec = write_spec(&dir, "fc.json", &json!({"first_chern": {"n": 2, "degree": 0.5}}));
    let v = stdout_json(&conekit(&["curvature", "reduce", "--spec", &spec]));
    validate("curvature_reduce", &v);
    assert_eq!(v["regime"], "Direct");
    assert_eq!(v["chi_shift"], "zero");
    assert_eq!(v["lambda0"], 0.5);
}

#[test]
fn solve_radial_writes_csv() {
    let dir = TempDir::new().unwrap();
    let spec = json!({
        "n": 2, "intervals": 64, "chi_const": 15.0, "psi": {"constant": 1.0}, "lambda0": 1.0,
        "operator": {"sigma_k_root": {"k": 2, "n": 2}},
        "boundary": {"dirichlet": {"inner": 2.0, "outer": 2.0}}
    });
    validate("radial_spec", &spec);
    let path = write_spec(&dir, "rad.json", &spec);
    let csv = dir.path().join("phi.csv");
    let out = conekit(&["solve", "radial", "--spec", &path, "--out", csv.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let v = stdout_json(&out);
    validate("solve_radial", &v);
    assert!(v["report"]["residual"].as_f64().unwrap() <= 1e-10);
    let text = fs::read_to_string(csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,phi"));
    let rows: Vec<(f64, f64)> = lines
        .map(|l| {
            let (t, p) = l.split_once(',').unwrap();
            (t.parse().unwrap(), p.parse().unwrap())
        })
        .collect();
    assert_eq!(rows.len(), 65);
    assert_eq!(rows[0].1, 2.0);
    assert_eq!(rows[64], (1.0, 2.0));
}

#[test]
fn solve_radial_exhaustion_levels() {
    let dir = TempDir::new().unwrap();
    let spec = json!({
        "n": 2, "intervals": 48, "chi_const": 1.0, "psi": {"constant": 0.2}, "lambda0": 1.0,
        "operator": {"induced": {"base": {"sigma_k_root": {"k": 2, "n": 2}}, "rho": 0.5}},
        "boundary": {"exhaustion": {"ks": [2, 4, 8]}}
    });
    let path = write_spec(&dir, "ex.json", &spec);
    let csv = dir.path().join("ex.csv");
    let out = conekit(&["solve", "radial", "--spec", &path, "--out", csv.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let v = stdout_json(&out);
    validate("solve_radial_exhaustion", &v);
    assert_eq!(v["monotone"], true);
    let text = fs::read_to_string(csv).unwrap();
    assert!(text.starts_with("t,phi_k2,phi_k4,phi_k8\n"));
    assert_eq!(text.lines().count(), 50);
}

#[test]
fn solve_torus_binary_output() {
    let dir = TempDir::new().unwrap();
    // f(ω) = 1 = (3/4) e^u on a flat background
    let spec = json!({
        "side": 8, "chi": {"scalar": 1.0}, "psi": {"constant": 0.75}, "lambda0": 1.0,
        "operator": {"sigma_k_root": {"k": 2, "n": 2}}
    });
    validate("torus_spec", &spec);
    let path = write_spec(&dir, "t.json", &spec);
    let bin = dir.path().join("u.bin");
    let out = conekit(&["solve", "torus", "--spec", &path, "--out", bin.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    validate("solve_torus", &stdout_json(&out));

    let bytes = fs::read(bin).unwrap();
    let nl = bytes.iter().position(|b| *b == b'\n').unwrap();
    let header: Value = serde_json::from_slice(&bytes[..nl]).unwrap();
    validate("torus_header", &header);
    assert_eq!(header["len"], 4096);
    let body = &bytes[nl + 1..];
    assert_eq!(body.len(), 4096 * 8);
    let expected = (4f64 / 3.0).ln();
    for chunk in body.chunks_exact(8) {
        let u = f64::from_le_bytes(chunk.try_into().unwrap());
        assert!((u - expected).abs() <= 1e-9);
    }
}

#[test]
fn solve_torus_rejects_inadmissible_background() {
    let dir = TempDir::new().unwrap();
    let spec = json!({
        "side": 4, "chi": {"scalar": -1.0}, "psi": {"constant": 1.0}, "lambda0": 1.0,
        "operator": {"sigma_k_root": {"k": 2, "n": 2}}
    });
    let path = write_spec(&dir, "t.json", &spec);
    let out = conekit(&["solve", "torus", "--spec", &path]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn convergence_report_second_order() {
    let out = conekit(&["report", "convergence", "--n", "3", "--grids", "64,128,256"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let v = stdout_json(&out);
    validate("report_convergence", &v);
    assert_eq!(v["reference"], "exact");
    for o in v["orders"].as_array().unwrap() {
        assert!((o.as_f64().unwrap() - 2.0).abs() <= 0.25, "{v}");
    }

    let dir = TempDir::new().unwrap();
    let spec = json!({
        "n": 2, "intervals": 32, "chi_const": 15.0, "psi": {"constant": 1.0}, "lambda0": 1.0,
        "operator": {"sigma_k_root": {"k": 2, "n": 2}},
        "boundary": {"dirichlet": {"inner": 2.0, "outer": 2.5}}
    });
    let path = write_spec(&dir, "rad.json", &spec);
    let v = stdout_json(&conekit(&["report", "convergence", "--spec", &path, "--grids", "32,64,128"]));
    validate("report_convergence", &v);
    assert_eq!(v["reference"], "self");
    let r = v["ratios"][1].as_f64().unwrap();
    assert!((3.0..=5.0).contains(&r), "{v}");

    let out = conekit(&["report", "convergence", "--spec", &path, "--grids", "32,48"]);
    assert_eq!(out.status.code(), Some(1));
}
