use std::path::{Path, PathBuf};
use std::process::Command;

use cknet_cli::obj;
use serde_json::Value;

fn cknet(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_cknet")).args(args).output().unwrap();
    (out.status.code().unwrap(), String::from_utf8(out.stdout).unwrap(), String::from_utf8(out.stderr).unwrap())
}

fn check<'a>(report: &'a Value, name: &str) -> &'a Value {
    report["checks"].as_array().unwrap().iter().find(|c| c["name"] == name).unwrap_or_else(|| panic!("no check {name}"))
}

fn path(dir: &Path, name: &str) -> String {
    dir.join(name).to_string_lossy().into_owned()
}

fn schema() -> Value {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("schema/report.schema.json");
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

const PSEUDOSPHERE: &[&str] = &["generate", "--surface.kappa", "1", "--rotation.k0", "6", "--rotation.k_count", "9"];

#[test]
fn pseudosphere_of_revolution() {
    let dir = tempfile::tempdir().unwrap();
    let mesh = path(dir.path(), "p.obj");
    let mut args = PSEUDOSPHERE.to_vec();
    args.extend(["--output.mesh", &mesh]);
    let (code, stdout, _) = cknet(&args);
    assert_eq!(code, 0);
    let report: Value = serde_json::from_str(&stdout).unwrap();
    assert!(check(&report, "gaussian_constancy")["max_residual"].as_f64().unwrap() < 1e-9);
    assert_eq!(report["pass"], true);
    let m = obj::parse_obj(&std::fs::read_to_string(&mesh).unwrap()).unwrap();
    assert_eq!(m.v.len(), m.vn.len());
    assert_eq!(m.f.len() + m.degenerate.len(), (m.v.len() / 9 - 1) * 8);
}

#[test]
fn double_transform_annulus() {
    let (code, stdout, stderr) = cknet(&[
        "double",
        "--surface.kappa",
        "0.6",
        "--rotation.k0",
        "6",
        "--rotation.k_count",
        "22",
        "--backlund.n0",
        "9",
        "--backlund.slice",
        "imaginary",
    ]);
    assert_eq!(code, 0, "{stderr}");
    let report: Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(report["results"]["period"], 18.0);
    assert!(check(&report, "transform_period")["max_residual"].as_f64().unwrap() < 1e-8);
    assert!(check(&report, "reality")["pass"].as_bool().unwrap());
}

#[test]
fn single_transform_report() {
    let (code, stdout, stderr) =
        cknet(&["backlund", "--surface.kappa", "1.4", "--rotation.k0", "6", "--backlund.alpha", "1.0"]);
    assert_eq!(code, 0, "{stderr}");
    let report: Value = serde_json::from_str(&stdout).unwrap();
    for name in ["backlund_distance", "backlund_angle", "backlund_orthogonality", "gaussian_constancy"] {
        assert_eq!(check(&report, name)["pass"], true);
    }
}

#[test]
fn inconsistent_rotation_is_a_config_error() {
    let (code, _, stderr) = cknet(&["generate", "--rotation.k0", "6", "--rotation.theta", "0.5"]);
    assert_eq!(code, 2);
    let err: Value = serde_json::from_str(stderr.lines().next().unwrap()).unwrap();
    assert_eq!(err["stage"], "config");
}

#[test]
fn unknown_command_is_a_config_error() {
    assert_eq!(cknet(&["render"]).0, 2);
}

#[test]
fn numeric_failure_names_the_stage() {
    let (code, _, stderr) = cknet(&["generate", "--surface.k_sign", "1", "--surface.kappa", "1", "--rotation.k0", "6"]);
    assert_eq!(code, 3);
    let err: Value = serde_json::from_str(stderr.lines().next().unwrap()).unwrap();
    assert_eq!(err["stage"], "connect");
}

#[test]
fn perturbed_profile_fails_curvature() {
    let mut args = PSEUDOSPHERE.to_vec();
    args.extend(["--surface.perturb", "1e-3", "--surface.perturb_j", "1"]);
    let (code, stdout, _) = cknet(&args);
    assert_eq!(code, 1);
    let report: Value = serde_json::from_str(&stdout).unwrap();
    let g = check(&report, "gaussian_constancy");
    assert_eq!(g["pass"], false);
    let r = g["max_residual"].as_f64().unwrap();
    assert!(r > 1e-4 && r < 1e-1, "{r}");
}

#[test]
fn reports_validate_against_schema() {
    let schema = schema();
    let validator = jsonschema::validator_for(&schema).unwrap();
    for args in [PSEUDOSPHERE.to_vec(), vec!["search", "--surface.kappa", "0.6", "--rotation.k0", "6"], vec!["check"]] {
        let (_, stdout, _) = cknet(&args);
        let report: Value = serde_json::from_str(&stdout).unwrap();
        assert!(validator.is_valid(&report), "{args:?}");
    }
    assert!(!validator.is_valid(&serde_json::json!({"command": "generate"})));
}

#[test]
fn identical_config_gives_identical_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let run = |tag: &str| {
        let (mesh, report) = (path(dir.path(), &format!("{tag}.obj")), path(dir.path(), &format!("{tag}.json")));
        let mut args = PSEUDOSPHERE.to_vec();
        args.extend(["--output.mesh", &mesh, "--output.report", &report]);
        assert_eq!(cknet(&args).0, 0);
        (std::fs::read(&mesh).unwrap(), std::fs::read_to_string(&report).unwrap())
    };
    let (m1, r1) = run("a");
    let (m2, r2) = run("b");
    assert_eq!(m1, m2);
    assert_eq!(r1.replace("a.obj", "").replace("a.json", ""), r2.replace("b.obj", "").replace("b.json", ""));
}

#[test]
fn ini_and_json_files_agree() {
    let dir = tempfile::tempdir().unwrap();
    let ini = path(dir.path(), "job.ini");
    let json = path(dir.path(), "job.json");
    std::fs::write(&ini, "[surface]\nkappa = 1.4\n\n[rotation]\nk0 = 5\n").unwrap();
    std::fs::write(&json, r#"{"surface": {"kappa": 1.4}, "rotation": {"k0": 5}}"#).unwrap();
    let a = cknet(&["generate", "--config", &ini]);
    let b = cknet(&["generate", "--config", &json]);
    assert_eq!(a.0, 0);
    assert_eq!(a.1, b.1);
    let c = cknet(&["generate", "--config", &ini, "--surface.kappa", "0.6"]);
    let report: Value = serde_json::from_str(&c.1).unwrap();
    assert_eq!(report["params"]["surface"]["kappa"], "0.6");
}

#[test]
fn check_runs_every_criterion() {
    let (code, stdout, _) = cknet(&["check"]);
    assert_eq!(code, 0);
    let report: Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(report["checks"].as_array().unwrap().len(), 11);
}
