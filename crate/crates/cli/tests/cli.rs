use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use jsonschema::JSONSchema;
use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_thinfilm");

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .env("THINFILM_OUT", dir)
        .env("SOURCE_DATE_EPOCH", "1700000000")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn summary(dir: &Path, stem: &str) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join(format!("{stem}.json"))).unwrap()).unwrap()
}

fn schema() -> JSONSchema {
    let text = fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/schema/summary.schema.json")).unwrap();
    JSONSchema::compile(&serde_json::from_str(&text).unwrap()).expect("schema compiles")
}

fn assert_valid(doc: &Value) {
    let schema = schema();
    let msgs: Vec<String> = match schema.validate(doc) {
        Ok(()) => Vec::new(),
        Err(errors) => errors.map(|e| format!("{e} at {}", e.instance_path)).collect(),
    };
    assert!(msgs.is_empty(), "schema violations: {msgs:#?}");
}

fn floats(v: &Value) -> Vec<f64> {
    v.as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect()
}

#[test]
fn smooth_run_writes_valid_summary_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["smooth", "--alpha", "3", "--dim", "2", "--p", "0.333333", "--eta", "2", "--k", "10", "--gnuplot"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let doc = summary(dir.path(), "smooth");
    assert_valid(&doc);
    assert_eq!(doc["version"], 1);
    assert_eq!(doc["manifest"]["timestamp"], 1_700_000_000u64);
    let res = &doc["result"];
    let heights = floats(&res["critical_heights"]);
    assert_eq!(floats(&res["critical_radii"]).len(), 10);
    let xi = res["xi"].as_f64().unwrap();
    for w in heights.windows(2) {
        assert!((w[0] - xi) * (w[1] - xi) < 0.0);
    }
    assert_eq!(res["energy"]["passed"], true);
    assert_eq!(floats(&res["hbar"]).len(), 10);

    let csv = fs::read_to_string(dir.path().join("smooth.csv")).unwrap();
    assert!(!csv.contains('\r'));
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("r,h,dh,e1,e2"));
    let mut last = f64::NEG_INFINITY;
    for line in lines {
        let cols: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        assert_eq!(cols.len(), 5);
        assert!(cols[0] > last);
        last = cols[0];
    }
    assert!(dir.path().join("smooth.gp").exists());
    assert_eq!(doc["files"], serde_json::json!(["smooth.csv", "smooth.gp"]));
}

#[test]
fn flat_eta_reports_notice_and_no_critical_points() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["smooth", "--alpha", "3", "--dim", "2", "--p", "0.3333333333333333", "--eta", "1", "--k", "5"]);
    assert_eq!(code(&out), 0);
    let doc = summary(dir.path(), "smooth");
    assert_valid(&doc);
    assert_eq!(doc["result"]["flat"], true);
    assert!(doc["result"]["notice"].is_string());
    assert!(floats(&doc["result"]["critical_radii"]).is_empty());
}

#[test]
fn usage_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&run(dir.path(), &["smooth", "--alpha", "1", "--eta", "2"])), 2);
    assert_eq!(code(&run(dir.path(), &["smooth", "--alpha", "0.5", "--eta", "2"])), 2);
    assert_eq!(code(&run(dir.path(), &["smooth", "--eta", "-1"])), 2);
    assert_eq!(code(&run(dir.path(), &["verify", "--suite", "bogus"])), 2);
    assert_eq!(code(&run(dir.path(), &["bvp", "--mode", "pressure"])), 2);
    assert_eq!(code(&run(dir.path(), &["smooth", "--eta", "2", "--rel-tol", "0"])), 2);
    assert_eq!(code(&run(dir.path(), &["frobnicate"])), 2);
}

#[test]
fn solver_failure_exits_with_three() {
    // 10 critical points do not fit in r < 5 L
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["smooth", "--eta", "2", "--k", "10", "--r-max", "5"]);
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn identical_manifests_give_identical_bytes() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["rupture", "--alpha", "3", "--dim", "2", "--k", "12"];
    assert_eq!(code(&run(a.path(), &args)), 0);
    assert_eq!(code(&run(b.path(), &args)), 0);
    for name in ["rupture.csv", "rupture.json"] {
        assert_eq!(fs::read(a.path().join(name)).unwrap(), fs::read(b.path().join(name)).unwrap(), "{name}");
    }
}

#[test]
fn rupture_summary_reports_local_behavior() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["rupture", "--alpha", "3", "--dim", "2", "--p", "0.333333", "--k", "50"]);
    assert_eq!(code(&out), 0);
    let doc = summary(dir.path(), "rupture");
    assert_valid(&doc);
    let res = &doc["result"];
    assert!((res["spacing_tail"]["tail_mean"].as_f64().unwrap() - std::f64::consts::PI).abs() < 0.01 * std::f64::consts::PI);
    assert!((res["growth"]["slope"].as_f64().unwrap() - 0.5).abs() < 1e-3);
    assert!(res["cross_validation"].as_f64().unwrap() < 1e-6);
    assert!(res["weak_form_residual"].as_f64().unwrap() < 1e-6);
}

#[test]
fn bvp_pressure_recovers_the_shooting_height() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&run(dir.path(), &["smooth", "--eta", "2", "--k", "3"])), 0);
    let r3 = floats(&summary(dir.path(), "smooth")["result"]["critical_radii"])[2];
    let radius = format!("{r3}");
    let out = run(dir.path(), &["bvp", "--mode", "pressure", "--radius", &radius, "--k", "3"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let doc = summary(dir.path(), "bvp");
    assert_valid(&doc);
    let smooth = doc["result"]["menu"]["smooth"].as_array().unwrap();
    let hit = smooth.iter().find(|k| k["k"] == 3).expect("k = 3 solution");
    assert!((hit["eta"].as_f64().unwrap() - 2.0).abs() < 1e-6);

    let out = run(dir.path(), &["bvp", "--mode", "pressure", "--radius", "0.01", "--k", "3"]);
    assert_eq!(code(&out), 0);
    assert_eq!(summary(dir.path(), "bvp")["result"]["count"], 1);
}

#[test]
fn bvp_volume_finds_the_third_rupture_solution() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&run(dir.path(), &["bvp", "--mode", "volume", "--hbar", "1e9", "--k", "5"])), 0);
    let doc = summary(dir.path(), "bvp");
    assert_valid(&doc);
    assert!(doc["result"]["matched"].is_null());
    let hbar3 = doc["result"]["candidates"][2]["hbar"].as_f64().unwrap();
    let target = format!("{hbar3}");
    assert_eq!(code(&run(dir.path(), &["bvp", "--mode", "volume", "--alpha", "3", "--dim", "2", "--hbar", &target])), 0);
    let doc = summary(dir.path(), "bvp");
    assert_valid(&doc);
    assert_eq!(doc["result"]["matched"]["k"], 3);
    assert!(dir.path().join("bvp.csv").exists());
}

#[test]
fn verify_passes_and_the_perturbed_model_fails() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["verify", "--suite", "energies,rupture"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let doc = summary(dir.path(), "verify");
    assert_valid(&doc);
    assert_eq!(doc["result"]["passed"], true);
    assert_eq!(doc["result"]["suites"].as_array().unwrap().len(), 2);

    let out = run(dir.path(), &["verify", "--suite", "energies", "--f-offset", "1e-3"]);
    assert_eq!(code(&out), 4);
    let doc = summary(dir.path(), "verify");
    assert_valid(&doc);
    assert_eq!(doc["result"]["passed"], false);
}

#[test]
fn schema_rejects_malformed_summaries() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&run(dir.path(), &["smooth", "--eta", "2", "--k", "3"])), 0);
    let good = summary(dir.path(), "smooth");
    let schema = schema();
    assert!(schema.is_valid(&good));
    let mut no_version = good.clone();
    no_version.as_object_mut().unwrap().remove("version");
    assert!(!schema.is_valid(&no_version));
    let mut bad_result = good.clone();
    bad_result["result"]["critical_radii"] = Value::String("none".into());
    assert!(!schema.is_valid(&bad_result));
    let mut bad_manifest = good;
    bad_manifest["manifest"]["params"]["alpha"] = serde_json::json!(0.5);
    assert!(!schema.is_valid(&bad_manifest));
}
