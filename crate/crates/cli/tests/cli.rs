use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_chamberflow"));
    c.env_remove("CHAMBERFLOW_SEED");
    c
}

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn run(c: &mut Command) -> (i32, Value, String) {
    let Output { status, stdout, stderr } = c.output().expect("binary runs");
    let text = String::from_utf8(stdout).expect("utf-8");
    let v = if text.trim().is_empty() { Value::Null } else { serde_json::from_str(&text).expect("JSON report") };
    (status.code().unwrap_or(-1), v, String::from_utf8_lossy(&stderr).into_owned())
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

const G: &str = r#"{"n": 3, "rows": [[2.0, 1.0, 0.0], [0.0, 1.0, 1.0], [1.0, 0.0, 1.0]]}"#;

/// G scaled to determinant one.
fn g_unimodular() -> String {
    let s = 3f64.cbrt();
    let rows = [[2.0, 1.0, 0.0], [0.0, 1.0, 1.0], [1.0, 0.0, 1.0]]
        .iter()
        .map(|r| r.iter().map(|x| x / s).collect::<Vec<_>>())
        .collect::<Vec<_>>();
    serde_json::json!({ "n": 3, "rows": rows }).to_string()
}

#[test]
fn decompose_reports_small_residuals() {
    let dir = tempfile::tempdir().unwrap();
    let g = write(dir.path(), "g.json", &g_unimodular());
    let (code, v, _) = run(bin().arg("decompose").arg(&g));
    assert_eq!(code, 0);
    for k in ["kan", "kan_minus", "kak", "bruhat"] {
        let r = v["result"][k]["residual"].as_f64().unwrap();
        assert!(r < 1e-12, "{k}: {r}");
    }
    assert!(v["config_hash"].as_str().unwrap().len() == 64);
}

#[test]
fn decompose_without_input_samples_from_the_seed() {
    let (c1, a, _) = run(bin().args(["--seed", "5", "decompose", "--kind", "kan"]));
    let (c2, b, _) = run(bin().args(["--seed", "5", "decompose", "--kind", "kan"]));
    assert_eq!((c1, c2), (0, 0));
    assert_eq!(a["result"], b["result"]);
    assert!(a["result"].get("kak").is_none());
}

#[test]
fn wrong_determinant_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let g = write(dir.path(), "g.json", G);
    let (code, v, err) = run(bin().arg("decompose").arg(&g));
    assert_eq!(code, 2);
    assert!(v.is_null());
    assert!(err.contains("determinant"), "{err}");
}

#[test]
fn corrupt_input_exits_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.json", "{ not json");
    assert_eq!(run(bin().arg("lox").arg(&bad)).0, 2);
    assert_eq!(run(bin().arg("lox").arg(dir.path().join("missing.json"))).0, 2);
}

#[test]
fn transverse_exit_code_follows_the_answer() {
    let dir = tempfile::tempdir().unwrap();
    let e = write(dir.path(), "e.json", r#"{"n": 2, "rows": [[1, 0], [0, 1]]}"#);
    let w = write(dir.path(), "w.json", r#"{"n": 2, "rows": [[0, -1], [1, 0]]}"#);
    let (code, v, _) = run(bin().arg("transverse").arg(&e).arg(&w));
    assert_eq!(code, 0);
    assert_eq!(v["result"]["transverse"], Value::Bool(true));
    let (code, v, _) = run(bin().arg("transverse").arg(&e).arg(&e));
    assert_eq!(code, 1);
    assert_eq!(v["result"]["transverse"], Value::Bool(false));
}

#[test]
fn compact_cocycle_a_part_is_the_iwasawa_cocycle() {
    let dir = tempfile::tempdir().unwrap();
    let g = write(dir.path(), "g.json", &g_unimodular());
    let c = 0.6f64;
    let s = (1.0 - c * c).sqrt();
    let rot = serde_json::json!({"n": 3, "rows": [[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]]}).to_string();
    let k = write(dir.path(), "k.json", &rot);
    let e = write(dir.path(), "e.json", r#"{"n": 3, "rows": [[1,0,0],[0,1,0],[0,0,1]]}"#);
    let xi = write(dir.path(), "xi.json", r#"{"n": 3, "rows": [[1,2,0.5],[0.3,1,2],[2,0.1,1]]}"#);
    let (code, v, err) = run(bin()
        .args(["cocycle", "--kind", "compact", "--s1"])
        .arg(&k)
        .arg("--s0")
        .arg(&e)
        .arg("--g")
        .arg(&g)
        .arg("--xi")
        .arg(&xi));
    assert_eq!(code, 0, "{err}");
    let a: Vec<f64> = serde_json::from_value(v["result"]["a"].clone()).unwrap();
    let sigma: Vec<f64> = serde_json::from_value(v["result"]["iwasawa_cocycle"].clone()).unwrap();
    for (x, y) in a.iter().zip(&sigma) {
        assert!((x - y).abs() < 1e-9);
    }
    assert_eq!(v["result"]["m"].as_array().unwrap().len(), 3);
}

#[test]
fn lox_reports_sorted_lambda() {
    let dir = tempfile::tempdir().unwrap();
    let g = write(dir.path(), "g.json", r#"{"n": 3, "rows": [[4, 0, 0], [0, 0.5, 0], [0, 0, 0.5]]}"#);
    // 0.5 is repeated: not loxodromic
    assert_eq!(run(bin().arg("lox").arg(&g)).0, 1);
    let g = write(dir.path(), "g2.json", r#"{"n": 3, "rows": [[4, 1, 0], [0, 1, 0], [0, 0, 0.25]]}"#);
    let (code, v, _) = run(bin().arg("lox").arg(&g));
    assert_eq!(code, 0);
    let l: Vec<f64> = serde_json::from_value(v["result"]["lambda"].clone()).unwrap();
    assert!((l[0] - 4f64.ln()).abs() < 1e-12 && l[0] > l[1] && l[1] > l[2]);
    assert!(v["result"]["attracting"]["rep"].is_object());
}

#[test]
fn config_file_and_seed_environment_variable() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "run.json", r#"{"seed": 9}"#);
    let (_, v, _) = run(bin().arg("--config").arg(&cfg).args(["--seed", "3", "decompose", "--kind", "kan"]));
    assert_eq!(v["config"]["seed"], 9);
    let (_, w, _) = run(bin()
        .env("CHAMBERFLOW_SEED", "11")
        .arg("--config")
        .arg(&cfg)
        .args(["decompose", "--kind", "kan"]));
    assert_eq!(w["config"]["seed"], 11);
    assert_ne!(v["config_hash"], w["config_hash"]);

    let typo = write(dir.path(), "typo.json", r#"{"sede": 9}"#);
    assert_eq!(run(bin().arg("--config").arg(&typo).arg("decompose")).0, 2);
    assert_eq!(run(bin().env("CHAMBERFLOW_SEED", "x").arg("decompose")).0, 2);
}

#[test]
fn tight_tolerance_reports_failures_with_residuals() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "run.json", r#"{"tolerances": {"tol_recon": 1e-15}}"#);
    let (code, v, _) = run(bin().arg("--config").arg(&cfg).args(["verify", "decompositions"]));
    assert_eq!(code, 1);
    for r in v["result"]["results"].as_array().unwrap() {
        assert_eq!(r["pass"], Value::Bool(false));
        assert!(r["max_residual"].as_f64().unwrap() > 1e-15);
    }
}

#[test]
fn unknown_suite_is_a_configuration_error() {
    assert_eq!(run(bin().args(["verify", "nonsense"])).0, 2);
}

#[test]
fn verify_prop_crucial_with_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "run.json", r#"{"seed": 42, "budgets": {"mc_samples": 1000}}"#);
    let (code, v, _) = run(bin().args(["verify", "prop-crucial", "--config"]).arg(&cfg));
    assert_eq!(code, 0);
    let results = v["result"]["results"].as_array().unwrap();
    assert_eq!(results.len(), 6);
    for r in results {
        assert!(r["max_residual"].as_f64().unwrap() <= r["tolerance"].as_f64().unwrap());
    }
}

#[test]
fn verify_is_deterministic() {
    let run_once = || {
        let out = bin().args(["verify", "cocycles", "loxodromy"]).output().unwrap();
        let s = String::from_utf8(out.stdout).unwrap();
        s.lines().filter(|l| !l.contains("timestamp_unix")).collect::<Vec<_>>().join("\n")
    };
    assert_eq!(run_once(), run_once());
}

#[test]
fn limit_cone_writes_csv_and_deterministic_svg() {
    let dir = tempfile::tempdir().unwrap();
    let out1 = dir.path().join("a");
    let out2 = dir.path().join("b");
    for (o, len) in [(&out1, "4"), (&out2, "4")] {
        let (code, v, _) = run(bin().arg("--out-dir").arg(o).args(["schottky", "limit-cone", "--max-len", len]));
        assert_eq!(code, 0);
        assert_eq!(v["result"]["words"], 120);
    }
    let csv = std::fs::read_to_string(out1.join("cone.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "word_id,length,lambda_1,lambda_2,lambda_3,dir_x,dir_y");
    assert_eq!(lines.count(), 120);
    let a = std::fs::read(out1.join("cone.svg")).unwrap();
    let b = std::fs::read(out2.join("cone.svg")).unwrap();
    assert_eq!(a, b);
    assert!(String::from_utf8(a).unwrap().starts_with("<svg"));
}

#[test]
fn limit_cone_nests_as_the_word_length_grows() {
    let dir = tempfile::tempdir().unwrap();
    let mut sizes = vec![];
    for len in ["4", "5"] {
        let o = dir.path().join(len);
        let (code, v, _) = run(bin().arg("--out-dir").arg(&o).args(["limit-cone", "--max-len", len]));
        assert_eq!(code, 0);
        sizes.push(v["result"]["words"].as_u64().unwrap());
        let csv = std::fs::read_to_string(o.join("cone.csv")).unwrap();
        sizes.push(csv.lines().count() as u64 - 1);
    }
    assert_eq!(sizes, vec![120, 120, 363, 363]);
}

#[test]
fn limit_cone_in_sl4_skips_the_svg() {
    let dir = tempfile::tempdir().unwrap();
    let (code, v, err) = run(bin()
        .arg("--out-dir")
        .arg(dir.path())
        .args(["limit-cone", "--max-len", "3", "--r", "0.1", "--eps", "0.1", "--seeds"])
        .arg(data("sl4_seeds.json")));
    assert_eq!(code, 0, "{err}");
    assert!(err.contains("skipped"));
    assert!(v["result"]["svg"].is_null());
    assert!(dir.path().join("cone.csv").exists());
    assert!(!dir.path().join("cone.svg").exists());
    let csv = std::fs::read_to_string(dir.path().join("cone.csv")).unwrap();
    assert!(csv.starts_with("word_id,length,lambda_1,lambda_2,lambda_3,lambda_4,dir_x,dir_y"));
}

#[test]
fn sign_group_and_decorrelation_of_the_engineered_family() {
    let (code, v, _) = run(bin().args(["sign-group"]));
    assert_eq!(code, 0);
    assert_eq!(v["result"]["order"], 4);
    let (code, v, _) = run(bin().args(["schottky", "decor-check"]));
    assert_eq!(code, 0);
    assert_eq!(v["result"]["decorrelation"]["rows"].as_array().unwrap().len(), 4);
}

#[test]
fn exterior_probe_warns_and_finds_nothing() {
    let (code, v, err) = run(bin().args(["mix-probe", "--direction", "exterior", "--budget", "20000"]));
    assert_eq!(code, 0);
    assert!(err.contains("warning"));
    assert_eq!(v["result"]["hits"], 0);
}

#[test]
fn density_select_and_cone() {
    let pts = data("d1k1.json");
    let (code, v, _) = run(bin().args(["density", "select", "--delta", "0.1", "--input"]).arg(&pts));
    assert_eq!(code, 0);
    assert_eq!(v["result"]["certificate"]["covered"], Value::Bool(true));
    assert!(v["result"]["certificate"]["subset"].as_array().unwrap().len() <= 5);
    assert_eq!(v["result"]["reverification"]["uncovered"], 0);

    let (code, v, _) = run(bin()
        .args(["density", "cone", "--delta", "0.1", "--window", "-5,5", "--input"])
        .arg(&pts));
    assert_eq!(code, 0);
    assert!(v["result"]["v_f"][0].as_f64().is_some());

    // beyond the coefficient budget
    let (code, _, err) = run(bin()
        .args(["density", "select", "--delta", "0.01", "--window", "0,1", "--input"])
        .arg(&pts));
    assert_eq!(code, 1);
    assert!(err.contains("not dense"));
}

#[test]
fn bad_window_is_a_usage_error() {
    let pts = data("d1k1.json");
    let (code, _, _) = run(bin().args(["density", "select", "--delta", "0.1", "--window", "3,1", "--input"]).arg(&pts));
    assert_eq!(code, 2);
}

#[test]
fn density_bridge_on_an_irrational_pair() {
    let (code, v, err) = run(bin().args(["density", "bridge", "--fixture", "sl2-irrational-pair", "--delta", "0.1"]));
    assert_eq!(code, 0, "{err}");
    assert_eq!(v["result"]["residual_pass"], Value::Bool(true));
}
