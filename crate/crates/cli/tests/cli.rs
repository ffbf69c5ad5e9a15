use std::fs;
use std::path::Path;
use std::process::{Command, Output, Stdio};

use serde_json::Value;

fn cfgu(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cfgu"))
        .args(args)
        .current_dir(cwd)
        .env_remove("CFGU_WORKERS")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str], cwd: &Path) -> Output {
    let out = cfgu(args, cwd);
    assert!(
        out.status.success(),
        "cfgu {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn json(path: impl AsRef<Path>) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn synth(dir: &Path, preset: &str, seed: &str) {
    ok(&["synth", "--preset", preset, "--seed", seed, "--out", "s"], dir);
}

#[test]
fn synth_is_deterministic_and_writes_preset_knowledge() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&["synth", "--preset", "medium", "--seed", "7", "--out", "a"], d);
    ok(&["synth", "--preset", "medium", "--seed", "7", "--out", "b"], d);
    for f in ["data.csv", "knowledge.toml", "config.toml"] {
        assert_eq!(fs::read(d.join("a").join(f)).unwrap(), fs::read(d.join("b").join(f)).unwrap(), "{f}");
    }
    let k: toml::Value = toml::from_str(&fs::read_to_string(d.join("a/knowledge.toml")).unwrap()).unwrap();
    assert_eq!(k["tiers"], toml::Value::try_from(vec![vec!["A"], vec!["X1", "X2"]]).unwrap());
    assert_eq!(fs::read_to_string(d.join("a/data.csv")).unwrap().lines().count(), 1001);

    ok(&["synth", "--preset", "high", "--out", "h"], d);
    let k: toml::Value = toml::from_str(&fs::read_to_string(d.join("h/knowledge.toml")).unwrap()).unwrap();
    assert_eq!(k["tiers"], toml::Value::try_from(vec![vec!["A"], vec!["X1"], vec!["X2"]]).unwrap());

    ok(&["synth", "--preset", "medium", "--seed", "8", "--out", "c"], d);
    assert_ne!(fs::read(d.join("a/data.csv")).unwrap(), fs::read(d.join("c/data.csv")).unwrap());
}

#[test]
fn discover_single_replicate_keeps_the_whole_class() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    synth(d, "low", "3");
    ok(&["discover", "-c", "s/config.toml", "--bootstrap", "1", "-o", "out"], d);
    let e = json(d.join("out/entropy.json"));
    assert_eq!(e["unique_cpdags"], 1);
    assert_eq!(e["bootstrap"], 1);
    let dags = fs::read_to_string(d.join("out/bag/dags.jsonl")).unwrap();
    assert_eq!(dags.lines().count() as u64, e["total_dags"].as_u64().unwrap());
    for key in ["H_G", "H_GA"] {
        let h = e[key].as_f64().unwrap();
        assert!((0.0..=1.0).contains(&h), "{key} = {h}");
    }
    let header = fs::read_to_string(d.join("out/edges.csv")).unwrap();
    assert!(header.starts_with("edge,p_e,H_e"));
}

#[test]
fn contradictory_knowledge_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    synth(d, "medium", "1");
    fs::write(d.join("s/knowledge.toml"), "tiers = [[\"X1\"], [\"A\"]]\nrequired = [\"A -> X1\"]\n").unwrap();
    let out = cfgu(&["discover", "-c", "s/config.toml", "-o", "out"], d);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("A -> X1"));
    assert!(!d.join("out").exists());
}

#[test]
fn bad_input_and_runtime_failures_use_distinct_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(cfgu(&["audit"], d).status.code(), Some(1));
    assert_eq!(cfgu(&["audit", "--nope"], d).status.code(), Some(1));
    assert_eq!(cfgu(&["audit", "-c", "missing.toml"], d).status.code(), Some(1));
    assert_eq!(cfgu(&["audit", "--preset", "low", "--alpha", "1.5"], d).status.code(), Some(1));
    assert_eq!(cfgu(&["--help"], d).status.code(), Some(0));
    synth(d, "medium", "1");
    let out = cfgu(&["audit", "-c", "s/config.toml", "--bootstrap", "2", "--scorer-cmd", "false"], d);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn audit_reports_are_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    synth(d, "medium", "11");
    ok(&["audit", "-c", "s/config.toml", "--bootstrap", "20", "-o", "r1"], d);
    ok(&["audit", "-c", "s/config.toml", "--bootstrap", "20", "-o", "r2", "--workers", "1"], d);
    for f in [
        "report.json",
        "entropy.json",
        "bag/dags.jsonl",
        "models_lr_0_to_1.csv",
        "individuals_lr_1_to_0.csv",
    ] {
        assert_eq!(fs::read(d.join("r1").join(f)).unwrap(), fs::read(d.join("r2").join(f)).unwrap(), "{f}");
    }
    let r = json(d.join("r1/report.json"));
    assert_eq!(r["config"]["discovery"]["bootstrap"], 20);
    assert!(r["config"].get("out").is_none());
}

#[test]
fn forbidding_x1_removes_switches() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    synth(d, "forbid-x1", "42");
    ok(&["audit", "-c", "s/config.toml", "-o", "out"], d);
    let r = json(d.join("out/report.json"));
    let dir0 = &r["scorers"][0]["directions"][0];
    assert_eq!(dir0["from"], "0");
    let psr = dir0["psr"]["mean"].as_f64().unwrap();
    assert!(psr < 0.05, "PSR {psr}");
    assert_eq!(dir0["feature_variance"]["X1"].as_f64().unwrap(), 0.0);
}

#[test]
fn constant_zero_scorer_leaves_nsr_undefined() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    synth(d, "medium", "5");
    ok(
        &[
            "audit",
            "-c",
            "s/config.toml",
            "--bootstrap",
            "5",
            "-o",
            "out",
            "--scorer-cmd",
            "sh -c 'tail -n +2 | sed s/.*/0/'",
        ],
        d,
    );
    let r = json(d.join("out/report.json"));
    let s = &r["scorers"][0];
    assert_eq!(s["kind"], "external");
    for dir in s["directions"].as_array().unwrap() {
        assert_eq!(dir["psr"]["mean"].as_f64().unwrap(), 0.0);
        assert!(dir["nsr"].is_null());
        assert_eq!(dir["nsr_undefined"], dir["models"].as_array().unwrap().len());
    }
    assert!(!r["warnings"].as_array().unwrap().is_empty());
}

#[test]
fn exported_model_scores_match_as_external_scorer() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    synth(d, "medium", "9");
    ok(&["audit", "-c", "s/config.toml", "--bootstrap", "10", "-o", "lr"], d);
    let model = d.join("lr/model_lr.json");
    let cmd = format!("{} score --model {}", env!("CARGO_BIN_EXE_cfgu"), model.display());
    ok(&["audit", "-c", "s/config.toml", "--bootstrap", "10", "-o", "ext", "--scorer-cmd", &cmd], d);
    let a = json(d.join("lr/report.json"));
    let b = json(d.join("ext/report.json"));
    for (x, y) in a["scorers"][0]["directions"]
        .as_array()
        .unwrap()
        .iter()
        .zip(b["scorers"][0]["directions"].as_array().unwrap())
    {
        assert_eq!(x["models"], y["models"]);
    }

    let m = json(&model);
    let w: Vec<f64> = m["weights"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    let bias = m["bias"].as_f64().unwrap();
    let rows = [[0.3, -1.2], [2.0, 0.5], [-0.7, 0.0]];
    let mut input = String::from("X2,X1\n");
    for r in &rows {
        input.push_str(&format!("{},{}\n", r[1], r[0]));
    }
    let mut child = Command::new(env!("CARGO_BIN_EXE_cfgu"))
        .args(["score", "--model"])
        .arg(&model)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    use std::io::Write;
    child.stdin.take().unwrap().write_all(input.as_bytes()).unwrap();
    let out = child.wait_with_output().unwrap();
    assert!(out.status.success());
    let got: Vec<f64> = String::from_utf8(out.stdout).unwrap().lines().map(|l| l.parse().unwrap()).collect();
    assert_eq!(m["features"], serde_json::json!(["X1", "X2"]));
    for (r, g) in rows.iter().zip(&got) {
        let z = bias + w[0] * r[0] + w[1] * r[1];
        let p = 1.0 / (1.0 + (-z).exp());
        assert!((p - g).abs() < 1e-9, "{p} vs {g}");
    }
}
