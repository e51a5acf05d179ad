use std::path::Path;
use std::process::{Command, Output};

fn ptso(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ptso")).args(args).output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.display().to_string()
}

const QUICK: &str = r#"
seeds = [1]
[synthetic]
rows = 90
[fusion]
epochs = 20
[ptso]
max_evaluations = 300
[classifier]
profile = "linear"
"#;

#[test]
fn pipeline_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", QUICK);
    let out = dir.path().join("r.json");
    let o = ptso(&["pipeline", "--config", &cfg, "--out", out.to_str().unwrap(), "--seed", "5"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out).unwrap()).unwrap();
    assert_eq!(report["config"]["seeds"], serde_json::json!([5]));
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad_toml = write(dir.path(), "bad.toml", "seeds = [");
    assert_eq!(ptso(&["pipeline", "--config", &bad_toml]).status.code(), Some(2));
    let cfg = write(dir.path(), "c.toml", QUICK);
    // synthetic cohort has 15 features; fused count must be below that
    assert_eq!(ptso(&["pipeline", "--config", &cfg, "--fused-dim", "40"]).status.code(), Some(2));
    assert_eq!(ptso(&["pipeline", "--config", &cfg, "--profile", "nope"]).status.code(), Some(2));
}

#[test]
fn data_errors_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let data = write(dir.path(), "d.csv", "a,b,label\n1,2,0\n3,x,1\n");
    let cfg = write(dir.path(), "c.toml", &format!("dataset = {data:?}\nseeds = [1]\n"));
    assert_eq!(ptso(&["pipeline", "--config", &cfg]).status.code(), Some(3));

    let pred = write(dir.path(), "p.csv", "label\n1\n0\n");
    let truth = write(dir.path(), "t.csv", "label\n1\n");
    assert_eq!(ptso(&["eval", "--pred", &pred, "--truth", &truth]).status.code(), Some(3));
}

#[test]
fn eval_prints_scores() {
    let dir = tempfile::tempdir().unwrap();
    let pred = write(dir.path(), "p.csv", "id,label\n1,1\n2,1\n3,0\n4,0\n");
    let truth = write(dir.path(), "t.csv", "id,label\n1,1\n2,0\n3,1\n4,0\n");
    let o = ptso(&["eval", "--pred", &pred, "--truth", &truth, "--label-col", "label"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["counts"]["true_positive"], 1);
    assert_eq!(v["scores"]["precision"], 0.5);

    let none = write(dir.path(), "n.csv", "id,label\n1,0\n2,0\n3,0\n4,0\n");
    let o = ptso(&["eval", "--pred", &none, "--truth", &truth]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["scores"]["f_measure"], "undefined");
}

#[test]
fn optimize_and_bench() {
    let o = ptso(&["optimize", "--fn", "sphere", "--dim", "3", "--evals", "500", "--seed", "2"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["best_position"].as_array().unwrap().len(), 3);
    assert!(v["evaluations_used"].as_u64().unwrap() <= 500);

    let o = ptso(&["bench", "--fn", "rastrigin", "--dim", "2", "--evals", "300", "--seeds", "3", "--algo", "tsa"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 3);

    assert_eq!(ptso(&["optimize", "--fn", "nosuch"]).status.code(), Some(2));
}
