use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use hyperfactor::{exit_code, EXIT_INTERNAL};
use hyperfactor_core::pipeline::ExtendError;
use tempfile::TempDir;

fn bin(args: &[&str]) -> Output {
    bin_env(args, None)
}

fn bin_env(args: &[&str], seed: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_hyperfactor"));
    cmd.args(args).env_remove("HYPERFACTOR_SEED");
    if let Some(seed) = seed {
        cmd.env("HYPERFACTOR_SEED", seed);
    }
    cmd.output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn path(dir: &TempDir, name: &str) -> PathBuf {
    dir.path().join(name)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn gen(dir: &TempDir, name: &str, args: &[&str]) -> PathBuf {
    let out = path(dir, name);
    let mut full = vec!["gen"];
    full.extend_from_slice(args);
    full.extend_from_slice(&["-o", s(&out)]);
    let o = bin(&full);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    out
}

#[test]
fn extend_then_verify_round_trip() {
    let dir = TempDir::new().unwrap();
    let inst = gen(&dir, "i.json", &["--n", "9", "--m", "3", "--h", "3", "--seed", "4"]);
    let cert = path(&dir, "c.json");
    let trace = path(&dir, "t.jsonl");
    let o = bin(&["extend", s(&inst), "-o", s(&cert), "--trace", s(&trace)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let o = bin(&["verify", s(&cert), s(&inst)]);
    assert_eq!(code(&o), 0);
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report["pass"], true);

    let trace = std::fs::read_to_string(trace).unwrap();
    let stages: Vec<String> = trace
        .lines()
        .map(|l| serde_json::from_str::<serde_json::Value>(l).unwrap()["stage"].as_str().unwrap().to_string())
        .collect();
    assert_eq!(stages.iter().filter(|s| *s == "level").count(), 2);
    assert_eq!(stages.iter().filter(|s| *s == "detach").count(), 6);
}

#[test]
fn outputs_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    let a = gen(&dir, "a.json", &["--n", "8", "--m", "3", "--h", "2", "--r", "2,2,1,1,1", "--seed", "7"]);
    let b = gen(&dir, "b.json", &["--n", "8", "--m", "3", "--h", "2", "--r", "2,2,1,1,1", "--seed", "7"]);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());

    let first = bin(&["extend", s(&a), "--seed", "3"]);
    let second = bin(&["extend", s(&a), "--seed", "3"]);
    assert_eq!(code(&first), 0);
    assert_eq!(first.stdout, second.stdout);
    assert!(first.stdout.ends_with(b"]}\n"));
}

#[test]
fn seed_from_environment() {
    let dir = TempDir::new().unwrap();
    let flag = gen(&dir, "flag.json", &["--n", "10", "--m", "4", "--h", "2", "--seed", "11"]);
    let o = bin_env(&["gen", "--n", "10", "--m", "4", "--h", "2"], Some("11"));
    assert_eq!(code(&o), 0);
    assert_eq!(o.stdout, std::fs::read(&flag).unwrap());
    let other = bin_env(&["gen", "--n", "10", "--m", "4", "--h", "2"], Some("12"));
    assert_ne!(other.stdout, o.stdout);
}

#[test]
fn perturbed_certificate_fails_verification() {
    let dir = TempDir::new().unwrap();
    let inst = gen(&dir, "i.json", &["--n", "6", "--m", "3", "--h", "2", "--seed", "1"]);
    let o = bin(&["extend", s(&inst)]);
    assert_eq!(code(&o), 0);
    let mut doc: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    // Recolor one new edge into a color it already meets.
    let edges = doc["edges"].as_array_mut().unwrap();
    let e = edges.iter_mut().find(|e| e["support"].as_array().unwrap().iter().all(|v| v.as_u64().unwrap() > 3)).unwrap();
    let colors = e["colors"].as_object_mut().unwrap();
    let (old, _) = colors.iter().next().map(|(k, v)| (k.clone(), v.clone())).unwrap();
    colors.remove(&old);
    let new = if old == "1" { "2" } else { "1" };
    colors.insert(new.into(), 1.into());
    let cert = path(&dir, "bad.json");
    std::fs::write(&cert, serde_json::to_string(&doc).unwrap()).unwrap();
    let o = bin(&["verify", s(&cert), s(&inst)]);
    assert_eq!(code(&o), 1);
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report["pass"], false);
    assert!(report["failures"].as_array().unwrap().iter().any(|f| f["kind"] == "regularity"));
}

#[test]
fn baranyai_from_scratch() {
    let o = bin(&["baranyai", "--n", "12", "--h", "3"]);
    assert_eq!(code(&o), 0);
    let doc: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(doc["edges"].as_array().unwrap().len(), 220);
    assert_eq!(doc["report"]["pass"], true);
}

#[test]
fn exit_code_inadmissible() {
    assert_eq!(code(&bin(&["baranyai", "--n", "7", "--h", "3"])), 2);
    assert_eq!(code(&bin(&["gen", "--n", "8", "--m", "3", "--h", "2", "--r", "const:2"])), 2);
}

#[test]
fn exit_code_bound_violated_and_forced() {
    let dir = TempDir::new().unwrap();
    let inst = gen(&dir, "i.json", &["--n", "12", "--m", "4", "--h", "3", "--seed", "0"]);
    assert_eq!(code(&bin(&["extend", s(&inst)])), 3);
    assert_eq!(code(&bin(&["extend", s(&inst), "--force"])), 0);
}

#[test]
fn exit_code_invalid_documents() {
    let dir = TempDir::new().unwrap();
    let cases = [
        ("not json", "{"),
        ("unknown field", r#"{"n":4,"m":2,"h":2,"lambda":1,"r":[1,1,1],"edges":[],"extra":1}"#),
        ("vertex zero", r#"{"n":4,"m":2,"h":2,"lambda":1,"r":[1,1,1],"edges":[{"support":[0,1],"alpha":0,"colors":{"1":1}}]}"#),
        ("color out of range", r#"{"n":4,"m":2,"h":2,"lambda":1,"r":[1,1,1],"edges":[{"support":[1,2],"alpha":0,"colors":{"4":1}}]}"#),
        ("missing edge", r#"{"n":4,"m":2,"h":2,"lambda":1,"r":[1,1,1],"edges":[]}"#),
        ("m >= n", r#"{"n":4,"m":4,"h":2,"lambda":1,"r":[1,1,1],"edges":[]}"#),
    ];
    for (name, text) in cases {
        let p = path(&dir, "bad.json");
        std::fs::write(&p, text).unwrap();
        let o = bin(&["extend", s(&p)]);
        assert_eq!(code(&o), 4, "{name}: {}", String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn exit_code_stuck_below_bound() {
    let dir = TempDir::new().unwrap();
    let inst = gen(&dir, "i.json", &["--n", "9", "--m", "5", "--h", "3", "--seed", "0"]);
    assert_eq!(code(&bin(&["extend", s(&inst)])), 3);
    assert_eq!(code(&bin(&["extend", s(&inst), "--force"])), 5);

    let p = path(&dir, "neg.json");
    std::fs::write(
        &p,
        r#"{"n":6,"m":4,"h":2,"lambda":1,"r":[1,1,1,1,1],"edges":[
{"support":[1,2],"alpha":0,"colors":{"1":1}},
{"support":[1,3],"alpha":0,"colors":{"2":1}},
{"support":[1,4],"alpha":0,"colors":{"3":1}},
{"support":[2,3],"alpha":0,"colors":{"3":1}},
{"support":[2,4],"alpha":0,"colors":{"2":1}},
{"support":[3,4],"alpha":0,"colors":{"1":1}}]}"#,
    )
    .unwrap();
    assert_eq!(code(&bin(&["extend", s(&p), "--force"])), 5);
}

#[test]
fn exit_code_usage_and_io() {
    assert_eq!(code(&bin(&["frobnicate"])), 1);
    assert_eq!(code(&bin(&["extend", "/nonexistent/instance.json"])), 1);
    assert_eq!(code(&bin(&["--help"])), 0);
}

#[test]
fn exit_code_internal_mapping() {
    assert_eq!(exit_code(&ExtendError::Internal("x".into()), false), EXIT_INTERNAL);
    assert_eq!(exit_code(&ExtendError::Infeasible("{}".into()), false), EXIT_INTERNAL);
}

#[test]
fn empty_sweep_prints_header() {
    let dir = TempDir::new().unwrap();
    let grid = path(&dir, "grid.json");
    std::fs::write(&grid, r#"{"cells":[]}"#).unwrap();
    let o = bin(&["sweep", s(&grid)]);
    assert_eq!(code(&o), 0);
    assert_eq!(String::from_utf8(o.stdout).unwrap(), "h,m,n,lambda,r_pattern,seed,admissible,bound,outcome,verified,millis\n");
}

#[test]
fn sweep_is_deterministic_across_jobs() {
    let dir = TempDir::new().unwrap();
    let grid = path(&dir, "grid.json");
    std::fs::write(&grid, r#"{"cells":[{"h":2,"m":"2..4","n":"2*m..2*m+4:2","seeds":3},{"h":3,"m":3,"n":9,"lambda":[1,2],"seeds":[5]}]}"#).unwrap();
    let one = bin(&["sweep", s(&grid), "--no-timing"]);
    let four = bin(&["sweep", s(&grid), "--no-timing", "--jobs", "4"]);
    assert_eq!(code(&one), 0, "{}", String::from_utf8_lossy(&one.stderr));
    assert_eq!(one.stdout, four.stdout);
    let text = String::from_utf8(one.stdout).unwrap();
    assert_eq!(text.lines().count(), 1 + 3 * 3 * 3 + 2);
    assert!(text.lines().skip(1).all(|l| l.contains(",ok,true,0")));
}
