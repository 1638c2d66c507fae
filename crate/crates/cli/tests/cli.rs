use std::path::Path;
use std::process::{Command, Output};

fn fourtran(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fourtran")).args(args).env_remove("FOURTRAN_THREADS").output().unwrap()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn gen_2d(dir: &Path, seed: &str) -> String {
    let scene = dir.join(format!("scene{seed}.sfld"));
    let out = fourtran(&["gen-scene", "--shape", "l_block_2d", "--seed", seed, "--out", scene.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    scene.to_str().unwrap().to_string()
}

#[test]
fn help_and_usage_errors() {
    assert_eq!(fourtran(&["--help"]).status.code(), Some(0));
    assert_eq!(fourtran(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(fourtran(&["gen-scene", "--shape", "l_block_2d"]).status.code(), Some(1));
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.sfld");
    let bad = fourtran(&["gen-scene", "--shape", "dodecahedron", "--out", out.to_str().unwrap()]);
    assert_eq!(bad.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("error"));
}

#[test]
fn gen_scene_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = gen_2d(dir.path(), "5");
    let b = dir.path().join("copy.sfld");
    let out = fourtran(&["gen-scene", "--shape", "l_block_2d", "--seed", "5", "--out", b.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(json(Path::new(&format!("{a}.json"))), json(Path::new(&format!("{}.json", b.display()))));
}

#[test]
fn run_writes_outputs_and_scores_the_scene() {
    let dir = tempfile::tempdir().unwrap();
    let scene = gen_2d(dir.path(), "1");
    let run_dir = dir.path().join("run");
    let out = fourtran(&["run", "--scene", &scene, "--out", run_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let eval = json(&run_dir.join("eval.json"));
    assert_eq!(eval["success_low"], true);
    let printed: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(printed, eval);
    let actions = json(&run_dir.join("actions.json"));
    for key in ["pick", "place", "pick_coarse", "place_coarse"] {
        assert!(actions[key]["cell"].is_array(), "{key}");
    }
    assert!(json(&run_dir.join("summaries.json"))["pick"]["entropy"].is_number());
}

#[test]
fn config_overrides_are_applied_and_validated() {
    let dir = tempfile::tempdir().unwrap();
    let scene = gen_2d(dir.path(), "2");
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"coarse_rotations": 0}"#).unwrap();
    let out =
        fourtran(&["run", "--scene", &scene, "--config", bad.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn verify_oracle_passes_on_a_2d_scene() {
    let dir = tempfile::tempdir().unwrap();
    let scene = gen_2d(dir.path(), "3");
    let report = dir.path().join("report.json");
    let out = fourtran(&["verify", "--scene", &scene, "--mode", "oracle", "--out", report.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let report = json(&report);
    assert_eq!(report["mode"], "oracle");
    assert_eq!(report["pass"], true);
    assert_eq!(fourtran(&["verify", "--scene", &scene, "--mode", "vibes"]).status.code(), Some(1));
}

#[test]
fn bench_hashes_agree_across_thread_counts() {
    let out = fourtran(&["bench", "--dim", "3", "--grid", "8,8,8", "--threads", "1,2"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["deterministic"], true);
    let runs = report["runs"].as_array().unwrap();
    assert_eq!(runs.len(), 2);
    assert_eq!(runs[0]["hash"], runs[1]["hash"]);
}
