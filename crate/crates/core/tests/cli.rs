use std::process::Command;

fn tjpf() -> Command {
    Command::new(env!("CARGO_BIN_EXE_tjpf"))
}

#[test]
fn lists_presets() {
    let out = tjpf().arg("presets").output().unwrap();
    assert!(out.status.success());
    let s = String::from_utf8(out.stdout).unwrap();
    assert_eq!(s.lines().count(), tjpf::harness::PRESET_NAMES.len());
    assert!(s.lines().any(|l| l == "srsw-dense"));
}

#[test]
fn config_errors_exit_2() {
    let out = tjpf().args(["run", "--preset", "nope"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"name\": \"x\"}").unwrap();
    let out = tjpf().args(["validate", "--config"]).arg(&bad).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn run_then_validate() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    let out = tjpf().args(["presets", "--preset", "lorenz-standard"]).output().unwrap();
    let mut c = tjpf::harness::ExperimentConfig::from_json(std::str::from_utf8(&out.stdout).unwrap()).unwrap();
    c.steps = 80;
    std::fs::write(&cfg, c.to_json()).unwrap();
    let run_dir = dir.path().join("run");
    let st = tjpf().args(["--threads", "2", "run", "--seed", "4", "--config"]).arg(&cfg).arg("--out").arg(&run_dir).status().unwrap();
    assert!(st.success());
    let st = tjpf().args(["validate", "--out"]).arg(&run_dir).status().unwrap();
    assert!(st.success());
    let truth_dir = dir.path().join("truth");
    let st = tjpf().args(["truth", "--config"]).arg(&cfg).arg("--out").arg(&truth_dir).status().unwrap();
    assert!(st.success());
    let rows = std::fs::read_to_string(truth_dir.join("truth.csv")).unwrap();
    assert_eq!(rows.lines().next().unwrap(), "step,time,x0,x1,x2");
    assert_eq!(rows.lines().count(), 82);
}
