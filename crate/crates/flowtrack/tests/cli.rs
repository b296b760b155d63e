//! Drives the `flowtrack` binary as a subprocess: flag handling, artifact
//! layout, cross-process determinism, and error reporting.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use flowtrack::io;
use flowtrack::scenarios::{generate, ScenarioKind, ScenarioSpec};

fn binary() -> Command {
    Command::new(env!("CARGO_BIN_EXE_flowtrack"))
}

/// Writes detections, connections, and ground truth for a small crossing
/// scene into `dir` and returns their paths.
fn stage_scene(dir: &Path) -> (PathBuf, PathBuf, PathBuf) {
    let mut spec = ScenarioSpec::new(ScenarioKind::CrossingPair);
    spec.n_frames = 14;
    spec.n_objects = 3;
    spec.seed = 42;
    let scene = generate(&spec).unwrap();
    let dets = dir.join("detections.csv");
    let conns = dir.join("connections.csv");
    let gt = dir.join("ground_truth.csv");
    io::write_detections(&dets, &scene.detections).unwrap();
    io::write_connections(&conns, &scene.connections).unwrap();
    io::write_ground_truth(&gt, &scene.ground_truth).unwrap();
    (dets, conns, gt)
}

fn write_config(dir: &Path, json: &str) -> PathBuf {
    let path = dir.join("config.json");
    std::fs::write(&path, json).unwrap();
    path
}

fn stdout_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

const SCENE_CONFIG: &str =
    r#"{"det_weight": 0.1, "conn_weight": 0.01, "q_co": 0.0, "k": "auto", "k_max": 8, "max_skip": 3}"#;

#[test]
fn full_run_writes_artifacts_and_prints_a_summary() {
    let tmp = tempfile::tempdir().unwrap();
    let (dets, conns, gt) = stage_scene(tmp.path());
    let config = write_config(tmp.path(), SCENE_CONFIG);
    let out_dir = tmp.path().join("out");
    let lp = tmp.path().join("model.lp");

    let out = binary()
        .args(["--config", config.to_str().unwrap()])
        .args(["--detections", dets.to_str().unwrap()])
        .args(["--connections", conns.to_str().unwrap()])
        .args(["--gt", gt.to_str().unwrap()])
        .args(["--out", out_dir.to_str().unwrap()])
        .args(["--export-lp", lp.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", stderr_of(&out));

    let stdout = stdout_of(&out);
    assert!(stdout.contains("track budgets: body=3"), "stdout: {stdout}");
    assert!(stdout.contains("relaxed objective"), "stdout: {stdout}");
    assert!(stdout.contains("frank_wolfe: 3 tracks"), "stdout: {stdout}");
    assert!(stdout.contains("mota"), "stdout: {stdout}");
    assert!(stdout.contains("re-detection: ap@0"), "stdout: {stdout}");

    for name in [
        "resolved_config.json",
        "tracks_frank_wolfe.csv",
        "certificate_frank_wolfe.json",
        "metrics_frank_wolfe.json",
        "redetection_frank_wolfe.json",
        "redetection_frank_wolfe.csv",
    ] {
        assert!(out_dir.join(name).is_file(), "missing artifact {name}");
    }
    let lp_text = std::fs::read_to_string(&lp).unwrap();
    assert!(lp_text.starts_with("\\ "), "unexpected LP preamble: {:?}", &lp_text[..40]);
    assert!(lp_text.ends_with("End\n"));
}

#[test]
fn separate_processes_agree_byte_for_byte() {
    let tmp = tempfile::tempdir().unwrap();
    let (dets, conns, gt) = stage_scene(tmp.path());
    let config = write_config(tmp.path(), SCENE_CONFIG);

    let run = |out_dir: &Path| {
        let out = binary()
            .args(["--config", config.to_str().unwrap()])
            .args(["--detections", dets.to_str().unwrap()])
            .args(["--connections", conns.to_str().unwrap()])
            .args(["--gt", gt.to_str().unwrap()])
            .args(["--out", out_dir.to_str().unwrap()])
            .output()
            .unwrap();
        assert!(out.status.success(), "stderr: {}", stderr_of(&out));
        stdout_of(&out)
    };
    let dir_a = tmp.path().join("a");
    let dir_b = tmp.path().join("b");
    let stdout_a = run(&dir_a);
    let stdout_b = run(&dir_b);
    assert_eq!(stdout_a, stdout_b);

    for name in ["resolved_config.json", "tracks_frank_wolfe.csv", "certificate_frank_wolfe.json"] {
        let a = std::fs::read(dir_a.join(name)).unwrap();
        let b = std::fs::read(dir_b.join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between runs");
    }
}

#[test]
fn rounding_flag_overrides_the_config() {
    let tmp = tempfile::tempdir().unwrap();
    let (dets, conns, _) = stage_scene(tmp.path());
    let config = write_config(tmp.path(), SCENE_CONFIG); // configured for frank_wolfe only
    let out_dir = tmp.path().join("out");

    let out = binary()
        .args(["--config", config.to_str().unwrap()])
        .args(["--detections", dets.to_str().unwrap()])
        .args(["--connections", conns.to_str().unwrap()])
        .args(["--out", out_dir.to_str().unwrap()])
        .args(["--rounding", "both"])
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", stderr_of(&out));
    assert!(out_dir.join("tracks_frank_wolfe.csv").is_file());
    assert!(out_dir.join("tracks_hamming.csv").is_file());
}

#[test]
fn omitting_ground_truth_skips_metrics() {
    let tmp = tempfile::tempdir().unwrap();
    let (dets, conns, _) = stage_scene(tmp.path());
    let config = write_config(tmp.path(), SCENE_CONFIG);
    let out_dir = tmp.path().join("out");

    let out = binary()
        .args(["--config", config.to_str().unwrap()])
        .args(["--detections", dets.to_str().unwrap()])
        .args(["--connections", conns.to_str().unwrap()])
        .args(["--out", out_dir.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", stderr_of(&out));
    assert!(out_dir.join("tracks_frank_wolfe.csv").is_file());
    assert!(!out_dir.join("metrics_frank_wolfe.json").exists());
    assert!(!out_dir.join("redetection_frank_wolfe.json").exists());
    assert!(!out_dir.join("redetection_frank_wolfe.csv").exists());
    assert!(!stdout_of(&out).contains("mota"));
}

#[test]
fn parse_errors_point_at_the_offending_line() {
    let tmp = tempfile::tempdir().unwrap();
    let dets = tmp.path().join("detections.csv");
    std::fs::write(
        &dets,
        "frame,id,x,y,w,h,score,class\n\
         0,0,10,10,4,8,0.9,body\n\
         0,1,30,10,4,8,0.8,body\n\
         1,2,11,10,oops,8,0.9,body\n",
    )
    .unwrap();
    let config = write_config(tmp.path(), "{}");
    let out_dir = tmp.path().join("out");

    let out = binary()
        .args(["--config", config.to_str().unwrap()])
        .args(["--detections", dets.to_str().unwrap()])
        .args(["--out", out_dir.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(!out.status.success());
    let stderr = stderr_of(&out);
    assert!(stderr.contains("detections.csv:4"), "stderr: {stderr}");
    assert!(stderr.contains("column w"), "stderr: {stderr}");
}

#[test]
fn missing_required_flags_fail_fast() {
    let out = binary().output().unwrap();
    assert!(!out.status.success());
    assert_eq!(out.status.code(), Some(2));
    let stderr = stderr_of(&out);
    assert!(stderr.contains("--config"), "stderr: {stderr}");
    assert!(stderr.contains("--detections"), "stderr: {stderr}");
}
