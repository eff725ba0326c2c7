//! End-to-end runs of the `blurev` binary on tiny problems.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use blurev::checkpoint::load_checkpoint;
use blurev::commands::{cmd_eval, evaluate, uniform_times};
use blurev::dataset::load_dataset;
use blurev::events_io::read_events;
use blurev::image_io::{quantize_f32, read_image};
use blurev_core::sim::GroundTruthScene;
use blurev_core::spline::Trajectory;

fn blurev(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_blurev")).args(args).env_remove("BLUREV_THREADS").output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

const TINY: &str = r#"
[camera]
width = 12
height = 12
focal = 12.0

[sim]
frames = 40
n_gt = 5

[train]
iterations = 6
color_batch = 16
event_batch = 16
n_virtual = 3
lr_field = 0.01

[train.render]
n_samples = 4
near = 3.0
far = 5.0

[train.arch]
hidden_width = 8
hidden_layers = 1

[eval]
trajectory_samples = 5

[output]
checkpoint_every = 3
log_every = 2
"#;

fn write_config(dir: &Path, extra: &str) -> String {
    let p = dir.join("run.toml");
    fs::write(&p, format!("{TINY}{extra}")).unwrap();
    p.to_str().unwrap().to_string()
}

fn simulate(dir: &Path, cfg: &str) -> String {
    let data = dir.join("data");
    let o = blurev(&["simulate", "--config", cfg, "--out", data.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    data.to_str().unwrap().to_string()
}

#[test]
fn simulate_is_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let da = simulate(a.path(), &write_config(a.path(), ""));
    let db = simulate(b.path(), &write_config(b.path(), ""));
    for f in ["events.evt", "blurry.f32", "blurry.png", "gt_trajectory.txt", "manifest.json", "config.toml"] {
        assert_eq!(fs::read(Path::new(&da).join(f)).unwrap(), fs::read(Path::new(&db).join(f)).unwrap(), "{f}");
    }
    let o = blurev(&["simulate", "--config", &write_config(a.path(), ""), "--out", &da, "--threads", "1"]);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stdout).contains("events"));
}

#[test]
fn static_trajectory_is_degenerate() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "\n[motion]\nvelocity = [0.0, 0.0, 0.0, 0.0, 0.0, 0.0]\n");
    let out = dir.path().join("data");
    let o = blurev(&["simulate", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stdout).contains("empty event stream"));
    let d = load_dataset(&out).unwrap();
    assert!(d.events.is_empty());

    let run = dir.path().join("run");
    let args = ["train", "--config", &cfg, "--dataset", out.to_str().unwrap(), "--out", run.to_str().unwrap()];
    assert_eq!(code(&blurev(&args)), 0);
    let mut strict = args.to_vec();
    strict.push("--strict");
    assert_eq!(code(&blurev(&strict)), 2);
}

#[test]
fn usage_and_config_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&blurev(&["frobnicate"])), 1);
    assert_eq!(code(&blurev(&["simulate"])), 1);
    let cfg = write_config(dir.path(), "\n[bogus]\nx = 1\n");
    assert_eq!(code(&blurev(&["simulate", "--config", &cfg, "--out", "x"])), 1);
    let cfg = write_config(dir.path(), "");
    let out = dir.path().join("o");
    let o = blurev(&["simulate", "--config", &cfg, "--out", out.to_str().unwrap(), "--set", "train.alpha=2.0"]);
    assert_eq!(code(&o), 1);
    assert_eq!(code(&blurev(&["--help"])), 0);
}

#[test]
fn train_render_eval_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "");
    let data = simulate(dir.path(), &cfg);
    let run = dir.path().join("run");
    let o = blurev(&["train", "--config", &cfg, "--dataset", &data, "--out", run.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("it      2 loss"), "{stdout}");
    for f in ["config.toml", "losses.csv", "checkpoint.bin", "trajectory.txt", "mid.png", "mid.f32", "train.log", "checkpoints/step_000003.bin"] {
        assert!(run.join(f).exists(), "{f}");
    }
    let losses = fs::read_to_string(run.join("losses.csv")).unwrap();
    assert_eq!(losses.lines().count(), 7);
    assert!(losses.starts_with("iteration,loss,photometric,event,event_skipped"));
    // Near and far come from the dataset, and the resolved config says so.
    let resolved = fs::read_to_string(run.join("config.toml")).unwrap();
    assert!(resolved.contains("near = 3.0"));

    let ck = run.join("checkpoint.bin");
    let frames = dir.path().join("frames");
    let o = blurev(&["render", "--checkpoint", ck.to_str().unwrap(), "--out", frames.to_str().unwrap(), "--count", "30"]);
    assert_eq!(code(&o), 0);
    assert!(frames.join("frame_0029.png").exists());
    let listed = fs::read_to_string(frames.join("frames.csv")).unwrap();
    assert_eq!(listed.lines().count(), 31);

    let again = dir.path().join("again");
    let times = "0.5";
    assert_eq!(code(&blurev(&["render", "--checkpoint", ck.to_str().unwrap(), "--out", again.to_str().unwrap(), "--times", times])), 0);
    let once = dir.path().join("once");
    assert_eq!(code(&blurev(&["render", "--checkpoint", ck.to_str().unwrap(), "--out", once.to_str().unwrap(), "--times", times])), 0);
    assert_eq!(fs::read(again.join("frame_0000.f32")).unwrap(), fs::read(once.join("frame_0000.f32")).unwrap());
    let bad = blurev(&["render", "--checkpoint", ck.to_str().unwrap(), "--out", once.to_str().unwrap(), "--times", "1.5"]);
    assert_eq!(code(&bad), 1);

    let ev = dir.path().join("eval");
    let o = blurev(&["eval", "--checkpoint", ck.to_str().unwrap(), "--dataset", &data, "--out", ev.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(ev.join("metrics.csv")).unwrap();
    assert!(csv.starts_with("metric,frame,value\n"));
    for row in ["psnr,mid,", "baseline_psnr,mid,", "ssim,mean,", "rotation_rmse_deg,all,", "translation_rmse,all,"] {
        assert!(csv.contains(row), "{row}");
    }
}

#[test]
fn resume_is_bit_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "");
    let data = simulate(dir.path(), &cfg);
    let full = dir.path().join("full");
    assert_eq!(code(&blurev(&["train", "--config", &cfg, "--dataset", &data, "--out", full.to_str().unwrap()])), 0);
    let part = dir.path().join("part");
    let mid = full.join("checkpoints/step_000003.bin");
    let o = blurev(&["train", "--config", &cfg, "--dataset", &data, "--out", part.to_str().unwrap(), "--resume", mid.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(fs::read(full.join("checkpoint.bin")).unwrap(), fs::read(part.join("checkpoint.bin")).unwrap());

    let o = blurev(&["train", "--config", &cfg, "--set", "train.arch.hidden_width=16", "--dataset", &data, "--out", part.to_str().unwrap(), "--resume", mid.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("mismatch"), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn threads_do_not_change_results() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "");
    let data = simulate(dir.path(), &cfg);
    let mut outs = Vec::new();
    for t in ["1", "3"] {
        let run = dir.path().join(format!("run{t}"));
        let o = blurev(&["--threads", t, "train", "--config", &cfg, "--dataset", &data, "--out", run.to_str().unwrap()]);
        assert_eq!(code(&o), 0);
        outs.push((fs::read(run.join("checkpoint.bin")).unwrap(), fs::read(run.join("mid.f32")).unwrap()));
    }
    assert_eq!(outs[0], outs[1]);
}

#[test]
fn beta_zero_never_evaluates_the_event_term() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "");
    let data = simulate(dir.path(), &cfg);
    let run = dir.path().join("run");
    let o = blurev(&["train", "--config", &cfg, "--beta", "0", "--dataset", &data, "--out", run.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let losses = fs::read_to_string(run.join("losses.csv")).unwrap();
    for line in losses.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        assert_eq!(f[3], "", "{line}");
        let (loss, photo): (f64, f64) = (f[1].parse().unwrap(), f[2].parse().unwrap());
        assert!((loss - photo).abs() <= 1e-12 * photo, "{line}");
    }
}

#[test]
fn loaded_dataset_matches_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "");
    let data = simulate(dir.path(), &cfg);
    let d = load_dataset(Path::new(&data)).unwrap();
    let k = d.manifest.intrinsics;
    assert_eq!(read_events(&d.root.join("events.evt"), Some((k.width, k.height)), 0.2).unwrap(), d.events);
    assert_eq!(read_image(&d.root.join("blurry.png")).unwrap(), d.blurry);
    fs::write(Path::new(&data).join("events.evt"), "0.5 0 0 1\n0.25 0 0 1\n").unwrap();
    assert!(matches!(load_dataset(Path::new(&data)), Err(blurev::Error::Validation { .. })));
}

#[test]
fn ground_truth_proxy_scores_perfectly() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "");
    let data = simulate(dir.path(), &cfg);
    let d = load_dataset(Path::new(&data)).unwrap();
    let c = blurev::config::RunConfig::load(Path::new(&cfg)).unwrap();
    let gt = c.motion.trajectory().unwrap();
    let scene: GroundTruthScene = c.scene.build().unwrap();
    let k = d.manifest.intrinsics;
    let report = evaluate(&d, &gt, &mut |t| Ok(quantize_f32(&scene.render(&gt.pose_at(t)?, &k)))).unwrap();
    assert!(report.rendered.frames.iter().all(|f| f.psnr.is_infinite() && f.ssim == 1.0));
    assert!(report.trajectory.rotation_rmse_deg() < 1e-6);
    assert!(report.trajectory.translation_rmse() < 1e-6);
    assert!(report.baseline_mid_psnr().is_finite());
    assert!(report.to_csv().contains("psnr,mid,inf"));
    assert_eq!(uniform_times(3), vec![0.0, 0.5, 1.0]);
}

#[test]
fn eval_without_ground_truth_fails() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "");
    let data = simulate(dir.path(), &cfg);
    let run = dir.path().join("run");
    assert_eq!(code(&blurev(&["train", "--config", &cfg, "--dataset", &data, "--out", run.to_str().unwrap()])), 0);
    let manifest = Path::new(&data).join("manifest.json");
    let text = fs::read_to_string(&manifest).unwrap();
    let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
    v["gt_trajectory"] = serde_json::Value::Null;
    fs::write(&manifest, v.to_string()).unwrap();
    let d = load_dataset(Path::new(&data)).unwrap();
    let err = cmd_eval(&run.join("checkpoint.bin"), &d, &dir.path().join("ev")).unwrap_err();
    assert!(matches!(err, blurev::Error::MissingGroundTruth(_)));
    assert!(load_checkpoint(&run.join("checkpoint.bin"), None).is_ok());
}
