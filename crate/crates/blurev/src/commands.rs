//! The four subcommands as library calls.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use blurev_core::eval::{pose_errors, TrajectoryError};
use blurev_core::metrics::MetricReport;
use blurev_core::render::{image_from_rows, render_row};
use blurev_core::spline::Trajectory;
use blurev_core::train::{Observations, OptimizationState, StepReport};
use blurev_core::{CameraIntrinsics, Image, RenderSettings, RigidTransform, SceneField};
use rayon::prelude::*;

use crate::checkpoint::{load_checkpoint, save_checkpoint, Checkpoint};
use crate::config::RunConfig;
use crate::dataset::{make_dataset, Dataset, DatasetSummary};
use crate::error::{Error, Result};
use crate::image_io::write_image;
use crate::trajectory_io::{sample_trajectory, write_samples};

pub const RESOLVED_CONFIG: &str = "config.toml";
pub const FINAL_CHECKPOINT: &str = "checkpoint.bin";

/// Conditions that leave a command's output valid but unlikely to be useful.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Warnings(pub Vec<String>);

impl Warnings {
    fn push(&mut self, w: impl Into<String>) {
        self.0.push(w.into());
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

fn create_dir(p: &Path) -> Result<()> {
    fs::create_dir_all(p).map_err(Error::io(p))
}

fn write_text(p: &Path, s: &str) -> Result<()> {
    fs::write(p, s).map_err(Error::io(p))
}

pub fn write_resolved_config(out: &Path, config: &RunConfig) -> Result<()> {
    write_text(&out.join(RESOLVED_CONFIG), &config.to_toml())
}

/// Deterministic render with rows spread over the rayon pool.
pub fn render_parallel(field: &SceneField, pose: &RigidTransform, k: &CameraIntrinsics, settings: &RenderSettings) -> Result<Image> {
    let settings = settings.deterministic();
    let rows: Vec<_> = (0..k.height).into_par_iter().map(|y| render_row(field, pose, k, &settings, 0, y)).collect();
    Ok(image_from_rows(k, rows)?)
}

pub fn render_at(ck: &Checkpoint, t: f64) -> Result<Image> {
    let pose = ck.state.trajectory.pose_at(t)?;
    render_parallel(&ck.state.field, &pose, &ck.intrinsics, &ck.render)
}

pub struct SimulateOutcome {
    pub dataset: Dataset,
    pub summary: DatasetSummary,
    pub warnings: Warnings,
}

pub fn cmd_simulate(config: &RunConfig, out: &Path) -> Result<SimulateOutcome> {
    create_dir(out)?;
    let (dataset, summary) = make_dataset(config, out)?;
    write_resolved_config(out, config)?;
    let mut warnings = Warnings::default();
    if dataset.events.is_empty() {
        warnings.push("empty event stream");
    }
    Ok(SimulateOutcome { dataset, summary, warnings })
}

/// One line of `losses.csv`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossRecord {
    pub iteration: u64,
    pub report: StepReport,
}

pub struct TrainOutcome {
    pub checkpoint: Checkpoint,
    pub losses: Vec<LossRecord>,
    pub warnings: Warnings,
}

/// Training settings with the dataset's near and far planes.
pub fn effective_train_config(config: &RunConfig, dataset: &Dataset) -> blurev_core::train::TrainConfig {
    let mut t = config.train.clone();
    t.render.near = dataset.manifest.near;
    t.render.far = dataset.manifest.far;
    t
}

/// Runs (or resumes) the joint optimization and writes the run directory.
/// `progress` receives every `log_every`-th record.
pub fn cmd_train(
    dataset: &Dataset,
    config: &RunConfig,
    out: &Path,
    resume: Option<&Path>,
    progress: &mut dyn FnMut(&LossRecord),
) -> Result<TrainOutcome> {
    let train = effective_train_config(config, dataset);
    let mut warnings = Warnings::default();
    if dataset.events.is_empty() && train.beta > 0.0 {
        warnings.push("empty event stream; the event term is skipped every iteration");
    }
    let k = dataset.manifest.intrinsics;
    let obs = Observations::new(dataset.blurry.clone(), dataset.events.clone(), k)?;
    let mut state = match resume {
        Some(p) => load_checkpoint(p, Some(&train.arch))?.state,
        None => OptimizationState::new(&train)?,
    };
    create_dir(&out.join("checkpoints"))?;
    let mut resolved = config.clone();
    resolved.train = train.clone();
    write_resolved_config(out, &resolved)?;

    let losses_path = out.join("losses.csv");
    let mut csv = String::new();
    if resume.is_none() || !losses_path.exists() {
        csv.push_str("iteration,loss,photometric,event,event_skipped\n");
    }
    let flush = |csv: &mut String| -> Result<()> {
        let mut f = fs::OpenOptions::new().create(true).append(true).open(&losses_path).map_err(Error::io(&losses_path))?;
        f.write_all(csv.as_bytes()).map_err(Error::io(&losses_path))?;
        csv.clear();
        Ok(())
    };
    let mut losses = Vec::new();
    let snapshot = |state: &OptimizationState| Checkpoint { state: state.clone(), intrinsics: k, render: train.render };
    while state.step < train.iterations {
        let report = state.step(&obs, &train)?;
        let rec = LossRecord { iteration: state.step, report };
        let event = report.event.map(|e| format!("{e:e}")).unwrap_or_default();
        let _ = writeln!(csv, "{},{:e},{:e},{},{}", rec.iteration, report.loss, report.photometric, event, report.event_skipped as u8);
        if state.step % config.output.log_every == 0 || state.step == train.iterations {
            progress(&rec);
        }
        if config.output.checkpoint_every > 0 && state.step % config.output.checkpoint_every == 0 {
            flush(&mut csv)?;
            save_checkpoint(&out.join(format!("checkpoints/step_{:06}.bin", state.step)), &snapshot(&state))?;
        }
        losses.push(rec);
    }
    flush(&mut csv)?;

    let checkpoint = snapshot(&state);
    save_checkpoint(&out.join(FINAL_CHECKPOINT), &checkpoint)?;
    let samples = sample_trajectory(&state.trajectory, config.eval.trajectory_samples)?;
    write_samples(&out.join("trajectory.txt"), &samples)?;
    write_image(&out.join("mid.png"), &render_at(&checkpoint, 0.5)?)?;
    if state.skipped_event_terms > 0 {
        let frac = state.skipped_event_terms as f64 / state.step.max(1) as f64;
        let msg = format!("event term skipped in {} of {} iterations", state.skipped_event_terms, state.step);
        if frac > 0.5 {
            warnings.push(msg);
        }
    }
    Ok(TrainOutcome { checkpoint, losses, warnings })
}

pub fn cmd_render(checkpoint: &Path, times: &[f64], out: &Path) -> Result<Vec<PathBuf>> {
    if let Some(t) = times.iter().find(|t| !(0.0..=1.0).contains(*t)) {
        return Err(blurev_core::Error::OutOfDomain { t: *t, start: 0.0, end: 1.0 }.into());
    }
    let ck = load_checkpoint(checkpoint, None)?;
    create_dir(out)?;
    let mut paths = Vec::new();
    for (i, &t) in times.iter().enumerate() {
        let p = out.join(format!("frame_{i:04}.png"));
        write_image(&p, &render_at(&ck, t)?)?;
        paths.push(p);
    }
    let mut list = String::from("frame,t\n");
    for (i, t) in times.iter().enumerate() {
        let _ = writeln!(list, "{i},{t:?}");
    }
    write_text(&out.join("frames.csv"), &list)?;
    Ok(paths)
}

/// `count` uniform timestamps over `[0, 1]`.
pub fn uniform_times(count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![0.5],
        n => (0..n).map(|i| i as f64 / (n - 1) as f64).collect(),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    pub rendered: MetricReport,
    /// Blurry input against each ground-truth frame.
    pub baseline: MetricReport,
    /// Index of the frame closest to mid-exposure.
    pub mid: usize,
    pub trajectory: TrajectoryError,
}

impl EvalReport {
    pub fn mid_psnr(&self) -> f64 {
        self.rendered.frames[self.mid].psnr
    }

    pub fn baseline_mid_psnr(&self) -> f64 {
        self.baseline.frames[self.mid].psnr
    }

    /// `metric,frame,value` rows.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("metric,frame,value\n");
        let mut row = |m: &str, f: &dyn std::fmt::Display, v: f64| {
            let v = if v.is_infinite() { "inf".to_string() } else { format!("{v}") };
            let _ = writeln!(s, "{m},{f},{v}");
        };
        for (name, rep) in [("psnr", &self.rendered), ("baseline_psnr", &self.baseline)] {
            for (i, f) in rep.frames.iter().enumerate() {
                row(name, &i, f.psnr);
            }
            row(name, &"mean", rep.mean_psnr());
            row(name, &"mid", rep.frames[self.mid].psnr);
        }
        for (name, rep) in [("ssim", &self.rendered), ("baseline_ssim", &self.baseline)] {
            for (i, f) in rep.frames.iter().enumerate() {
                row(name, &i, f.ssim);
            }
            row(name, &"mean", rep.mean_ssim());
            row(name, &"mid", rep.frames[self.mid].ssim);
        }
        for (i, e) in self.trajectory.rotation_deg.iter().enumerate() {
            row("rotation_error_deg", &i, *e);
        }
        for (i, e) in self.trajectory.translation.iter().enumerate() {
            row("translation_error", &i, *e);
        }
        row("rotation_rmse_deg", &"all", self.trajectory.rotation_rmse_deg());
        row("translation_rmse", &"all", self.trajectory.translation_rmse());
        row("gauge_scale", &"all", self.trajectory.alignment.scale);
        s
    }

    pub fn summary(&self) -> String {
        format!(
            "rendered: PSNR mean {:.2} dB, mid {:.2} dB, SSIM mean {:.4}\n\
             blurry baseline: PSNR mean {:.2} dB, mid {:.2} dB, SSIM mean {:.4}\n\
             trajectory: rotation RMSE {:.3} deg, translation RMSE {:.4} (gauge scale {:.3})\n",
            self.rendered.mean_psnr(),
            self.mid_psnr(),
            self.rendered.mean_ssim(),
            self.baseline.mean_psnr(),
            self.baseline_mid_psnr(),
            self.baseline.mean_ssim(),
            self.trajectory.rotation_rmse_deg(),
            self.trajectory.translation_rmse(),
            self.trajectory.alignment.scale,
        )
    }
}

/// Metrics of any trajectory and renderer against a dataset's ground truth.
pub fn evaluate(
    dataset: &Dataset,
    trajectory: &dyn Trajectory,
    render: &mut dyn FnMut(f64) -> Result<Image>,
) -> Result<EvalReport> {
    let gt = dataset.ground_truth()?;
    if gt.frames.is_empty() || gt.trajectory.is_empty() {
        return Err(Error::MissingGroundTruth("frames"));
    }
    let rendered = gt.times.iter().map(|&t| render(t)).collect::<Result<Vec<_>>>()?;
    let blurry = vec![dataset.blurry.clone(); gt.frames.len()];
    let mid = gt
        .times
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1 - 0.5).abs().total_cmp(&(b.1 - 0.5).abs()))
        .map(|(i, _)| i)
        .unwrap_or(0);
    let estimate = gt.trajectory.iter().map(|(t, _)| trajectory.pose_at(*t)).collect::<blurev_core::Result<Vec<_>>>()?;
    let reference: Vec<RigidTransform> = gt.trajectory.iter().map(|(_, p)| *p).collect();
    Ok(EvalReport {
        rendered: MetricReport::compare(&rendered, &gt.frames)?,
        baseline: MetricReport::compare(&blurry, &gt.frames)?,
        mid,
        trajectory: pose_errors(&estimate, &reference)?,
    })
}

pub fn cmd_eval(checkpoint: &Path, dataset: &Dataset, out: &Path) -> Result<EvalReport> {
    let ck = load_checkpoint(checkpoint, None)?;
    let report = evaluate(dataset, &ck.state.trajectory, &mut |t| render_at(&ck, t))?;
    create_dir(out)?;
    write_text(&out.join("metrics.csv"), &report.to_csv())?;
    write_text(&out.join("summary.txt"), &report.summary())?;
    Ok(report)
}
