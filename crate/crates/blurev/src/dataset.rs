//! Simulated datasets on disk.
//!
//! ```text
//! manifest.json
//! blurry.png  blurry.f32
//! events.evt
//! gt_trajectory.txt
//! sharp/000.png  sharp/000.f32 ...
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use blurev_core::sim::{events_from_log_frames, BlurSimulation, GroundTruthScene, SimSettings, SimulatedData};
use blurev_core::spline::Trajectory;
use blurev_core::{CameraIntrinsics, EventStream, Image, RigidTransform};
use rayon::prelude::*;

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::events_io::{read_events, write_events};
use crate::image_io::{quantize_f32, read_image, write_image};
use crate::manifest::{DatasetManifest, Seeds, SCHEMA_VERSION};
use crate::trajectory_io::{read_samples, sample_trajectory, write_samples};

/// Samples written to `gt_trajectory.txt`.
pub const GT_TRAJECTORY_SAMPLES: usize = 101;

/// Same result as the serial simulator, with frames rendered in parallel.
pub fn simulate_parallel(
    scene: &GroundTruthScene,
    traj: &(dyn Trajectory + Sync),
    k: &CameraIntrinsics,
    s: &SimSettings,
) -> Result<SimulatedData> {
    if s.frames < 2 || s.n_gt < 2 {
        return Err(blurev_core::Error::InvalidParameter("need at least two frames").into());
    }
    let uniform = |n: usize| -> Vec<f64> { (0..n).map(|i| i as f64 / (n - 1) as f64).collect() };
    let sharp_times = uniform(s.n_gt);
    let sharp = sharp_times
        .par_iter()
        .map(|&t| Ok(scene.render(&traj.pose_at(t)?, k)))
        .collect::<Result<Vec<Image>>>()?;
    let blurry = Image::mean_of(&sharp)?;
    let log_times = uniform(s.frames);
    let logs = log_times
        .par_iter()
        .map(|&t| Ok(scene.log_luminance(&traj.pose_at(t)?, k, s.log_eps)))
        .collect::<Result<Vec<_>>>()?;
    let events = events_from_log_frames(&logs, &log_times, k.width, k.height, s.contrast)?;
    Ok(SimulatedData { blur: BlurSimulation { blurry, sharp, times: sharp_times }, events })
}

/// Everything `load_dataset` returns.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub manifest: DatasetManifest,
    pub root: PathBuf,
    pub blurry: Image,
    pub events: EventStream,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GroundTruth {
    pub trajectory: Vec<(f64, RigidTransform)>,
    pub frames: Vec<Image>,
    pub times: Vec<f64>,
}

/// Summary printed by `simulate`.
#[derive(Clone, Debug, PartialEq)]
pub struct DatasetSummary {
    pub events: usize,
    /// Blurry image against the mid-exposure sharp frame.
    pub blur_psnr: f64,
}

fn create_dir(p: &Path) -> Result<()> {
    fs::create_dir_all(p).map_err(Error::io(p))
}

pub fn make_dataset(config: &RunConfig, out: &Path) -> Result<(Dataset, DatasetSummary)> {
    config.validate()?;
    let k = config.camera.intrinsics()?;
    let scene = config.scene.build()?;
    let traj = config.motion.trajectory()?;
    let data = simulate_parallel(&scene, &traj, &k, &config.sim)?;
    create_dir(&out.join("sharp"))?;

    let frame_paths: Vec<PathBuf> = (0..data.blur.sharp.len()).map(|i| PathBuf::from(format!("sharp/{i:03}.png"))).collect();
    for (img, p) in data.blur.sharp.iter().zip(&frame_paths) {
        write_image(&out.join(p), img)?;
    }
    write_image(&out.join("blurry.png"), &data.blur.blurry)?;
    write_events(&out.join("events.evt"), &data.events)?;
    write_samples(&out.join("gt_trajectory.txt"), &sample_trajectory(&traj, GT_TRAJECTORY_SAMPLES)?)?;

    let manifest = DatasetManifest {
        schema_version: SCHEMA_VERSION,
        scene: scene.kind_name().into(),
        intrinsics: k,
        exposure_s: config.camera.exposure_s,
        near: config.train.render.near,
        far: config.train.render.far,
        contrast: config.sim.contrast,
        sim_frames: config.sim.frames,
        event_file: "events.evt".into(),
        blur_image: "blurry.png".into(),
        gt_trajectory: Some("gt_trajectory.txt".into()),
        gt_sharp_frames: Some(frame_paths),
        gt_frame_times: Some(data.blur.times.clone()),
        seeds: Seeds { scene: config.scene.seed, motion: config.motion.seed },
    };
    manifest.write(out)?;

    let mid = &data.blur.sharp[data.blur.sharp.len() / 2];
    let summary = DatasetSummary { events: data.events.len(), blur_psnr: blurev_core::metrics::psnr(&data.blur.blurry, mid)? };
    let dataset = Dataset { manifest, root: out.to_path_buf(), blurry: quantize_f32(&data.blur.blurry), events: data.events };
    Ok((dataset, summary))
}

pub fn load_dataset(path: &Path) -> Result<Dataset> {
    let (manifest, root) = DatasetManifest::read(path)?;
    let k = manifest.intrinsics;
    let blurry = read_image(&root.join(&manifest.blur_image))?;
    if (blurry.width(), blurry.height(), blurry.channels()) != (k.width, k.height, 3) {
        return Err(Error::parse(root.join(&manifest.blur_image), "blur_image", "size does not match the intrinsics"));
    }
    let events = read_events(&root.join(&manifest.event_file), Some((k.width, k.height)), manifest.contrast)?;
    Ok(Dataset { manifest, root, blurry, events })
}

impl Dataset {
    pub fn ground_truth(&self) -> Result<GroundTruth> {
        let m = &self.manifest;
        let traj = m.gt_trajectory.as_ref().ok_or(Error::MissingGroundTruth("trajectory"))?;
        let frames = m.gt_sharp_frames.as_ref().ok_or(Error::MissingGroundTruth("sharp frames"))?;
        let times = m.gt_frame_times.clone().ok_or(Error::MissingGroundTruth("frame times"))?;
        Ok(GroundTruth {
            trajectory: read_samples(&self.root.join(traj))?,
            frames: frames.iter().map(|p| read_image(&self.root.join(p))).collect::<Result<_>>()?,
            times,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use blurev_core::sim::simulate;

    fn small() -> RunConfig {
        let mut c = RunConfig::default();
        c.camera.width = 12;
        c.camera.height = 10;
        c.camera.focal = 12.0;
        c.sim.frames = 30;
        c.sim.n_gt = 5;
        c
    }

    #[test]
    fn parallel_simulation_matches_serial() {
        let c = small();
        let k = c.camera.intrinsics().unwrap();
        let scene = c.scene.build().unwrap();
        let traj = c.motion.trajectory().unwrap();
        let a = simulate(&scene, &traj, &k, &c.sim).unwrap();
        let b = simulate_parallel(&scene, &traj, &k, &c.sim).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let (made, summary) = make_dataset(&small(), dir.path()).unwrap();
        assert_eq!(summary.events, made.events.len());
        assert!(summary.events > 0);
        let loaded = load_dataset(dir.path()).unwrap();
        assert_eq!(loaded, made);
        let gt = loaded.ground_truth().unwrap();
        assert_eq!(gt.frames.len(), 5);
        assert_eq!(gt.trajectory.len(), GT_TRAJECTORY_SAMPLES);
    }

    #[test]
    fn missing_ground_truth_reported() {
        let dir = tempfile::tempdir().unwrap();
        let (mut d, _) = make_dataset(&small(), dir.path()).unwrap();
        d.manifest.gt_trajectory = None;
        assert!(matches!(d.ground_truth(), Err(Error::MissingGroundTruth(_))));
    }
}
