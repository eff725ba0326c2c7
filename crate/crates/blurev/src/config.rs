//! Run configuration, read from TOML with every field defaulted.

use std::fs;
use std::path::Path;

use blurev_core::field::Activation;
use blurev_core::sim::{GroundTruthScene, MotionSpec, SimSettings, Texture, TexturedPlane};
use blurev_core::train::TrainConfig;
use blurev_core::{CameraIntrinsics, FieldArch, RenderSettings, RigidTransform, SplineTrajectory};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Iterations used by `--paper-scale`.
pub const PAPER_ITERATIONS: u64 = 80_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CameraConfig {
    pub width: usize,
    pub height: usize,
    /// Focal length in pixels; principal point is the image center.
    pub focal: f64,
    /// Recorded in the manifest only; all computation uses normalized time.
    pub exposure_s: f64,
}

impl Default for CameraConfig {
    fn default() -> Self {
        Self { width: 64, height: 64, focal: 64.0, exposure_s: 0.04 }
    }
}

impl CameraConfig {
    pub fn intrinsics(&self) -> Result<CameraIntrinsics> {
        let (w, h) = (self.width as f64, self.height as f64);
        Ok(CameraIntrinsics::new(self.focal, self.focal, 0.5 * w, 0.5 * h, self.width, self.height)?)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SceneKind {
    TexturedPlane,
    VoxelBoxRoom,
    AnalyticSpheres,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SceneConfig {
    pub kind: SceneKind,
    /// Plane depth; ignored by the other scenes.
    pub depth: f64,
    pub waves: usize,
    pub min_period: f64,
    pub max_period: f64,
    pub seed: u64,
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self { kind: SceneKind::TexturedPlane, depth: 4.0, waves: 6, min_period: 0.4, max_period: 1.2, seed: 7 }
    }
}

impl SceneConfig {
    pub fn build(&self) -> Result<GroundTruthScene> {
        if !(self.min_period > 0.0 && self.min_period < self.max_period) {
            return Err(Error::Config("scene periods must satisfy 0 < min_period < max_period".into()));
        }
        Ok(match self.kind {
            SceneKind::TexturedPlane => {
                if !(self.depth > 0.0) {
                    return Err(Error::Config("scene depth must be positive".into()));
                }
                GroundTruthScene::TexturedPlane(TexturedPlane {
                    depth: self.depth,
                    texture: Texture::random(self.waves, self.min_period, self.max_period, self.seed),
                })
            }
            SceneKind::VoxelBoxRoom => GroundTruthScene::box_room(self.seed),
            SceneKind::AnalyticSpheres => GroundTruthScene::spheres(self.seed),
        })
    }
}

/// Ground-truth motion. `velocity` is the twist traversed over the whole
/// exposure; when absent a random direction with the given magnitudes is
/// drawn from `seed`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MotionConfig {
    pub velocity: Option<[f64; 6]>,
    pub rotation_deg: f64,
    pub translation: f64,
    /// Knot offsets that bend the path away from constant velocity.
    pub wobble: [f64; 6],
    pub seed: u64,
}

impl Default for MotionConfig {
    fn default() -> Self {
        Self {
            velocity: Some([0.0, 0.035, 0.06, 0.12, 0.0, 0.12]),
            rotation_deg: 4.0,
            translation: 0.17,
            wobble: [0.0; 6],
            seed: 3,
        }
    }
}

impl MotionConfig {
    pub fn spec(&self) -> MotionSpec {
        let mut spec = MotionSpec::random(self.rotation_deg, self.translation, self.seed);
        if let Some(v) = self.velocity {
            spec.velocity = v;
        }
        spec.center = RigidTransform::identity();
        spec.wobble = self.wobble;
        spec
    }

    pub fn trajectory(&self) -> Result<SplineTrajectory> {
        Ok(self.spec().trajectory()?)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    /// Trajectory samples compared after gauge alignment.
    pub trajectory_samples: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self { trajectory_samples: 51 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    /// Iterations between periodic checkpoints; 0 keeps only the final one.
    pub checkpoint_every: u64,
    /// Iterations between loss log lines.
    pub log_every: u64,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { checkpoint_every: 1000, log_every: 100 }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub camera: CameraConfig,
    pub scene: SceneConfig,
    pub motion: MotionConfig,
    pub sim: SimSettings,
    pub train: TrainConfig,
    pub eval: EvalConfig,
    pub output: OutputConfig,
}

impl RunConfig {
    /// Settings that fit a 5000-iteration run on one CPU core: fewer and
    /// tighter ray samples around the plane, a smaller view-independent
    /// network, a quarter of the colour batch and a higher field learning
    /// rate. Loss, blur model and event model are unchanged.
    pub fn desk() -> Self {
        let mut c = RunConfig::default();
        c.train.color_batch = 256;
        c.train.event_batch = 256;
        c.train.lr_field = 1e-2;
        c.train.render = RenderSettings { n_samples: 4, near: 3.0, far: 5.0, ..RenderSettings::default() };
        c.train.arch = FieldArch {
            hidden_width: 64,
            hidden_layers: 2,
            activation: Activation::Relu,
            view_dependent: false,
            ..FieldArch::default()
        };
        c
    }

    pub fn paper_scale(mut self) -> Self {
        self.train.iterations = PAPER_ITERATIONS;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.camera.intrinsics()?;
        self.scene.build()?;
        self.train.validate()?;
        if self.sim.frames < 2 || self.sim.n_gt < 2 || !(self.sim.contrast > 0.0) || !(self.sim.log_eps > 0.0) {
            return Err(Error::Config("sim needs frames >= 2, n_gt >= 2, contrast > 0 and log_eps > 0".into()));
        }
        if self.eval.trajectory_samples < 2 {
            return Err(Error::Config("eval.trajectory_samples must be at least 2".into()));
        }
        if self.output.log_every == 0 {
            return Err(Error::Config("output.log_every must be positive".into()));
        }
        Ok(())
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let c: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(Error::io(path))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            e => e,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_follow_the_documented_values() {
        let c = RunConfig::default();
        assert_eq!(c.train.n_virtual, 19);
        assert_eq!(c.train.alpha, 0.1);
        assert_eq!(c.train.beta, 0.1);
        assert_eq!(c.train.lr_field, 5e-4);
        assert_eq!(c.train.lr_decay, 0.1);
        assert_eq!((c.train.color_batch, c.train.event_batch), (1024, 1024));
        assert_eq!(c.train.knot_count, 4);
        assert_eq!(c.train.iterations, 5000);
        assert_eq!((c.camera.width, c.camera.height), (64, 64));
        assert_eq!(c.sim.frames, 200);
        assert_eq!(c.paper_scale().train.iterations, 80_000);
    }

    #[test]
    fn toml_round_trip() {
        for c in [RunConfig::default(), RunConfig::desk()] {
            assert_eq!(RunConfig::from_toml(&c.to_toml()).unwrap(), c);
        }
    }

    #[test]
    fn partial_file_is_defaulted() {
        let c = RunConfig::from_toml("[train]\nbeta = 0.0\ntrajectory = \"linear\"\n").unwrap();
        assert_eq!(c.train.beta, 0.0);
        assert_eq!(c.train.trajectory, blurev_core::TrajectoryKind::Linear);
        assert_eq!(c.train.n_virtual, 19);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(matches!(RunConfig::from_toml("bogus = 1\n"), Err(Error::Config(_))));
        assert!(matches!(RunConfig::from_toml("[train]\nbetta = 0.1\n"), Err(Error::Config(_))));
        assert!(matches!(RunConfig::from_toml("[train.render]\nsamples = 3\n"), Err(Error::Config(_))));
    }

    #[test]
    fn ranges_validated() {
        assert!(RunConfig::from_toml("[train]\nn_virtual = 1\n").is_err());
        assert!(RunConfig::from_toml("[train]\nalpha = 1.5\n").is_err());
        assert!(RunConfig::from_toml("[train]\nbeta = -0.1\n").is_err());
        assert!(RunConfig::from_toml("[train.render]\nnear = 6.0\nfar = 2.0\n").is_err());
        assert!(RunConfig::from_toml("[sim]\ncontrast = 0.0\n").is_err());
        assert!(RunConfig::from_toml("[scene]\nmin_period = 2.0\nmax_period = 1.0\n").is_err());
    }

    #[test]
    fn explicit_velocity_wins() {
        let m = MotionConfig { velocity: Some([0.0, 0.0, 0.1, 0.2, 0.0, 0.0]), ..MotionConfig::default() };
        assert_eq!(m.spec().velocity, [0.0, 0.0, 0.1, 0.2, 0.0, 0.0]);
        let r = MotionConfig { velocity: None, rotation_deg: 3.0, translation: 0.1, ..MotionConfig::default() };
        let v = r.spec().velocity;
        let rot = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        assert!((rot - 3f64.to_radians()).abs() < 1e-12);
    }
}
