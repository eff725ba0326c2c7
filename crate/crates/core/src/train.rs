//! Joint optimization of the field and the trajectory.

use alloc::vec::Vec;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ad::{Tape, Tensor, Var};
use crate::error::{Error, Result};
use crate::events::EventStream;
use crate::field::{FieldArch, Radiance, SceneField};
use crate::image::Image;
use crate::optim::{AdamConfig, AdamState};
use crate::render::{pose_rays, render_image, render_rays, CameraIntrinsics, DepthSamples, RenderSettings};
use crate::spline::{BoundTrajectory, Trajectory, TrajectoryKind, TrajectoryParams};
use crate::synth::{
    accumulate_events, log_change_var, luminance_var, normalize_event_image, normalize_event_var, sample_event_window,
    total_loss_var, BlurModel, EventWindow, LossWeights,
};

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct TrainConfig {
    pub iterations: u64,
    pub n_virtual: usize,
    pub alpha: f64,
    pub beta: f64,
    pub color_batch: usize,
    pub event_batch: usize,
    pub lr_field: f64,
    pub lr_trajectory: f64,
    /// Fraction of the initial learning rate reached at the last iteration.
    pub lr_decay: f64,
    /// Spline control knots; linear trajectories always use two poses.
    pub knot_count: usize,
    pub knot_init_magnitude: f64,
    pub trajectory: TrajectoryKind,
    pub render: RenderSettings,
    pub arch: FieldArch,
    pub seed: u64,
    /// Window redraws after an empty event batch before the event term is
    /// skipped for that iteration.
    pub window_retries: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            iterations: 5000,
            n_virtual: 19,
            alpha: 0.1,
            beta: 0.1,
            color_batch: 1024,
            event_batch: 1024,
            lr_field: 5e-4,
            lr_trajectory: 5e-4,
            lr_decay: 0.1,
            knot_count: 4,
            knot_init_magnitude: 0.01,
            trajectory: TrajectoryKind::Spline,
            render: RenderSettings::default(),
            arch: FieldArch::default(),
            seed: 0,
            window_retries: 8,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        BlurModel::new(self.n_virtual)?;
        LossWeights::new(self.beta)?;
        self.render.validate()?;
        self.arch.validate()?;
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::InvalidParameter("alpha must be in (0, 1]"));
        }
        if self.color_batch == 0 || (self.beta > 0.0 && self.event_batch == 0) {
            return Err(Error::InvalidParameter("batch sizes must be positive"));
        }
        if !(self.lr_field > 0.0 && self.lr_trajectory > 0.0 && self.lr_decay > 0.0) {
            return Err(Error::InvalidParameter("learning rates and decay must be positive"));
        }
        if self.trajectory == TrajectoryKind::Spline && self.knot_count < 4 {
            return Err(Error::TooFewKnots { min: 4, got: self.knot_count });
        }
        if !(self.knot_init_magnitude > 0.0) {
            return Err(Error::InvalidParameter("knot init magnitude must be positive"));
        }
        Ok(())
    }

    pub fn knots(&self) -> usize {
        match self.trajectory {
            TrajectoryKind::Spline => self.knot_count,
            TrajectoryKind::Linear => 2,
        }
    }

    fn adam(&self, lr0: f64) -> AdamConfig {
        AdamConfig { lr0, decay_target_frac: self.lr_decay, total_steps: self.iterations, ..AdamConfig::default() }
    }
}

/// The measurements of one exposure.
#[derive(Clone, Debug, PartialEq)]
pub struct Observations {
    pub blurry: Image,
    pub events: EventStream,
    pub intrinsics: CameraIntrinsics,
}

impl Observations {
    pub fn new(blurry: Image, events: EventStream, intrinsics: CameraIntrinsics) -> Result<Self> {
        intrinsics.validate()?;
        if blurry.width() != intrinsics.width || blurry.height() != intrinsics.height || blurry.channels() != 3 {
            return Err(Error::ShapeMismatch("blurry image does not match the intrinsics"));
        }
        if events.width() != intrinsics.width || events.height() != intrinsics.height {
            return Err(Error::ShapeMismatch("event sensor does not match the intrinsics"));
        }
        Ok(Self { blurry, events, intrinsics })
    }
}

/// Event pixels of one iteration with their normalized measurement.
#[derive(Clone, Debug, PartialEq)]
pub struct EventBatch {
    pub window: EventWindow,
    pub pixels: Vec<(usize, usize)>,
    /// `[N x 1]`, unit norm.
    pub target: Tensor,
}

/// Everything random about one iteration.
#[derive(Clone, Debug, PartialEq)]
pub struct Batch {
    pub color_pixels: Vec<(usize, usize)>,
    /// `[N x 3]`.
    pub color_target: Tensor,
    pub events: Option<EventBatch>,
    /// Depths for all rays: virtual views first, then event start and end.
    pub samples: DepthSamples,
}

fn random_pixels(rng: &mut dyn RngCore, k: &CameraIntrinsics, count: usize) -> Vec<(usize, usize)> {
    (0..count)
        .map(|_| {
            let i = rng.random_range(0..k.pixel_count());
            (i % k.width, i / k.width)
        })
        .collect()
}

/// Draws pixels, an event window and depth samples. The flag reports
/// whether the event term had to be dropped after `window_retries` empty
/// windows.
pub fn draw_batch(rng: &mut dyn RngCore, obs: &Observations, config: &TrainConfig) -> Result<(Batch, bool)> {
    let k = &obs.intrinsics;
    let color_pixels = random_pixels(rng, k, config.color_batch);
    let target: Vec<f64> = color_pixels.iter().flat_map(|&(x, y)| obs.blurry.rgb(x, y)).collect();
    let color_target = Tensor::new(color_pixels.len(), 3, target);
    let mut events = None;
    let mut skipped = false;
    if config.beta > 0.0 {
        for _ in 0..=config.window_retries {
            let window = sample_event_window(config.alpha, rng)?;
            let pixels = random_pixels(rng, k, config.event_batch);
            let e = accumulate_events(&obs.events, &window, 1.0, &pixels);
            match normalize_event_image(&e) {
                Ok(n) => {
                    events = Some(EventBatch { window, pixels, target: Tensor::column(n) });
                    break;
                }
                Err(Error::ZeroNorm { .. }) => continue,
                Err(e) => return Err(e),
            }
        }
        skipped = events.is_none();
    }
    let rays = config.n_virtual * color_pixels.len() + events.as_ref().map_or(0, |e| 2 * e.pixels.len());
    let samples = DepthSamples::draw(&config.render, rays, rng);
    Ok((Batch { color_pixels, color_target, events, samples }, skipped))
}

/// Loss of one batch recorded on a tape.
pub struct LossTerms<'t> {
    pub total: Var<'t>,
    pub photometric: f64,
    /// `None` when the event term was skipped.
    pub event: Option<f64>,
}

/// Builds `mean((B - B_hat)^2) + beta * mean((E_n - E_hat_n)^2)` for a batch,
/// querying the field once for every ray of the iteration.
pub fn build_loss<'t, F: Radiance<'t> + ?Sized>(
    tape: &'t Tape,
    field: &F,
    traj: &BoundTrajectory<'t>,
    batch: &Batch,
    obs: &Observations,
    config: &TrainConfig,
) -> Result<LossTerms<'t>> {
    let k = &obs.intrinsics;
    let model = BlurModel::new(config.n_virtual)?;
    let nc = batch.color_pixels.len();
    let mut origins = Vec::new();
    let mut dirs = Vec::new();
    let mut add_view = |t: f64, pixels: &[(usize, usize)]| -> Result<()> {
        let pose = traj.pose_at(t)?;
        let (o, d) = pose_rays(&pose, tape, k, pixels);
        origins.push(o.repeat_rows(pixels.len()));
        dirs.push(d);
        Ok(())
    };
    for t in model.times() {
        add_view(t, &batch.color_pixels)?;
    }
    if let Some(ev) = &batch.events {
        add_view(ev.window.t_start(), &ev.pixels)?;
        add_view(ev.window.t_end(), &ev.pixels)?;
    }
    let out = render_rays(field, tape.concat_rows(&origins), tape.concat_rows(&dirs), &batch.samples, config.render.white_background);
    let n = model.n_virtual();
    let virtual_rgb = out.rgb.slice_rows(0, n * nc);
    let blur = (virtual_rgb.reshape(n, nc * 3).sum_cols() * (1.0 / n as f64)).reshape(nc, 3);
    let weights = LossWeights::new(config.beta)?;
    let mut event_pred = None;
    if let Some(ev) = &batch.events {
        let ne = ev.pixels.len();
        let start = luminance_var(out.rgb.slice_rows(n * nc, ne));
        let end = luminance_var(out.rgb.slice_rows(n * nc + ne, ne));
        if let Ok(pred) = normalize_event_var(log_change_var(start, end)) {
            event_pred = Some((pred, &ev.target));
        }
    }
    let total = total_loss_var(blur, &batch.color_target, event_pred, &weights)?;
    let photometric = (blur - tape.constant(batch.color_target.clone())).with_value(|d| {
        d.data().iter().map(|v| v * v).sum::<f64>() / d.len() as f64
    });
    let event = event_pred.map(|(p, t)| {
        p.with_value(|p| p.data().iter().zip(t.data()).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / p.len() as f64)
    });
    Ok(LossTerms { total, photometric, event })
}

/// Loss value and gradients for the field and the flattened trajectory.
pub fn loss_and_gradients(
    field: &SceneField,
    trajectory: &TrajectoryParams,
    batch: &Batch,
    obs: &Observations,
    config: &TrainConfig,
) -> Result<(StepReport, Vec<f64>, Vec<f64>)> {
    let tape = Tape::new();
    let bound_field = field.bind(&tape, true);
    let bound_traj = trajectory.bind(&tape)?;
    let terms = build_loss(&tape, &bound_field, &bound_traj, batch, obs, config)?;
    let grads = tape.backward(terms.total)?;
    let report = StepReport {
        loss: terms.total.item(),
        photometric: terms.photometric,
        event: terms.event,
        event_skipped: batch.events.is_some() && terms.event.is_none(),
    };
    Ok((report, bound_field.gradient(&grads), grads.wrt(bound_traj.leaf()).into_data()))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepReport {
    pub loss: f64,
    pub photometric: f64,
    pub event: Option<f64>,
    pub event_skipped: bool,
}

/// Complete resumable training state.
#[derive(Clone, Debug, PartialEq)]
pub struct OptimizationState {
    pub field: SceneField,
    pub trajectory: TrajectoryParams,
    pub field_opt: AdamState,
    pub trajectory_opt: AdamState,
    pub rng: ChaCha8Rng,
    pub step: u64,
    pub skipped_event_terms: u64,
}

impl OptimizationState {
    pub fn new(config: &TrainConfig) -> Result<Self> {
        config.validate()?;
        let field = SceneField::new(config.arch.clone(), config.seed)?;
        let trajectory =
            TrajectoryParams::init(config.trajectory, config.knots(), config.knot_init_magnitude, config.seed.wrapping_add(1))?;
        Ok(Self {
            field_opt: AdamState::new(field.params().len(), config.adam(config.lr_field)),
            trajectory_opt: AdamState::new(trajectory.len() * 6, config.adam(config.lr_trajectory)),
            field,
            trajectory,
            rng: ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(2)),
            step: 0,
            skipped_event_terms: 0,
        })
    }

    /// One iteration: draw a batch, forward, backward, two Adam updates.
    pub fn step(&mut self, obs: &Observations, config: &TrainConfig) -> Result<StepReport> {
        let (batch, skipped) = draw_batch(&mut self.rng, obs, config)?;
        let (mut report, g_field, g_traj) = loss_and_gradients(&self.field, &self.trajectory, &batch, obs, config)?;
        report.event_skipped |= skipped;
        if report.event_skipped {
            self.skipped_event_terms += 1;
        }
        self.field_opt.update(self.field.params_mut(), &g_field)?;
        let mut flat = self.trajectory.flat();
        self.trajectory_opt.update(&mut flat, &g_traj)?;
        self.trajectory.set_flat(&flat);
        self.step += 1;
        Ok(report)
    }

    /// Sharp render at normalized time `t`, deterministic sampling.
    pub fn render_at(&self, t: f64, k: &CameraIntrinsics, settings: &RenderSettings) -> Result<Image> {
        let pose = self.trajectory.pose_at(t)?;
        Ok(render_image(&self.field, &pose, k, &settings.deterministic(), 0))
    }
}
