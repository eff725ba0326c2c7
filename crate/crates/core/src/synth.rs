//! Blur and event measurement synthesis, and the training loss.

use alloc::vec::Vec;

use rand::{Rng, RngCore};

use crate::ad::{Tensor, Var, LOG_EPS};
use crate::error::{Error, Result};
use crate::events::EventStream;
use crate::field::SceneField;
use crate::math;
use crate::render::{make_ray, render_ray, CameraIntrinsics, RenderSettings};
use crate::spline::Trajectory;

pub const LUMA: [f64; 3] = [0.299, 0.587, 0.114];
/// Norms below this are treated as an empty event batch.
pub const MIN_EVENT_NORM: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BlurModel {
    n_virtual: usize,
}

impl Default for BlurModel {
    fn default() -> Self {
        Self { n_virtual: 19 }
    }
}

impl BlurModel {
    pub fn new(n_virtual: usize) -> Result<Self> {
        if n_virtual < 2 {
            return Err(Error::InvalidParameter("n_virtual must be at least 2"));
        }
        Ok(Self { n_virtual })
    }

    pub fn n_virtual(&self) -> usize {
        self.n_virtual
    }

    /// `i / (n - 1)` for `i = 0..n`.
    pub fn times(&self) -> Vec<f64> {
        let last = (self.n_virtual - 1) as f64;
        (0..self.n_virtual).map(|i| i as f64 / last).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EventWindow {
    t_start: f64,
    t_end: f64,
}

impl EventWindow {
    pub fn new(t_start: f64, t_end: f64) -> Result<Self> {
        if !(0.0 <= t_start && t_start < t_end && t_end <= 1.0) {
            return Err(Error::InvalidParameter("event window must satisfy 0 <= start < end <= 1"));
        }
        Ok(Self { t_start, t_end })
    }

    pub fn t_start(&self) -> f64 {
        self.t_start
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn alpha(&self) -> f64 {
        self.t_end - self.t_start
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LossWeights {
    pub beta: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self { beta: 0.1 }
    }
}

impl LossWeights {
    pub fn new(beta: f64) -> Result<Self> {
        if !(beta.is_finite() && beta >= 0.0) {
            return Err(Error::InvalidParameter("beta must be finite and non-negative"));
        }
        Ok(Self { beta })
    }
}

/// BT.601 luma.
pub fn luminance(rgb: [f64; 3]) -> f64 {
    LUMA[0] * rgb[0] + LUMA[1] * rgb[1] + LUMA[2] * rgb[2]
}

/// `[N x 3] -> [N x 1]`.
pub fn luminance_var<'t>(rgb: Var<'t>) -> Var<'t> {
    rgb.matmul(rgb.tape().constant(Tensor::column(LUMA.to_vec())))
}

/// Guarded log-brightness change between two gray values.
pub fn log_change(g_start: f64, g_end: f64) -> f64 {
    math::ln(g_end + LOG_EPS) - math::ln(g_start + LOG_EPS)
}

pub fn log_change_var<'t>(g_start: Var<'t>, g_end: Var<'t>) -> Var<'t> {
    g_end.log_eps(LOG_EPS) - g_start.log_eps(LOG_EPS)
}

/// `C * sum(p)` of in-window events at each of `pixels`.
pub fn accumulate_events(stream: &EventStream, window: &EventWindow, contrast: f64, pixels: &[(usize, usize)]) -> Vec<f64> {
    let dense = accumulate_dense(stream, window, contrast);
    pixels.iter().map(|&(x, y)| dense[y * stream.width() + x]).collect()
}

/// Full-sensor accumulation, row-major.
pub fn accumulate_dense(stream: &EventStream, window: &EventWindow, contrast: f64) -> Vec<f64> {
    let mut sums = alloc::vec![0i64; stream.width() * stream.height()];
    for e in stream.window(window.t_start, window.t_end) {
        sums[e.y as usize * stream.width() + e.x as usize] += e.polarity as i64;
    }
    sums.into_iter().map(|s| contrast * s as f64).collect()
}

/// `E / ||E||_2` over the batch.
pub fn normalize_event_image(e: &[f64]) -> Result<Vec<f64>> {
    let norm = Tensor::row(e.to_vec()).norm();
    if !(norm >= MIN_EVENT_NORM) {
        return Err(Error::ZeroNorm { norm });
    }
    Ok(e.iter().map(|v| v / norm).collect())
}

pub fn normalize_event_var<'t>(e: Var<'t>) -> Result<Var<'t>> {
    let norm = e.with_value(Tensor::norm);
    if !(norm >= MIN_EVENT_NORM) {
        return Err(Error::ZeroNorm { norm });
    }
    Ok(e / e.norm())
}

/// Mean of the `n_virtual` sharp renders of one pixel.
pub fn synth_blur_pixel(
    field: &SceneField,
    traj: &dyn Trajectory,
    k: &CameraIntrinsics,
    pixel: (usize, usize),
    model: &BlurModel,
    settings: &RenderSettings,
    rng: &mut dyn RngCore,
) -> Result<[f64; 3]> {
    let mut acc = [0.0; 3];
    for t in model.times() {
        let c = render_ray(field, &make_ray(pixel, &traj.pose_at(t)?, k), settings, rng);
        for i in 0..3 {
            acc[i] += c[i];
        }
    }
    let n = model.n_virtual as f64;
    Ok(acc.map(|v| v / n))
}

/// Log-luminance change of one pixel across `window`.
pub fn synth_event_pixel(
    field: &SceneField,
    traj: &dyn Trajectory,
    k: &CameraIntrinsics,
    pixel: (usize, usize),
    window: &EventWindow,
    settings: &RenderSettings,
    rng: &mut dyn RngCore,
) -> Result<f64> {
    let start = render_ray(field, &make_ray(pixel, &traj.pose_at(window.t_start)?, k), settings, rng);
    let end = render_ray(field, &make_ray(pixel, &traj.pose_at(window.t_end)?, k), settings, rng);
    Ok(log_change(luminance(start), luminance(end)))
}

fn mean_sq_diff(a: &[f64], b: &[f64]) -> f64 {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).collect();
    Tensor::row(d).sum() / a.len().max(1) as f64
}

/// `mean((B - B_hat)^2) + beta * mean((E_n - E_hat_n)^2)`.
pub fn total_loss(
    blur_pred: &[f64],
    blur_meas: &[f64],
    event_pred: &[f64],
    event_meas: &[f64],
    w: &LossWeights,
) -> Result<f64> {
    if blur_pred.len() != blur_meas.len() {
        return Err(Error::ShapeMismatch("blur batches differ in length"));
    }
    if event_pred.len() != event_meas.len() {
        return Err(Error::ShapeMismatch("event batches differ in length"));
    }
    let photometric = mean_sq_diff(blur_pred, blur_meas);
    if w.beta == 0.0 || event_pred.is_empty() {
        return Ok(photometric);
    }
    Ok(photometric + w.beta * mean_sq_diff(event_pred, event_meas))
}

/// Tape version of [`total_loss`]; `events` is `None` when the event term
/// is skipped.
pub fn total_loss_var<'t>(
    blur_pred: Var<'t>,
    blur_meas: &Tensor,
    events: Option<(Var<'t>, &Tensor)>,
    w: &LossWeights,
) -> Result<Var<'t>> {
    let tape = blur_pred.tape();
    if blur_pred.shape() != blur_meas.shape() {
        return Err(Error::ShapeMismatch("blur batches differ in shape"));
    }
    let photometric = (blur_pred - tape.constant(blur_meas.clone())).square().mean();
    match events {
        Some((pred, meas)) if w.beta > 0.0 => {
            if pred.shape() != meas.shape() {
                return Err(Error::ShapeMismatch("event batches differ in shape"));
            }
            let event = (pred - tape.constant(meas.clone())).square().mean();
            Ok(photometric + event * w.beta)
        }
        _ => Ok(photometric),
    }
}

/// `t_start ~ U[0, 1 - alpha]`, `t_end = t_start + alpha`.
pub fn sample_event_window(alpha: f64, rng: &mut dyn RngCore) -> Result<EventWindow> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidParameter("alpha must be in (0, 1]"));
    }
    let t_start = rng.random::<f64>() * (1.0 - alpha);
    Ok(EventWindow { t_start, t_end: (t_start + alpha).min(1.0) })
}
