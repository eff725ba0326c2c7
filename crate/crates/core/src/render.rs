//! Pinhole rays and differentiable volume rendering.

use alloc::vec::Vec;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ad::{Tape, Tensor, Var};
use crate::error::{Error, Result};
use crate::field::{Radiance, SceneField};
use crate::image::Image;
use crate::lie::{Pose, RigidTransform};
use crate::math;

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: usize,
    pub height: usize,
}

impl CameraIntrinsics {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64, width: usize, height: usize) -> Result<Self> {
        let k = Self { fx, fy, cx, cy, width, height };
        k.validate()?;
        Ok(k)
    }

    /// Centered principal point and equal focal lengths from a horizontal
    /// field of view in degrees.
    pub fn from_fov(width: usize, height: usize, hfov_deg: f64) -> Result<Self> {
        if !(hfov_deg > 0.0 && hfov_deg < 180.0) {
            return Err(Error::InvalidParameter("field of view must be in (0, 180) degrees"));
        }
        let f = 0.5 * width as f64 / math::tan(0.5 * hfov_deg.to_radians());
        Self::new(f, f, 0.5 * width as f64, 0.5 * height as f64, width, height)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fx > 0.0 && self.fy > 0.0) {
            return Err(Error::InvalidParameter("focal lengths must be positive"));
        }
        if !(self.cx >= 0.0 && self.cx < self.width as f64 && self.cy >= 0.0 && self.cy < self.height as f64) {
            return Err(Error::InvalidParameter("principal point outside the image"));
        }
        Ok(())
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    /// Camera-frame direction through the pixel center, `z = 1`.
    pub fn camera_direction(&self, x: usize, y: usize) -> [f64; 3] {
        [(x as f64 + 0.5 - self.cx) / self.fx, (y as f64 + 0.5 - self.cy) / self.fy, 1.0]
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ray {
    pub origin: [f64; 3],
    pub dir: [f64; 3],
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct RenderSettings {
    pub n_samples: usize,
    pub near: f64,
    pub far: f64,
    pub stratified: bool,
    pub white_background: bool,
}

impl Default for RenderSettings {
    fn default() -> Self {
        Self { n_samples: 64, near: 2.0, far: 6.0, stratified: true, white_background: false }
    }
}

impl RenderSettings {
    pub fn validate(&self) -> Result<()> {
        if self.n_samples < 2 {
            return Err(Error::InvalidParameter("n_samples must be at least 2"));
        }
        if !(self.near < self.far) || !self.near.is_finite() || !self.far.is_finite() {
            return Err(Error::InvalidParameter("near must be below far"));
        }
        Ok(())
    }

    /// Same settings with stratification switched off.
    pub fn deterministic(mut self) -> Self {
        self.stratified = false;
        self
    }
}

pub fn make_ray(pixel: (usize, usize), pose: &RigidTransform, k: &CameraIntrinsics) -> Ray {
    let d = pose.rotate(&k.camera_direction(pixel.0, pixel.1));
    let n = math::sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2]);
    Ray { origin: pose.translation, dir: [d[0] / n, d[1] / n, d[2] / n] }
}

/// Independent sampling stream for ray `ray_id` under `seed`.
pub fn ray_rng(seed: u64, ray_id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(ray_id);
    rng
}

/// Sample depths of one ray: jittered within equal bins of `[near, far]`
/// when a generator is given, bin midpoints otherwise.
pub fn sample_depths(settings: &RenderSettings, rng: Option<&mut dyn RngCore>) -> Vec<f64> {
    let n = settings.n_samples;
    let width = (settings.far - settings.near) / n as f64;
    match rng {
        Some(rng) => (0..n).map(|i| settings.near + (i as f64 + rng.random::<f64>()) * width).collect(),
        None => (0..n).map(|i| settings.near + (i as f64 + 0.5) * width).collect(),
    }
}

/// Depths and interval lengths for a batch of rays sharing a sample count.
#[derive(Clone, Debug, PartialEq)]
pub struct DepthSamples {
    depths: Tensor,
    deltas: Tensor,
}

impl DepthSamples {
    /// One row of depths per ray. The last interval ends at `far`.
    pub fn from_rows(rows: &[Vec<f64>], far: f64) -> Self {
        let s = rows.first().map_or(0, Vec::len);
        let mut depths = Vec::with_capacity(rows.len() * s);
        let mut deltas = Vec::with_capacity(rows.len() * s);
        for row in rows {
            assert_eq!(row.len(), s, "rays must share a sample count");
            depths.extend_from_slice(row);
            deltas.extend(row.windows(2).map(|w| w[1] - w[0]));
            deltas.push(far - row[s - 1]);
        }
        Self { depths: Tensor::column(depths), deltas: Tensor::new(rows.len(), s, deltas) }
    }

    /// Samples `rays` rows; stratified rows draw from `rng` in order.
    pub fn draw(settings: &RenderSettings, rays: usize, rng: &mut dyn RngCore) -> Self {
        let rows: Vec<Vec<f64>> = (0..rays)
            .map(|_| sample_depths(settings, if settings.stratified { Some(&mut *rng) } else { None }))
            .collect();
        Self::from_rows(&rows, settings.far)
    }

    pub fn rays(&self) -> usize {
        self.deltas.rows()
    }

    pub fn samples_per_ray(&self) -> usize {
        self.deltas.cols()
    }

    /// `[N*S x 1]`.
    pub fn depths(&self) -> &Tensor {
        &self.depths
    }

    /// `[N x S]`.
    pub fn deltas(&self) -> &Tensor {
        &self.deltas
    }
}

/// Output of compositing `N` rays of `S` samples.
pub struct Composite<'t> {
    /// `[N x 3]`.
    pub rgb: Var<'t>,
    /// Contribution `T_i (1 - exp(-sigma_i delta_i))`, `[N x S]`.
    pub weights: Var<'t>,
    /// Transmittance past the last sample, `[N x 1]`.
    pub residual: Var<'t>,
}

/// Alpha-composites per-sample density `[N*S x 1]` and color `[N*S x 3]`.
pub fn composite<'t>(sigma: Var<'t>, color: Var<'t>, deltas: &Tensor, white_background: bool) -> Composite<'t> {
    let tape = sigma.tape();
    let (n, s) = deltas.shape();
    let tau = sigma.reshape(n, s) * tape.constant(deltas.clone());
    let transmittance = (-tau.cumsum_exclusive()).exp();
    let weights = transmittance * (1.0 - (-tau).exp());
    let mut rgb = (weights.reshape(n * s, 1) * color).group_sum_rows(s);
    let residual = (-tau.sum_rows()).exp();
    if white_background {
        rgb = rgb + residual;
    }
    Composite { rgb, weights, residual }
}

/// Renders `N` rays. `origins` is `[N x 3]` or a shared `[1 x 3]`; `dirs`
/// is `[N x 3]` of unit vectors.
pub fn render_rays<'t, F: Radiance<'t> + ?Sized>(
    field: &F,
    origins: Var<'t>,
    dirs: Var<'t>,
    samples: &DepthSamples,
    white_background: bool,
) -> Composite<'t> {
    let tape = dirs.tape();
    let s = samples.samples_per_ray();
    let dirs_rep = dirs.repeat_rows(s);
    let origins_rep = if origins.shape().0 == 1 { origins } else { origins.repeat_rows(s) };
    let points = origins_rep + dirs_rep * tape.constant(samples.depths().clone());
    let (sigma, color) = field.query(points, dirs_rep);
    composite(sigma, color, samples.deltas(), white_background)
}

/// Unit world directions `[N x 3]` and the shared origin `[1 x 3]` for
/// pixels seen from a recorded pose.
pub fn pose_rays<'t>(pose: &Pose<Var<'t>>, tape: &'t Tape, k: &CameraIntrinsics, pixels: &[(usize, usize)]) -> (Var<'t>, Var<'t>) {
    let cam: Vec<f64> = pixels.iter().flat_map(|&(x, y)| k.camera_direction(x, y)).collect();
    let cam = tape.constant(Tensor::new(pixels.len(), 3, cam));
    let dirs = cam.matmul(pose.rotation_var(tape).transpose());
    let norms = dirs.square().sum_rows().sqrt();
    (pose.translation_var(tape), dirs / norms)
}

/// Color of a single ray. `rng` is used only when `settings.stratified`.
pub fn render_ray(field: &SceneField, ray: &Ray, settings: &RenderSettings, rng: &mut dyn RngCore) -> [f64; 3] {
    let samples = DepthSamples::draw(settings, 1, rng);
    let tape = Tape::new();
    let bound = field.bind(&tape, false);
    let out = render_rays(
        &bound,
        tape.constant(Tensor::row(ray.origin.to_vec())),
        tape.constant(Tensor::row(ray.dir.to_vec())),
        &samples,
        settings.white_background,
    );
    let rgb = out.rgb.value();
    [rgb.data()[0], rgb.data()[1], rgb.data()[2]]
}

/// One image row; pixel `i` samples from `ray_rng(seed, i)`.
pub fn render_row(
    field: &SceneField,
    pose: &RigidTransform,
    k: &CameraIntrinsics,
    settings: &RenderSettings,
    seed: u64,
    y: usize,
) -> Vec<[f64; 3]> {
    let rays: Vec<Ray> = (0..k.width).map(|x| make_ray((x, y), pose, k)).collect();
    let rows: Vec<Vec<f64>> = (0..k.width)
        .map(|x| {
            let mut rng = ray_rng(seed, (y * k.width + x) as u64);
            sample_depths(settings, if settings.stratified { Some(&mut rng) } else { None })
        })
        .collect();
    let samples = DepthSamples::from_rows(&rows, settings.far);
    let tape = Tape::new();
    let bound = field.bind(&tape, false);
    let origins: Vec<f64> = rays.iter().flat_map(|r| r.origin).collect();
    let dirs: Vec<f64> = rays.iter().flat_map(|r| r.dir).collect();
    let out = render_rays(
        &bound,
        tape.constant(Tensor::new(rays.len(), 3, origins)),
        tape.constant(Tensor::new(rays.len(), 3, dirs)),
        &samples,
        settings.white_background,
    );
    out.rgb.value().data().chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect()
}

/// Full `H x W x 3` render, row by row.
pub fn render_image(
    field: &SceneField,
    pose: &RigidTransform,
    k: &CameraIntrinsics,
    settings: &RenderSettings,
    seed: u64,
) -> Image {
    let mut pixels = Vec::with_capacity(k.pixel_count());
    for y in 0..k.height {
        pixels.extend(render_row(field, pose, k, settings, seed, y));
    }
    Image::from_rgb(k.width, k.height, &pixels).unwrap_or_else(|_| Image::new(k.width, k.height, 3))
}

/// Assembles an image from rows rendered elsewhere (e.g. in parallel).
pub fn image_from_rows(k: &CameraIntrinsics, rows: Vec<Vec<[f64; 3]>>) -> Result<Image> {
    let pixels: Vec<[f64; 3]> = rows.into_iter().flatten().collect();
    Image::from_rgb(k.width, k.height, &pixels)
}
