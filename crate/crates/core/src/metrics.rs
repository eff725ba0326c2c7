//! PSNR and SSIM.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::image::Image;
use crate::math;

pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
const K1: f64 = 0.01;
const K2: f64 = 0.03;

/// `-10 log10(MSE)` for unit dynamic range; `+inf` for identical images.
pub fn psnr(a: &Image, b: &Image) -> Result<f64> {
    if !a.same_shape(b) {
        return Err(Error::ShapeMismatch("psnr inputs differ in shape"));
    }
    let sq: Vec<f64> = a.data().iter().zip(b.data()).map(|(x, y)| (x - y) * (x - y)).collect();
    let mse = crate::math::pairwise_sum(&sq) / sq.len().max(1) as f64;
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(-10.0 * math::log10(mse))
}

fn gaussian_kernel() -> [f64; SSIM_WINDOW] {
    let half = (SSIM_WINDOW / 2) as f64;
    let mut k = [0.0; SSIM_WINDOW];
    for (i, v) in k.iter_mut().enumerate() {
        let d = i as f64 - half;
        *v = math::exp(-d * d / (2.0 * SSIM_SIGMA * SSIM_SIGMA));
    }
    let s: f64 = k.iter().sum();
    k.map(|v| v / s)
}

/// Separable valid-mode filtering of a single-channel map.
fn filter_valid(data: &[f64], width: usize, height: usize, k: &[f64; SSIM_WINDOW]) -> Vec<f64> {
    let ow = width - SSIM_WINDOW + 1;
    let oh = height - SSIM_WINDOW + 1;
    let mut rows = vec![0.0; ow * height];
    for y in 0..height {
        for x in 0..ow {
            rows[y * ow + x] = (0..SSIM_WINDOW).map(|i| k[i] * data[y * width + x + i]).sum();
        }
    }
    let mut out = vec![0.0; ow * oh];
    for y in 0..oh {
        for x in 0..ow {
            out[y * ow + x] = (0..SSIM_WINDOW).map(|i| k[i] * rows[(y + i) * ow + x]).sum();
        }
    }
    out
}

/// Mean SSIM over valid 11x11 Gaussian windows; colour inputs are
/// compared on luminance.
pub fn ssim(a: &Image, b: &Image) -> Result<f64> {
    if !a.same_shape(b) {
        return Err(Error::ShapeMismatch("ssim inputs differ in shape"));
    }
    let (w, h) = (a.width(), a.height());
    if w < SSIM_WINDOW || h < SSIM_WINDOW {
        return Err(Error::ImageTooSmall { width: w, height: h, window: SSIM_WINDOW });
    }
    let ga = a.to_gray();
    let gb = b.to_gray();
    let (x, y) = (ga.data(), gb.data());
    let k = gaussian_kernel();
    let product = |f: &dyn Fn(usize) -> f64| filter_valid(&(0..x.len()).map(f).collect::<Vec<_>>(), w, h, &k);
    let mu_x = filter_valid(x, w, h, &k);
    let mu_y = filter_valid(y, w, h, &k);
    let xx = product(&|i| x[i] * x[i]);
    let yy = product(&|i| y[i] * y[i]);
    let xy = product(&|i| x[i] * y[i]);
    let c1 = K1 * K1;
    let c2 = K2 * K2;
    let map: Vec<f64> = (0..mu_x.len())
        .map(|i| {
            let (mx, my) = (mu_x[i], mu_y[i]);
            let vx = xx[i] - mx * mx;
            let vy = yy[i] - my * my;
            let cov = xy[i] - mx * my;
            ((2.0 * mx * my + c1) * (2.0 * cov + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2))
        })
        .collect();
    Ok(math::pairwise_sum(&map) / map.len() as f64)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrameMetrics {
    pub psnr: f64,
    pub ssim: f64,
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct MetricReport {
    pub frames: Vec<FrameMetrics>,
}

impl MetricReport {
    /// Scores `estimates[i]` against `references[i]`.
    pub fn compare(estimates: &[Image], references: &[Image]) -> Result<Self> {
        if estimates.len() != references.len() {
            return Err(Error::ShapeMismatch("frame counts differ"));
        }
        let frames = estimates
            .iter()
            .zip(references)
            .map(|(e, r)| Ok(FrameMetrics { psnr: psnr(e, r)?, ssim: ssim(e, r)? }))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { frames })
    }

    pub fn mean_psnr(&self) -> f64 {
        self.frames.iter().map(|f| f.psnr).sum::<f64>() / self.frames.len().max(1) as f64
    }

    pub fn mean_ssim(&self) -> f64 {
        self.frames.iter().map(|f| f.ssim).sum::<f64>() / self.frames.len().max(1) as f64
    }
}
