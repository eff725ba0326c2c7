use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::synth::luminance;

/// Row-major interleaved float image.
#[derive(Clone, Debug, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f64>,
}

impl Image {
    pub fn new(width: usize, height: usize, channels: usize) -> Self {
        Self { width, height, channels, data: vec![0.0; width * height * channels] }
    }

    pub fn filled(width: usize, height: usize, channels: usize, value: f64) -> Self {
        Self { width, height, channels, data: vec![value; width * height * channels] }
    }

    pub fn from_data(width: usize, height: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != width * height * channels {
            return Err(Error::ShapeMismatch("image data length"));
        }
        Ok(Self { width, height, channels, data })
    }

    /// Image from per-pixel RGB triples in row-major order.
    pub fn from_rgb(width: usize, height: usize, pixels: &[[f64; 3]]) -> Result<Self> {
        if pixels.len() != width * height {
            return Err(Error::ShapeMismatch("pixel count"));
        }
        Ok(Self { width, height, channels: 3, data: pixels.iter().flatten().copied().collect() })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn same_shape(&self, other: &Image) -> bool {
        self.width == other.width && self.height == other.height && self.channels == other.channels
    }

    pub fn pixel(&self, x: usize, y: usize) -> &[f64] {
        let i = (y * self.width + x) * self.channels;
        &self.data[i..i + self.channels]
    }

    pub fn pixel_mut(&mut self, x: usize, y: usize) -> &mut [f64] {
        let i = (y * self.width + x) * self.channels;
        &mut self.data[i..i + self.channels]
    }

    /// RGB triple of a 3-channel image.
    pub fn rgb(&self, x: usize, y: usize) -> [f64; 3] {
        let p = self.pixel(x, y);
        [p[0], p[1], p[2]]
    }

    /// Single-channel luminance; 1-channel images are returned unchanged.
    pub fn to_gray(&self) -> Image {
        if self.channels == 1 {
            return self.clone();
        }
        let data = self.data.chunks_exact(self.channels).map(|p| luminance([p[0], p[1], p[2]])).collect();
        Image { width: self.width, height: self.height, channels: 1, data }
    }

    /// Per-pixel mean of equally shaped images.
    pub fn mean_of(images: &[Image]) -> Result<Image> {
        let first = images.first().ok_or(Error::InvalidParameter("mean of zero images"))?;
        let mut out = Image::new(first.width, first.height, first.channels);
        for img in images {
            if !img.same_shape(first) {
                return Err(Error::ShapeMismatch("images differ in shape"));
            }
            for (o, v) in out.data.iter_mut().zip(&img.data) {
                *o += v;
            }
        }
        let n = images.len() as f64;
        for o in &mut out.data {
            *o /= n;
        }
        Ok(out)
    }
}
