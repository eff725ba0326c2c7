//! Images: 8-bit PNG for viewing plus a raw 32-bit float sidecar.
//!
//! Sidecar layout, little-endian: `RAW1`, u32 width, u32 height,
//! u32 channels, then `width * height * channels` f32 values row-major.
//! Values are linear intensities; the PNG stores them quantized without any
//! transfer curve.

use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use blurev_core::Image;

use crate::error::{Error, Result};

pub const RAW_MAGIC: &[u8; 4] = b"RAW1";

/// Sidecar path next to a PNG: `frame.png` -> `frame.f32`.
pub fn sidecar_path(png: &Path) -> PathBuf {
    png.with_extension("f32")
}

pub fn to_u8(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

pub fn write_png(path: &Path, img: &Image) -> Result<()> {
    let color = match img.channels() {
        1 => png::ColorType::Grayscale,
        3 => png::ColorType::Rgb,
        c => return Err(Error::Config(format!("cannot store {c}-channel image as PNG"))),
    };
    let file = fs::File::create(path).map_err(Error::io(path))?;
    let mut enc = png::Encoder::new(BufWriter::new(file), img.width() as u32, img.height() as u32);
    enc.set_color(color);
    enc.set_depth(png::BitDepth::Eight);
    let bytes: Vec<u8> = img.data().iter().map(|&v| to_u8(v)).collect();
    let mut w = enc.write_header().map_err(|e| Error::parse(path, "png", e))?;
    w.write_image_data(&bytes).map_err(|e| Error::parse(path, "png", e))?;
    w.finish().map_err(|e| Error::parse(path, "png", e))
}

pub fn read_png(path: &Path) -> Result<Image> {
    let file = fs::File::open(path).map_err(Error::io(path))?;
    let mut dec = png::Decoder::new(std::io::BufReader::new(file));
    dec.set_transformations(png::Transformations::EXPAND | png::Transformations::STRIP_16);
    let mut reader = dec.read_info().map_err(|e| Error::parse(path, "png", e))?;
    let mut buf = vec![0; reader.output_buffer_size()];
    let info = reader.next_frame(&mut buf).map_err(|e| Error::parse(path, "png", e))?;
    let channels = match info.color_type {
        png::ColorType::Grayscale => 1,
        png::ColorType::Rgb => 3,
        other => return Err(Error::parse(path, "png", format!("unsupported colour type {other:?}"))),
    };
    let data = buf[..info.buffer_size()].iter().map(|&b| b as f64 / 255.0).collect();
    Ok(Image::from_data(info.width as usize, info.height as usize, channels, data)?)
}

pub fn encode_raw(img: &Image) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + 4 * img.data().len());
    out.extend_from_slice(RAW_MAGIC);
    for d in [img.width(), img.height(), img.channels()] {
        out.extend_from_slice(&(d as u32).to_le_bytes());
    }
    for &v in img.data() {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
    out
}

pub fn decode_raw(path: &Path, b: &[u8]) -> Result<Image> {
    if b.len() < 16 || &b[..4] != RAW_MAGIC {
        return Err(Error::parse(path, "header", "not a RAW1 image"));
    }
    let dim = |i: usize| u32::from_le_bytes(b[4 + 4 * i..8 + 4 * i].try_into().unwrap()) as usize;
    let (w, h, c) = (dim(0), dim(1), dim(2));
    let body = &b[16..];
    if body.len() != 4 * w * h * c {
        return Err(Error::parse(path, "data", format!("{w}x{h}x{c} needs {} bytes, found {}", 4 * w * h * c, body.len())));
    }
    let data = body.chunks_exact(4).map(|v| f32::from_le_bytes(v.try_into().unwrap()) as f64).collect();
    Ok(Image::from_data(w, h, c, data)?)
}

/// Writes `path` (PNG) and its float sidecar.
pub fn write_image(path: &Path, img: &Image) -> Result<()> {
    write_png(path, img)?;
    let raw = sidecar_path(path);
    fs::write(&raw, encode_raw(img)).map_err(Error::io(raw))
}

/// Reads the float sidecar when present, otherwise the PNG.
pub fn read_image(path: &Path) -> Result<Image> {
    let raw = sidecar_path(path);
    if raw.exists() {
        let b = fs::read(&raw).map_err(Error::io(&raw))?;
        return decode_raw(&raw, &b);
    }
    read_png(path)
}

/// The image exactly as the sidecar stores it.
pub fn quantize_f32(img: &Image) -> Image {
    let data = img.data().iter().map(|&v| v as f32 as f64).collect();
    Image::from_data(img.width(), img.height(), img.channels(), data).expect("same shape")
}
