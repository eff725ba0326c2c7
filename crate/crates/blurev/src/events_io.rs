//! Event files.
//!
//! Binary layout, little-endian: `EVT1`, u32 width, u32 height, u32 count,
//! then per event f64 t, u16 x, u16 y, i8 polarity and three zero bytes.
//! The reader also takes a text form with one `t x y p` per line; its
//! sensor size comes from the caller.

use std::fs;
use std::path::Path;

use blurev_core::events::validate_events;
use blurev_core::{Event, EventStream};

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"EVT1";
pub const HEADER_LEN: usize = 16;
pub const RECORD_LEN: usize = 16;

pub fn encode_events(stream: &EventStream) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + RECORD_LEN * stream.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(stream.width() as u32).to_le_bytes());
    out.extend_from_slice(&(stream.height() as u32).to_le_bytes());
    out.extend_from_slice(&(stream.len() as u32).to_le_bytes());
    for e in stream.events() {
        out.extend_from_slice(&e.t.to_le_bytes());
        out.extend_from_slice(&e.x.to_le_bytes());
        out.extend_from_slice(&e.y.to_le_bytes());
        out.push(e.polarity as u8);
        out.extend_from_slice(&[0; 3]);
    }
    out
}

pub fn write_events(path: &Path, stream: &EventStream) -> Result<()> {
    fs::write(path, encode_events(stream)).map_err(Error::io(path))
}

fn u32_at(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(b[at..at + 4].try_into().unwrap())
}

/// Parses either form. `sensor` supplies width and height for text input;
/// for binary input it must agree with the header when given.
pub fn decode_events(path: &Path, bytes: &[u8], sensor: Option<(usize, usize)>, contrast: f64) -> Result<EventStream> {
    let (width, height, events) = if bytes.starts_with(MAGIC) {
        decode_binary(path, bytes)?
    } else {
        let (w, h) = sensor.ok_or_else(|| Error::parse(path, "header", "text event files need the sensor size"))?;
        (w, h, decode_text(path, bytes)?)
    };
    if let Some((w, h)) = sensor {
        if (w, h) != (width, height) {
            return Err(Error::parse(path, "header", format!("sensor {width}x{height}, expected {w}x{h}")));
        }
    }
    validate_events(width, height, &events).map_err(|source| Error::Validation { path: path.into(), source })?;
    Ok(EventStream::new(width, height, contrast, events)?)
}

fn decode_binary(path: &Path, b: &[u8]) -> Result<(usize, usize, Vec<Event>)> {
    if b.len() < HEADER_LEN {
        return Err(Error::parse(path, "header", "truncated header"));
    }
    let (width, height, count) = (u32_at(b, 4) as usize, u32_at(b, 8) as usize, u32_at(b, 12) as usize);
    let body = &b[HEADER_LEN..];
    if body.len() != count * RECORD_LEN {
        return Err(Error::parse(path, "count", format!("{count} events need {} bytes, found {}", count * RECORD_LEN, body.len())));
    }
    let events = body
        .chunks_exact(RECORD_LEN)
        .enumerate()
        .map(|(i, r)| {
            if r[13..16] != [0; 3] {
                return Err(Error::parse(path, format!("event {i} padding"), "non-zero pad bytes"));
            }
            Ok(Event {
                t: f64::from_le_bytes(r[0..8].try_into().unwrap()),
                x: u16::from_le_bytes([r[8], r[9]]),
                y: u16::from_le_bytes([r[10], r[11]]),
                polarity: r[12] as i8,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((width, height, events))
}

fn decode_text(path: &Path, bytes: &[u8]) -> Result<Vec<Event>> {
    let text = std::str::from_utf8(bytes).map_err(|e| Error::parse(path, "text", e))?;
    let mut events = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let f: Vec<&str> = line.split_whitespace().collect();
        let at = |name: &str| format!("line {} {name}", n + 1);
        if f.len() != 4 {
            return Err(Error::parse(path, at("fields"), format!("expected `t x y p`, got {} fields", f.len())));
        }
        events.push(Event {
            t: f[0].parse().map_err(|e| Error::parse(path, at("t"), e))?,
            x: f[1].parse().map_err(|e| Error::parse(path, at("x"), e))?,
            y: f[2].parse().map_err(|e| Error::parse(path, at("y"), e))?,
            polarity: f[3].parse().map_err(|e| Error::parse(path, at("p"), e))?,
        });
    }
    Ok(events)
}

pub fn read_events(path: &Path, sensor: Option<(usize, usize)>, contrast: f64) -> Result<EventStream> {
    let bytes = fs::read(path).map_err(Error::io(path))?;
    decode_events(path, &bytes, sensor, contrast)
}

pub fn write_events_text(path: &Path, stream: &EventStream) -> Result<()> {
    let mut s = String::with_capacity(32 * stream.len());
    for e in stream.events() {
        s.push_str(&format!("{:?} {} {} {}\n", e.t, e.x, e.y, e.polarity));
    }
    fs::write(path, s).map_err(Error::io(path))
}
